"""Statistical battery: pooled t-test, confidence intervals, chi-square,
simple regression, 2-means clustering, and coder-consistency scores.

The two-sample test is Student's pooled-variance form (the reported
degrees of freedom n1 + n2 - 2 force it); effect size is Cohen's d with
the pooled standard deviation. Coder consistency defaults to the Dice
score 2|A∩B| / (|A|+|B|); the literal union denominator is available as a
mode but scores identical sets at 2.0, which is why it is not the default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import chi2 as chi2_dist
from scipy.stats import t as t_dist

from .errors import DomainError


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p: float
    cohens_d: float

    def to_dict(self) -> dict:
        return {"t": self.t, "df": self.df, "p": self.p, "cohens_d": self.cohens_d}

    def summary(self) -> str:
        p_text = "< 0.001" if self.p < 0.001 else f"= {self.p:.3f}"
        return f"t({self.df}) = {self.t:.2f}, p {p_text}, d = {self.cohens_d:.2f}"


def ttest_from_summary(
    n1: int, m1: float, sd1: float, n2: int, m2: float, sd2: float
) -> TTestResult:
    """Pooled two-sample t-test from group summaries."""
    if n1 < 2 or n2 < 2:
        raise DomainError(f"both groups need n >= 2, got {n1} and {n2}")
    if sd1 < 0 or sd2 < 0:
        raise DomainError("standard deviations must be non-negative")
    df = n1 + n2 - 2
    pooled_var = ((n1 - 1) * sd1**2 + (n2 - 1) * sd2**2) / df
    if pooled_var <= 0:
        raise DomainError("zero pooled variance: groups have no spread")
    sp = math.sqrt(pooled_var)
    t = (m1 - m2) / (sp * math.sqrt(1.0 / n1 + 1.0 / n2))
    p = 2.0 * float(t_dist.sf(abs(t), df))
    return TTestResult(t=t, df=df, p=p, cohens_d=(m1 - m2) / sp)


def ttest(samples1: Sequence[float], samples2: Sequence[float]) -> TTestResult:
    """Pooled two-sample t-test from raw samples."""
    a = np.asarray(samples1, dtype=np.float64)
    b = np.asarray(samples2, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise DomainError("both groups need at least two values")
    return ttest_from_summary(
        a.size, float(a.mean()), float(a.std(ddof=1)),
        b.size, float(b.mean()), float(b.std(ddof=1)),
    )


def mean_ci(
    samples: Sequence[float] | None = None,
    *,
    mean: float | None = None,
    sd: float | None = None,
    n: int | None = None,
    level: float = 0.95,
) -> tuple[float, float]:
    """Two-sided confidence interval for a mean, from samples or summary.

    Uses the t quantile with n - 1 degrees of freedom:
    mean +- t_{(1+level)/2, n-1} * sd / sqrt(n).
    """
    if not 0.0 < level < 1.0:
        raise DomainError(f"confidence level must be in (0, 1), got {level}")
    if samples is not None:
        x = np.asarray(samples, dtype=np.float64)
        if x.size < 2:
            raise DomainError("need at least two samples for an interval")
        mean, sd, n = float(x.mean()), float(x.std(ddof=1)), int(x.size)
    if mean is None or sd is None or n is None:
        raise DomainError("provide samples, or all of mean, sd and n")
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    if sd < 0:
        raise DomainError("sd must be non-negative")
    quantile = float(t_dist.ppf((1.0 + level) / 2.0, n - 1))
    half = quantile * sd / math.sqrt(n)
    return mean - half, mean + half


@dataclass(frozen=True)
class ChiSquareResult:
    chi2: float
    df: int
    p: float
    cramers_v: float

    def to_dict(self) -> dict:
        return {"chi2": self.chi2, "df": self.df, "p": self.p, "cramers_v": self.cramers_v}

    def summary(self) -> str:
        p_text = "< 0.001" if self.p < 0.001 else f"= {self.p:.3f}"
        return f"chi2({self.df}) = {self.chi2:.2f}, p {p_text}, V = {self.cramers_v:.2f}"


def chi_square(table: Sequence[Sequence[float]]) -> ChiSquareResult:
    """Pearson chi-square test of independence with Cramer's V.

    No continuity correction is applied (matching how the reference
    2x2 results were computed).
    """
    observed = np.asarray(table, dtype=np.float64)
    if observed.ndim != 2 or min(observed.shape) < 2:
        raise DomainError("table must be at least 2x2")
    if np.any(observed < 0):
        raise DomainError("counts must be non-negative")
    row_sums = observed.sum(axis=1)
    col_sums = observed.sum(axis=0)
    if np.any(row_sums == 0) or np.any(col_sums == 0):
        raise DomainError("every row and column needs a positive total")
    total = observed.sum()
    expected = np.outer(row_sums, col_sums) / total
    chi2 = float(((observed - expected) ** 2 / expected).sum())
    rows, cols = observed.shape
    df = (rows - 1) * (cols - 1)
    p = float(chi2_dist.sf(chi2, df))
    v = math.sqrt(chi2 / (total * min(rows - 1, cols - 1)))
    return ChiSquareResult(chi2=chi2, df=df, p=p, cramers_v=v)


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    std_beta: float
    t: float
    df: int
    p: float

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "std_beta": self.std_beta,
            "t": self.t,
            "df": self.df,
            "p": self.p,
        }


def linregress(x: Sequence[float], y: Sequence[float]) -> RegressionResult:
    """Simple least-squares regression of y on x with standardized slope."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size:
        raise DomainError("x and y must have the same length")
    n = x.size
    if n < 3:
        raise DomainError(f"need at least 3 points, got {n}")
    sx = float(x.std(ddof=1))
    sy = float(y.std(ddof=1))
    if sx == 0.0:
        raise DomainError("x is constant; slope undefined")
    if sy == 0.0:
        raise DomainError("y is constant; standardized slope undefined")
    x_mean = x.mean()
    y_mean = y.mean()
    sxx = float(((x - x_mean) ** 2).sum())
    slope = float(((x - x_mean) * (y - y_mean)).sum() / sxx)
    intercept = float(y_mean - slope * x_mean)
    df = n - 2
    ss_res = float(((y - intercept - slope * x) ** 2).sum())
    if ss_res <= 0.0:
        t = math.inf if slope > 0 else (-math.inf if slope < 0 else 0.0)
        p = 0.0 if slope != 0 else 1.0
    else:
        se = math.sqrt(ss_res / df / sxx)
        t = slope / se
        p = 2.0 * float(t_dist.sf(abs(t), df))
    return RegressionResult(
        slope=slope,
        intercept=intercept,
        std_beta=slope * sx / sy,
        t=t,
        df=df,
        p=p,
    )


@dataclass(frozen=True)
class ClusterResult:
    assignments: np.ndarray
    centroids: np.ndarray
    iterations: int
    wcss: float

    def to_dict(self) -> dict:
        return {
            "assignments": self.assignments.tolist(),
            "centroids": self.centroids.tolist(),
            "iterations": self.iterations,
            "wcss": self.wcss,
        }


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [points[rng.integers(points.shape[0])]]
    for _ in range(1, k):
        d2 = np.min(
            [np.sum((points - c) ** 2, axis=1) for c in centers], axis=0
        )
        total = d2.sum()
        if total <= 0:
            centers.append(points[rng.integers(points.shape[0])])
            continue
        centers.append(points[rng.choice(points.shape[0], p=d2 / total)])
    return np.array(centers, dtype=np.float64)


def kmeans(
    points: Sequence[Sequence[float]],
    k: int,
    seed: int = 0,
    standardize: bool = True,
    max_iter: int = 300,
) -> ClusterResult:
    """Lloyd's algorithm with spread (k-means++) initialization.

    Features are z-scored by default because the clustered indicators
    (milliseconds vs. percentages) live on incomparable scales; centroids
    are mapped back and reported in the original units. The within-cluster
    sum of squares is asserted non-increasing on every iteration, and an
    emptied cluster is reseeded to the point farthest from its centroid.
    """
    data = np.asarray(points, dtype=np.float64)
    if data.ndim != 2:
        raise DomainError("points must be a 2-D array")
    n = data.shape[0]
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if n < k:
        raise DomainError(f"need at least k={k} points, got {n}")

    shift = data.mean(axis=0)
    scale = data.std(axis=0)
    if standardize:
        if np.any(scale == 0):
            raise DomainError("cannot standardize a constant feature")
        work = (data - shift) / scale
    else:
        work = data

    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(work, k, rng)
    assignments = np.full(n, -1, dtype=np.int64)
    prev_wcss = math.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        d2 = ((work[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assignments = d2.argmin(axis=1)
        for cluster in range(k):
            members = work[new_assignments == cluster]
            if members.size == 0:
                farthest = int(d2[np.arange(n), new_assignments].argmax())
                centers[cluster] = work[farthest]
                new_assignments[farthest] = cluster
                members = work[new_assignments == cluster]
            centers[cluster] = members.mean(axis=0)
        wcss = float(
            ((work - centers[new_assignments]) ** 2).sum()
        )
        assert wcss <= prev_wcss + 1e-9, (wcss, prev_wcss)
        if np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments
        prev_wcss = wcss

    centroids = centers * scale + shift if standardize else centers
    return ClusterResult(
        assignments=assignments,
        centroids=centroids,
        iterations=iterations,
        wcss=wcss,
    )


def consistency(set_a: Iterable, set_b: Iterable, mode: str = "dice") -> float:
    """Agreement between two coders' id sets.

    "dice" scores 2|A∩B| / (|A|+|B|); "union" applies the literal
    2|A∩B| / |A∪B| denominator. Two empty sets agree perfectly (1.0).
    """
    a = set(set_a)
    b = set(set_b)
    if mode not in ("dice", "union"):
        raise DomainError(f"unknown consistency mode {mode!r}")
    if not a and not b:
        return 1.0
    inter = len(a & b)
    if mode == "dice":
        return 2.0 * inter / (len(a) + len(b))
    return 2.0 * inter / len(a | b)
