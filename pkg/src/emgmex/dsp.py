"""Pre-processing chain: DC removal, band-pass, rectification, envelope.

The Butterworth filters are designed here from the analog prototype via
frequency pre-warping and the bilinear transform, and emitted as a cascade
of biquad sections. Filtering is a single causal forward pass with zero
initial state, so every stage output is delayed by the filter's group
delay; ``dc_group_delay_s`` reports that constant for the envelope stage
(about 37.5 ms for the default 6 Hz low-pass at 1000 Hz) so downstream
consumers can account for it when comparing absolute onset times.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import sosfilt

from .errors import DomainError, ValidationError
from .model import EmgRecording

# Fixed pipeline parameters: 2nd-order 20-450 Hz band-pass for denoising,
# 2nd-order 6 Hz low-pass of the rectified signal for the linear envelope.
BAND_PASS_HZ = (20.0, 450.0)
ENVELOPE_LOW_PASS_HZ = 6.0
PREPROCESS_ORDER = 2

STAGES = ("dc", "bp", "rect", "env")


@dataclass(frozen=True)
class FilterSpec:
    """Design request for a Butterworth filter."""

    order: int
    kind: str  # "band_pass" | "low_pass"
    cutoffs_hz: tuple[float, ...]
    sample_rate_hz: float

    def __post_init__(self) -> None:
        if self.order < 1:
            raise ValidationError(f"filter order must be >= 1, got {self.order}")
        if self.sample_rate_hz <= 0:
            raise ValidationError("sample_rate_hz must be positive")
        cutoffs = tuple(float(c) for c in self.cutoffs_hz)
        object.__setattr__(self, "cutoffs_hz", cutoffs)
        nyquist = self.sample_rate_hz / 2
        if self.kind == "low_pass":
            if len(cutoffs) != 1:
                raise ValidationError("low_pass takes exactly one cutoff")
        elif self.kind == "band_pass":
            if len(cutoffs) != 2 or not cutoffs[0] < cutoffs[1]:
                raise ValidationError("band_pass takes two increasing cutoffs")
        else:
            raise ValidationError(f"unknown filter kind {self.kind!r}")
        if any(not 0 < c < nyquist for c in cutoffs):
            raise DomainError(
                f"cutoffs {cutoffs} must lie strictly between 0 and the "
                f"Nyquist frequency {nyquist} Hz"
            )


@dataclass(frozen=True)
class Biquad:
    """Second-order section; denominator normalized to a0 = 1."""

    b0: float
    b1: float
    b2: float
    a1: float
    a2: float

    def poles(self) -> np.ndarray:
        return np.roots([1.0, self.a1, self.a2])

    @property
    def is_stable(self) -> bool:
        return bool(np.all(np.abs(self.poles()) < 1.0))


def _prototype_poles(order: int) -> list[complex]:
    # Left-half-plane poles of the unit-cutoff analog Butterworth filter.
    return [
        cmath.exp(1j * math.pi * (2 * k + order + 1) / (2 * order))
        for k in range(order)
    ]


def _bilinear(zeros: list[complex], poles: list[complex], gain: float, fs: float):
    fs2 = 2.0 * fs
    z_d = [(fs2 + z) / (fs2 - z) for z in zeros]
    p_d = [(fs2 + p) / (fs2 - p) for p in poles]
    num = math.prod((fs2 - z for z in zeros), start=1.0 + 0.0j)
    den = math.prod((fs2 - p for p in poles), start=1.0 + 0.0j)
    gain_d = gain * (num / den).real
    # Zeros at analog infinity land at z = -1.
    z_d.extend([-1.0 + 0.0j] * (len(poles) - len(zeros)))
    return z_d, p_d, gain_d


def _pair_conjugates(roots: list[complex]) -> tuple[list[complex], list[float]]:
    """Split roots into one representative per conjugate pair plus reals."""
    pairs: list[complex] = []
    reals: list[float] = []
    remaining = sorted(roots, key=lambda r: (round(r.real, 12), round(r.imag, 12)))
    used = [False] * len(remaining)
    for i, r in enumerate(remaining):
        if used[i]:
            continue
        if abs(r.imag) < 1e-10:
            reals.append(r.real)
            used[i] = True
            continue
        for j in range(i + 1, len(remaining)):
            if not used[j] and abs(remaining[j] - r.conjugate()) < 1e-8:
                pairs.append(r if r.imag > 0 else r.conjugate())
                used[i] = used[j] = True
                break
        else:
            raise ValidationError(f"complex root {r} has no conjugate partner")
    return pairs, reals


def _sections_from_roots(roots: list[complex]) -> list[tuple[float, float, float]]:
    """Group roots into real quadratic (or trailing linear) factors."""
    pairs, reals = _pair_conjugates(roots)
    sections = [(1.0, -2.0 * p.real, abs(p) ** 2) for p in pairs]
    reals.sort()
    # Pair real roots from opposite ends so e.g. the band-pass zeros at
    # +1 and -1 combine into (z-1)(z+1) within one section.
    while len(reals) >= 2:
        r1, r2 = reals.pop(0), reals.pop(-1)
        sections.append((1.0, -(r1 + r2), r1 * r2))
    if reals:
        sections.append((1.0, -reals[0], 0.0))
    return sections


def design_filter(spec: FilterSpec) -> list[Biquad]:
    """Design a Butterworth filter as a cascade of biquad sections.

    Band-pass designs follow the usual convention that ``order`` is the
    analog prototype order, so the digital filter has 2 * order poles
    (two biquads for the default 2nd-order 20-450 Hz denoiser).
    """
    fs = spec.sample_rate_hz
    poles = _prototype_poles(spec.order)
    zeros: list[complex] = []
    gain = 1.0

    warped = [2.0 * fs * math.tan(math.pi * c / fs) for c in spec.cutoffs_hz]
    if spec.kind == "low_pass":
        w = warped[0]
        poles = [p * w for p in poles]
        gain *= w ** spec.order
    else:
        w0 = math.sqrt(warped[0] * warped[1])
        bw = warped[1] - warped[0]
        transformed = []
        for p in poles:
            half = p * bw / 2.0
            disc = cmath.sqrt(half * half - w0 * w0)
            transformed.extend([half + disc, half - disc])
        poles = transformed
        zeros = [0.0 + 0.0j] * spec.order
        gain *= bw ** spec.order

    z_d, p_d, gain_d = _bilinear(zeros, poles, gain, fs)

    den_sections = _sections_from_roots(p_d)
    num_sections = _sections_from_roots(z_d)
    while len(num_sections) < len(den_sections):
        num_sections.append((1.0, 0.0, 0.0))
    if len(num_sections) > len(den_sections):
        raise ValidationError("more zeros than poles after transform")

    cascade = []
    for i, ((b0, b1, b2), (_, a1, a2)) in enumerate(zip(num_sections, den_sections)):
        scale = gain_d if i == 0 else 1.0
        cascade.append(Biquad(b0=scale * b0, b1=scale * b1, b2=scale * b2, a1=a1, a2=a2))
    for section in cascade:
        if not section.is_stable:
            raise ValidationError(f"designed section is unstable: {section}")
    return cascade


def as_sos(cascade: Sequence[Biquad]) -> np.ndarray:
    """Cascade as a scipy second-order-sections array."""
    return np.array(
        [[s.b0, s.b1, s.b2, 1.0, s.a1, s.a2] for s in cascade], dtype=np.float64
    )


def frequency_response(
    cascade: Sequence[Biquad], freqs_hz: np.ndarray, sample_rate_hz: float
) -> np.ndarray:
    """Complex response of the cascade evaluated directly at z = e^(jw)."""
    w = 2.0 * np.pi * np.asarray(freqs_hz, dtype=np.float64) / sample_rate_hz
    zinv = np.exp(-1j * w)
    h = np.ones_like(zinv, dtype=np.complex128)
    for s in cascade:
        h *= (s.b0 + s.b1 * zinv + s.b2 * zinv**2) / (1.0 + s.a1 * zinv + s.a2 * zinv**2)
    return h


def dc_group_delay_s(cascade: Sequence[Biquad], sample_rate_hz: float) -> float:
    """Low-frequency group delay in seconds, from the phase slope near DC."""
    f = np.array([1e-3, 2e-3])
    phase = np.unwrap(np.angle(frequency_response(cascade, f, sample_rate_hz)))
    dw = 2.0 * np.pi * (f[1] - f[0])
    return float(-(phase[1] - phase[0]) / dw)


def apply_filter(cascade: Sequence[Biquad], signal: np.ndarray) -> np.ndarray:
    """Run one causal forward pass with zero initial state."""
    for section in cascade:
        if not section.is_stable:
            raise ValidationError(f"refusing to apply unstable section {section}")
    x = np.asarray(signal, dtype=np.float64)
    if x.size == 0:
        return x.copy()
    return sosfilt(as_sos(cascade), x)


def remove_dc(signal: np.ndarray) -> np.ndarray:
    """Subtract the mean so the output is zero-centered."""
    x = np.asarray(signal, dtype=np.float64)
    if x.size == 0:
        raise DomainError("cannot remove DC from an empty signal")
    return x - x.mean()


def rectify(signal: np.ndarray) -> np.ndarray:
    """Full-wave rectification (elementwise absolute value)."""
    return np.abs(np.asarray(signal, dtype=np.float64))


def band_pass_cascade(sample_rate_hz: float) -> list[Biquad]:
    return design_filter(
        FilterSpec(PREPROCESS_ORDER, "band_pass", BAND_PASS_HZ, sample_rate_hz)
    )


def envelope_cascade(sample_rate_hz: float) -> list[Biquad]:
    return design_filter(
        FilterSpec(PREPROCESS_ORDER, "low_pass", (ENVELOPE_LOW_PASS_HZ,), sample_rate_hz)
    )


def envelope(signal: np.ndarray, sample_rate_hz: float) -> np.ndarray:
    """Linear envelope: 6 Hz 2nd-order low-pass of a rectified signal."""
    return apply_filter(envelope_cascade(sample_rate_hz), signal)


def preprocess(recording: EmgRecording, stage: str = "env") -> EmgRecording:
    """Run the per-channel chain DC-removal -> band-pass -> rectify -> envelope.

    ``stage`` truncates the chain for debugging ("dc", "bp", "rect" or
    "env"). The output recording is flagged with the stage's domain;
    recordings that are already past "raw" are rejected so the chain
    cannot be applied twice.
    """
    if stage not in STAGES:
        raise DomainError(f"unknown stage {stage!r}, expected one of {STAGES}")
    if recording.domain != "raw":
        raise DomainError(
            f"recording {recording.id!r} is already in domain {recording.domain!r}; "
            "preprocessing applies to raw recordings only"
        )
    fs = recording.sample_rate_hz
    bp = band_pass_cascade(fs)
    lp = envelope_cascade(fs)
    out = {}
    for trace in recording.channels:
        x = remove_dc(trace.samples)
        if stage != "dc":
            x = apply_filter(bp, x)
        if stage in ("rect", "env"):
            x = rectify(x)
        if stage == "env":
            x = apply_filter(lp, x)
        out[trace.channel_id] = x
    domain = "envelope" if stage == "env" else stage
    return recording.with_samples(out, domain=domain)
