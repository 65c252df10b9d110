/** Drag-assist: pull a handle onto the nearest envelope trough.
 *
 * Mirrors the detector's bound rule (interval edges sit on local minima),
 * so manually adjusted bounds and automatic ones share semantics. Searches
 * the trace points within +-windowMs of the target and returns the time of
 * the smallest value, earliest on exact ties; the raw target comes back
 * unchanged when no trace point falls inside the window.
 */
export function snapToTrough(
  tMs: ArrayLike<number>,
  values: ArrayLike<number>,
  targetMs: number,
  windowMs = 50,
): number {
  let bestT = targetMs;
  let bestV = Number.POSITIVE_INFINITY;
  let found = false;
  for (let i = 0; i < tMs.length; i++) {
    const t = tMs[i];
    if (t < targetMs - windowMs || t > targetMs + windowMs) continue;
    const v = values[i];
    if (!found || v < bestV) {
      found = true;
      bestV = v;
      bestT = t;
    }
  }
  return bestT;
}
