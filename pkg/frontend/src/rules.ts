import type { ExprType } from "./types.js";

/** Expressions strictly shorter than this are micro-expressions. */
export const ME_MAX_DURATION_MS = 500;

/** Smallest editable expression; drag handles may never collapse below it. */
export const MIN_DURATION_MS = 1;

export function classifyExpression(durationMs: number): ExprType {
  if (!Number.isFinite(durationMs) || durationMs <= 0) {
    throw new RangeError(`expression duration must be positive, got ${durationMs}`);
  }
  return durationMs < ME_MAX_DURATION_MS ? "ME" : "MaE";
}
