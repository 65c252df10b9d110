import { describe, expect, it } from "vitest";

import { snapToTrough } from "../src/snap.js";

const tMs = [0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100];

describe("snapToTrough", () => {
  it("pulls to the minimum within the window", () => {
    const v = [5, 4, 3, 0.5, 3, 4, 5, 6, 7, 8, 9];
    expect(snapToTrough(tMs, v, 40, 50)).toBe(30);
  });

  it("ignores minima outside the window", () => {
    const v = [0, 9, 9, 9, 9, 9, 9, 9, 9, 9, 1];
    // global minimum at t=0 but window around 60 only reaches t=10..100
    expect(snapToTrough(tMs, v, 60, 40)).toBe(100);
  });

  it("returns the target when no point is in range", () => {
    expect(snapToTrough([1000, 2000], [1, 2], 400, 50)).toBe(400);
  });

  it("takes the earliest point on exact ties", () => {
    const v = [9, 2, 2, 2, 9, 9, 9, 9, 9, 9, 9];
    expect(snapToTrough(tMs, v, 20, 30)).toBe(10);
  });

  it("default window is +-50 ms and includes its edges", () => {
    // global minimum at t=0 is outside [10, 110]; the t=10 edge is inside
    const v = [0, 1, 9, 9, 9, 9, 8, 9, 9, 9, 9];
    expect(snapToTrough(tMs, v, 60)).toBe(10);
  });
});
