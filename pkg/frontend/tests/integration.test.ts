import { execFile, spawn, type ChildProcess } from "node:child_process";
import { mkdtemp, readFile, rm } from "node:fs/promises";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ConflictError } from "../src/api.js";
import { ReviewSession } from "../src/session.js";
import type { Annotation } from "../src/types.js";

/** Headless round-trip against the real annotation service: generate
 * fixtures, serve them, accept a detector candidate, drag its offset below
 * the 500 ms boundary, save, and check the persisted JSON plus the
 * stale-revision conflict path. */

const run = promisify(execFile);

let dataDir: string;
let server: ChildProcess | null = null;
let baseUrl: string;

async function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port assigned"));
        return;
      }
      probe.close(() => resolve(address.port));
    });
  });
}

async function waitForService(url: string, attempts = 100): Promise<void> {
  for (let i = 0; i < attempts; i++) {
    try {
      const response = await fetch(`${url}/recordings`);
      if (response.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error(`service at ${url} did not come up`);
}

beforeAll(async () => {
  dataDir = await mkdtemp(join(tmpdir(), "emgmex-workbench-"));
  await run("python3", [
    "-m", "emgmex.cli", "synth",
    "--out-dir", dataDir, "--count", "2", "--seed", "11",
  ]);
  const port = await freePort();
  baseUrl = `http://127.0.0.1:${port}`;
  server = spawn(
    "python3",
    ["-m", "emgmex.cli", "serve", "--data-dir", dataDir, "--port", String(port)],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  await waitForService(baseUrl);
});

afterAll(async () => {
  server?.kill();
  await rm(dataDir, { recursive: true, force: true });
});

describe("workbench round-trip against the running service", () => {
  it("accepts, adjusts below 500 ms, saves, and survives a conflict", async () => {
    const api = new ApiClient(baseUrl);
    const session = new ReviewSession(api, "seg-000");
    await session.load();

    expect(session.meta?.id).toBe("seg-000");
    expect(session.pendingCandidates().length).toBeGreaterThan(0);
    expect(session.revision).toBe(0);

    // accept the detector candidate untouched
    const accepted = await session.acceptCurrent();
    expect(session.revision).toBe(1);
    expect(accepted.source).toBe("detector");

    // drag the offset to 480 ms after the onset: badge must flip to ME
    session.snapEnabled = false;
    session.dragOffset(session.draft!.onsetMs + 480);
    expect(session.badge()).toBe("ME");
    const adjusted = session.applyDraftToAnnotation();
    expect(adjusted.source).toBe("adjusted");

    const revision = await session.save();
    expect(revision).toBe(2);

    // the persisted interchange file shows the adjusted bounds and type
    const persisted = JSON.parse(
      await readFile(join(dataDir, "seg-000.annotations.json"), "utf-8"),
    ) as Annotation[];
    expect(persisted).toHaveLength(1);
    expect(persisted[0].id).toBe(accepted.id);
    expect(persisted[0].onset_ms).toBeCloseTo(adjusted.onset_ms, 6);
    expect(persisted[0].offset_ms).toBeCloseTo(adjusted.onset_ms + 480, 6);
    expect(persisted[0].expr_type).toBe("ME");
    expect((await api.meta("seg-000")).revision).toBe(2);

    // a second editor loads revision 2 ...
    const other = new ReviewSession(api, "seg-000");
    await other.load();
    expect(other.revision).toBe(2);

    // ... the first editor saves again (revision 3), so the second's save
    // must surface a conflict carrying the current revision
    await session.save();
    const failure = await other.save().then(() => null, (e) => e);
    expect(failure).toBeInstanceOf(ConflictError);
    expect((failure as ConflictError).revision).toBe(3);
    expect(other.readOnly).toBe(true);
    await other.reload();
    expect(other.revision).toBe(3);
    expect(other.readOnly).toBe(false);
  });

  it("decimated traces preserve the envelope peak", async () => {
    const api = new ApiClient(baseUrl);
    const full = await api.trace("seg-001", "c1");
    const decimated = await api.trace("seg-001", "c1", { decimate: 120 });
    expect(decimated.n_points).toBeLessThan(full.n_points);
    expect(Math.max(...decimated.v)).toBeCloseTo(Math.max(...full.v), 12);
  });

  it("candidate generation stays read-only", async () => {
    const api = new ApiClient(baseUrl);
    const before = (await api.meta("seg-001")).revision;
    await api.candidates("seg-001");
    await api.candidates("seg-001", { k: 2.0 });
    expect((await api.meta("seg-001")).revision).toBe(before);
  });
});
