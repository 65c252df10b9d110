import { beforeEach, describe, expect, it } from "vitest";

import { ConflictError, OfflineError } from "../src/api.js";
import { ReviewSession } from "../src/session.js";
import { FakeService } from "./fake-service.js";

let service: FakeService;
let session: ReviewSession;

beforeEach(async () => {
  service = new FakeService();
  session = new ReviewSession(service, "rec-0");
  await session.load();
});

describe("loading", () => {
  it("selects the first pending candidate", () => {
    expect(session.selection).toEqual({ kind: "candidate", id: "det-000" });
    expect(session.draft).toMatchObject({ onsetMs: 480, offsetMs: 1040 });
    expect(session.revision).toBe(0);
  });

  it("keyboard navigation wraps across pending candidates", () => {
    session.next();
    expect(session.selection?.id).toBe("det-001");
    session.next();
    expect(session.selection?.id).toBe("det-000");
    session.prev();
    expect(session.selection?.id).toBe("det-001");
  });
});

describe("handle dragging", () => {
  it("snaps to the nearby trough by default", () => {
    // trough planted at 450 ms in the fake trace
    session.dragOnset(470);
    expect(session.draft?.onsetMs).toBe(450);
  });

  it("raw positions apply when snapping is off", () => {
    session.snapEnabled = false;
    session.dragOnset(470);
    expect(session.draft?.onsetMs).toBe(470);
  });

  it("onset can never cross the offset", () => {
    session.snapEnabled = false;
    session.dragOnset(5000);
    expect(session.draft!.onsetMs).toBeLessThan(session.draft!.offsetMs);
    expect(session.draft!.onsetMs).toBe(session.draft!.offsetMs - 1);
  });

  it("offset can never cross the onset", () => {
    session.snapEnabled = false;
    session.dragOffset(10);
    expect(session.draft!.offsetMs).toBeGreaterThan(session.draft!.onsetMs);
  });

  it("handles clamp to the recording duration", () => {
    session.snapEnabled = false;
    session.dragOffset(99999);
    expect(session.draft!.offsetMs).toBeLessThanOrEqual(1800);
  });

  it("badge follows the 500 ms rule live", () => {
    session.snapEnabled = false;
    expect(session.badge()).toBe("MaE"); // 560 ms candidate
    session.dragOffset(480 + 480);
    expect(session.badge()).toBe("ME");
  });
});

describe("accept and reject", () => {
  it("accept stores the candidate and advances the revision", async () => {
    const annotation = await session.acceptCurrent();
    expect(annotation.source).toBe("detector");
    expect(annotation.expr_type).toBe("MaE");
    expect(session.revision).toBe(1);
    expect(session.annotations).toHaveLength(1);
    expect(session.selection).toEqual({ kind: "annotation", id: "det-000" });
  });

  it("adjusted bounds mark the annotation source", async () => {
    session.snapEnabled = false;
    session.dragOffset(900);
    const annotation = await session.acceptCurrent();
    expect(annotation.source).toBe("adjusted");
  });

  it("reject moves on to the next candidate", async () => {
    await session.rejectCurrent();
    expect(session.rejectedIds).toContain("det-000");
    expect(session.revision).toBe(1);
    expect(session.pendingCandidates().map((c) => c.id)).toEqual(["det-001"]);
    expect(session.selection?.id).toBe("det-001");
  });
});

describe("editing an accepted annotation", () => {
  it("recomputes the expression type and marks it adjusted", async () => {
    await session.acceptCurrent();
    session.snapEnabled = false;
    session.dragOffset(480 + 320);
    const annotation = session.applyDraftToAnnotation();
    expect(annotation.offset_ms).toBe(800);
    expect(annotation.expr_type).toBe("ME");
    expect(annotation.source).toBe("adjusted");
    expect(annotation.apex_ms).toBeLessThanOrEqual(annotation.offset_ms);
    const revision = await session.save();
    expect(revision).toBe(2);
    expect(service.stored[0].offset_ms).toBe(800);
    expect(service.stored[0].expr_type).toBe("ME");
  });

  it("label edits without bound changes keep the source", async () => {
    await session.acceptCurrent();
    session.setAus(["AU4", "AU7"]);
    session.setEmotion("fear");
    const annotation = session.applyDraftToAnnotation();
    expect(annotation.source).toBe("detector");
    expect(annotation.aus).toEqual(["AU4", "AU7"]);
    expect(annotation.emotion).toBe("fear");
  });
});

describe("conflicts and offline state", () => {
  it("a stale save parks the session in conflict until reload", async () => {
    await session.acceptCurrent();
    service.revision = 5; // someone else wrote
    await expect(session.save()).rejects.toBeInstanceOf(ConflictError);
    expect(session.conflictRevision).toBe(5);
    expect(session.readOnly).toBe(true);
    session.select("candidate", "det-001");
    await expect(session.acceptCurrent()).rejects.toThrow("read-only");
    await session.reload();
    expect(session.conflictRevision).toBeNull();
    expect(session.revision).toBe(5);
  });

  it("an unreachable service flips the session read-only", async () => {
    class UnreachableService extends FakeService {
      override async meta(): Promise<never> {
        throw new OfflineError(new TypeError("fetch failed"));
      }
    }
    const offlineSession = new ReviewSession(new UnreachableService(), "rec-0");
    await expect(offlineSession.load()).rejects.toBeInstanceOf(OfflineError);
    expect(offlineSession.offline).toBe(true);
    expect(offlineSession.readOnly).toBe(true);
  });

  it("export mirrors the interchange format field-for-field", async () => {
    await session.acceptCurrent();
    const exported = session.exportAnnotations();
    expect(Object.keys(exported[0]).sort()).toEqual([
      "apex_ms", "aus", "channel_id", "emotion", "expr_type", "id",
      "offset_ms", "onset_ms", "recording_id", "source", "type_override",
    ]);
  });
});
