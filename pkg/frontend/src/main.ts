import { ApiClient, ConflictError, OfflineError } from "./api.js";
import { msToFrame } from "./frames.js";
import { ReviewSession } from "./session.js";
import { renderTimeline, TimelineView } from "./timeline.js";
import { ausForChannel, EMOTIONS } from "./vocab.js";

/** DOM wiring for the review workbench: one recording at a time, keyboard
 * next/prev over candidates, draggable bounds on the canvas, AU/emotion
 * pickers, accept/reject/save, and a live ME/MaE badge. */

const SERVICE_URL =
  new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8765";

const els = {
  recording: document.getElementById("recording") as HTMLSelectElement,
  channel: document.getElementById("channel") as HTMLSelectElement,
  canvas: document.getElementById("timeline") as HTMLCanvasElement,
  badge: document.getElementById("badge") as HTMLSpanElement,
  bounds: document.getElementById("bounds") as HTMLSpanElement,
  frame: document.getElementById("frame") as HTMLSpanElement,
  banner: document.getElementById("banner") as HTMLDivElement,
  candidateList: document.getElementById("candidates") as HTMLUListElement,
  aus: document.getElementById("aus") as HTMLDivElement,
  emotion: document.getElementById("emotion") as HTMLSelectElement,
  snap: document.getElementById("snap") as HTMLInputElement,
  accept: document.getElementById("accept") as HTMLButtonElement,
  reject: document.getElementById("reject") as HTMLButtonElement,
  save: document.getElementById("save") as HTMLButtonElement,
  exportBtn: document.getElementById("export") as HTMLButtonElement,
  revision: document.getElementById("revision") as HTMLSpanElement,
};

const api = new ApiClient(SERVICE_URL);
let session: ReviewSession | null = null;
let view: TimelineView | null = null;
let dragging: "onset" | "offset" | null = null;

function setBanner(text: string, kind: "info" | "error" | "") {
  els.banner.textContent = text;
  els.banner.className = kind ? `banner ${kind}` : "banner hidden";
}

function describeError(error: unknown): void {
  if (error instanceof ConflictError) {
    setBanner(
      `Save conflict: another session is at revision ${error.revision}. ` +
        "Reload to pick up their changes.",
      "error",
    );
  } else if (error instanceof OfflineError) {
    setBanner("Service unreachable; the workbench is read-only.", "error");
  } else {
    setBanner(String(error), "error");
  }
}

function redraw(): void {
  if (!session || !view || !session.trace) return;
  const ctx = els.canvas.getContext("2d")!;
  renderTimeline(ctx, view, els.canvas.height, {
    tMs: session.trace.t_ms,
    values: session.trace.v,
    candidates: session.candidates,
    annotations: session.annotations,
    draft: session.draft,
    rejectedIds: session.rejectedIds,
  });
  const badge = session.draft ? session.badge() : null;
  els.badge.textContent = badge ?? "--";
  els.badge.className = badge === "ME" ? "badge me" : badge === "MaE" ? "badge mae" : "badge";
  if (session.draft) {
    const { onsetMs, offsetMs } = session.draft;
    els.bounds.textContent =
      `${onsetMs.toFixed(0)} - ${offsetMs.toFixed(0)} ms ` +
      `(${(offsetMs - onsetMs).toFixed(0)} ms)`;
    els.frame.textContent = `frames ${msToFrame(onsetMs)} - ${msToFrame(offsetMs)}`;
  } else {
    els.bounds.textContent = "--";
    els.frame.textContent = "";
  }
  els.revision.textContent = `rev ${session.revision}`;
  renderCandidateList();
}

function renderCandidateList(): void {
  if (!session) return;
  els.candidateList.replaceChildren();
  for (const candidate of session.candidates) {
    const item = document.createElement("li");
    const accepted = session.annotations.some((a) => a.id === candidate.id);
    const rejected = session.rejectedIds.includes(candidate.id);
    item.textContent =
      `${candidate.id}: ${candidate.onset_ms.toFixed(0)}-${candidate.offset_ms.toFixed(0)} ms ` +
      `${candidate.expr_type}${accepted ? " [accepted]" : rejected ? " [rejected]" : ""}`;
    item.className = session.selection?.id === candidate.id ? "selected" : "";
    item.onclick = () => {
      session!.select(accepted ? "annotation" : "candidate", candidate.id);
      syncLabelInputs();
      redraw();
    };
    els.candidateList.append(item);
  }
}

function syncLabelInputs(): void {
  if (!session) return;
  const channel = session.channelId ?? "c1";
  els.aus.replaceChildren();
  for (const au of ausForChannel(channel)) {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.value = au;
    box.checked = session.draft?.aus.includes(au) ?? false;
    box.onchange = () => {
      const checked = Array.from(
        els.aus.querySelectorAll<HTMLInputElement>("input:checked"),
      ).map((input) => input.value);
      session!.setAus(checked);
      redraw();
    };
    label.append(box, au);
    els.aus.append(label);
  }
  els.emotion.value = session.draft?.emotion ?? "";
}

async function openRecording(recordingId: string): Promise<void> {
  session = new ReviewSession(api, recordingId);
  try {
    await session.load();
    setBanner("", "");
  } catch (error) {
    describeError(error);
    if (!(error instanceof OfflineError)) throw error;
    return;
  }
  const meta = session.meta!;
  els.channel.replaceChildren(
    ...meta.channels.map((channel) => {
      const option = document.createElement("option");
      option.value = channel.channel_id;
      option.textContent = `${channel.channel_id} (${channel.muscle_name})`;
      return option;
    }),
  );
  els.channel.value = session.channelId!;
  view = new TimelineView(meta.duration_ms, els.canvas.width);
  syncLabelInputs();
  redraw();
}

async function boot(): Promise<void> {
  els.emotion.replaceChildren(
    new Option("(none)", ""),
    ...EMOTIONS.map((emotion) => new Option(emotion, emotion)),
  );
  let recordings;
  try {
    recordings = await api.listRecordings();
  } catch (error) {
    describeError(error);
    return;
  }
  els.recording.replaceChildren(
    ...recordings.map((recording) => new Option(recording.id, recording.id)),
  );
  if (recordings.length > 0) await openRecording(recordings[0].id);

  els.recording.onchange = () => void openRecording(els.recording.value);
  els.channel.onchange = async () => {
    if (!session) return;
    session.channelId = els.channel.value;
    session.trace = await api.trace(session.recordingId, els.channel.value, {
      decimate: 1600,
    });
    syncLabelInputs();
    redraw();
  };
  els.snap.onchange = () => {
    if (session) session.snapEnabled = els.snap.checked;
  };
  els.emotion.onchange = () => {
    session?.setEmotion(els.emotion.value);
  };

  els.canvas.onmousedown = (event) => {
    if (!session || !view) return;
    dragging = view.hitTestHandle(event.offsetX, session.draft);
  };
  els.canvas.onmousemove = (event) => {
    if (!session || !view || !dragging) return;
    const ms = view.xToMs(event.offsetX);
    if (dragging === "onset") session.dragOnset(ms);
    else session.dragOffset(ms);
    redraw();
  };
  window.onmouseup = () => {
    dragging = null;
  };
  els.canvas.onwheel = (event) => {
    if (!view) return;
    event.preventDefault();
    view.zoom(event.deltaY > 0 ? 1.2 : 1 / 1.2, view.xToMs(event.offsetX));
    redraw();
  };

  window.onkeydown = (event) => {
    if (!session) return;
    if (event.key === "ArrowRight" || event.key === "j") {
      session.next();
      syncLabelInputs();
      redraw();
    } else if (event.key === "ArrowLeft" || event.key === "k") {
      session.prev();
      syncLabelInputs();
      redraw();
    }
  };

  els.accept.onclick = async () => {
    if (!session) return;
    try {
      await session.acceptCurrent();
      setBanner("Candidate accepted.", "info");
    } catch (error) {
      describeError(error);
    }
    redraw();
  };
  els.reject.onclick = async () => {
    if (!session) return;
    try {
      await session.rejectCurrent();
      setBanner("Candidate rejected.", "info");
    } catch (error) {
      describeError(error);
    }
    syncLabelInputs();
    redraw();
  };
  els.save.onclick = async () => {
    if (!session) return;
    try {
      if (session.selection?.kind === "annotation") session.applyDraftToAnnotation();
      const revision = await session.save();
      setBanner(`Saved at revision ${revision}.`, "info");
    } catch (error) {
      if (error instanceof ConflictError) {
        describeError(error);
        await session.reload();
        syncLabelInputs();
      } else {
        describeError(error);
      }
    }
    redraw();
  };
  els.exportBtn.onclick = () => {
    if (!session) return;
    const blob = new Blob([JSON.stringify(session.exportAnnotations(), null, 2)], {
      type: "application/json",
    });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = `${session.recordingId}.annotations.json`;
    link.click();
    URL.revokeObjectURL(link.href);
  };
}

void boot();
