import type {
  AcceptRequest,
  Annotation,
  AnnotationsPayload,
  CandidatesPayload,
  RecordingMeta,
  RecordingSummary,
  SpotParamsQuery,
  TracePayload,
} from "./types.js";

/** Another writer advanced the revision; reload before saving again. */
export class ConflictError extends Error {
  constructor(public readonly revision: number) {
    super(`stale revision; server is at ${revision}`);
    this.name = "ConflictError";
  }
}

/** The service replied with a non-conflict error status. */
export class ApiError extends Error {
  constructor(public readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

/** The service is unreachable; the workbench must go read-only. */
export class OfflineError extends Error {
  constructor(cause: unknown) {
    super(`service unreachable: ${cause}`);
    this.name = "OfflineError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** The service surface the workbench depends on (mockable in tests). */
export interface WorkbenchApi {
  listRecordings(): Promise<RecordingSummary[]>;
  meta(recordingId: string): Promise<RecordingMeta>;
  trace(
    recordingId: string,
    channel: string,
    opts?: { fromMs?: number; toMs?: number; decimate?: number },
  ): Promise<TracePayload>;
  candidates(recordingId: string, params?: SpotParamsQuery): Promise<CandidatesPayload>;
  annotations(recordingId: string): Promise<AnnotationsPayload>;
  putAnnotations(
    recordingId: string,
    revision: number,
    annotations: Annotation[],
  ): Promise<{ revision: number; count: number }>;
  accept(
    recordingId: string,
    candidateId: string,
    body: AcceptRequest,
  ): Promise<{ revision: number; annotation: Annotation }>;
  reject(
    recordingId: string,
    candidateId: string,
    revision: number,
  ): Promise<{ revision: number }>;
}

export class ApiClient implements WorkbenchApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (cause) {
      throw new OfflineError(cause);
    }
    if (response.status === 409) {
      const body = (await response.json()) as { revision: number };
      throw new ConflictError(body.revision);
    }
    if (!response.ok) {
      let message = `${response.status}`;
      try {
        const body = (await response.json()) as Record<string, unknown>;
        message = String(body.error ?? body.detail ?? message);
      } catch {
        /* non-JSON error body; keep the status text */
      }
      throw new ApiError(response.status, message);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  listRecordings(): Promise<RecordingSummary[]> {
    return this.request("/recordings");
  }

  meta(recordingId: string): Promise<RecordingMeta> {
    return this.request(`/recordings/${recordingId}/meta`);
  }

  trace(
    recordingId: string,
    channel: string,
    opts: { fromMs?: number; toMs?: number; decimate?: number } = {},
  ): Promise<TracePayload> {
    const query = new URLSearchParams({ channel });
    if (opts.fromMs !== undefined) query.set("from_ms", String(opts.fromMs));
    if (opts.toMs !== undefined) query.set("to_ms", String(opts.toMs));
    if (opts.decimate !== undefined) query.set("decimate", String(opts.decimate));
    return this.request(`/recordings/${recordingId}/trace?${query}`);
  }

  candidates(recordingId: string, params: SpotParamsQuery = {}): Promise<CandidatesPayload> {
    const query = new URLSearchParams();
    for (const [key, value] of Object.entries(params)) {
      if (value !== undefined) query.set(key, String(value));
    }
    const suffix = query.toString() ? `?${query}` : "";
    return this.request(`/recordings/${recordingId}/candidates${suffix}`);
  }

  annotations(recordingId: string): Promise<AnnotationsPayload> {
    return this.request(`/recordings/${recordingId}/annotations`);
  }

  putAnnotations(
    recordingId: string,
    revision: number,
    annotations: Annotation[],
  ): Promise<{ revision: number; count: number }> {
    return this.request(`/recordings/${recordingId}/annotations`, {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ revision, annotations }),
    });
  }

  accept(
    recordingId: string,
    candidateId: string,
    body: AcceptRequest,
  ): Promise<{ revision: number; annotation: Annotation }> {
    return this.post(`/recordings/${recordingId}/annotations/${candidateId}/accept`, body);
  }

  reject(
    recordingId: string,
    candidateId: string,
    revision: number,
  ): Promise<{ revision: number }> {
    return this.post(`/recordings/${recordingId}/annotations/${candidateId}/reject`, {
      revision,
    });
  }
}
