/** Typed client for the session service (/api/v1). All numbers displayed
 * anywhere in the console come from these responses. */

export interface PendingPrompt {
  kind: "vote" | "satisfaction";
  row?: number;
  col?: number;
}

export interface SessionSnapshot {
  id: string;
  status: "running" | "awaiting_human" | "finished" | "aborted";
  iteration: number;
  explored_count: number;
  pending: PendingPrompt | null;
  target: number[] | null;
  has_maps: boolean;
  mse: number | null;
}

export interface PendingSpectrum {
  row: number;
  col: number;
  values: number[];
  bias: number[];
  target: number[] | null;
}

export interface MapResponse {
  kind: string;
  rows: number;
  cols: number;
  row_offset: number;
  col_offset: number;
  values: number[];
  explored: { row: number; col: number }[];
}

export interface CreateSessionRequest {
  dataset_path?: string;
  synthetic?: {
    seed?: number;
    height?: number;
    width?: number;
    spectrum_len?: number;
    rho?: number;
  };
  config?: Record<string, unknown>;
  voter?: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/v1${path}`, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = await resp.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return resp.json() as Promise<T>;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  createSession(body: CreateSessionRequest): Promise<SessionSnapshot> {
    return this.post("/sessions", body);
  }

  getSession(id: string): Promise<SessionSnapshot> {
    return this.request(`/sessions/${id}`);
  }

  getSpectrum(id: string): Promise<PendingSpectrum> {
    return this.request(`/sessions/${id}/spectrum`);
  }

  getMaps(id: string, kind: string): Promise<MapResponse> {
    return this.request(`/sessions/${id}/maps?kind=${encodeURIComponent(kind)}`);
  }

  vote(id: string, vote: number, preference: number): Promise<SessionSnapshot> {
    return this.post(`/sessions/${id}/vote`, { vote, preference });
  }

  satisfaction(id: string, satisfied: boolean): Promise<SessionSnapshot> {
    return this.post(`/sessions/${id}/satisfaction`, { satisfied });
  }

  abort(id: string): Promise<SessionSnapshot> {
    return this.post(`/sessions/${id}/abort`);
  }

  exportRun(id: string, path: string): Promise<{ exported: string }> {
    return this.post(`/sessions/${id}/export`, { path });
  }
}
