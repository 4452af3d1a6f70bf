/**
 * Typed client for the demonstration-capture HTTP API.
 *
 * Every game position the UI ever shows comes from one of these calls:
 * the client never simulates moves locally.
 */

export interface MapInfo {
  name: string;
  game_kind: string;
  width: number;
  height: number;
  horizon: number;
  map_id: string;
  rows: string[];
}

export interface CellRef {
  row: number;
  col: number;
}

export interface SessionView {
  session_id: string;
  map_name: string;
  game_kind: string;
  width: number;
  height: number;
  agent: CellRef;
  has_key: boolean;
  enemy: CellRef | null;
  score: number;
  steps_taken: number;
  status: string;
  last_event: string | null;
  saved_as: string | null;
  /** Present only on the create-session response. */
  map_rows?: string[];
}

export interface SaveResult {
  trajectory_id: string;
  path: string;
  outcome: string;
  steps: number;
}

export interface TrajectorySummary {
  id: string;
  game_kind: string;
  source: string;
  steps: number;
  outcome: string;
  map_id: string;
}

export interface StoredStep {
  obs_id: number;
  row: number;
  col: number;
  has_key: boolean;
  action_id: number;
}

export interface TrajectoryDetail {
  id: string;
  map_id: string;
  map_name: string | null;
  game_kind: string;
  source: string;
  outcome: string;
  created_at: string | null;
  steps: StoredStep[];
}

/** Non-2xx response, carrying the server's error detail. */
export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }

  get detail(): string {
    return this.message;
  }
}

/** The operations the UI needs; `ApiClient` is the real implementation. */
export interface Api {
  listMaps(): Promise<MapInfo[]>;
  createSession(req: { map_name?: string; game_kind?: string }): Promise<SessionView>;
  getState(sessionId: string): Promise<SessionView>;
  postAction(sessionId: string, actionId: number): Promise<SessionView>;
  saveTrajectory(sessionId: string, label: string): Promise<SaveResult>;
  listTrajectories(filter?: { game?: string; source?: string }): Promise<TrajectorySummary[]>;
  getTrajectory(trajectoryId: string): Promise<TrajectoryDetail>;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient implements Api {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) {
      let detail = `HTTP ${resp.status}`;
      try {
        const body: unknown = await resp.json();
        const d = (body as { detail?: unknown }).detail;
        if (typeof d === "string") detail = d;
      } catch {
        // not JSON; keep the generic detail
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  listMaps(): Promise<MapInfo[]> {
    return this.request("/api/maps");
  }

  createSession(req: { map_name?: string; game_kind?: string }): Promise<SessionView> {
    return this.post("/api/sessions", req);
  }

  getState(sessionId: string): Promise<SessionView> {
    return this.request(`/api/sessions/${sessionId}`);
  }

  postAction(sessionId: string, actionId: number): Promise<SessionView> {
    return this.post(`/api/sessions/${sessionId}/actions`, { action_id: actionId });
  }

  saveTrajectory(sessionId: string, label: string): Promise<SaveResult> {
    return this.post(`/api/sessions/${sessionId}/save`, { label });
  }

  listTrajectories(filter: { game?: string; source?: string } = {}): Promise<TrajectorySummary[]> {
    const params = new URLSearchParams();
    if (filter.game) params.set("game", filter.game);
    if (filter.source) params.set("source", filter.source);
    const query = params.toString();
    return this.request(`/api/trajectories${query ? `?${query}` : ""}`);
  }

  getTrajectory(trajectoryId: string): Promise<TrajectoryDetail> {
    // Ids look like "maze/human/alice-1a2b3c4d.jsonl#0"; the "#" must be
    // percent-encoded or the browser would treat it as a URL fragment.
    return this.request(`/api/trajectories/${trajectoryId.replace(/#/g, "%23")}`);
  }
}
