// Thin client for the platform's JSON endpoints. The fetch implementation is
// injectable so tests can serve recorded fixtures. Browser auth rides on the
// session cookie issued by POST /v1/session; no API key is kept in the page.

import type {
  ApiKeyInfo,
  ChallengesResponse,
  Diagnostic,
  LeaderboardResponse,
  Me,
  SeriesResponse,
} from "./types.js";
import type { LeaderboardViewState } from "./state.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public diagnostics: Diagnostic[] = [],
  ) {
    super(message);
  }
}

async function request<T>(fetchFn: FetchLike, url: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetchFn(url, { credentials: "same-origin", ...init });
  } catch (err) {
    throw new ApiError(0, "NETWORK", String(err));
  }
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    throw new ApiError(
      response.status,
      body.error ?? "ERROR",
      body.message ?? `HTTP ${response.status}`,
      body.diagnostics ?? [],
    );
  }
  return body as T;
}

export class ArenaClient {
  constructor(
    private fetchFn: FetchLike,
    private base = "",
  ) {}

  challenges(): Promise<ChallengesResponse> {
    return request(this.fetchFn, `${this.base}/v1/challenges`);
  }

  leaderboard(state: LeaderboardViewState): Promise<LeaderboardResponse> {
    const params = new URLSearchParams({
      window: String(state.window),
      sort: state.sort,
    });
    if (state.regime) params.set("regime", state.regime);
    return request(
      this.fetchFn,
      `${this.base}/v1/leaderboards/${state.challenge}/${state.area}?${params}`,
    );
  }

  series(state: LeaderboardViewState): Promise<SeriesResponse> {
    const params = new URLSearchParams({
      participants: state.participants.join(","),
    });
    if (state.from) params.set("from_date", state.from);
    if (state.to) params.set("to_date", state.to);
    return request(
      this.fetchFn,
      `${this.base}/v1/leaderboards/${state.challenge}/${state.area}/series?${params}`,
    );
  }

  login(apiKey: string): Promise<{ participant: Me }> {
    return request(this.fetchFn, `${this.base}/v1/session`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ api_key: apiKey }),
    });
  }

  logout(): Promise<{ ok: boolean }> {
    return request(this.fetchFn, `${this.base}/v1/session`, { method: "DELETE" });
  }

  me(): Promise<Me> {
    return request(this.fetchFn, `${this.base}/v1/me`);
  }

  updateMe(changes: Partial<Me>): Promise<Me> {
    return request(this.fetchFn, `${this.base}/v1/me`, {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(changes),
    });
  }

  keys(): Promise<{ keys: ApiKeyInfo[] }> {
    return request(this.fetchFn, `${this.base}/v1/keys`);
  }

  createKey(): Promise<{ key_id: string; secret: string }> {
    return request(this.fetchFn, `${this.base}/v1/keys`, { method: "POST" });
  }

  revokeKey(keyId: string): Promise<{ ok: boolean }> {
    return request(this.fetchFn, `${this.base}/v1/keys/${keyId}`, { method: "DELETE" });
  }
}
