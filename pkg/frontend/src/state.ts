// Leaderboard view state and its URL serialization. The whole view is
// shareable as a link: serializing to the query string and parsing it back
// reproduces the identical state.

import type { ChallengesResponse } from "./types.js";

export interface LeaderboardViewState {
  challenge: string;
  area: string;
  window: number;
  sort: string;
  regime: string | null;
  participants: string[]; // trajectory overlay selection
  from: string | null; // ISO dates for the trajectory range
  to: string | null;
}

export interface ChallengeOptions {
  id: string;
  areas: string[];
  windows: number[];
  metrics: string[];
}

export const REGIMES = ["PUBLIC_ONLY", "PROPRIETARY", "UNDECLARED"] as const;

export function metricKey(metric: { name: string; params?: Record<string, number> }): string {
  if (metric.name === "PINBALL" && metric.params && metric.params.level !== undefined) {
    return `PINBALL@${metric.params.level}`;
  }
  return metric.name;
}

export function challengeOptions(body: ChallengesResponse): ChallengeOptions[] {
  return body.challenges.map((c) => ({
    id: c.spec.id,
    areas: c.spec.areas,
    windows: c.spec.windows,
    metrics: c.spec.metrics.map(metricKey),
  }));
}

export function defaultState(options: ChallengeOptions[]): LeaderboardViewState {
  const first = options[0];
  return {
    challenge: first.id,
    area: first.areas[0],
    window: first.windows.includes(7) ? 7 : first.windows[0],
    sort: first.metrics[0],
    regime: null,
    participants: [],
    from: null,
    to: null,
  };
}

export function toQuery(state: LeaderboardViewState): string {
  const params = new URLSearchParams();
  params.set("challenge", state.challenge);
  params.set("area", state.area);
  params.set("window", String(state.window));
  params.set("sort", state.sort);
  if (state.regime) params.set("regime", state.regime);
  if (state.participants.length) params.set("participants", state.participants.join(","));
  if (state.from) params.set("from", state.from);
  if (state.to) params.set("to", state.to);
  return params.toString();
}

// Every selection is clamped to values actually served by the API, so a
// stale or hand-edited link degrades to the nearest valid view.
export function fromQuery(query: string, options: ChallengeOptions[]): LeaderboardViewState {
  const params = new URLSearchParams(query);
  const fallback = defaultState(options);

  const challenge =
    options.find((o) => o.id === params.get("challenge")) ??
    options.find((o) => o.id === fallback.challenge)!;

  const area = challenge.areas.includes(params.get("area") ?? "")
    ? (params.get("area") as string)
    : challenge.areas[0];

  const windowParam = Number(params.get("window"));
  const window = challenge.windows.includes(windowParam)
    ? windowParam
    : challenge.windows.includes(7)
      ? 7
      : challenge.windows[0];

  const sortParam = params.get("sort") ?? "";
  const sort = challenge.metrics.includes(sortParam) ? sortParam : challenge.metrics[0];

  const regimeParam = params.get("regime");
  const regime = (REGIMES as readonly string[]).includes(regimeParam ?? "") ? regimeParam : null;

  const participants = (params.get("participants") ?? "")
    .split(",")
    .map((p) => p.trim())
    .filter((p) => p.length > 0);

  const isoDate = /^\d{4}-\d{2}-\d{2}$/;
  const from = isoDate.test(params.get("from") ?? "") ? params.get("from") : null;
  const to = isoDate.test(params.get("to") ?? "") ? params.get("to") : null;

  return { challenge: challenge.id, area, window, sort, regime, participants, from, to };
}
