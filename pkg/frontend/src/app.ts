// View-model reducer: polling results fold into the view state, API errors
// surface as a non-blocking banner while the last good data stays on
// screen.

import type { LeaderboardResponse, SeriesResponse } from "./types.js";

export const POLL_INTERVAL_MS = 30_000;

export interface ViewModel {
  leaderboard: LeaderboardResponse | null;
  series: SeriesResponse | null;
  banner: string | null;
}

export function initialViewModel(): ViewModel {
  return { leaderboard: null, series: null, banner: null };
}

export function applyLeaderboard(
  model: ViewModel,
  result: { ok: true; body: LeaderboardResponse } | { ok: false; message: string },
): ViewModel {
  if (result.ok) {
    return { ...model, leaderboard: result.body, banner: null };
  }
  return { ...model, banner: `Leaderboard refresh failed: ${result.message}` };
}

export function applySeries(
  model: ViewModel,
  result: { ok: true; body: SeriesResponse } | { ok: false; message: string },
): ViewModel {
  if (result.ok) {
    return { ...model, series: result.body, banner: null };
  }
  return { ...model, banner: `Trajectory refresh failed: ${result.message}` };
}

export function renderBanner(model: ViewModel): string {
  if (!model.banner) return "";
  const stale = model.leaderboard || model.series ? " Showing last good data." : "";
  return `<div class="error-banner" role="alert">${model.banner}${stale}</div>`;
}
