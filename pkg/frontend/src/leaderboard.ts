// Ranked leaderboard table. Rows arrive ranked and filtered by the API;
// this module only lays them out. Unranked rows (incomplete coverage) are
// rendered in a visually separated section below the ranked ones.

import type { LeaderboardResponse, LeaderboardRow } from "./types.js";
import { apiNumber, escapeHtml } from "./render.js";

function rowHtml(row: LeaderboardRow, metricKeys: string[]): string {
  const rank = row.rank === "UNRANKED" ? "—" : String(row.rank);
  const cells = metricKeys
    .map((key) => {
      const value = row.metrics[key];
      const text = value === undefined ? "" : apiNumber(value);
      return `<td class="metric" data-metric="${escapeHtml(key)}" data-participant="${escapeHtml(row.participant)}">${text}</td>`;
    })
    .join("");
  const info = row.has_method_info
    ? `<button class="info-button" data-info-for="${escapeHtml(row.participant)}" title="About this approach">i</button>`
    : "";
  return (
    `<tr class="${row.rank === "UNRANKED" ? "unranked" : "ranked"}" data-row="${escapeHtml(row.participant)}">` +
    `<td class="rank">${rank}</td>` +
    `<td class="participant"><label><input type="checkbox" class="overlay-toggle" value="${escapeHtml(row.participant)}"${row.forecasts_public ? "" : " disabled"}>${escapeHtml(row.display_name)}</label></td>` +
    cells +
    `<td class="coverage" data-coverage="${escapeHtml(row.participant)}">${apiNumber(row.coverage)}</td>` +
    `<td class="regime">${escapeHtml(row.data_regime)}</td>` +
    `<td class="info">${info}</td>` +
    `</tr>`
  );
}

export function renderLeaderboard(body: LeaderboardResponse): string {
  const ranked = body.rows.filter((r) => r.rank !== "UNRANKED");
  const unranked = body.rows.filter((r) => r.rank === "UNRANKED");

  const header =
    `<tr><th>Rank</th><th>Participant</th>` +
    body.metrics.map((m) => `<th>${escapeHtml(m)}</th>`).join("") +
    `<th>Coverage</th><th>Data</th><th></th></tr>`;

  const rankedRows = ranked.map((r) => rowHtml(r, body.metrics)).join("");
  const unrankedSection = unranked.length
    ? `<tbody class="unranked-section">` +
      `<tr class="section-divider"><td colspan="${body.metrics.length + 5}">Incomplete coverage (unranked)</td></tr>` +
      unranked.map((r) => rowHtml(r, body.metrics)).join("") +
      `</tbody>`
    : "";

  return (
    `<table class="leaderboard" data-window="${body.window}" data-as-of="${escapeHtml(body.as_of)}">` +
    `<thead>${header}</thead>` +
    `<tbody class="ranked-section">${rankedRows}</tbody>` +
    unrankedSection +
    `</table>` +
    `<p class="window-note">Last ${body.window} scored deliveries: ` +
    `${body.delivery_dates.map(escapeHtml).join(", ") || "none yet"}</p>`
  );
}
