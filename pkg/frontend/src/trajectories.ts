// Forecast trajectory chart: ground truth plus the selected public
// participants' submitted series, as inline SVG. Gaps (pending ground
// truth, missing submissions) split the polyline and are marked instead of
// being interpolated over. Participants the API excluded (non-public) are
// listed in an explanatory note.

import type { SeriesResponse } from "./types.js";
import { apiNumber, escapeHtml } from "./render.js";

const WIDTH = 960;
const HEIGHT = 320;
const PAD = 36;

const PALETTE = ["#1668b8", "#c4541b", "#2e7d32", "#7b1fa2", "#c2185b", "#00838f"];

interface Scale {
  x(i: number): number;
  y(v: number): number;
}

function makeScale(series: SeriesResponse): Scale {
  const values: number[] = [];
  for (const v of series.ground_truth) if (v !== null) values.push(v);
  for (const f of Object.values(series.forecasts)) for (const v of f) if (v !== null) values.push(v);
  const lo = values.length ? Math.min(...values) : 0;
  const hi = values.length ? Math.max(...values) : 1;
  const span = hi - lo || 1;
  const n = Math.max(series.timestamps.length - 1, 1);
  return {
    x: (i) => PAD + (i / n) * (WIDTH - 2 * PAD),
    y: (v) => HEIGHT - PAD - ((v - lo) / span) * (HEIGHT - 2 * PAD),
  };
}

function segments(values: (number | null)[]): number[][] {
  const out: number[][] = [];
  let current: number[] = [];
  values.forEach((v, i) => {
    if (v === null) {
      if (current.length) out.push(current);
      current = [];
    } else {
      current.push(i);
    }
  });
  if (current.length) out.push(current);
  return out;
}

function polylines(
  values: (number | null)[],
  scale: Scale,
  cls: string,
  color: string,
  name: string,
): string {
  return segments(values)
    .map((segment) => {
      const points = segment
        .map((i) => `${scale.x(i).toFixed(1)},${scale.y(values[i] as number).toFixed(1)}`)
        .join(" ");
      return `<polyline class="${cls}" data-series="${escapeHtml(name)}" fill="none" stroke="${color}" points="${points}"/>`;
    })
    .join("");
}

function gapMarkers(values: (number | null)[], scale: Scale): string {
  const marks: string[] = [];
  let start: number | null = null;
  for (let i = 0; i <= values.length; i++) {
    const missing = i < values.length && values[i] === null;
    if (missing && start === null) start = i;
    if (!missing && start !== null) {
      const x0 = scale.x(Math.max(start - 0.5, 0));
      const x1 = scale.x(Math.min(i - 0.5, values.length - 1));
      marks.push(
        `<rect class="truth-gap" x="${x0.toFixed(1)}" y="${PAD}" width="${(x1 - x0).toFixed(1)}" height="${HEIGHT - 2 * PAD}" fill="#d0d0d0" opacity="0.35"/>`,
      );
      start = null;
    }
  }
  return marks.join("");
}

export function renderTrajectories(series: SeriesResponse): string {
  const scale = makeScale(series);
  const names = Object.keys(series.forecasts).sort();

  let svg = `<svg class="trajectories" viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img">`;
  svg += gapMarkers(series.ground_truth, scale);
  for (const [i, name] of names.entries()) {
    svg += polylines(series.forecasts[name], scale, "forecast-line", PALETTE[i % PALETTE.length], name);
  }
  svg += polylines(series.ground_truth, scale, "truth-line", "#111111", "ground_truth");
  svg += `</svg>`;

  const legend =
    `<ul class="legend">` +
    `<li data-legend="ground_truth">ground truth</li>` +
    names.map((n) => `<li data-legend="${escapeHtml(n)}">${escapeHtml(n)}</li>`).join("") +
    `</ul>`;

  const note = series.excluded_participants.length
    ? `<p class="excluded-note">Not shown (forecasts not public): ` +
      `${series.excluded_participants.map(escapeHtml).join(", ")}</p>`
    : "";

  const gaps = series.ground_truth.some((v) => v === null)
    ? `<p class="gap-note">Shaded spans: ground truth not yet available.</p>`
    : "";

  return `<figure class="trajectory-view">${svg}${legend}${note}${gaps}</figure>`;
}

// Plain-table rendering of the same series, used by tests and as an
// accessible fallback; every number is the API value verbatim.
export function seriesTable(series: SeriesResponse): string {
  const names = Object.keys(series.forecasts).sort();
  const head =
    `<tr><th>timestamp</th><th>truth</th>` +
    names.map((n) => `<th>${escapeHtml(n)}</th>`).join("") +
    `</tr>`;
  const rows = series.timestamps
    .map((ts, i) => {
      const truth = series.ground_truth[i];
      const cells = names
        .map((n) => {
          const v = series.forecasts[n][i];
          return `<td data-series="${escapeHtml(n)}">${v === null ? "" : apiNumber(v)}</td>`;
        })
        .join("");
      return (
        `<tr><td>${escapeHtml(ts)}</td>` +
        `<td data-series="ground_truth">${truth === null ? "" : apiNumber(truth)}</td>` +
        cells +
        `</tr>`
      );
    })
    .join("");
  return `<table class="series-table"><thead>${head}</thead><tbody>${rows}</tbody></table>`;
}
