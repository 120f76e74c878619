// Fidelity against recorded API responses: every number the table shows is
// the corresponding API field, byte for byte; no score math happens here.

import { describe, expect, it } from "vitest";
import { renderLeaderboard } from "../src/leaderboard.js";
import type { LeaderboardResponse } from "../src/types.js";
import { loadFixture } from "./fixtures.js";

function metricCell(html: string, participant: string, metric: string): string {
  const pattern = new RegExp(
    `<td class="metric" data-metric="${metric}" data-participant="${participant}">([^<]*)</td>`,
  );
  const match = html.match(pattern);
  expect(match, `cell ${participant}/${metric}`).not.toBeNull();
  return match![1];
}

function coverageCell(html: string, participant: string): string {
  const match = html.match(new RegExp(`<td class="coverage" data-coverage="${participant}">([^<]*)</td>`));
  expect(match).not.toBeNull();
  return match![1];
}

describe("leaderboard rendering fidelity", () => {
  for (const fixture of ["leaderboard_w7", "leaderboard_w1", "leaderboard_public_only"]) {
    it(`renders every number byte-identical to the API (${fixture})`, () => {
      const body = loadFixture<LeaderboardResponse>(fixture);
      const html = renderLeaderboard(body);
      expect(body.rows.length).toBeGreaterThan(0);
      for (const row of body.rows) {
        for (const metric of body.metrics) {
          if (row.metrics[metric] === undefined) continue;
          const cell = metricCell(html, row.participant, metric);
          expect(cell).toBe(String(row.metrics[metric]));
          expect(Number(cell)).toBe(row.metrics[metric]);
        }
        expect(coverageCell(html, row.participant)).toBe(String(row.coverage));
      }
    });
  }

  it("orders rows exactly as the API does", () => {
    const body = loadFixture<LeaderboardResponse>("leaderboard_w7");
    const html = renderLeaderboard(body);
    const order = [...html.matchAll(/data-row="([^"]+)"/g)].map((m) => m[1]);
    expect(order).toEqual(body.rows.map((r) => r.participant));
  });

  it("shows the info button only for rows with method info", () => {
    const body = loadFixture<LeaderboardResponse>("leaderboard_w7");
    const html = renderLeaderboard(body);
    for (const row of body.rows) {
      const hasButton = html.includes(`data-info-for="${row.participant}"`);
      expect(hasButton).toBe(row.has_method_info);
    }
    // the fixture exercises both cases
    expect(new Set(body.rows.map((r) => r.has_method_info)).size).toBe(2);
  });

  it("separates unranked rows into their own section", () => {
    const body = loadFixture<LeaderboardResponse>("leaderboard_w7");
    const unrankedRow = {
      ...body.rows[0],
      participant: "late-joiner",
      display_name: "late-joiner",
      rank: "UNRANKED" as const,
      coverage: 0.5,
    };
    const html = renderLeaderboard({ ...body, rows: [...body.rows, unrankedRow] });
    const section = html.match(/<tbody class="unranked-section">([\s\S]*?)<\/tbody>/);
    expect(section).not.toBeNull();
    expect(section![1]).toContain('data-row="late-joiner"');
    expect(section![1]).toContain("Incomplete coverage (unranked)");
    const ranked = html.match(/<tbody class="ranked-section">([\s\S]*?)<\/tbody>/)![1];
    expect(ranked).not.toContain("late-joiner");
  });

  it("regime-filtered fixture contains only the declared regime, passed through", () => {
    const body = loadFixture<LeaderboardResponse>("leaderboard_public_only");
    expect(body.rows.length).toBeGreaterThan(0);
    expect(body.rows.every((r) => r.data_regime === "PUBLIC_ONLY")).toBe(true);
    const html = renderLeaderboard(body);
    const rendered = [...html.matchAll(/data-row="([^"]+)"/g)].map((m) => m[1]);
    expect(rendered).toEqual(body.rows.map((r) => r.participant));
  });

  it("escapes participant-controlled text", () => {
    const body = loadFixture<LeaderboardResponse>("leaderboard_w1");
    const hostile = {
      ...body.rows[0],
      participant: "evil",
      display_name: `<script>alert(1)</script>`,
    };
    const html = renderLeaderboard({ ...body, rows: [hostile] });
    expect(html).not.toContain("<script>alert(1)</script>");
    expect(html).toContain("&lt;script&gt;");
  });
});
