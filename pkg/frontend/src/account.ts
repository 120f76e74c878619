// API-key and profile management. The one-time secret returned by key
// creation is rendered exactly once, from memory, and never persisted; the
// key list afterwards shows only key ids and lifecycle timestamps.
// Submission itself stays API-only: the page offers a generated usage
// snippet instead of an upload form.

import type { ApiKeyInfo, Diagnostic, Me } from "./types.js";
import { escapeHtml } from "./render.js";

export function renderKeyList(keys: ApiKeyInfo[], freshSecret?: { key_id: string; secret: string }): string {
  const banner = freshSecret
    ? `<div class="secret-banner" data-secret-for="${escapeHtml(freshSecret.key_id)}">` +
      `<strong>Copy your API key now – it will not be shown again:</strong>` +
      `<code class="one-time-secret">${escapeHtml(freshSecret.secret)}</code>` +
      `</div>`
    : "";
  const rows = keys
    .map((key) => {
      const revoked = key.revoked_at !== null;
      const secretCell = revoked ? "revoked" : "••••••••";
      const action = `<button class="revoke-button" data-revoke="${escapeHtml(key.key_id)}"${revoked ? " disabled" : ""}>revoke</button>`;
      return (
        `<tr class="${revoked ? "revoked" : "active"}">` +
        `<td>${escapeHtml(key.key_id)}</td>` +
        `<td>${secretCell}</td>` +
        `<td>${escapeHtml(key.created_at)}</td>` +
        `<td>${key.revoked_at ? escapeHtml(key.revoked_at) : ""}</td>` +
        `<td>${action}</td>` +
        `</tr>`
      );
    })
    .join("");
  return (
    banner +
    `<table class="key-list">` +
    `<thead><tr><th>Key id</th><th>Secret</th><th>Created</th><th>Revoked</th><th></th></tr></thead>` +
    `<tbody>${rows}</tbody></table>` +
    `<button class="create-key">Generate new API key</button>`
  );
}

const FIELDS: [keyof Me, string][] = [
  ["display_name", "Display name"],
  ["method_description", "Method description"],
  ["repo_or_service_link", "Repository or service link"],
];

export function renderProfileForm(me: Me, diagnostics: Diagnostic[] = []): string {
  const errorFor = (field: string) => {
    const hits = diagnostics.filter((d) => d.path === field || d.path === "$");
    return hits.length
      ? `<span class="field-error" data-error-for="${escapeHtml(field)}">${hits
          .map((d) => escapeHtml(d.message))
          .join("; ")}</span>`
      : "";
  };

  const inputs = FIELDS.map(([field, label]) => {
    const value = me[field] == null ? "" : String(me[field]);
    return (
      `<label>${label}` +
      `<input name="${field}" value="${escapeHtml(value)}">` +
      errorFor(field) +
      `</label>`
    );
  }).join("");

  const regimes = ["PUBLIC_ONLY", "PROPRIETARY", "UNDECLARED"]
    .map(
      (r) =>
        `<option value="${r}"${me.data_regime === r ? " selected" : ""}>${r.toLowerCase().replace("_", " ")}</option>`,
    )
    .join("");

  return (
    `<form class="profile-form">` +
    inputs +
    `<label>Input data<select name="data_regime">${regimes}</select>${errorFor("data_regime")}</label>` +
    `<label class="visibility"><input type="checkbox" name="forecasts_public"${me.forecasts_public ? " checked" : ""}>` +
    `Show my forecast trajectories publicly</label>` +
    errorFor("$") +
    `<button type="submit">Save</button>` +
    `</form>`
  );
}

export function submissionSnippet(base: string, challenge: string, area: string, delivery: string): string {
  const url = `${base}/v1/challenges/${challenge}/areas/${area}/deliveries/${delivery}/submissions`;
  return [
    `curl -X POST "${url}" \\`,
    `  -H "X-Api-Key: $ARENA_KEY" -H "Content-Type: application/json" \\`,
    `  -d '{"point": [/* one value per delivery-day slot */]}'`,
  ].join("\n");
}
