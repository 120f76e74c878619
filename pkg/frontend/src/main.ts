// Browser entry point: wires URL state, polling, and the render modules to
// the DOM. All data manipulation lives in the testable modules; this file
// only moves strings into elements and events back into state.

import { ArenaClient } from "./api.js";
import {
  POLL_INTERVAL_MS,
  ViewModel,
  applyLeaderboard,
  applySeries,
  initialViewModel,
  renderBanner,
} from "./app.js";
import { renderKeyList, renderProfileForm, submissionSnippet } from "./account.js";
import { renderLeaderboard } from "./leaderboard.js";
import { escapeHtml } from "./render.js";
import {
  ChallengeOptions,
  LeaderboardViewState,
  REGIMES,
  challengeOptions,
  fromQuery,
  toQuery,
} from "./state.js";
import { renderTrajectories } from "./trajectories.js";
import type { Me } from "./types.js";

const client = new ArenaClient((url, init) => fetch(url, init));

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function renderControls(options: ChallengeOptions[], state: LeaderboardViewState): string {
  const challenge = options.find((o) => o.id === state.challenge)!;
  const select = (name: string, values: string[], current: string) =>
    `<label>${name}<select name="${name}">` +
    values
      .map((v) => `<option value="${escapeHtml(v)}"${v === current ? " selected" : ""}>${escapeHtml(v)}</option>`)
      .join("") +
    `</select></label>`;
  return (
    select("challenge", options.map((o) => o.id), state.challenge) +
    select("area", challenge.areas, state.area) +
    select("window", challenge.windows.map(String), String(state.window)) +
    select("sort", challenge.metrics, state.sort) +
    select("regime", ["all", ...REGIMES], state.regime ?? "all")
  );
}

async function main(): Promise<void> {
  const challenges = await client.challenges();
  const options = challengeOptions(challenges);
  let state = options.length
    ? fromQuery(window.location.search.replace(/^\?/, ""), options)
    : null;
  if (!state) {
    el("app").innerHTML = "<p>No challenges configured.</p>";
    return;
  }
  let model: ViewModel = initialViewModel();

  function pushUrl(): void {
    history.replaceState(null, "", `?${toQuery(state!)}`);
  }

  function paint(): void {
    el("banner").innerHTML = renderBanner(model);
    el("controls").innerHTML = renderControls(options, state!);
    el("leaderboard").innerHTML = model.leaderboard ? renderLeaderboard(model.leaderboard) : "<p>loading…</p>";
    el("trajectories").innerHTML = model.series ? renderTrajectories(model.series) : "";
    const upcoming = challenges.challenges.find((c) => c.spec.id === state!.challenge)?.upcoming[state!.area];
    el("snippet").textContent = upcoming
      ? submissionSnippet("", state!.challenge, state!.area, upcoming.delivery_date)
      : "";
    wireEvents();
  }

  async function refresh(): Promise<void> {
    try {
      model = applyLeaderboard(model, { ok: true, body: await client.leaderboard(state!) });
    } catch (err) {
      model = applyLeaderboard(model, { ok: false, message: String(err) });
    }
    if (state!.participants.length || state!.from) {
      try {
        model = applySeries(model, { ok: true, body: await client.series(state!) });
      } catch (err) {
        model = applySeries(model, { ok: false, message: String(err) });
      }
    } else {
      model = { ...model, series: null };
    }
    paint();
  }

  function wireEvents(): void {
    el("controls")
      .querySelectorAll("select")
      .forEach((select) =>
        select.addEventListener("change", () => {
          const name = select.getAttribute("name")!;
          const value = select.value;
          const next = { ...state! } as LeaderboardViewState & Record<string, unknown>;
          if (name === "window") next.window = Number(value);
          else if (name === "regime") next.regime = value === "all" ? null : value;
          else next[name] = value;
          state = fromQuery(toQuery(next as LeaderboardViewState), options);
          pushUrl();
          void refresh();
        }),
      );
    el("leaderboard")
      .querySelectorAll<HTMLInputElement>(".overlay-toggle")
      .forEach((box) =>
        box.addEventListener("change", () => {
          const set = new Set(state!.participants);
          box.checked ? set.add(box.value) : set.delete(box.value);
          state = { ...state!, participants: [...set].sort() };
          pushUrl();
          void refresh();
        }),
      );
  }

  async function paintAccount(): Promise<void> {
    let me: Me;
    try {
      me = await client.me();
    } catch {
      el("account").innerHTML =
        `<form class="login-form"><label>API key<input name="api_key" type="password"></label>` +
        `<button type="submit">Sign in</button></form>`;
      const form = el("account").querySelector("form")!;
      form.addEventListener("submit", async (event) => {
        event.preventDefault();
        const key = (form.querySelector("input[name=api_key]") as HTMLInputElement).value;
        try {
          await client.login(key);
          await paintAccount();
        } catch (err) {
          el("account").insertAdjacentHTML("beforeend", `<p class="field-error">${escapeHtml(String(err))}</p>`);
        }
      });
      return;
    }
    const keys = await client.keys();
    el("account").innerHTML =
      `<h2>${escapeHtml(me.display_name)}</h2>` + renderKeyList(keys.keys) + renderProfileForm(me);
    wireAccount(me);
  }

  function wireAccount(me: Me): void {
    el("account")
      .querySelector(".create-key")
      ?.addEventListener("click", async () => {
        const fresh = await client.createKey();
        const keys = await client.keys();
        el("account").innerHTML =
          `<h2>${escapeHtml(me.display_name)}</h2>` + renderKeyList(keys.keys, fresh) + renderProfileForm(me);
        wireAccount(me);
      });
    el("account")
      .querySelectorAll<HTMLButtonElement>(".revoke-button:not([disabled])")
      .forEach((button) =>
        button.addEventListener("click", async () => {
          await client.revokeKey(button.dataset.revoke!);
          await paintAccount();
        }),
      );
    el("account")
      .querySelector(".profile-form")
      ?.addEventListener("submit", async (event) => {
        event.preventDefault();
        const form = event.target as HTMLFormElement;
        const changes = {
          display_name: (form.elements.namedItem("display_name") as HTMLInputElement).value,
          method_description:
            (form.elements.namedItem("method_description") as HTMLInputElement).value || null,
          repo_or_service_link:
            (form.elements.namedItem("repo_or_service_link") as HTMLInputElement).value || null,
          data_regime: (form.elements.namedItem("data_regime") as HTMLSelectElement).value,
          forecasts_public: (form.elements.namedItem("forecasts_public") as HTMLInputElement).checked,
        };
        try {
          const updated = await client.updateMe(changes as Partial<Me>);
          const keys = await client.keys();
          el("account").innerHTML =
            `<h2>${escapeHtml(updated.display_name)}</h2>` + renderKeyList(keys.keys) + renderProfileForm(updated);
          wireAccount(updated);
        } catch (err: unknown) {
          const diagnostics = (err as { diagnostics?: [] }).diagnostics ?? [];
          const keys = await client.keys();
          el("account").innerHTML =
            `<h2>${escapeHtml(me.display_name)}</h2>` +
            renderKeyList(keys.keys) +
            renderProfileForm(me, diagnostics);
          wireAccount(me);
        }
      });
  }

  pushUrl();
  await refresh();
  await paintAccount();
  window.setInterval(() => void refresh(), POLL_INTERVAL_MS);
}

void main();
