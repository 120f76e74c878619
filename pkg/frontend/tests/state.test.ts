// URL round-trip: serializing any valid view state and parsing it back
// reproduces the identical state; invalid links degrade to served values.

import { describe, expect, it } from "vitest";
import {
  LeaderboardViewState,
  challengeOptions,
  defaultState,
  fromQuery,
  toQuery,
} from "../src/state.js";
import type { ChallengesResponse } from "../src/types.js";
import { loadFixture } from "./fixtures.js";

const options = challengeOptions(loadFixture<ChallengesResponse>("challenges"));

function lcg(seed: number): () => number {
  let s = seed >>> 0;
  return () => {
    s = (s * 1664525 + 1013904223) >>> 0;
    return s / 2 ** 32;
  };
}

function randomState(rand: () => number): LeaderboardViewState {
  const challenge = options[Math.floor(rand() * options.length)];
  const pick = <T>(xs: T[]): T => xs[Math.floor(rand() * xs.length)];
  const participants = ["open-lab", "grid-works", "stealth-fund"]
    .filter(() => rand() < 0.5)
    .sort();
  return {
    challenge: challenge.id,
    area: pick(challenge.areas),
    window: pick(challenge.windows),
    sort: pick(challenge.metrics),
    regime: rand() < 0.5 ? null : pick(["PUBLIC_ONLY", "PROPRIETARY", "UNDECLARED"]),
    participants,
    from: rand() < 0.5 ? null : "2025-01-05",
    to: rand() < 0.5 ? null : "2025-01-08",
  };
}

describe("view-state URL round trip", () => {
  it("reproduces 500 random states exactly", () => {
    const rand = lcg(20250102);
    for (let i = 0; i < 500; i++) {
      const state = randomState(rand);
      const back = fromQuery(toQuery(state), options);
      expect(back).toEqual(state);
    }
  });

  it("default state round-trips", () => {
    const state = defaultState(options);
    expect(fromQuery(toQuery(state), options)).toEqual(state);
  });

  it("selections are drawn from served values only", () => {
    const clamped = fromQuery(
      "challenge=bogus&area=XX&window=999&sort=FANCY&regime=SECRET",
      options,
    );
    const challenge = options.find((o) => o.id === clamped.challenge)!;
    expect(challenge).toBeDefined();
    expect(challenge.areas).toContain(clamped.area);
    expect(challenge.windows).toContain(clamped.window);
    expect(challenge.metrics).toContain(clamped.sort);
    expect(clamped.regime).toBeNull();
  });

  it("empty query yields the default view", () => {
    expect(fromQuery("", options)).toEqual(defaultState(options));
  });

  it("garbage dates are dropped", () => {
    const state = fromQuery("from=yesterday&to=2025-13-99x", options);
    expect(state.from).toBeNull();
    expect(state.to).toBeNull();
  });
});
