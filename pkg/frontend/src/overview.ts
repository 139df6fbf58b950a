import type { EpisodeView, GateView } from "./types";

export interface OverviewModel {
  asOf: string;
  userId: string;
  configHash: string;
  elevated: string[]; // criteria whose persistence gate is open
  elevatedCount: number;
  coreElevated: string[]; // subset of core criteria, the episode precondition
  episode: boolean;
  headline: string;
}

function plural(count: number, word: string): string {
  return count === 1 ? `1 ${word}` : `${count} ${word === "criterion" ? "criteria" : word}`;
}

export function buildOverview(gate: GateView, episode: EpisodeView): OverviewModel {
  const elevated = Object.keys(gate.criteria)
    .filter((key) => gate.criteria[key]?.present)
    .sort();
  const coreElevated = episode.core_present.slice().sort();
  const headline = `${plural(elevated.length, "criterion")} elevated, ${
    episode.episode ? "episode signalled" : "no episode"
  }`;
  return {
    asOf: gate.as_of,
    userId: gate.user_id,
    configHash: gate.config_hash,
    elevated,
    elevatedCount: elevated.length,
    coreElevated,
    episode: episode.episode,
    headline,
  };
}

// Overview for a user or range with no scored days at all.
export function emptyOverview(asOf: string, userId: string): OverviewModel {
  return {
    asOf,
    userId,
    configHash: "",
    elevated: [],
    elevatedCount: 0,
    coreElevated: [],
    episode: false,
    headline: "0 criteria elevated, no episode",
  };
}
