import type { DayStatus, GateCriterion, GateView } from "./types";

export type CellColor = "green" | "red" | "missing";

export interface GridCell {
  date: string;
  likelihood: number | null;
  color: CellColor;
  tooltip: string;
}

export interface GateGridModel {
  key: string;
  label: string;
  windowDays: number;
  requiredDays: number;
  threshold: number;
  cells: GridCell[];
  greenCount: number;
  presentBadge: boolean; // shown iff the server's gate is open
}

const STATUS_COLOR: Record<DayStatus, CellColor> = {
  positive: "green",
  negative: "red",
  missing: "missing",
};

export function formatLikelihood(value: number | null): string {
  return value === null ? "no data" : value.toFixed(3);
}

// One grid per criterion: a cell per day of the gate window. Colors come
// from the server-evaluated day statuses (green at or over the threshold,
// red under it, missing rendered distinctly); the grid never re-scores.
export function buildGateGrid(
  key: string,
  criterion: GateCriterion,
  view: Pick<GateView, "window_days" | "required_days" | "threshold">,
): GateGridModel {
  const cells = criterion.days.map((day) => ({
    date: day.date,
    likelihood: day.likelihood,
    color: STATUS_COLOR[day.status],
    tooltip: `${day.date}: ${formatLikelihood(day.likelihood)}`,
  }));
  return {
    key,
    label: criterion.label,
    windowDays: view.window_days,
    requiredDays: view.required_days,
    threshold: view.threshold,
    cells,
    greenCount: cells.filter((c) => c.color === "green").length,
    presentBadge: criterion.present,
  };
}

export function buildAllGrids(view: GateView): GateGridModel[] {
  return Object.keys(view.criteria)
    .sort()
    .map((key) => buildGateGrid(key, view.criteria[key]!, view));
}
