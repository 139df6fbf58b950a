import type { GateGridModel } from "./gateGrid";
import { formatLikelihood } from "./gateGrid";
import type { GaugeModel } from "./gauges";
import type { OverviewModel } from "./overview";
import type { FieldError, LikelihoodSeries } from "./types";

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderOverview(model: OverviewModel): HTMLElement {
  const root = el("section", "overview");
  root.appendChild(el("h2", undefined, "Early signs overview"));
  root.appendChild(el("p", "headline", model.headline));
  if (model.episode) {
    root.appendChild(el("p", "banner episode-banner", "Episode criteria met"));
  }
  const meta = el("p", "meta");
  meta.textContent =
    `${model.userId} as of ${model.asOf}` +
    (model.elevated.length ? ` | elevated: ${model.elevated.join(", ")}` : "") +
    (model.coreElevated.length ? ` | core: ${model.coreElevated.join(", ")}` : "");
  root.appendChild(meta);
  return root;
}

export function renderGateGrid(model: GateGridModel): HTMLElement {
  const root = el("section", "gate-grid");
  const heading = el("h3", undefined, `${model.key} ${model.label}`);
  if (model.presentBadge) {
    heading.appendChild(el("span", "badge present-badge", "present"));
  }
  root.appendChild(heading);
  root.appendChild(
    el(
      "p",
      "meta",
      `${model.greenCount} of ${model.windowDays} days at or over ` +
        `${model.threshold} (needs ${model.requiredDays})`,
    ),
  );
  const row = el("div", "cells");
  for (const cell of model.cells) {
    const square = el("span", `cell ${cell.color}`);
    square.title = cell.tooltip;
    row.appendChild(square);
  }
  root.appendChild(row);
  return root;
}

export function renderSeries(series: LikelihoodSeries): HTMLElement {
  const root = el("section", "series");
  root.appendChild(el("h3", undefined, `${series.criterion} ${series.label}`));
  const list = el("div", "spark");
  for (const day of series.days) {
    const bar = el("span", day.positive ? "bar positive" : "bar");
    const height = day.likelihood === null ? 0 : Math.round(day.likelihood * 40);
    bar.style.height = `${height}px`;
    bar.title = `${day.date}: ${formatLikelihood(day.likelihood)}`;
    list.appendChild(bar);
  }
  root.appendChild(list);
  return root;
}

export function renderGauges(models: GaugeModel[]): HTMLElement {
  const root = el("section", "gauges");
  root.appendChild(el("h3", undefined, "Criteria by mean likelihood"));
  const list = el("ol");
  for (const gauge of models) {
    const item = el("li");
    const mean = gauge.mean === null ? "no scored days" : gauge.mean.toFixed(3);
    item.textContent = `${gauge.key} ${gauge.label}: ${mean} (${gauge.scoredDays} days)`;
    list.appendChild(item);
  }
  root.appendChild(list);
  return root;
}

export function renderFieldErrors(errors: FieldError[]): HTMLElement {
  const root = el("ul", "field-errors");
  for (const error of errors) {
    root.appendChild(el("li", "field-error", `${error.path}: ${error.message}`));
  }
  return root;
}

export function renderStaleBanner(detail: string): HTMLElement {
  return el("p", "banner stale-banner", `API unavailable; showing nothing: ${detail}`);
}
