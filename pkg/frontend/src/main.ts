import { ApiClient, ApiError } from "./api";
import { applyConfigEdit } from "./configEditor";
import { buildAllGrids } from "./gateGrid";
import { rankGauges } from "./gauges";
import { buildOverview } from "./overview";
import {
  renderFieldErrors,
  renderGateGrid,
  renderGauges,
  renderOverview,
  renderSeries,
  renderStaleBanner,
} from "./render";

function isoDaysAgo(anchor: string, days: number): string {
  const date = new Date(`${anchor}T00:00:00Z`);
  date.setUTCDate(date.getUTCDate() - days);
  return date.toISOString().slice(0, 10);
}

async function refresh(root: HTMLElement, api: ApiClient, user: string, asOf: string) {
  root.replaceChildren();
  let gate;
  let episode;
  try {
    gate = await api.gate(user, asOf);
    episode = await api.episode(user, asOf);
  } catch (err) {
    const detail = err instanceof ApiError ? err.detail : String(err);
    root.appendChild(renderStaleBanner(detail));
    return;
  }

  root.appendChild(renderOverview(buildOverview(gate, episode)));
  for (const grid of buildAllGrids(gate)) {
    root.appendChild(renderGateGrid(grid));
  }

  const from = isoDaysAgo(asOf, gate.window_days - 1);
  const series = await Promise.all(
    Object.keys(gate.criteria)
      .sort()
      .map((key) => api.likelihood(key, user, from, asOf)),
  );
  for (const s of series) {
    root.appendChild(renderSeries(s));
  }
  root.appendChild(
    renderGauges(
      rankGauges(series.map((s) => ({ key: s.criterion, label: s.label, days: s.days }))),
    ),
  );
}

function wireEditor(root: HTMLElement, api: ApiClient, onApplied: () => void) {
  const form = document.createElement("form");
  form.className = "config-editor";
  form.innerHTML = `
    <h3>Calibration</h3>
    <label>gate threshold &theta;
      <input name="theta" type="number" step="0.05" min="0" max="1" />
    </label>
    <button type="submit">Apply and recompute</button>
    <div class="editor-status"></div>
  `;
  const status = form.querySelector(".editor-status") as HTMLElement;

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void (async () => {
      status.replaceChildren();
      const { body, etag } = await api.getConfig();
      const input = form.querySelector("input[name=theta]") as HTMLInputElement;
      const draft = structuredClone(body.config);
      draft.gate.theta = Number(input.value);
      const outcome = await applyConfigEdit(api, draft, etag ?? body.config_hash);
      if (outcome.status === "applied") {
        status.textContent = `applied, config ${outcome.configHash}, ` +
          `${outcome.recomputedFiles} score files refreshed`;
        onApplied();
      } else if (outcome.status === "conflict") {
        status.textContent = outcome.detail;
      } else {
        status.appendChild(renderFieldErrors(outcome.errors));
      }
    })();
  });
  root.appendChild(form);
}

export function boot(): void {
  const params = new URLSearchParams(window.location.search);
  const user = params.get("user") ?? "";
  const asOf = params.get("as_of") ?? new Date().toISOString().slice(0, 10);
  const api = new ApiClient(params.get("api") ?? "");

  const app = document.getElementById("app");
  if (!app) return;
  const views = document.createElement("div");
  const editor = document.createElement("div");
  app.append(views, editor);

  const reload = () => void refresh(views, api, user, asOf);
  wireEditor(editor, api, reload);
  reload();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
