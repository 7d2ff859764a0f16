/** Console bootstrap: wires the session controller to the DOM. */

import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import { drawChart } from "./chart.js";
import { drawHeatmap } from "./heatmap.js";
import { buildVotePanel, buildSatisfactionDialog } from "./panel.js";

const MAP_KINDS = ["mean", "variance", "truth", "error"];

export function bootstrap(doc: Document): void {
  const params = new URLSearchParams(doc.defaultView?.location.search ?? "");
  const baseUrl = params.get("api") ?? "";
  const api = new ApiClient(baseUrl);
  const controller = new SessionController(api);

  const app = doc.getElementById("app");
  if (!app) return;

  const status = doc.createElement("div");
  status.className = "status-line";
  app.appendChild(status);

  const chart = doc.createElement("canvas");
  chart.width = 640;
  chart.height = 240;
  app.appendChild(chart);

  const votePanel = buildVotePanel(doc, controller);
  app.appendChild(votePanel.root);
  const satDialog = buildSatisfactionDialog(doc, controller);
  app.appendChild(satDialog.root);

  const mapRow = doc.createElement("div");
  const kindSelect = doc.createElement("select");
  for (const kind of MAP_KINDS) {
    const opt = doc.createElement("option");
    opt.value = kind;
    opt.textContent = kind;
    kindSelect.appendChild(opt);
  }
  mapRow.appendChild(kindSelect);
  const heatmap = doc.createElement("canvas");
  heatmap.width = 400;
  heatmap.height = 400;
  mapRow.appendChild(heatmap);
  app.appendChild(mapRow);

  const refreshMap = async () => {
    const snap = controller.getState().snapshot;
    if (!snap || !snap.has_maps) return;
    try {
      const map = await api.getMaps(snap.id, kindSelect.value);
      const pending = snap.pending;
      const next =
        pending && pending.kind === "vote" && pending.row !== undefined
          ? { row: pending.row, col: pending.col! }
          : null;
      drawHeatmap(heatmap, map, next);
    } catch {
      // maps may be momentarily unavailable between iterations
    }
  };
  kindSelect.addEventListener("change", () => void refreshMap());

  controller.onChange((state) => {
    const snap = state.snapshot;
    const mse = snap?.mse != null ? ` mse=${snap.mse.toExponential(3)}` : "";
    status.textContent = snap
      ? `session ${snap.id} [${state.phase}] iteration ${snap.iteration}` +
        ` explored ${snap.explored_count}${mse}` +
        (state.lastError ? ` error: ${state.lastError}` : "")
      : "no session";
    if (state.spectrum) {
      drawChart(chart, state.spectrum.bias, state.spectrum.values, state.spectrum.target);
    }
    void refreshMap();
  });

  const form = doc.getElementById("create-form") as HTMLFormElement | null;
  form?.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const seedInput = doc.getElementById("seed") as HTMLInputElement | null;
    const seed = seedInput ? Number(seedInput.value) : 0;
    void api
      .createSession({ synthetic: { seed } })
      .then((snap) => controller.attach(snap.id))
      .then(() => controller.startPolling())
      .catch((err) => {
        status.textContent = `failed to create session: ${err}`;
      });
  });
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  bootstrap(document);
}
