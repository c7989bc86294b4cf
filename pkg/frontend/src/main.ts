/**
 * Browser wiring: DOM in, events out, updates back in.
 *
 * All numbers on screen come from server messages via the reducer; this
 * file never computes risk.  Each control gesture goes through the
 * controller, which posts exactly one event for it.
 */

import { ApiClient, ApiError } from "./api.js";
import { chartModel } from "./chart.js";
import { SessionController } from "./controller.js";
import { fmt3, fmtMs, fmtPercent, fmtRisk } from "./format.js";
import {
  applyUpdate,
  displayWeight,
  initialState,
  optimisticWeight,
  rehydrate,
  type ViewState,
} from "./state.js";
import type { MarginalDoc, UpdateMessage } from "./types.js";

type MarginalKind = "normal" | "lognormal" | "uniform" | "triangular" | "constant";

const MARGINAL_FIELDS: Record<MarginalKind, Array<{ name: string; label: string; value: number }>> = {
  normal: [
    { name: "mu", label: "mean", value: 0.0 },
    { name: "sigma", label: "std dev", value: 0.02 },
  ],
  lognormal: [
    { name: "mu_log", label: "log mean", value: 0.0 },
    { name: "sigma_log", label: "log std dev", value: 0.25 },
  ],
  uniform: [
    { name: "lo", label: "low", value: -0.05 },
    { name: "hi", label: "high", value: 0.05 },
  ],
  triangular: [
    { name: "lo", label: "low", value: -0.05 },
    { name: "mode", label: "mode", value: 0.0 },
    { name: "hi", label: "high", value: 0.05 },
  ],
  constant: [{ name: "value", label: "value", value: 0.0 }],
};

/** Which panel an inline error belongs to, by the event kind that failed. */
const ERROR_PANEL: Record<string, string> = {
  AddAsset: "add-error",
  RemoveAsset: "assets-error",
  SetWeight: "assets-error",
  SetCorrelation: "correlation-error",
  SetAlpha: "controls-error",
  SetHorizon: "controls-error",
  SetSampleCount: "controls-error",
  AttachHistory: "assets-error",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node;
}

class App {
  private api = new ApiClient();
  private state: ViewState = initialState();
  private controller: SessionController | null = null;
  private showPairs = false;
  private inlineErrors: Record<string, string> = {};

  async start(): Promise<void> {
    this.buildShell();
    const created = await this.api.createSession({});
    this.controller = new SessionController(this.api, created.session, created.head);
    const snapshot = await this.api.getSnapshot(created.session);
    this.state = rehydrate(this.state, snapshot);
    this.api.subscribe(created.session, snapshot.head, (message) => this.onUpdate(message));
    this.render();
  }

  private onUpdate(message: UpdateMessage): void {
    this.controller?.onUpdate(message);
    this.state = applyUpdate(this.state, message);
    if (message.kind === "error") {
      const panel = ERROR_PANEL[message.body.event_kind] ?? "controls-error";
      this.inlineErrors[panel] = message.body.message;
    } else if (message.kind === "risk") {
      this.inlineErrors = {};
    }
    this.render();
  }

  /** Post one gesture; a rejection renders on the panel that produced it. */
  private gesture(panel: string, post: () => Promise<unknown>): void {
    delete this.inlineErrors[panel];
    post().catch((err: unknown) => {
      this.inlineErrors[panel] =
        err instanceof ApiError ? err.message : "request failed, is the service up?";
      this.render();
    });
    this.render();
  }

  // -- static shell ------------------------------------------------------

  private buildShell(): void {
    const root = byId("app");
    root.replaceChildren();

    const header = el("header");
    header.append(el("h1", {}, "riskpipe"));
    const status = el("div", { id: "session-line", class: "session-line" }, "connecting");
    header.append(status);
    root.append(header);

    const grid = el("div", { class: "grid" });
    root.append(grid);

    const left = el("div", { class: "column" });
    const right = el("div", { class: "column" });
    grid.append(left, right);

    left.append(this.buildAddAssetCard());
    const assets = el("section", { class: "card" });
    assets.append(el("h2", {}, "Portfolio"));
    assets.append(el("div", { id: "asset-list" }));
    assets.append(el("p", { id: "assets-error", class: "error" }));
    left.append(assets);
    left.append(this.buildCorrelationCard());
    left.append(this.buildControlsCard());

    const risk = el("section", { class: "card" });
    risk.append(el("h2", {}, "Risk"));
    risk.append(el("div", { id: "risk-panel" }));
    right.append(risk);

    const sens = el("section", { class: "card" });
    const sensHead = el("div", { class: "row-between" });
    sensHead.append(el("h2", {}, "Sensitivity"));
    const toggle = el("button", { id: "pairs-toggle", type: "button" }, "show interactions");
    toggle.addEventListener("click", () => {
      this.showPairs = !this.showPairs;
      this.render();
    });
    sensHead.append(toggle);
    sens.append(sensHead);
    sens.append(el("div", { id: "sensitivity-panel" }));
    right.append(sens);

    const timing = el("section", { class: "card" });
    timing.append(el("h2", {}, "Timing"));
    timing.append(el("div", { id: "timing-strip" }));
    right.append(timing);
  }

  private buildAddAssetCard(): HTMLElement {
    const card = el("section", { class: "card" });
    card.append(el("h2", {}, "Add asset"));
    const form = el("form", { id: "add-form" });

    const idRow = el("label", {}, "id ");
    const idInput = el("input", { id: "add-id", type: "text", placeholder: "equity" });
    idRow.append(idInput);
    form.append(idRow);

    const kindRow = el("label", {}, "distribution ");
    const kindSelect = el("select", { id: "add-kind" });
    for (const kind of Object.keys(MARGINAL_FIELDS)) {
      kindSelect.append(el("option", { value: kind }, kind));
    }
    kindRow.append(kindSelect);
    form.append(kindRow);

    const params = el("div", { id: "add-params" });
    form.append(params);

    const weightRow = el("label", {}, "weight ");
    const weightInput = el("input", { id: "add-weight", type: "number", step: "0.1", value: "1" });
    weightRow.append(weightInput);
    form.append(weightRow);

    form.append(el("button", { type: "submit" }, "add"));
    form.append(el("p", { id: "add-error", class: "error" }));
    card.append(form);

    const renderParams = () => {
      params.replaceChildren();
      const kind = kindSelect.value as MarginalKind;
      for (const fieldSpec of MARGINAL_FIELDS[kind]) {
        const row = el("label", {}, `${fieldSpec.label} `);
        row.append(
          el("input", {
            "data-param": fieldSpec.name,
            type: "number",
            step: "any",
            value: String(fieldSpec.value),
          }),
        );
        params.append(row);
      }
    };
    kindSelect.addEventListener("change", renderParams);
    renderParams();

    form.addEventListener("submit", (evt) => {
      evt.preventDefault();
      const assetId = idInput.value.trim();
      if (!assetId || !this.controller) {
        return;
      }
      const kind = kindSelect.value as MarginalKind;
      const marginal: MarginalDoc = { kind };
      for (const input of params.querySelectorAll<HTMLInputElement>("input[data-param]")) {
        marginal[input.dataset["param"] as string] = Number(input.value);
      }
      const weight = Number(weightInput.value);
      this.gesture("add-error", () => this.controller!.addAsset(assetId, marginal, weight));
      idInput.value = "";
    });
    return card;
  }

  private buildCorrelationCard(): HTMLElement {
    const card = el("section", { class: "card" });
    card.append(el("h2", {}, "Correlation"));
    const form = el("form", { id: "correlation-form", class: "row" });
    const selA = el("select", { id: "corr-a" });
    const selB = el("select", { id: "corr-b" });
    const rho = el("input", {
      id: "corr-rho",
      type: "number",
      step: "0.05",
      min: "-1",
      max: "1",
      value: "0",
    });
    form.append(selA, selB, rho, el("button", { type: "submit" }, "set"));
    card.append(form);
    card.append(el("div", { id: "correlation-list" }));
    card.append(el("p", { id: "correlation-error", class: "error" }));

    form.addEventListener("submit", (evt) => {
      evt.preventDefault();
      if (!this.controller || !selA.value || !selB.value || selA.value === selB.value) {
        return;
      }
      const value = Number(rho.value);
      this.gesture("correlation-error", () =>
        this.controller!.setCorrelation(selA.value, selB.value, value),
      );
    });
    return card;
  }

  private buildControlsCard(): HTMLElement {
    const card = el("section", { class: "card" });
    card.append(el("h2", {}, "Settings"));

    const alphaRow = el("label", {}, "confidence level ");
    const alpha = el("input", {
      id: "alpha-input",
      type: "number",
      step: "0.005",
      min: "0.5",
      max: "0.9999",
    });
    alpha.addEventListener("change", () => {
      const value = Number(alpha.value);
      this.gesture("controls-error", () => this.controller!.setAlpha(value));
    });
    alphaRow.append(alpha);
    card.append(alphaRow);

    const horizonRow = el("label", {}, "horizon (steps) ");
    const horizon = el("input", { id: "horizon-input", type: "number", step: "1", min: "1" });
    horizon.addEventListener("change", () => {
      const value = Number(horizon.value);
      this.gesture("controls-error", () => this.controller!.setHorizon(value));
    });
    horizonRow.append(horizon);
    card.append(horizonRow);

    card.append(el("p", { id: "controls-error", class: "error" }));
    return card;
  }

  // -- render ------------------------------------------------------------

  private render(): void {
    const state = this.state;
    byId("session-line").textContent = state.session
      ? `session ${state.session} · event ${state.head}`
      : "connecting";

    this.renderAssets(state);
    this.renderCorrelations(state);
    this.renderControls(state);
    this.renderRisk(state);
    this.renderSensitivity(state);
    this.renderTiming(state);

    for (const id of Object.values(ERROR_PANEL)) {
      byId(id).textContent = this.inlineErrors[id] ?? "";
    }
  }

  private renderAssets(state: ViewState): void {
    const list = byId("asset-list");
    list.replaceChildren();
    const assets = state.portfolio?.assets ?? [];
    if (assets.length === 0) {
      list.append(el("p", { class: "muted" }, "No assets yet."));
      return;
    }
    for (const asset of assets) {
      const row = el("div", { class: "asset-row" });
      row.append(el("span", { class: "asset-name" }, asset.asset_id));
      row.append(el("span", { class: "muted" }, asset.marginal.kind));

      const weight = displayWeight(state, asset.asset_id) ?? asset.weight;
      const pending = state.optimistic[asset.asset_id] !== undefined;
      const slider = el("input", {
        type: "range",
        min: "0",
        max: "5",
        step: "0.1",
        value: String(weight),
      });
      const label = el("span", { class: pending ? "pending" : "" }, fmt3(weight));
      slider.addEventListener("change", () => {
        const value = Number(slider.value);
        if (!this.controller) {
          return;
        }
        const seq = this.controller.pendingSeq;
        this.state = optimisticWeight(this.state, asset.asset_id, value, seq);
        this.gesture("assets-error", () => this.controller!.setWeight(asset.asset_id, value));
      });
      row.append(slider, label);

      const remove = el("button", { type: "button" }, "remove");
      remove.addEventListener("click", () => {
        this.gesture("assets-error", () => this.controller!.removeAsset(asset.asset_id));
      });
      row.append(remove);
      list.append(row);
    }
  }

  private renderCorrelations(state: ViewState): void {
    const assets = state.portfolio?.assets ?? [];
    for (const id of ["corr-a", "corr-b"]) {
      const select = byId(id) as HTMLSelectElement;
      const current = select.value;
      select.replaceChildren();
      for (const asset of assets) {
        select.append(el("option", { value: asset.asset_id }, asset.asset_id));
      }
      if (assets.some((a) => a.asset_id === current)) {
        select.value = current;
      }
    }
    const list = byId("correlation-list");
    list.replaceChildren();
    for (const pair of state.portfolio?.correlation ?? []) {
      list.append(el("div", { class: "muted" }, `${pair.i} / ${pair.j}: ${fmt3(pair.rho)}`));
    }
  }

  private renderControls(state: ViewState): void {
    const alpha = byId("alpha-input") as HTMLInputElement;
    const horizon = byId("horizon-input") as HTMLInputElement;
    if (state.portfolio && document.activeElement !== alpha) {
      alpha.value = String(state.portfolio.alpha);
    }
    if (state.portfolio && document.activeElement !== horizon) {
      horizon.value = String(state.portfolio.horizon);
    }
  }

  private renderRisk(state: ViewState): void {
    const panel = byId("risk-panel");
    panel.replaceChildren();
    const report = state.risk?.root ?? null;
    if (!report) {
      panel.append(el("p", { class: "muted" }, "Portfolio risk appears once an asset is added."));
      return;
    }
    const cards = el("div", { class: "metric-row" });
    for (const [label, value] of [
      [`VaR ${fmtPercent(report.alpha)}`, report.var],
      [`CVaR ${fmtPercent(report.alpha)}`, report.cvar],
      [`EVaR ${fmtPercent(report.alpha)}`, report.evar],
    ] as Array<[string, number]>) {
      const card = el("div", { class: "metric" });
      card.append(el("div", { class: "metric-label" }, label));
      card.append(el("div", { class: "metric-value" }, fmtRisk(value)));
      cards.append(card);
    }
    panel.append(cards);
    panel.append(
      el(
        "p",
        { class: "muted" },
        `${report.n.toLocaleString()} samples · horizon ${report.horizon}`,
      ),
    );

    const perAsset = Object.entries(state.risk?.assets ?? {});
    if (perAsset.length > 0) {
      const table = el("table", { class: "risk-table" });
      const head = el("tr");
      for (const text of ["asset", "VaR", "CVaR", "EVaR"]) {
        head.append(el("th", {}, text));
      }
      table.append(head);
      for (const [assetId, doc] of perAsset) {
        const row = el("tr");
        row.append(el("td", {}, assetId));
        row.append(el("td", {}, fmtRisk(doc.var)));
        row.append(el("td", {}, fmtRisk(doc.cvar)));
        row.append(el("td", {}, fmtRisk(doc.evar)));
        table.append(row);
      }
      panel.append(table);
    }
  }

  private renderSensitivity(state: ViewState): void {
    const panel = byId("sensitivity-panel");
    panel.replaceChildren();
    const model = chartModel(state.sensitivity);
    const toggle = byId("pairs-toggle") as HTMLButtonElement;
    if (model.kind === "empty") {
      toggle.hidden = true;
      panel.append(el("p", { class: "muted" }, model.message));
      return;
    }
    toggle.hidden = model.pairs.length === 0;
    toggle.textContent = this.showPairs ? "hide interactions" : "show interactions";

    for (const bar of model.bars) {
      const row = el("div", { class: "bar-row" });
      row.append(el("span", { class: "bar-name" }, bar.input));
      const track = el("div", { class: "bar-track" });
      const fill = el("div", { class: "bar-fill" });
      fill.style.width = `${Math.max(0, Math.min(1, bar.total)) * 100}%`;
      const firstFill = el("div", { class: "bar-fill-first" });
      firstFill.style.width = `${Math.max(0, Math.min(1, bar.first)) * 100}%`;
      track.append(fill, firstFill);
      row.append(track);
      row.append(
        el("span", { class: "bar-value" }, `S=${bar.firstLabel} · St=${bar.totalLabel}`),
      );
      panel.append(row);
    }

    if (this.showPairs && model.pairs.length > 0) {
      const table = el("table", { class: "risk-table" });
      const head = el("tr");
      head.append(el("th", {}, "interaction"), el("th", {}, "share"));
      table.append(head);
      for (const pair of model.pairs) {
        const row = el("tr");
        row.append(el("td", {}, pair.label), el("td", {}, pair.valueLabel));
        table.append(row);
      }
      panel.append(table);
    }
  }

  private renderTiming(state: ViewState): void {
    const strip = byId("timing-strip");
    strip.replaceChildren();
    if (state.timing.length === 0) {
      strip.append(el("p", { class: "muted" }, "No events timed yet."));
      return;
    }
    const recent = state.timing.slice(-12);
    for (const row of recent) {
      const line = el("div", { class: "timing-row" });
      line.append(el("span", { class: "timing-seq" }, `#${row.seq}`));
      line.append(
        el(
          "span",
          { class: "muted" },
          `prep ${fmtMs(row.pt_ms)} · gen ${fmtMs(row.gt_ms)} · stats ${fmtMs(
            row.st_ms,
          )} · out ${fmtMs(row.ot_ms)}`,
        ),
      );
      strip.append(line);
    }
  }
}

new App().start().catch((err) => {
  const root = document.getElementById("app");
  if (root) {
    root.textContent = `failed to start: ${err instanceof Error ? err.message : String(err)}`;
  }
});
