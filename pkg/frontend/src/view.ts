// DOM rendering for the workbench. The store is the single source of truth;
// the view re-renders wholesale on every state change.

import type { ScenarioStore } from "./state.js";
import type { CounterfactualView, Delta } from "./types.js";

const ARROWS: Record<Delta["direction"], string> = {
  up: "↑",
  down: "↓",
  unchanged: "=",
};

const METRIC_HINTS: Record<string, string> = {
  valid: "whether the suggested change actually flips the prediction",
  proximity: "distance between the current and suggested indicators (lower is closer)",
  sparsity: "how many indicators the suggestion changes (lower is simpler)",
  plausibility: "distance to the nearest observed banks (lower is more realistic)",
};

function el(tag: string, className = "", text = ""): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

export function render(root: HTMLElement, store: ScenarioStore): void {
  root.textContent = "";
  root.appendChild(renderBanner(store));
  root.appendChild(renderModelPicker(store));
  root.appendChild(renderForm(store));
  root.appendChild(renderPrediction(store));
  root.appendChild(renderCounterfactuals(store));
}

function renderBanner(store: ScenarioStore): HTMLElement {
  const banner = store.banner;
  if (banner.kind === "none") return el("div", "banner-slot");
  const box = el("div", `banner banner-${banner.kind}`, banner.message);
  if (banner.kind === "retry") {
    const retry = el("button", "retry", "retry") as HTMLButtonElement;
    retry.onclick = () => void store.submitScenario();
    box.appendChild(retry);
  }
  return box;
}

function renderModelPicker(store: ScenarioStore): HTMLElement {
  const wrap = el("div", "model-picker");
  const select = el("select") as HTMLSelectElement;
  for (const model of store.models) {
    const option = el("option", "", `${model.id} (${model.kind})`) as HTMLOptionElement;
    option.value = model.id;
    option.selected = model.id === store.getState().modelId;
    select.appendChild(option);
  }
  select.onchange = () => store.selectModel(select.value);
  wrap.appendChild(select);
  return wrap;
}

function renderForm(store: ScenarioStore): HTMLElement {
  const model = store.currentModel();
  const state = store.getState();
  const form = el("div", "indicator-form");
  if (!model) return form;
  for (const feature of model.features) {
    const row = el("div", "field-row");
    const label = el("label", "", feature.name);
    if (feature.valid_range) {
      label.title = `valid range [${feature.valid_range[0]}, ${feature.valid_range[1]}]`;
    }
    const input = el("input") as HTMLInputElement;
    input.type = "number";
    input.step = "any";
    input.name = feature.name;
    const value = state.indicators[feature.name];
    input.value = value === null || value === undefined ? "" : String(value);
    input.oninput = () => {
      const parsed = input.value === "" ? null : Number(input.value);
      store.setIndicator(feature.name, parsed);
    };
    const freeze = el("button", "freeze-toggle") as HTMLButtonElement;
    const locked = state.frozen.includes(feature.name);
    freeze.textContent = locked ? "locked" : "lock";
    freeze.title = "a locked indicator is never changed by a suggestion";
    freeze.onclick = () => store.toggleFrozen(feature.name);
    if (locked) row.classList.add("frozen");
    row.append(label, input, freeze);
    const message = state.fieldErrors[feature.name];
    if (message) row.appendChild(el("span", "field-error", message));
    form.appendChild(row);
  }
  const submit = el("button", "predict", "predict") as HTMLButtonElement;
  submit.onclick = () => void store.submitScenario();
  form.appendChild(submit);

  const undo = el("button", "undo", "undo") as HTMLButtonElement;
  undo.disabled = !store.canUndo();
  undo.onclick = () => store.undo();
  const redo = el("button", "redo", "redo") as HTMLButtonElement;
  redo.disabled = !store.canRedo();
  redo.onclick = () => store.redo();
  form.append(undo, redo);
  return form;
}

function renderPrediction(store: ScenarioStore): HTMLElement {
  const state = store.getState();
  const box = el("div", "prediction");
  if (!state.prediction) {
    box.appendChild(el("p", "hint", "no prediction for the current values yet"));
    return box;
  }
  const { probability, label } = state.prediction;
  const gauge = el("div", "gauge");
  const fill = el("div", "gauge-fill");
  fill.style.width = `${Math.round(probability * 100)}%`;
  gauge.appendChild(fill);
  box.appendChild(gauge);
  box.appendChild(
    el(
      "p",
      label === 1 ? "label failing" : "label healthy",
      label === 1
        ? `predicted to fail (probability ${probability.toFixed(4)})`
        : `not predicted to fail (probability ${probability.toFixed(4)})`,
    ),
  );
  const actions = el("div", "cf-actions");
  for (const method of ["whatif", "nice", "moc"]) {
    const button = el("button", "fetch-cf", `suggest changes (${method})`) as HTMLButtonElement;
    button.disabled = !store.predictionIsFailing();
    if (button.disabled) {
      button.title = "suggestions are only available for banks predicted to fail";
    }
    button.onclick = () => void store.fetchCounterfactuals(method);
    actions.appendChild(button);
  }
  box.appendChild(actions);
  return box;
}

function renderCounterfactuals(store: ScenarioStore): HTMLElement {
  const state = store.getState();
  const wrap = el("div", "cards");
  if (state.noCounterfactualReason) {
    wrap.appendChild(
      el("div", "card card-empty", `no counterfactual found: ${state.noCounterfactualReason}`),
    );
    return wrap;
  }
  for (const card of state.counterfactuals) {
    wrap.appendChild(renderCard(store, card));
  }
  return wrap;
}

function renderCard(store: ScenarioStore, card: CounterfactualView): HTMLElement {
  const box = el("div", "card");
  box.appendChild(el("h3", "", card.method));
  const list = el("ul", "deltas");
  for (const [name, delta] of Object.entries(card.deltas)) {
    if (delta.direction === "unchanged") continue;
    list.appendChild(
      el("li", `delta delta-${delta.direction}`,
         `${ARROWS[delta.direction]} ${name}: ${delta.old} → ${delta.new}`),
    );
  }
  box.appendChild(list);
  const badges = el("div", "badges");
  const d = card.desiderata;
  const entries: [string, string][] = [
    ["valid", d.valid_flip ? "yes" : "no"],
    ["proximity", d.proximity.toFixed(4)],
    ["sparsity", String(d.sparsity)],
    ["plausibility", d.plausibility.toFixed(4)],
  ];
  for (const [metric, value] of entries) {
    const badge = el("span", `badge badge-${metric}`, `${metric}: ${value}`);
    badge.title = METRIC_HINTS[metric];
    badges.appendChild(badge);
  }
  box.appendChild(badges);
  const apply = el("button", "apply", "apply to form") as HTMLButtonElement;
  apply.onclick = () => store.applyCounterfactual(card);
  box.appendChild(apply);
  return box;
}
