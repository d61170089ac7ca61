// Scenario state machine: one source of truth, full undo/redo history, and
// request tokens so a superseded response can never clobber newer state.
//
// Invariants maintained here:
//  - a prediction is only ever shown for the exact current indicator values
//    (any edit clears it, along with counterfactual cards derived from it);
//  - frozen features are never overwritten when a counterfactual is applied;
//  - undo restores the complete prior scenario, prediction included.

import type { ApiClient } from "./api.js";
import { normalizeCard } from "./deltas.js";
import type {
  CounterfactualView,
  ModelInfo,
  ScenarioState,
} from "./types.js";
import { validateAll, validateField } from "./validate.js";

export type Banner =
  | { kind: "none" }
  | { kind: "offline"; message: string }
  | { kind: "retry"; message: string }
  | { kind: "notice"; message: string };

function emptyScenario(): ScenarioState {
  return {
    modelId: null,
    indicators: {},
    fieldErrors: {},
    frozen: [],
    prediction: null,
    counterfactuals: [],
    noCounterfactualReason: null,
  };
}

function cloneScenario(state: ScenarioState): ScenarioState {
  return JSON.parse(JSON.stringify(state)) as ScenarioState;
}

export class ScenarioStore {
  private state: ScenarioState = emptyScenario();
  private undoStack: ScenarioState[] = [];
  private redoStack: ScenarioState[] = [];
  private tokens: Record<string, number> = {};
  private listeners = new Set<() => void>();

  models: ModelInfo[] = [];
  banner: Banner = { kind: "none" };
  busy: Record<string, boolean> = {};

  constructor(private api: ApiClient) {}

  // --- subscriptions ------------------------------------------------------

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  getState(): ScenarioState {
    return this.state;
  }

  currentModel(): ModelInfo | null {
    return this.models.find((m) => m.id === this.state.modelId) ?? null;
  }

  // --- history ------------------------------------------------------------

  private mutate(change: (draft: ScenarioState) => void): void {
    this.undoStack.push(cloneScenario(this.state));
    this.redoStack = [];
    const draft = cloneScenario(this.state);
    change(draft);
    this.state = draft;
    this.notify();
  }

  /** In-place refresh for derived data (predictions arriving); not undoable. */
  private refresh(change: (draft: ScenarioState) => void): void {
    const draft = cloneScenario(this.state);
    change(draft);
    this.state = draft;
    this.notify();
  }

  canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  canRedo(): boolean {
    return this.redoStack.length > 0;
  }

  undo(): void {
    const prior = this.undoStack.pop();
    if (!prior) return;
    this.redoStack.push(cloneScenario(this.state));
    this.state = prior;
    this.notify();
  }

  redo(): void {
    const next = this.redoStack.pop();
    if (!next) return;
    this.undoStack.push(cloneScenario(this.state));
    this.state = next;
    this.notify();
  }

  // --- request tokens -----------------------------------------------------

  private nextToken(action: string): number {
    this.tokens[action] = (this.tokens[action] ?? 0) + 1;
    return this.tokens[action];
  }

  private isCurrent(action: string, token: number): boolean {
    return this.tokens[action] === token;
  }

  // --- model picker -------------------------------------------------------

  async loadModels(requestedId: string | null = null): Promise<void> {
    const result = await this.api.loadModels();
    if (result.kind !== "ok") {
      this.banner = { kind: "offline", message: "service unreachable" };
      this.notify();
      return;
    }
    this.models = result.data;
    this.banner = { kind: "none" };
    let chosen = this.models.find((m) => m.id === requestedId) ?? null;
    if (requestedId !== null && chosen === null && this.models.length > 0) {
      this.banner = {
        kind: "notice",
        message: `unknown model "${requestedId}"; showing ${this.models[0].id}`,
      };
    }
    chosen = chosen ?? this.models[0] ?? null;
    if (chosen) {
      this.selectModel(chosen.id);
    } else {
      this.notify();
    }
  }

  /** Swaps the form schema to the model's predictor group. */
  selectModel(modelId: string): void {
    const model = this.models.find((m) => m.id === modelId);
    if (!model) return;
    this.mutate((draft) => {
      draft.modelId = model.id;
      draft.indicators = Object.fromEntries(
        model.features.map((f) => [f.name, draft.indicators[f.name] ?? null]),
      );
      draft.fieldErrors = {};
      draft.frozen = draft.frozen.filter((name) =>
        model.features.some((f) => f.name === name),
      );
      draft.prediction = null;
      draft.counterfactuals = [];
      draft.noCounterfactualReason = null;
    });
  }

  // --- form edits ---------------------------------------------------------

  setIndicator(name: string, value: number | null): void {
    const model = this.currentModel();
    this.mutate((draft) => {
      draft.indicators[name] = value;
      const feature = model?.features.find((f) => f.name === name);
      const message = feature ? validateField(feature, value) : null;
      if (message) {
        draft.fieldErrors[name] = message;
      } else {
        delete draft.fieldErrors[name];
      }
      // stale prediction (and cards derived from it) must never outlive an edit
      draft.prediction = null;
      draft.counterfactuals = [];
      draft.noCounterfactualReason = null;
    });
  }

  toggleFrozen(name: string): void {
    this.mutate((draft) => {
      draft.frozen = draft.frozen.includes(name)
        ? draft.frozen.filter((f) => f !== name)
        : [...draft.frozen, name];
    });
  }

  loadScenario(indicators: Record<string, number>): void {
    const model = this.currentModel();
    this.mutate((draft) => {
      draft.indicators = { ...indicators };
      draft.fieldErrors = model ? validateAll(model.features, draft.indicators) : {};
      draft.prediction = null;
      draft.counterfactuals = [];
      draft.noCounterfactualReason = null;
    });
  }

  // --- service actions ----------------------------------------------------

  private completeIndicators(): Record<string, number> | null {
    const model = this.currentModel();
    if (!model) return null;
    const errors = validateAll(model.features, this.state.indicators);
    if (Object.keys(errors).length > 0) {
      this.refresh((draft) => {
        draft.fieldErrors = errors;
      });
      return null;
    }
    return Object.fromEntries(
      model.features.map((f) => [f.name, this.state.indicators[f.name] as number]),
    );
  }

  async submitScenario(): Promise<void> {
    const indicators = this.completeIndicators();
    const modelId = this.state.modelId;
    if (!indicators || !modelId) return;
    const token = this.nextToken("predict");
    this.busy["predict"] = true;
    this.notify();
    const result = await this.api.predict(modelId, indicators);
    if (!this.isCurrent("predict", token)) return; // superseded
    this.busy["predict"] = false;
    if (result.kind === "ok") {
      this.banner = { kind: "none" };
      this.refresh((draft) => {
        draft.prediction = result.data;
        draft.fieldErrors = {};
      });
    } else if (result.kind === "field_errors") {
      this.refresh((draft) => {
        draft.fieldErrors = Object.fromEntries(
          result.errors.map((e) => [e.field, e.error]),
        );
        draft.prediction = null;
      });
    } else {
      // network failure: keep the scenario untouched, offer retry
      this.banner = { kind: "retry", message: "prediction request failed; retry" };
      this.notify();
    }
  }

  predictionIsFailing(): boolean {
    return this.state.prediction?.label === 1;
  }

  async fetchCounterfactuals(method: string): Promise<void> {
    if (!this.predictionIsFailing()) return; // gated in the view as well
    const indicators = this.completeIndicators();
    const modelId = this.state.modelId;
    if (!indicators || !modelId) return;
    const token = this.nextToken("counterfactuals");
    this.busy["counterfactuals"] = true;
    this.notify();
    const result = await this.api.counterfactuals(
      modelId,
      indicators,
      method,
      [...this.state.frozen],
    );
    if (!this.isCurrent("counterfactuals", token)) return;
    this.busy["counterfactuals"] = false;
    if (result.kind === "ok") {
      const cards = result.data.map(normalizeCard).sort(
        (a, b) =>
          a.desiderata.sparsity - b.desiderata.sparsity ||
          a.desiderata.proximity - b.desiderata.proximity,
      );
      this.refresh((draft) => {
        draft.counterfactuals = cards;
        draft.noCounterfactualReason = null;
      });
    } else if (result.kind === "no_counterfactual") {
      this.refresh((draft) => {
        draft.counterfactuals = [];
        draft.noCounterfactualReason = result.reason;
      });
    } else if (result.kind === "field_errors") {
      this.refresh((draft) => {
        draft.fieldErrors = Object.fromEntries(
          result.errors.map((e) => [e.field, e.error]),
        );
      });
    } else {
      this.banner = { kind: "retry", message: "counterfactual request failed; retry" };
      this.notify();
    }
  }

  /** Copy a card's values into the form (frozen fields stay put), push the
   * prior scenario onto history, and clear the prediction for re-predicting. */
  applyCounterfactual(card: CounterfactualView): void {
    // membership by value: state clones mean object identity cannot be trusted
    const serialized = JSON.stringify(card);
    const member = this.state.counterfactuals.some(
      (c) => JSON.stringify(c) === serialized,
    );
    if (!member) return;
    const model = this.currentModel();
    this.mutate((draft) => {
      for (const [name, value] of Object.entries(card.values)) {
        if (draft.frozen.includes(name)) continue;
        if (name in draft.indicators) {
          draft.indicators[name] = value;
        }
      }
      draft.fieldErrors = model ? validateAll(model.features, draft.indicators) : {};
      draft.prediction = null;
      draft.counterfactuals = [];
      draft.noCounterfactualReason = null;
    });
  }
}
