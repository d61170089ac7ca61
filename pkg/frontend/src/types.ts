// Shared shapes for the explorer: mirrors the prediction service wire formats.

export interface FeatureInfo {
  name: string;
  kind: string;
  valid_range: [number, number] | null;
  observed_range: [number, number] | null;
}

export interface ModelInfo {
  id: string;
  kind: string;
  decision_threshold: number;
  features: FeatureInfo[];
}

export interface Prediction {
  probability: number;
  label: 0 | 1;
}

export type Direction = "up" | "down" | "unchanged";

export interface Delta {
  direction: Direction;
  old: number;
  new: number;
}

export interface Desiderata {
  valid_flip: boolean;
  valid_threshold: boolean;
  proximity: number;
  sparsity: number;
  plausibility: number;
}

export interface CounterfactualView {
  method: string;
  values: Record<string, number>;
  deltas: Record<string, Delta>;
  changed_features: string[];
  predicted_probability: number;
  desiderata: Desiderata;
}

export interface FieldError {
  field: string;
  error: string;
}

export type ApiResult<T> =
  | { kind: "ok"; data: T }
  | { kind: "field_errors"; errors: FieldError[] }
  | { kind: "no_counterfactual"; reason: string }
  | { kind: "not_found"; message: string }
  | { kind: "network_error"; message: string };

export interface ScenarioState {
  modelId: string | null;
  indicators: Record<string, number | null>;
  fieldErrors: Record<string, string>;
  frozen: string[];
  prediction: Prediction | null;
  counterfactuals: CounterfactualView[];
  noCounterfactualReason: string | null;
}
