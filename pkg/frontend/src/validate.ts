// Optimistic client-side validation mirroring the served validity ranges;
// the service remains authoritative.

import type { FeatureInfo } from "./types.js";

export function validateField(
  feature: FeatureInfo,
  value: number | null,
): string | null {
  if (value === null || Number.isNaN(value)) {
    return "enter a numeric value";
  }
  if (!Number.isFinite(value)) {
    return "value must be finite";
  }
  if (feature.valid_range) {
    const [lo, hi] = feature.valid_range;
    if (value < lo || value > hi) {
      return `outside valid range [${lo}, ${hi}]`;
    }
  }
  return null;
}

export function validateAll(
  features: FeatureInfo[],
  indicators: Record<string, number | null>,
): Record<string, string> {
  const errors: Record<string, string> = {};
  for (const feature of features) {
    const message = validateField(feature, indicators[feature.name] ?? null);
    if (message !== null) {
      errors[feature.name] = message;
    }
  }
  return errors;
}
