// Direction markers are derived from the old/new pair, never trusted from
// the wire, so a rendered arrow can never disagree with the values beside it.

import type { CounterfactualView, Delta, Direction } from "./types.js";

export function directionOf(oldValue: number, newValue: number): Direction {
  if (newValue > oldValue) return "up";
  if (newValue < oldValue) return "down";
  return "unchanged";
}

export function normalizeDelta(delta: Delta): Delta {
  return { ...delta, direction: directionOf(delta.old, delta.new) };
}

export function normalizeCard(card: CounterfactualView): CounterfactualView {
  const deltas = Object.fromEntries(
    Object.entries(card.deltas).map(([name, delta]) => [name, normalizeDelta(delta)]),
  );
  return { ...card, deltas };
}
