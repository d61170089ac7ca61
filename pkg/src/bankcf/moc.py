"""Multi-objective counterfactual search with NSGA-II style selection.

Candidates evolve under four minimized objectives: prediction gap to the
desired probability interval, Gower proximity to the factual, changed-feature
count, and k-NN implausibility. Selection is binary tournament on
(front rank, crowding distance); survivors come from (mu + lambda) truncation.
Reset-to-factual mutation drives sparsity; frozen features never move.
Everything derives from the seed, so runs are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .counterfactuals import (
    MOC,
    CFQuery,
    CFResult,
    Counterfactual,
    ObjectiveVector,
    _check_query,
    _frozen_mask,
    changed_feature_names,
)
from .distances import gower_matrix, knn_mean_gower_rows
from .errors import ParameterError
from .schema import NUMERIC, DataTable, FeatureSpec
from .trees import EnsembleModel, predict_label_matrix, predict_proba_matrix


@dataclass(frozen=True)
class MocConfig:
    population_size: int = 50
    generations: int = 100
    p_crossover: float = 0.5  # per-feature chance of inheriting from the second parent
    p_mut: float = 0.2
    p_reset: float = 0.3
    mutation_scale: float = 0.1  # gaussian sigma as a fraction of observed_range
    k_plausibility: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ParameterError("population_size must be >= 2")
        if self.generations < 1:
            raise ParameterError("generations must be >= 1")


@dataclass(frozen=True)
class Population:
    members: tuple[Counterfactual, ...]
    generation: int
    seed: int


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """a <= b componentwise and strictly better somewhere (minimization)."""
    not_worse = all(x <= y for x, y in zip(a, b))
    strictly = any(x < y for x, y in zip(a, b))
    return not_worse and strictly


def nondominated_sort(vectors: Sequence[Sequence[float]]) -> list[list[int]]:
    """Pareto fronts (lists of indices) under minimization, best front first."""
    rows = [
        v.as_tuple() if isinstance(v, ObjectiveVector) else tuple(v) for v in vectors
    ]
    n = len(rows)
    if n == 0:
        raise ParameterError("nondominated_sort needs at least one vector")
    A = np.asarray(rows, dtype=float)
    all_le = (A[:, None, :] <= A[None, :, :]).all(axis=2)
    any_lt = (A[:, None, :] < A[None, :, :]).any(axis=2)
    dom = all_le & any_lt  # dom[i, j]: i dominates j
    counts = dom.sum(axis=0).astype(int)
    active = np.ones(n, dtype=bool)
    fronts: list[list[int]] = []
    while active.any():
        front = np.flatnonzero(active & (counts == 0))
        fronts.append(front.tolist())
        active[front] = False
        counts -= dom[front].sum(axis=0)
    return fronts


def crowding_distance(front: Sequence[int], vectors: Sequence[Sequence[float]]) -> dict[int, float]:
    """Per-index crowding distance within one front; extremes get infinity."""
    vectors = [
        v.as_tuple() if isinstance(v, ObjectiveVector) else tuple(v) for v in vectors
    ]
    distances = {i: 0.0 for i in front}
    if len(front) <= 2:
        return {i: float("inf") for i in front}
    n_obj = len(vectors[front[0]])
    for m in range(n_obj):
        ordered = sorted(front, key=lambda i: vectors[i][m])
        lo = vectors[ordered[0]][m]
        hi = vectors[ordered[-1]][m]
        distances[ordered[0]] = float("inf")
        distances[ordered[-1]] = float("inf")
        if hi == lo:
            continue
        for pos in range(1, len(ordered) - 1):
            gap = vectors[ordered[pos + 1]][m] - vectors[ordered[pos - 1]][m]
            distances[ordered[pos]] += gap / (hi - lo)
    return distances


def _rank_and_crowding(members: Sequence[Counterfactual]) -> tuple[np.ndarray, np.ndarray]:
    vectors = [m.objectives.as_tuple() for m in members]
    fronts = nondominated_sort(vectors)
    rank = np.empty(len(members), dtype=int)
    crowd = np.empty(len(members), dtype=float)
    for r, front in enumerate(fronts):
        dist = crowding_distance(front, vectors)
        for i in front:
            rank[i] = r
            crowd[i] = dist[i]
    return rank, crowd


def _members_from_values(
    V: np.ndarray,
    query: CFQuery,
    model: EnsembleModel,
    training_matrix: np.ndarray,
    specs: Sequence[FeatureSpec],
    k: int,
) -> tuple[Counterfactual, ...]:
    probs = predict_proba_matrix(model, V)
    p_desired = probs if query.desired_class == 1 else 1.0 - probs
    lo, hi = query.desired_proba_interval
    gaps = np.maximum(0.0, np.maximum(lo - p_desired, p_desired - hi))
    proximity = gower_matrix(V, query.factual, specs)
    sparsity = (V != query.factual).sum(axis=1)
    implaus = knn_mean_gower_rows(V, training_matrix, specs, k)
    return tuple(
        Counterfactual(
            values=V[i].copy(),
            method=MOC,
            changed_features=changed_feature_names(V[i], query.factual, specs),
            objectives=ObjectiveVector(
                float(gaps[i]), float(proximity[i]), int(sparsity[i]), float(implaus[i])
            ),
            predicted_proba=float(probs[i]),
        )
        for i in range(len(V))
    )


def _feature_bounds(specs: Sequence[FeatureSpec], training_matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo = np.empty(len(specs))
    hi = np.empty(len(specs))
    for j, spec in enumerate(specs):
        if spec.observed_range is not None:
            lo[j], hi[j] = spec.observed_range
        else:
            lo[j] = training_matrix[:, j].min()
            hi[j] = training_matrix[:, j].max()
    return lo, hi


def initialize_population(
    query: CFQuery,
    model: EnsembleModel,
    training: DataTable,
    config: MocConfig,
) -> Population:
    """Factual copies with random per-feature resets, seeded with a few
    desired-class training rows (frozen features forced back to the factual)."""
    specs = training.schema
    _check_query(query, model, specs)
    matrix = training.matrix()
    rng = np.random.default_rng(_seed_entropy(config.seed, 0xC0FFEE))
    frozen = _frozen_mask(query, specs)
    lo, hi = _feature_bounds(specs, matrix)
    mu = config.population_size

    values = np.tile(query.factual, (mu, 1))
    randomize = rng.uniform(size=values.shape) < 0.5
    randomize[:, frozen] = False
    draws = rng.uniform(lo, hi, size=values.shape)
    values[randomize] = draws[randomize]

    if len(matrix) > 0:
        predictions = predict_label_matrix(model, matrix)
        unlike = np.flatnonzero(predictions == query.desired_class)
        n_seed = min(5, len(unlike), mu)
        if n_seed > 0:
            order = np.argsort(
                gower_matrix(matrix[unlike], query.factual, specs), kind="stable"
            )[:n_seed]
            seeds = matrix[unlike[order]].copy()
            seeds[:, frozen] = query.factual[frozen]
            values[:n_seed] = seeds

    members = _members_from_values(
        values, query, model, matrix, specs, config.k_plausibility
    )
    return Population(members=members, generation=0, seed=config.seed)


def _seed_entropy(seed, salt: int) -> list[int]:
    parts = list(seed) if isinstance(seed, (list, tuple)) else [seed]
    return [*parts, salt]


def _tournament(rng: np.random.Generator, rank: np.ndarray, crowd: np.ndarray) -> int:
    a, b = rng.integers(0, len(rank), size=2)
    if rank[a] != rank[b]:
        return int(a if rank[a] < rank[b] else b)
    if crowd[a] != crowd[b]:
        return int(a if crowd[a] > crowd[b] else b)
    return int(min(a, b))


def evolve_population(
    pop: Population,
    query: CFQuery,
    model: EnsembleModel,
    training: DataTable,
    budget: int,
    config: MocConfig = MocConfig(),
) -> Population:
    """Run `budget` generations of variation plus (mu + lambda) NSGA-II truncation."""
    if budget < 1:
        raise ParameterError("generation budget must be >= 1")
    specs = training.schema
    matrix = training.matrix()
    frozen = _frozen_mask(query, specs)
    numeric = np.array([s.kind == NUMERIC for s in specs], dtype=bool)
    lo, hi = _feature_bounds(specs, matrix)
    widths = hi - lo
    mu = len(pop.members)
    members = pop.members
    generation = pop.generation

    for _ in range(budget):
        rng = np.random.default_rng(_seed_entropy(pop.seed, generation + 1))
        rank, crowd = _rank_and_crowding(members)
        parent_values = np.array([m.values for m in members])

        children = np.empty((mu, len(specs)))
        for i in range(mu):
            pa = parent_values[_tournament(rng, rank, crowd)]
            pb = parent_values[_tournament(rng, rank, crowd)]
            take_b = rng.uniform(size=len(specs)) < config.p_crossover
            child = np.where(take_b, pb, pa)
            # gaussian move scaled by the feature's observed range, then an
            # occasional reset to the factual value to push sparsity down
            mutate = (rng.uniform(size=len(specs)) < config.p_mut) & numeric & ~frozen
            noise = rng.normal(0.0, 1.0, size=len(specs)) * config.mutation_scale * widths
            child = np.where(mutate, np.clip(child + noise, lo, hi), child)
            reset = (rng.uniform(size=len(specs)) < config.p_reset) & ~frozen
            child = np.where(reset, query.factual, child)
            child[frozen] = query.factual[frozen]
            children[i] = child

        # duplicate elimination: a child identical to a current member or an
        # earlier sibling adds nothing to the (mu + lambda) pool
        seen = {_round_key(m.values) for m in members}
        fresh = []
        for child in children:
            key = _round_key(child)
            if key not in seen:
                seen.add(key)
                fresh.append(child)
        offspring = (
            _members_from_values(
                np.array(fresh), query, model, matrix, specs, config.k_plausibility
            )
            if fresh else ()
        )
        pool = members + offspring
        vectors = [m.objectives.as_tuple() for m in pool]
        fronts = nondominated_sort(vectors)
        survivors: list[int] = []
        for front in fronts:
            if len(survivors) + len(front) <= mu:
                survivors.extend(front)
            else:
                dist = crowding_distance(front, vectors)
                # truncate by crowding (descending), index as the final tie-break
                ordered = sorted(front, key=lambda i: (-dist[i], i))
                survivors.extend(ordered[: mu - len(survivors)])
                break
        members = tuple(pool[i] for i in sorted(survivors))
        generation += 1

    return Population(members=members, generation=generation, seed=pop.seed)


def _round_key(values: np.ndarray) -> tuple:
    """Value identity after rounding to 12 significant digits."""
    return tuple(
        float(np.format_float_positional(v, precision=12, fractional=False))
        for v in values
    )


def _dedup(members: Sequence[Counterfactual]) -> list[Counterfactual]:
    seen: set[tuple] = set()
    out = []
    for member in members:
        key = _round_key(member.values)
        if key not in seen:
            seen.add(key)
            out.append(member)
    return out


def generate_moc(
    query: CFQuery,
    model: EnsembleModel,
    training: DataTable,
    config: MocConfig = MocConfig(),
) -> CFResult:
    """Evolve a population and return the valid, deduplicated first front."""
    pop = initialize_population(query, model, training, config)
    pop = evolve_population(pop, query, model, training, config.generations, config)

    vectors = [m.objectives.as_tuple() for m in pop.members]
    front_one = nondominated_sort(vectors)[0]
    candidates = [pop.members[i] for i in front_one]
    labels = predict_label_matrix(model, np.array([m.values for m in candidates]))
    valid = [
        m for m, label in zip(candidates, labels)
        if m.objectives.prediction_gap == 0.0 and label == query.desired_class
    ]
    if not valid:
        best_gap = min(m.objectives.prediction_gap for m in pop.members)
        return CFResult(
            (), reason=f"no candidate reached the desired probability interval "
                       f"(best remaining gap {best_gap:.6f})"
        )
    valid = _dedup(valid)
    valid.sort(key=lambda m: (m.objectives.sparsity, m.objectives.proximity))
    return CFResult(tuple(valid[: query.max_counterfactuals]))
