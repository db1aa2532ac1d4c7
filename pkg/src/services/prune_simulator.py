import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from src.errors import EmptySelectionError, InvalidParametersError
from src.models.game_models import DefenderStrategy
from src.models.sim_models import AttackSpec, CurvePoint, ImportanceScores, ModelSpec, PruneCurve, SyntheticModel

logger = logging.getLogger(__name__)

STREAM_MODEL = 0
STREAM_IMPORTANCE = 1
STREAM_SELECT = 2

K_KEY_SCALE = 1_000_000_000

IndexSet = Union[np.ndarray, Iterable[int]]


def derive_seed(seed: int, *keys: int) -> int:
    """
    Mixes a run seed with stream keys into an independent 64-bit seed.

    SeedSequence hashes the whole key tuple, so (seed, stream, k) triples map
    to unrelated generator states regardless of the order they are visited in.
    """
    state = np.random.SeedSequence([seed, *keys]).generate_state(1, dtype=np.uint64)
    return int(state[0])

def k_key(k: float) -> int:
    return int(round(k * K_KEY_SCALE))

def build_model(
    n: int,
    d: DefenderStrategy,
    acc0: float,
    wsr0: float,
    alpha_true: float,
    kappa0: float,
    eps_res_true: float,
    seed: int,
    heterogeneous_weights: bool = False,
    weight_shape: float = 2.0,
) -> SyntheticModel:
    if n < 10:
        raise InvalidParametersError(f"n must be at least 10, got {n}")

    rng = np.random.default_rng(seed)
    s = max(1, int(round(d.rho * n)))
    indices = np.sort(rng.choice(n, size=s, replace=False))
    mask = np.zeros(n, dtype=bool)
    mask[indices] = True

    if heterogeneous_weights:
        raw = rng.gamma(weight_shape, 1.0, size=n)
        weights = raw / raw.sum() * alpha_true
    else:
        weights = np.full(n, alpha_true / n, dtype=float)

    return SyntheticModel(
        n=n,
        watermark_indices=indices,
        watermark_mask=mask,
        clean_weights=weights,
        kappa=kappa0 * d.gamma,
        acc0=acc0,
        wsr0=wsr0,
        eps_res_true=eps_res_true,
        seed=seed,
    )

def estimate_importance(model: SyntheticModel, L: int, delta: float, noise0: float, seed: int) -> ImportanceScores:
    """
    Membership indicator plus the mean of L Gaussian observations.

    The standard deviation noise0 * (1 + delta) / sqrt(L) shrinks with more
    iterations and grows with trigger complexity.
    """
    if L < 1:
        raise InvalidParametersError(f"L must be at least 1, got {L}")

    sigma = noise0 * (1.0 + delta) / math.sqrt(L)
    scores = model.watermark_mask.astype(float)
    if sigma > 0:
        rng = np.random.default_rng(seed)
        scores = scores + rng.normal(0.0, sigma, size=model.n)
    return ImportanceScores(scores=scores)

def _uniform_unselected(rng: np.random.Generator, selected: np.ndarray) -> int:
    n = selected.size
    while True:
        idx = int(rng.integers(n))
        if not selected[idx]:
            return idx

def prune_select(scores: ImportanceScores, k: float, epsilon: float, tau_discard: float, seed: int) -> np.ndarray:
    """
    Epsilon-greedy selection of round(k * n) distinct neurons.

    Greedy steps walk the neurons scoring at least tau_discard in descending
    score order; once that pool is used up they fall back to a uniform pick.
    Exploration steps always pick uniformly among the unselected neurons.

    Returns:
        np.ndarray: sorted indices of the removed neurons.
    """
    n = scores.n
    m = int(round(k * n))
    if m <= 0:
        return np.empty(0, dtype=np.int64)
    m = min(m, n)

    order = np.argsort(-scores.scores, kind="stable")
    pool = order[scores.scores[order] >= tau_discard]

    rng = np.random.default_rng(seed)
    selected = np.zeros(n, dtype=bool)
    cursor = 0
    fallback_picks = 0

    for _ in range(m):
        if rng.random() < epsilon:
            idx = _uniform_unselected(rng, selected)
        else:
            while cursor < pool.size and selected[pool[cursor]]:
                cursor += 1
            if cursor < pool.size:
                idx = int(pool[cursor])
                cursor += 1
            else:
                idx = _uniform_unselected(rng, selected)
                fallback_picks += 1
        selected[idx] = True

    if fallback_picks:
        logger.debug(f"Greedy pool of {pool.size} exhausted; {fallback_picks} of {m} picks fell back to uniform")

    return np.flatnonzero(selected)

def _as_index_array(removed: IndexSet, n: int) -> np.ndarray:
    if isinstance(removed, np.ndarray):
        indices = removed.astype(np.int64, copy=False)
    else:
        indices = np.fromiter((int(i) for i in removed), dtype=np.int64)
    indices = np.unique(indices)
    if indices.size and (indices[0] < 0 or indices[-1] >= n):
        raise InvalidParametersError(f"removed indices must lie in [0, {n - 1}]")
    return indices

def evaluate_model(model: SyntheticModel, removed: IndexSet) -> Tuple[float, float]:
    """
    Returns (acc, wsr) after removing the given neurons.

    Removing a fraction h of the watermark subset multiplies the decaying part
    of WSR by exp(-kappa * h). The law is deterministic; randomness only enters
    through which neurons are selected.
    """
    indices = _as_index_array(removed, model.n)
    if indices.size == 0:
        return min(max(model.acc0, 0.0), 1.0), model.wsr0

    acc = min(max(model.acc0 - float(model.clean_weights[indices].sum()), 0.0), 1.0)

    hits = int(model.watermark_mask[indices].sum())
    if hits == 0:
        return acc, model.wsr0

    decay = math.exp(-model.kappa * hits / model.s)
    wsr = model.eps_res_true + (model.wsr0 - model.eps_res_true) * decay
    return acc, wsr

def empirical_eta(removed: IndexSet, model: SyntheticModel) -> float:
    """Precision of the removal: |removed ∩ S*| / |removed|."""
    indices = _as_index_array(removed, model.n)
    if indices.size == 0:
        raise EmptySelectionError("empirical effectiveness is undefined for an empty removal set")
    return float(model.watermark_mask[indices].sum()) / indices.size

def build_seed_model(model_spec: ModelSpec, seed: int) -> SyntheticModel:
    return build_model(
        n=model_spec.n,
        d=model_spec.defender,
        acc0=model_spec.acc0,
        wsr0=model_spec.wsr0,
        alpha_true=model_spec.alpha_true,
        kappa0=model_spec.kappa0,
        eps_res_true=model_spec.eps_res_true,
        seed=derive_seed(seed, STREAM_MODEL),
        heterogeneous_weights=model_spec.heterogeneous_weights,
        weight_shape=model_spec.weight_shape,
    )

def seed_importance(model: SyntheticModel, model_spec: ModelSpec, attack_spec: AttackSpec, seed: int) -> ImportanceScores:
    return estimate_importance(
        model,
        attack_spec.L,
        model_spec.defender.delta,
        attack_spec.noise0,
        derive_seed(seed, STREAM_IMPORTANCE),
    )

def select_for_budget(scores: ImportanceScores, k: float, attack_spec: AttackSpec, seed: int) -> np.ndarray:
    return prune_select(
        scores,
        k,
        attack_spec.epsilon,
        attack_spec.tau_discard,
        derive_seed(seed, STREAM_SELECT, k_key(k)),
    )

def _simulate_seed(model_spec: ModelSpec, attack_spec: AttackSpec, ks: Sequence[float], seed: int) -> List[CurvePoint]:
    model = build_seed_model(model_spec, seed)
    scores = seed_importance(model, model_spec, attack_spec, seed)

    points = []
    for k in ks:
        removed = select_for_budget(scores, k, attack_spec, seed)
        acc, wsr = evaluate_model(model, removed)
        points.append(CurvePoint(k=k, acc=acc, wsr=wsr, seed=seed))
    return points

def _normalise_grid(k_grid: Iterable[float]) -> List[float]:
    ks = sorted({float(k) for k in k_grid} | {0.0})
    if ks[-1] > 1.0 or ks[0] < 0.0:
        raise InvalidParametersError("pruning budgets must lie in [0, 1]")
    return ks

def run_attack_curve(
    model_spec: ModelSpec,
    attack_spec: AttackSpec,
    k_grid: Iterable[float],
    seeds: Sequence[int],
    max_workers: int = 1,
) -> PruneCurve:
    """
    Simulates one curve point per (seed, k), including a k = 0 baseline.

    Importance is estimated once per seed; selection is re-run per budget with
    a sub-seed derived from (seed, k). Seeds are independent, so they may run
    in a process pool; points are merged by sorting on (seed, k).
    """
    if not seeds:
        raise InvalidParametersError("at least one seed is required")
    ks = _normalise_grid(k_grid)

    logger.info(f"Simulating {len(seeds)} seed(s) over {len(ks)} budgets (n={model_spec.n}, L={attack_spec.L}, epsilon={attack_spec.epsilon})")

    if max_workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as executor:
            per_seed = list(executor.map(_simulate_seed, [model_spec] * len(seeds), [attack_spec] * len(seeds), [ks] * len(seeds), seeds))
    else:
        per_seed = [_simulate_seed(model_spec, attack_spec, ks, seed) for seed in seeds]

    points = sorted((p for batch in per_seed for p in batch), key=lambda p: (p.seed, p.k))
    metadata = {
        "source": "synthetic",
        "n": model_spec.n,
        "rho": model_spec.defender.rho,
        "delta": model_spec.defender.delta,
        "gamma": model_spec.defender.gamma,
        "kappa": model_spec.kappa0 * model_spec.defender.gamma,
        "eps_res_true": model_spec.eps_res_true,
        "L": attack_spec.L,
        "epsilon": attack_spec.epsilon,
        "noise0": attack_spec.noise0,
        "tau_discard": attack_spec.tau_discard,
    }
    return PruneCurve(points=points, metadata=metadata)

class PruneSimulator:
    def __init__(self, model_spec: ModelSpec, attack_spec: AttackSpec):
        self.model_spec = model_spec
        self.attack_spec = attack_spec

    def eta_samples(self, k: float, seeds: Sequence[int]) -> np.ndarray:
        """Empirical effectiveness at budget k, one value per seed."""
        samples = []
        for seed in seeds:
            model = build_seed_model(self.model_spec, seed)
            scores = seed_importance(model, self.model_spec, self.attack_spec, seed)
            removed = select_for_budget(scores, k, self.attack_spec, seed)
            samples.append(empirical_eta(removed, model))
        return np.array(samples, dtype=float)

    def eta_profile(self, k: float, seeds: Sequence[int]) -> Tuple[float, float]:
        """Seed-averaged empirical effectiveness and its standard error."""
        samples = self.eta_samples(k, seeds)
        stderr = float(samples.std(ddof=1) / math.sqrt(samples.size)) if samples.size > 1 else 0.0
        return float(samples.mean()), stderr
