from collections import defaultdict
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.models.game_models import DefenderStrategy


class SyntheticModel(BaseModel):
    """Neuron population with a hidden watermark subset; the simulator's ground truth"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int
    """Total number of neurons"""
    watermark_indices: np.ndarray
    """Sorted indices of the watermark-carrying subset S*"""
    watermark_mask: np.ndarray
    """Boolean membership vector of S*, length n"""
    clean_weights: np.ndarray
    """Accuracy mass each neuron contributes; sums to alpha_true"""
    kappa: float
    """Watermark fragility exponent"""
    acc0: float
    wsr0: float
    eps_res_true: float
    seed: int

    @property
    def watermark_set(self) -> FrozenSet[int]:
        return frozenset(int(i) for i in self.watermark_indices)

    @property
    def s(self) -> int:
        return int(self.watermark_indices.size)

    @property
    def alpha_true(self) -> float:
        return float(self.clean_weights.sum())

class ImportanceScores(BaseModel):
    """Attacker's noisy per-neuron estimate of watermark membership"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    scores: np.ndarray

    @property
    def n(self) -> int:
        return int(self.scores.size)

class CurvePoint(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    k: float = Field(ge=0.0, le=1.0)
    """Pruning budget"""
    acc: float = Field(ge=0.0, le=1.0)
    """Clean accuracy after pruning"""
    wsr: float = Field(ge=0.0, le=1.0)
    """Watermark success rate after pruning"""
    seed: int = 0

class PruneCurve(BaseModel):
    """Measured or simulated (k, ACC, WSR) points, optionally per seed"""
    model_config = ConfigDict(frozen=True)

    points: List[CurvePoint] = Field(default_factory=list)
    metadata: Dict[str, Any] = Field(default_factory=dict)

    def sorted(self) -> "PruneCurve":
        """Returns a copy with points ordered by (seed, k)"""
        ordered = sorted(self.points, key=lambda p: (p.seed, p.k))
        return PruneCurve(points=ordered, metadata=dict(self.metadata))

    def seeds(self) -> List[int]:
        return sorted({p.seed for p in self.points})

    def for_seed(self, seed: int) -> "PruneCurve":
        points = [p for p in self.points if p.seed == seed]
        return PruneCurve(points=points, metadata={**self.metadata, "seed": seed})

    def averaged(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Seed replicates averaged per k; returns (k, acc, wsr) sorted by k"""
        acc_by_k: Dict[float, List[float]] = defaultdict(list)
        wsr_by_k: Dict[float, List[float]] = defaultdict(list)
        for point in self.points:
            acc_by_k[point.k].append(point.acc)
            wsr_by_k[point.k].append(point.wsr)

        ks = sorted(acc_by_k)
        acc = np.array([np.mean(acc_by_k[k]) for k in ks], dtype=float)
        wsr = np.array([np.mean(wsr_by_k[k]) for k in ks], dtype=float)
        return np.array(ks, dtype=float), acc, wsr

    def value_at(self, k: float, tol: float = 1e-12) -> Optional[Tuple[float, float]]:
        """Seed-averaged (acc, wsr) at budget k, or None when k was not measured"""
        ks, acc, wsr = self.averaged()
        hits = np.flatnonzero(np.abs(ks - k) <= tol)
        if hits.size == 0:
            return None
        return float(acc[hits[0]]), float(wsr[hits[0]])

class ModelSpec(BaseModel):
    """Everything build_model needs apart from the seed"""
    model_config = ConfigDict(frozen=True)

    n: int = Field(default=10000, ge=10)
    defender: DefenderStrategy = Field(default_factory=DefenderStrategy)
    acc0: float = Field(default=0.7947, ge=0.0, le=1.0)
    wsr0: float = Field(default=0.9039, ge=0.0, le=1.0)
    alpha_true: float = 0.124
    kappa0: float = Field(default=1.0, gt=0.0)
    eps_res_true: float = Field(default=0.0, ge=0.0, lt=1.0)
    heterogeneous_weights: bool = False
    weight_shape: float = Field(default=2.0, gt=0.0)
    """Gamma shape of the heterogeneous clean-weight draw"""

class AttackSpec(BaseModel):
    """Attacker side of one simulated pruning attack"""
    model_config = ConfigDict(frozen=True)

    L: int = Field(default=50, ge=1)
    epsilon: float = Field(default=0.1, ge=0.0, le=1.0)
    noise0: float = Field(default=1.0, ge=0.0)
    tau_discard: float = 0.5
