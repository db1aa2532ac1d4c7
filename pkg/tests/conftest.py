import json
import os

import numpy as np
import pytest

from src.models.game_models import DefenderStrategy, GameParams
from src.models.sim_models import CurvePoint, PruneCurve
from src.models.run_models import REFERENCE_K_GRID

FIXTURES_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "fixtures")


def fixture_path(*parts: str) -> str:
    return os.path.join(FIXTURES_DIR, *parts)

def make_curve(ks, acc, wsr, seed: int = 0) -> PruneCurve:
    points = [CurvePoint(k=float(k), acc=float(a), wsr=float(w), seed=seed) for k, a, w in zip(ks, acc, wsr)]
    return PruneCurve(points=points)

def decay_curve(alpha: float, a: float, eps_res: float, acc0: float = 0.7947, wsr0: float = 0.9039) -> PruneCurve:
    ks = np.array([0.0] + REFERENCE_K_GRID)
    acc = acc0 - alpha * ks
    wsr = (wsr0 - eps_res) * np.exp(-a * ks) + eps_res
    return make_curve(ks, acc, wsr)

def write_config(tmp_path, payload) -> str:
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)

@pytest.fixture
def default_params() -> GameParams:
    return GameParams()

@pytest.fixture
def default_defender() -> DefenderStrategy:
    return DefenderStrategy()

@pytest.fixture
def reference_curve() -> PruneCurve:
    return make_curve([0.0, 0.03, 0.05], [0.7947, 0.79098, 0.7885], [0.9039, 0.8718, 0.8504])
