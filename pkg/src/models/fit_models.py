from enum import Enum
from typing import Any, Dict

from pydantic import BaseModel, ConfigDict, Field


class ResidualMode(str, Enum):
    FREE = "free"
    ZERO = "zero"
    AUTO = "auto"

class AlphaSource(str, Enum):
    FITTED = "fitted"
    CONFIG = "config"

class FitSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    k_small_max: float = Field(default=0.05, gt=0.0, le=1.0)
    """Largest budget used for the linear accuracy fit"""
    a_max: float = Field(default=50.0, gt=0.0)
    grid_steps: int = Field(default=2000, ge=2)
    rel_tol: float = Field(default=1e-9, gt=0.0)
    """Relative width at which golden-section refinement stops"""
    residual_mode: ResidualMode = ResidualMode.FREE
    residual_alpha: float = Field(default=0.05, gt=0.0, lt=1.0)
    """F-test level used by the auto residual mode"""
    alpha_source: AlphaSource = AlphaSource.FITTED
    per_seed: bool = True
    """Fit each seed separately in addition to the pooled curve"""
    report_k: float = Field(default=0.05, ge=0.0, le=1.0)
    """Budget at which the multi-seed table reports WSR"""

class AlphaFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float
    """Negated OLS slope of accuracy against k"""
    intercept: float
    stderr: float
    n_points: int

class DecayFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: float
    eps_res: float
    r2: float
    wsr0_anchor: float
    sse: float
    eps_res_clamped: bool = False
    """True when the least-squares offset fell outside [0, W0) and was truncated"""
    a_at_ceiling: bool = False
    """True when the best decay rate sat at a_max, so the true rate may lie beyond the search range"""
    residual_term: bool = True
    """False when the fit was made with eps_res pinned to 0"""

class FitReport(BaseModel):
    """One row of the parameter-estimation table"""
    model_config = ConfigDict(frozen=True)

    curve: str
    alpha: float
    alpha_stderr: float = Field(ge=0.0)
    a: float = Field(ge=0.0)
    eps_res: float = Field(ge=0.0)
    r2: float = Field(le=1.0)
    k_star_theory: float = Field(ge=0.0)
    k_best_empirical: float
    wsr0_anchor: float
    n_points: int
    metadata: Dict[str, Any] = Field(default_factory=dict)

    def csv_row(self) -> Dict[str, Any]:
        return {
            "curve": self.curve,
            "alpha": self.alpha,
            "alpha_stderr": self.alpha_stderr,
            "a": self.a,
            "eps_res": self.eps_res,
            "r2": self.r2,
            "k_star_theory": self.k_star_theory,
            "k_best_empirical": self.k_best_empirical,
            "n_points": self.n_points,
        }
