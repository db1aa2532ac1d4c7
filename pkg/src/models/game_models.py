from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class DefenderStrategy(BaseModel):
    """Watermark embedding configuration d = [rho, delta, gamma]"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    rho: float = Field(default=0.008, gt=0.0, le=1.0)
    """Fraction of neurons carrying the watermark"""
    delta: float = Field(default=1.0, ge=0.0)
    """Trigger complexity"""
    gamma: float = Field(default=0.01, gt=0.0, le=1.0)
    """Watermark sample ratio (strength)"""

class AttackerStrategy(BaseModel):
    """Pruning attack configuration a = [k, L, epsilon]"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    k: float = Field(ge=0.0, le=1.0)
    """Pruning budget, fraction of neurons removed"""
    L: int = Field(ge=1)
    """Monte Carlo estimation iterations"""
    epsilon: float = Field(ge=0.0, le=1.0)
    """Exploration factor"""

class EtaModelParams(BaseModel):
    """Coefficients of the per-unit pruning effectiveness model"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    eta0: float = Field(default=1.0, gt=0.0, le=1.0)
    """Saturation ceiling"""
    L_half: float = Field(default=10.0, gt=0.0)
    """Iteration saturation scale"""
    delta_scale: float = Field(default=2.0, gt=0.0)
    rho_scale: float = Field(default=1.0, gt=0.0)
    eps_penalty: float = Field(default=0.5, ge=0.0, le=1.0)
    eta_min: float = Field(default=0.01, gt=0.0, le=1.0)
    """Floor applied after the attenuation factors"""

    @model_validator(mode="after")
    def _check_floor(self) -> "EtaModelParams":
        if self.eta_min > self.eta0:
            raise ValueError(f"eta_min ({self.eta_min}) must not exceed eta0 ({self.eta0})")
        return self

class ResModelParams(BaseModel):
    """Coefficients of the residual watermark rate model"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    eps_max: float = Field(default=0.01, ge=0.0, lt=1.0)
    """Asymptotic residual as trigger complexity grows"""
    delta_res: float = Field(default=1.0, gt=0.0)
    """Complexity scale"""

class GameParams(BaseModel):
    """Scalar constants of the analytical game"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    beta1: float = Field(default=1.0, gt=0.0)
    """Watermark-reliability weight"""
    beta2: float = Field(default=0.1, gt=0.0)
    """Accuracy weight"""
    alpha: float = 0.02
    """Linear accuracy-loss slope; negative when pruning helps accuracy"""
    c: float = Field(default=0.5, gt=0.0)
    """Attacker cost per unit of pruning budget"""
    acc0: float = Field(default=0.7947, ge=0.0, le=1.0)
    wsr0: float = Field(default=0.9039, ge=0.0, le=1.0)
    eta_model: EtaModelParams = Field(default_factory=EtaModelParams)
    res_model: ResModelParams = Field(default_factory=ResModelParams)
    defender_cost_coeffs: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    """Linear embedding cost coefficients (c_rho, c_delta, c_gamma)"""
    k_max: float = Field(default=0.5, gt=0.0, le=1.0)
    """Clipping ceiling for the optimal pruning budget"""
    eps_res_override: Optional[float] = Field(default=None, ge=0.0, lt=1.0)
    """Pins the residual rate instead of deriving it from delta"""

    @field_validator("defender_cost_coeffs")
    @classmethod
    def _non_negative_costs(cls, value: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if any(coeff < 0 for coeff in value):
            raise ValueError("defender cost coefficients must be non-negative")
        return value

    @model_validator(mode="after")
    def _check_weights(self) -> "GameParams":
        if not self.beta1 > self.beta2:
            raise ValueError(f"beta1 ({self.beta1}) must exceed beta2 ({self.beta2})")
        return self

class BestResponseOutcome(BaseModel):
    """Everything the solver derives for one attacker best response"""
    model_config = ConfigDict(frozen=True)

    strategy: AttackerStrategy
    eta: float
    eps_res: float
    a: float
    """Effective decay rate gamma / rho * eta"""
    k_star: float
    objective: float
    """f(k*), the k-dependent part of the attacker utility"""
    attacker_utility: float
    defender_utility: float
    acc_post: float
    wsr_post: float
    degenerate: bool
    """True when pruning is never worth its marginal cost"""
