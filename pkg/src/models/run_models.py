from typing import Annotated, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.models.fit_models import FitSettings
from src.models.game_models import DefenderStrategy, EtaModelParams, GameParams

ScenarioName = Literal["baseline", "few-shot", "data-free"]

Fraction = Annotated[float, Field(ge=0.0, le=1.0)]

REFERENCE_K_GRID = [0.005, 0.01, 0.015, 0.02, 0.03, 0.05]


class ScenarioPreset(BaseModel):
    """Attack-scenario overrides; numeric values are modeling choices, not measurements"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: ScenarioName
    delta_override: Optional[float] = Field(default=None, ge=0.0)
    """Effective trigger complexity seen by the attacker"""
    eta_overrides: Optional[Dict[str, float]] = None
    """Replacement values for EtaModelParams fields"""
    eps_res_override: Optional[float] = Field(default=None, ge=0.0, lt=1.0)

    @field_validator("eta_overrides")
    @classmethod
    def _known_eta_fields(cls, value: Optional[Dict[str, float]]) -> Optional[Dict[str, float]]:
        if value:
            unknown = sorted(set(value) - set(EtaModelParams.model_fields))
            if unknown:
                raise ValueError(f"unknown eta model fields: {', '.join(unknown)}")
        return value

def default_scenarios() -> Dict[str, ScenarioPreset]:
    return {
        "baseline": ScenarioPreset(name="baseline"),
        "few-shot": ScenarioPreset(name="few-shot", delta_override=0.5),
        "data-free": ScenarioPreset(name="data-free", delta_override=2.0),
    }

class AttackerGrids(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    L: int = Field(default=50, ge=1)
    """Estimation iterations of the simulated attack"""
    epsilon: float = Field(default=0.1, ge=0.0, le=1.0)
    """Exploration factor of the simulated attack"""
    L_grid: List[Annotated[int, Field(ge=1)]] = Field(default_factory=lambda: [50], min_length=1)
    eps_grid: List[Fraction] = Field(default_factory=lambda: [0.1], min_length=1)
    k_grid: List[Fraction] = Field(default_factory=lambda: list(REFERENCE_K_GRID), min_length=1)

class SimulatorSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(default=10000, ge=10)
    alpha_true: float = 0.124
    """Total clean-accuracy mass at risk"""
    kappa0: float = Field(default=1.0, gt=0.0)
    """Fragility scale; kappa = kappa0 * gamma"""
    noise0: float = Field(default=1.0, ge=0.0)
    tau_discard: float = 0.5
    heterogeneous_weights: bool = False
    weight_shape: float = Field(default=2.0, gt=0.0)
    eps_res_true: Optional[float] = Field(default=None, ge=0.0, lt=1.0)
    """Simulated residual; derived from the residual model when unset"""

class OutputPaths(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    solution: str = "solution.json"
    curve: str = "curve.csv"
    curve_meta: str = "curve.meta.json"
    fit_csv: str = "fit_report.csv"
    fit_json: str = "fit_report.json"
    multiseed: str = "multiseed_table.csv"
    sweep: str = "sweep.csv"

class RunConfig(BaseModel):
    """Validated run configuration"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    game: GameParams = Field(default_factory=GameParams)
    defender: DefenderStrategy = Field(default_factory=DefenderStrategy)
    attacker: AttackerGrids = Field(default_factory=AttackerGrids)
    simulator: SimulatorSettings = Field(default_factory=SimulatorSettings)
    fit: FitSettings = Field(default_factory=FitSettings)
    seeds: List[Annotated[int, Field(ge=0)]] = Field(default_factory=lambda: [0, 1, 2, 3, 4], min_length=1)
    scenario: ScenarioName = "baseline"
    scenarios: Dict[ScenarioName, ScenarioPreset] = Field(default_factory=default_scenarios)
    output: OutputPaths = Field(default_factory=OutputPaths)

    @field_validator("seeds")
    @classmethod
    def _distinct_seeds(cls, value: List[int]) -> List[int]:
        if len(set(value)) != len(value):
            raise ValueError("seeds must be distinct")
        return value

    @model_validator(mode="after")
    def _preset_names_match(self) -> "RunConfig":
        for key, preset in self.scenarios.items():
            if preset.name != key:
                raise ValueError(f"scenario table entry '{key}' holds preset named '{preset.name}'")
        return self

    def preset(self) -> ScenarioPreset:
        return self.scenarios.get(self.scenario, ScenarioPreset(name=self.scenario))

class SweepAxis(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    key: str
    """Dotted RunConfig path, e.g. defender.rho"""
    values: List[float] = Field(min_length=1)

class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    axes: List[SweepAxis] = Field(min_length=1, max_length=2)
    mode: Literal["analytical", "empirical"] = "analytical"
