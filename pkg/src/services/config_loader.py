import hashlib
import json
import logging
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from pydantic import ValidationError

from src.errors import ConfigError
from src.models.game_models import DefenderStrategy, EtaModelParams, GameParams
from src.models.run_models import RunConfig, SweepAxis, SweepSpec
from src.models.sim_models import AttackSpec, ModelSpec
from src.services.game_core import effective_residual

logger = logging.getLogger(__name__)


def format_key_path(loc: Sequence[Any]) -> str:
    """('attacker', 'k_grid', 0) -> 'attacker.k_grid[0]'"""
    path = ""
    for part in loc:
        if isinstance(part, int):
            path += f"[{part}]"
        else:
            path += f".{part}" if path else str(part)
    return path

def _raise_first(e: ValidationError) -> None:
    detail = e.errors()[0]
    raise ConfigError(detail["msg"], key_path=format_key_path(detail["loc"]) or None) from e

def parse_config(data: Mapping[str, Any]) -> RunConfig:
    if not isinstance(data, Mapping):
        raise ConfigError("configuration must be a JSON object")
    try:
        config = RunConfig.model_validate(dict(data))
    except ValidationError as e:
        _raise_first(e)

    for i, k in enumerate(config.attacker.k_grid):
        if k > config.game.k_max:
            raise ConfigError(f"budget {k} exceeds game.k_max={config.game.k_max}", key_path=f"attacker.k_grid[{i}]")
    return config

def load_config(path: Optional[str]) -> RunConfig:
    """
    Reads and validates a run configuration; None yields the defaults.

    Raises:
        ConfigError: for unreadable files, malformed JSON and schema or range
            violations, naming the offending key path where there is one.
    """
    if path is None:
        return parse_config({})

    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e.strerror}")

    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")

    config = parse_config(data)
    logger.info(f"Loaded config {path} (scenario={config.scenario}, seeds={config.seeds})")
    return config

def with_cli_overrides(config: RunConfig, scenario: Optional[str] = None, seeds: Optional[List[int]] = None) -> RunConfig:
    data = config.model_dump(mode="json")
    if scenario is not None:
        data["scenario"] = scenario
    if seeds is not None:
        data["seeds"] = seeds
    return parse_config(data)

def parse_seeds(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got '{text}'", key_path="seeds")

def config_hash(config: RunConfig) -> str:
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

def apply_scenario(config: RunConfig) -> Tuple[DefenderStrategy, GameParams]:
    """Defender and game parameters as the selected preset leaves them; baseline changes nothing."""
    preset = config.preset()
    defender = config.defender
    game = config.game

    if preset.delta_override is not None:
        defender = DefenderStrategy.model_validate({**defender.model_dump(), "delta": preset.delta_override})

    updates: Dict[str, Any] = {}
    if preset.eta_overrides:
        updates["eta_model"] = EtaModelParams.model_validate({**game.eta_model.model_dump(), **preset.eta_overrides})
    if preset.eps_res_override is not None:
        updates["eps_res_override"] = preset.eps_res_override
    if updates:
        game = GameParams.model_validate({**game.model_dump(), **updates})

    return defender, game

def build_model_spec(config: RunConfig) -> ModelSpec:
    defender, game = apply_scenario(config)
    sim = config.simulator
    eps_res_true = sim.eps_res_true if sim.eps_res_true is not None else effective_residual(defender, game)
    return ModelSpec(
        n=sim.n,
        defender=defender,
        acc0=game.acc0,
        wsr0=game.wsr0,
        alpha_true=sim.alpha_true,
        kappa0=sim.kappa0,
        eps_res_true=eps_res_true,
        heterogeneous_weights=sim.heterogeneous_weights,
        weight_shape=sim.weight_shape,
    )

def build_attack_spec(config: RunConfig) -> AttackSpec:
    return AttackSpec(
        L=config.attacker.L,
        epsilon=config.attacker.epsilon,
        noise0=config.simulator.noise0,
        tau_discard=config.simulator.tau_discard,
    )

def with_overrides(config: RunConfig, overrides: Mapping[str, Any]) -> RunConfig:
    """
    Returns a revalidated copy with dotted scalar keys replaced.

    Raises:
        ConfigError: when a key does not name a scalar field of the config.
    """
    data = config.model_dump(mode="json")
    for key, value in overrides.items():
        parts = key.split(".")
        node = data
        for part in parts[:-1]:
            if not isinstance(node, dict) or not isinstance(node.get(part), dict):
                raise ConfigError("unknown config key", key_path=key)
            node = node[part]
        leaf = parts[-1]
        if leaf not in node or isinstance(node[leaf], (dict, list)):
            raise ConfigError("unknown config key", key_path=key)
        node[leaf] = value
    return parse_config(data)

def parse_sweep_axis(text: str) -> SweepAxis:
    """'defender.rho=0.004,0.008' -> SweepAxis"""
    key, sep, raw_values = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"expected key=v1,v2,... got '{text}'", key_path="sweep")
    try:
        values = [float(part) for part in raw_values.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"sweep values must be numbers, got '{raw_values}'", key_path=key)
    try:
        return SweepAxis(key=key, values=values)
    except ValidationError as e:
        raise ConfigError("sweep needs at least one value", key_path=key) from e

def build_sweep_spec(axes: Iterable[str], mode: str, config: RunConfig) -> SweepSpec:
    """Parses the axes and checks every key against the config before any cell runs."""
    try:
        spec = SweepSpec(axes=[parse_sweep_axis(text) for text in axes], mode=mode)
    except ValidationError as e:
        _raise_first(e)
    for axis in spec.axes:
        with_overrides(config, {axis.key: axis.values[0]})
    return spec
