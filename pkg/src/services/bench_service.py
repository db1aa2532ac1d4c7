import itertools
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.errors import WmGameError
from src.models.fit_models import FitReport
from src.models.run_models import RunConfig, SweepSpec
from src.models.sim_models import PruneCurve
from src.services.config_loader import apply_scenario, build_attack_spec, build_model_spec, config_hash, with_overrides
from src.services.curve_fitter import build_report
from src.services.curve_store import (
    read_curve_csv,
    write_curve_csv,
    write_fit_reports_csv,
    write_json,
    write_multiseed_table,
    write_rows_csv,
)
from src.services.game_core import solve_best_response
from src.services.prune_simulator import run_attack_curve

logger = logging.getLogger(__name__)

ANALYTICAL_COLUMNS = [
    "L", "epsilon", "eta", "eps_res", "a", "k_star", "objective",
    "attacker_utility", "defender_utility", "acc_post", "wsr_post", "degenerate",
]
EMPIRICAL_COLUMNS = ["alpha", "a", "eps_res", "r2", "k_star_theory", "k_best_empirical", "wsr_at_k"]


class FitFailure(BaseModel):
    model_config = ConfigDict(frozen=True)

    curve: str
    error: str
    type: str
    validation: bool = False
    """True when the failure came from malformed input rather than the fit itself"""

class FitOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    reports: List[FitReport] = Field(default_factory=list)
    multiseed_rows: List[Dict[str, Any]] = Field(default_factory=list)
    failures: List[FitFailure] = Field(default_factory=list)
    paths: Dict[str, str] = Field(default_factory=dict)

def _sample_std(values: Sequence[float]) -> float:
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0

def _curve_name(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]

def _solve_cell(config: RunConfig) -> Dict[str, Any]:
    defender, game = apply_scenario(config)
    outcome = solve_best_response(defender, game, config.attacker.L_grid, config.attacker.eps_grid)
    return {
        "L": outcome.strategy.L,
        "epsilon": outcome.strategy.epsilon,
        "eta": outcome.eta,
        "eps_res": outcome.eps_res,
        "a": outcome.a,
        "k_star": outcome.k_star,
        "objective": outcome.objective,
        "attacker_utility": outcome.attacker_utility,
        "defender_utility": outcome.defender_utility,
        "acc_post": outcome.acc_post,
        "wsr_post": outcome.wsr_post,
        "degenerate": outcome.degenerate,
    }

def _simulate_fit_cell(config: RunConfig) -> Dict[str, Any]:
    curve = run_attack_curve(build_model_spec(config), build_attack_spec(config), config.attacker.k_grid, config.seeds)
    _, game = apply_scenario(config)
    report = build_report(curve, game, config.fit, name="sweep")
    at_k = curve.value_at(config.fit.report_k)
    return {
        "alpha": report.alpha,
        "a": report.a,
        "eps_res": report.eps_res,
        "r2": report.r2,
        "k_star_theory": report.k_star_theory,
        "k_best_empirical": report.k_best_empirical,
        "wsr_at_k": at_k[1] if at_k else None,
    }

class BenchService:
    """Runs the solve / simulate / fit / sweep commands and writes their outputs."""

    def __init__(self, config: RunConfig, out_dir: str, max_workers: int = 1):
        self.config = config
        self.out_dir = out_dir
        self.max_workers = max_workers
        self.config_hash = config_hash(config)

    def _path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def solve(self) -> Dict[str, Any]:
        """Attacker best response over the configured (L, epsilon) grid."""
        defender, game = apply_scenario(self.config)
        outcome = solve_best_response(defender, game, self.config.attacker.L_grid, self.config.attacker.eps_grid)

        record = outcome.model_dump(mode="json")
        record["scenario"] = self.config.scenario
        record["config_hash"] = self.config_hash

        path = self._path(self.config.output.solution)
        write_json(record, path)
        logger.info(f"Solved best response: k*={outcome.k_star:.6g} (L={outcome.strategy.L}, epsilon={outcome.strategy.epsilon}, degenerate={outcome.degenerate})")
        return record

    def simulate(self) -> PruneCurve:
        """Simulated pruning curve across seeds and the k-grid, plus a metadata sidecar."""
        curve = run_attack_curve(
            build_model_spec(self.config),
            build_attack_spec(self.config),
            self.config.attacker.k_grid,
            self.config.seeds,
            self.max_workers,
        )

        write_curve_csv(curve, self._path(self.config.output.curve))
        write_json(
            {
                "config_hash": self.config_hash,
                "scenario": self.config.scenario,
                "seeds": list(self.config.seeds),
                "k_grid": list(self.config.attacker.k_grid),
                "rows": len(curve.points),
                "simulator": curve.metadata,
            },
            self._path(self.config.output.curve_meta),
        )
        logger.info(f"Wrote {len(curve.points)} curve rows to {self._path(self.config.output.curve)}")
        return curve

    def _fit_one(self, curve: PruneCurve, name: str, outcome: FitOutcome) -> Optional[FitReport]:
        try:
            report = build_report(curve, self.config.game, self.config.fit, name=name)
        except WmGameError as e:
            logger.error(f"Fit failed for {name}: {e}")
            outcome.failures.append(FitFailure(curve=name, error=str(e), type=type(e).__name__))
            return None
        outcome.reports.append(report)
        return report

    def _fit_curve(self, curve: PruneCurve, name: str, outcome: FitOutcome) -> None:
        seeds = curve.seeds()
        if len(seeds) == 1:
            self._fit_one(curve, name, outcome)
            return

        if self.config.fit.per_seed:
            rows = []
            for seed in seeds:
                seed_curve = curve.for_seed(seed)
                report = self._fit_one(seed_curve, f"{name}:seed{seed}", outcome)
                if report is None:
                    continue
                at_k = seed_curve.value_at(self.config.fit.report_k)
                rows.append({"curve": name, "seed": seed, "a": report.a, "r2": report.r2, "wsr_at_k": at_k[1] if at_k else None})

            if rows:
                outcome.multiseed_rows.extend(rows)
                for label, reduce in (("mean", np.mean), ("std", _sample_std)):
                    summary = {"curve": name, "seed": label}
                    for column in ("a", "r2", "wsr_at_k"):
                        values = [row[column] for row in rows if row[column] is not None]
                        summary[column] = float(reduce(values)) if values else None
                    outcome.multiseed_rows.append(summary)

        self._fit_one(curve, f"{name}:pooled", outcome)

    def fit(self, curve_paths: Sequence[str], units: Optional[str] = None) -> FitOutcome:
        """
        Fits every curve file; a failure is recorded and the next curve proceeds.

        Multi-seed curves get one row per seed (when fit.per_seed is set) and a
        pooled row fitted on the seed-averaged points.
        """
        outcome = FitOutcome()
        for path in curve_paths:
            name = _curve_name(path)
            try:
                curve = read_curve_csv(path, units)
            except WmGameError as e:
                logger.error(f"Cannot read {path}: {e}")
                outcome.failures.append(FitFailure(curve=name, error=str(e), type=type(e).__name__, validation=True))
                continue
            self._fit_curve(curve, name, outcome)

        csv_path = self._path(self.config.output.fit_csv)
        json_path = self._path(self.config.output.fit_json)
        write_fit_reports_csv(outcome.reports, csv_path)

        aggregate = {}
        for row in outcome.multiseed_rows:
            if row["seed"] in ("mean", "std"):
                aggregate.setdefault(row["curve"], {})[row["seed"]] = {key: row[key] for key in ("a", "r2", "wsr_at_k")}

        write_json(
            {
                "config_hash": self.config_hash,
                "reports": [report.model_dump(mode="json") for report in outcome.reports],
                "aggregate": aggregate,
                "failures": [failure.model_dump(mode="json") for failure in outcome.failures],
            },
            json_path,
        )
        outcome.paths.update({"csv": csv_path, "json": json_path})

        if outcome.multiseed_rows:
            table_path = self._path(self.config.output.multiseed)
            write_multiseed_table(outcome.multiseed_rows, table_path)
            outcome.paths["multiseed"] = table_path

        logger.info(f"Fitted {len(outcome.reports)} report row(s), {len(outcome.failures)} failure(s)")
        return outcome

    def sweep(self, spec: SweepSpec) -> List[Dict[str, Any]]:
        """
        Cross product of the axis values; one long-format row per cell.

        Analytical cells run the best-response solver, empirical cells
        simulate and fit. Cells are independent and keep their input order.
        """
        keys = [axis.key for axis in spec.axes]
        cells = list(itertools.product(*(axis.values for axis in spec.axes)))
        configs = [with_overrides(self.config, dict(zip(keys, values))) for values in cells]
        cell_fn = _solve_cell if spec.mode == "analytical" else _simulate_fit_cell

        logger.info(f"Sweeping {len(cells)} cell(s) over {', '.join(keys)} ({spec.mode})")
        if self.max_workers > 1 and len(configs) > 1:
            with ProcessPoolExecutor(max_workers=self.max_workers) as executor:
                results = list(executor.map(cell_fn, configs))
        else:
            results = [cell_fn(config) for config in configs]

        rows = [{**dict(zip(keys, values)), **result} for values, result in zip(cells, results)]
        columns = ANALYTICAL_COLUMNS if spec.mode == "analytical" else EMPIRICAL_COLUMNS
        write_rows_csv(rows, keys + columns, self._path(self.config.output.sweep))
        return rows
