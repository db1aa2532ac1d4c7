import argparse
import logging
import os

from src.cli.utils import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, emit, handle_exceptions
from src.config import settings
from src.models.run_models import RunConfig
from src.services.bench_service import BenchService
from src.services.config_loader import build_sweep_spec, load_config, parse_seeds, with_cli_overrides

logger = logging.getLogger(__name__)


class BenchCommands:
    def __init__(self, max_workers: int = settings.MAX_WORKERS):
        self.max_workers = max_workers

    def _config(self, args: argparse.Namespace) -> RunConfig:
        config = load_config(args.config)
        seeds = parse_seeds(args.seeds) if args.seeds else None
        if args.scenario is not None or seeds is not None:
            config = with_cli_overrides(config, scenario=args.scenario, seeds=seeds)
        return config

    def _service(self, args: argparse.Namespace) -> BenchService:
        return BenchService(self._config(args), args.out, self.max_workers)

    @handle_exceptions
    def solve(self, args: argparse.Namespace) -> int:
        emit(self._service(args).solve())
        return EXIT_OK

    @handle_exceptions
    def simulate(self, args: argparse.Namespace) -> int:
        service = self._service(args)
        curve = service.simulate()
        emit({
            "curve": os.path.join(args.out, service.config.output.curve),
            "rows": len(curve.points),
            "config_hash": service.config_hash,
            "scenario": service.config.scenario,
        })
        return EXIT_OK

    @handle_exceptions
    def fit(self, args: argparse.Namespace) -> int:
        service = self._service(args)
        curve_paths = args.curve or [os.path.join(args.out, service.config.output.curve)]
        outcome = service.fit(curve_paths, args.units)

        emit({
            "reports": [report.csv_row() for report in outcome.reports],
            "failures": [failure.model_dump(mode="json") for failure in outcome.failures],
            "outputs": outcome.paths,
        })
        if not outcome.failures:
            return EXIT_OK
        if all(failure.validation for failure in outcome.failures):
            return EXIT_VALIDATION
        return EXIT_RUNTIME

    @handle_exceptions
    def sweep(self, args: argparse.Namespace) -> int:
        service = self._service(args)
        spec = build_sweep_spec(args.sweep or [], args.mode, service.config)
        rows = service.sweep(spec)
        emit({
            "sweep": os.path.join(args.out, service.config.output.sweep),
            "cells": len(rows),
            "mode": spec.mode,
        })
        return EXIT_OK
