import argparse
from typing import List, Optional

from src.cli.commands import BenchCommands
from src.config import settings


class CommandManager:
    def __init__(self, commands: Optional[BenchCommands] = None):
        self.commands = commands or BenchCommands()
        self.parser = argparse.ArgumentParser(
            prog="wmgame",
            description="Watermark-removal game toolkit: analytical best response, pruning simulation and curve fitting",
        )
        self._init_commands()

    def _add_common(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--config", default=None, help="run configuration JSON (defaults when omitted)")
        parser.add_argument("--out", default=settings.OUTPUT_DIR, help="output directory")
        parser.add_argument("--scenario", default=None, choices=["baseline", "few-shot", "data-free"])
        parser.add_argument("--seeds", default=None, help="comma-separated seeds, e.g. 0,1,2")

    def _init_commands(self):
        subparsers = self.parser.add_subparsers(dest="command", required=True)

        solve = subparsers.add_parser("solve", help="attacker best response over the (L, epsilon) grid")
        self._add_common(solve)
        solve.set_defaults(handler=self.commands.solve)

        simulate = subparsers.add_parser("simulate", help="simulated pruning curve across seeds and budgets")
        self._add_common(simulate)
        simulate.set_defaults(handler=self.commands.simulate)

        fit = subparsers.add_parser("fit", help="parameter estimation from curve CSVs")
        self._add_common(fit)
        fit.add_argument("--curve", action="append", default=None, help="curve CSV; repeat for several curves (default: <out>/curve.csv)")
        fit.add_argument("--units", default=None, choices=["percent", "fraction"], help="override the file's units flag")
        fit.set_defaults(handler=self.commands.fit)

        sweep = subparsers.add_parser("sweep", help="one- or two-key parameter sweep")
        self._add_common(sweep)
        sweep.add_argument("--sweep", action="append", default=None, metavar="KEY=V1,V2", help="dotted config key and values; at most two")
        sweep.add_argument("--mode", default="analytical", choices=["analytical", "empirical"])
        sweep.set_defaults(handler=self.commands.sweep)

    def run(self, argv: Optional[List[str]] = None) -> int:
        try:
            args = self.parser.parse_args(argv)
        except SystemExit as e:
            return 0 if e.code in (0, None) else 2
        return args.handler(args)
