"""Command-line entry point: one subcommand per experiment kind plus `verify`."""

import argparse
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from tabulate import tabulate

from shadowlab.config import RUNTIME_CONFIG, resolve_workers
from shadowlab.definitions import ExperimentKind
from shadowlab.errors import EXIT_OK, EXIT_VIOLATION, ScenarioError, ShadowLabError
from shadowlab.harness.acceptance import SUITES, run_verify
from shadowlab.harness.dispatcher import ExperimentDispatcher
from shadowlab.harness.report import FORMATS, emit_report
from shadowlab.harness.scenario import load_scenario

logger = logging.getLogger(__name__)

DEFAULT_CORPUS = Path(__file__).resolve().parent.parent / "scenarios"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shadowlab", description="Numerical laboratory for symplectic shadows.")
    commands = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="Output directory (default: $SHADOWLAB_OUT or results)")
    common.add_argument("--quadrature-order", type=int, default=None)
    common.add_argument("--tol", type=float, default=None, help="Override the scenario tolerance")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--workers", type=int, default=None, help="Worker threads (default: $SHADOWLAB_WORKERS)")
    common.add_argument(
        "--format", action="append", choices=FORMATS, default=None, dest="formats",
        help="Report format; repeat for several (default: all)",
    )

    for kind in ExperimentKind:
        sub = commands.add_parser(kind.value, parents=[common], help=f"Run a {kind.value} scenario")
        sub.add_argument("--config", required=True, help="Scenario JSON file")

    verify = commands.add_parser("verify", parents=[common], help="Run the scenario corpus and the property suites")
    verify.add_argument("--config", default=str(DEFAULT_CORPUS), help="Scenario corpus directory")
    verify.add_argument("--suite", action="append", choices=list(SUITES) + ["determinism"], default=None, dest="suites")
    verify.add_argument("--skip-corpus", action="store_true")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {"tolerance": args.tol, "quadrature_order": args.quadrature_order, "seed": args.seed}


def _print_summary(dispatcher: ExperimentDispatcher):
    headers = ["scenario", "quantity", "t_or_r", "value", "error", "margin", "status"]
    print(tabulate(dispatcher.summarize(), headers=headers, tablefmt="psql", floatfmt=".6g"))


def _run(args: argparse.Namespace) -> int:
    workers = resolve_workers(args.workers)
    defaults = {"seed": RUNTIME_CONFIG["seed"]}
    out_dir = Path(args.out if args.out is not None else RUNTIME_CONFIG["out_dir"])
    formats = args.formats or FORMATS
    dispatcher = ExperimentDispatcher()

    if args.command == "verify":
        seed = args.seed if args.seed is not None else RUNTIME_CONFIG["seed"]
        corpus = None if args.skip_corpus else args.config
        run_verify(corpus, seed, workers, dispatcher, args.suites, defaults, _overrides(args))
    else:
        scenario = load_scenario(args.config, defaults).with_overrides(_overrides(args))
        if scenario.kind.value != args.command:
            raise ScenarioError(f"{args.config} is a {scenario.kind.value} scenario, not {args.command}")
        dispatcher.dispatch(scenario, workers)

    written = emit_report(dispatcher.ledger, out_dir, formats)
    _print_summary(dispatcher)
    for fmt, path in written.items():
        logger.info(f"Wrote {fmt} report to {path}")
    violations = dispatcher.ledger.violations()
    if violations:
        logger.warning(f"{len(violations)} of {len(dispatcher.ledger)} records violate their bound")
        return EXIT_VIOLATION
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(RUNTIME_CONFIG["log_level"]).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return _run(args)
    except ShadowLabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
