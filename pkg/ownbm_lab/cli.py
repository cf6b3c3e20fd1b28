"""
Command line interface for OWNBM Lab.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from ownbm_lab import __version__
from ownbm_lab.core.config import (
    ORACLE_METHODS,
    PIPELINES,
    ExperimentConfig,
    GeneratorConfig,
    WeightSpec,
)
from ownbm_lab.core.generators import generate
from ownbm_lab.core.harness import format_summary, load_summary, run_experiment
from ownbm_lab.core.model import (
    EDGE_MODE,
    InvariantError,
    ValidationReport,
    audit_deadlines,
    validate_matching,
    validate_semi_matching,
    validate_three_matching,
)
from ownbm_lab.core.oracle import opt, vertex_reduction
from ownbm_lab.utils.instance_io import (
    load_instance,
    read_run_log,
    save_instance,
)


def create_parser() -> argparse.ArgumentParser:
    """Create and configure the argument parser."""
    parser = argparse.ArgumentParser(
        prog="ownbm-lab",
        description="Online windowed matching: generate instances, run pipelines, measure ratios",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write generated instance files")
    gen.add_argument("--gen", help="generator spec, e.g. random:n=8,d=2,p=0.5")
    gen.add_argument("--kind", default="random")
    gen.add_argument("--n", type=int)
    gen.add_argument("--d", type=int)
    gen.add_argument("--mode", default=EDGE_MODE)
    gen.add_argument("--density", "-p", type=float, default=0.5)
    gen.add_argument("--weights", default="uniform:1:10")
    gen.add_argument("--detour", type=float, default=1.5)
    gen.add_argument("--max-rider-detour", type=float)
    gen.add_argument("--eps", type=float, default=1e-3)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--count", type=int, default=1, help="instances with seeds seed..seed+count-1")
    gen.add_argument("--out", default=".", help="output directory")

    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("--config", help="experiment YAML file")
    run.add_argument("--instance", action="append", default=[])
    run.add_argument("--gen", action="append", default=[])
    run.add_argument("--pipeline", choices=PIPELINES)
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--strict", action="store_true", default=None)
    run.add_argument("--save-logs", action="store_true", default=None)
    run.add_argument("--oracle-method", choices=ORACLE_METHODS)
    run.add_argument("--confidence", type=float)

    oracle = sub.add_parser("oracle", help="print the offline optimum of an instance")
    oracle.add_argument("instance")
    oracle.add_argument("--method", choices=ORACLE_METHODS, default="auto")
    oracle.add_argument("--edge-cap", type=int, default=26)
    oracle.add_argument("--json", action="store_true")

    validate = sub.add_parser("validate", help="check an instance file and optionally a run log")
    validate.add_argument("instance")
    validate.add_argument("--run-log")

    report = sub.add_parser("report", help="render aggregates from report.json or trials.csv")
    report.add_argument("path")
    report.add_argument("--confidence", type=float, default=0.95)

    return parser


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def cmd_generate(args: argparse.Namespace) -> int:
    if args.gen:
        base = GeneratorConfig.from_spec(args.gen)
    else:
        base = GeneratorConfig(
            kind=args.kind,
            n=args.n,
            d=args.d,
            mode=args.mode,
            density=args.density,
            weights=WeightSpec.parse(args.weights),
            detour=args.detour,
            max_rider_detour=args.max_rider_detour,
            eps=args.eps,
            seed=args.seed,
        )
    if base.is_adversarial and args.count > 1:
        raise ValueError(f"'{base.kind}' is a fixed instance; use --count 1")
    out = Path(args.out)
    for k in range(args.count):
        config = GeneratorConfig.from_dict({**base.to_dict(), "seed": base.seed + k})
        path = save_instance(generate(config), out / f"{config.label}.json")
        print(f"Wrote {path}")
    return 0


def build_experiment(args: argparse.Namespace) -> ExperimentConfig:
    """Config file values, overridden by any flag given."""
    cfg = ExperimentConfig.from_yaml_file(args.config) if args.config else ExperimentConfig()
    for path in args.instance:
        cfg.add_instance(path)
    for spec in args.gen:
        cfg.add_generator(spec)
    overrides = {
        "pipeline": args.pipeline,
        "trials": args.trials,
        "seed": args.seed,
        "out_dir": args.out,
        "strict": args.strict,
        "save_logs": args.save_logs,
        "confidence": args.confidence,
    }
    data = {**cfg.to_dict(), "out_dir": cfg.out_dir, "save_logs": cfg.save_logs}
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.oracle_method:
        data["oracle"] = {**data["oracle"], "method": args.oracle_method}
    return ExperimentConfig.from_dict(data)


def cmd_run(args: argparse.Namespace) -> int:
    cfg = build_experiment(args)
    errors = cfg.validate()
    if errors:
        for error in errors:
            print(f"Error: {error}")
        return 1

    try:
        report = run_experiment(cfg)
    except InvariantError as e:
        if e.report is not None:
            paths = e.report.write(cfg.out_dir)
            print(f"Report written to {paths['report']}")
        print(f"Error: {e}")
        return 1

    paths = report.write(cfg.out_dir)
    print(format_summary(report.summary))
    print(f"Report written to {paths['report']}, trials to {paths['trials']}")
    if report.violation_count:
        print(f"Warning: {report.violation_count} invariant violations recorded")
        return 1
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    result = opt(inst, method=args.method, edge_cap=args.edge_cap)
    if args.json:
        print(json.dumps(result.to_dict(), sort_keys=True))
    else:
        print(f"{result.weight:g}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    print(
        f"{args.instance}: valid {inst.weight_mode}-mode instance, "
        f"n={inst.n}, d={inst.d}, {inst.edge_count} edges"
    )
    if not args.run_log:
        return 0

    log = read_run_log(args.run_log)
    checked = inst
    if log.pipeline == EDGE_MODE and inst.weight_mode != EDGE_MODE:
        checked = vertex_reduction(inst)
    report = validate_semi_matching(checked, log.semi_matching)
    if log.matching is not None:
        report = report.merge(validate_matching(checked, log.matching))
    if log.three_matching is not None:
        report = report.merge(validate_three_matching(checked, log.three_matching))
    report = report.merge(audit_deadlines(checked, log.events))
    return _print_report(args.run_log, report)


def _print_report(label: str, report: ValidationReport) -> int:
    if report.ok:
        print(f"{label}: ok")
        return 0
    for violation in report.violations:
        print(f"{label}: {violation}")
    return 1


def cmd_report(args: argparse.Namespace) -> int:
    print(format_summary(load_summary(args.path, confidence=args.confidence)))
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "oracle": cmd_oracle,
    "validate": cmd_validate,
    "report": cmd_report,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the CLI."""
    parser = create_parser()
    args: argparse.Namespace = parser.parse_args(argv)
    configure_logging(args.verbose)

    try:
        return COMMANDS[args.command](args)
    except (FileNotFoundError, ValueError, RuntimeError) as e:
        print(f"Error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
