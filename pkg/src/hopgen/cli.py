"""Command line entry point: ``hopgen run <config>``.

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .experiments import ConfigError, DataError, ExperimentConfig, NumericalError, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("hopgen")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hopgen", description="Conditional generation with weighted stochastic attention.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run the experiment described by a config file (TOML or manifest.json)")
    run.add_argument("config")
    run.add_argument("--rho", type=_float_list, help="comma-separated multiplicity ratios")
    run.add_argument("--beta-mult", type=_float_list, help="comma-separated beta/beta* multipliers")
    run.add_argument("--chains", type=int)
    run.add_argument("--steps", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--mode")
    run.add_argument("--marker-pos", type=int)
    run.add_argument("--marker-res")
    run.add_argument("--out")
    run.add_argument("--workers", type=int)
    run.add_argument("-v", "--verbose", action="store_true")
    return p


_OVERRIDES = {"rho": "rho_list", "beta_mult": "beta_multipliers", "chains": "chains", "steps": "steps",
              "seed": "seed", "mode": "mode", "marker_pos": "marker_position", "marker_res": "marker_residues",
              "out": "output_dir", "workers": "workers"}


def apply_overrides(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    changes = {field: getattr(args, flag) for flag, field in _OVERRIDES.items() if getattr(args, flag) is not None}
    if not changes:
        return cfg
    data = cfg.to_dict()
    data.update(changes)
    if "mode" in changes or "beta_multipliers" in changes:
        data["experiment"] = None  # let the new mode pick its pipeline
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors this way
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = apply_overrides(ExperimentConfig.load(args.config), args)
        log.info("running %s (mode %s) into %s", cfg.experiment, cfg.mode, cfg.output_dir)
        run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"wrote results to {cfg.output_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
