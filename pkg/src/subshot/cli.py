"""Command line front end.

One subcommand per experiment plus `show-config`.  Settings come from three
layers, later ones winning: built-in defaults, an INI config file (sections
`[defaults]` and `[<experiment>]`, keys named like the long flags), and the
command line flags themselves.  The config file path can also be supplied via
the SUBSHOT_CONFIG environment variable.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from subshot.experiments import (
    EXPERIMENTS,
    ConfigError,
    SweepConfig,
    rows_to_csv,
    rows_to_json,
    run_experiment,
)

CONFIG_ENV_VAR = "SUBSHOT_CONFIG"

# Experiment-specific defaults layered over the SweepConfig ones.
PER_EXPERIMENT_DEFAULTS: dict[str, dict] = {
    "nr-ratio": {},
    "threshold-bias": {},
    "threshold-ratio": {},
    "intensity-sweep": {},
    "asymptotic": {"stage_counts": (3,)},
    "fluctuations": {"mean_photons": 0.5, "stage_counts": (3, 5)},
    "mc-validate": {},
}


def parse_float_grid(text: str) -> tuple[float, ...]:
    """Grid syntax: 'start:stop:num' for a uniform grid or 'a,b,c' literals."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {text!r} must be start:stop:num")
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        if num < 1:
            raise ValueError("grid size must be >= 1")
        return tuple(float(x) for x in np.linspace(start, stop, num))
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


# flag/config key -> (SweepConfig field, parser)
_KEY_MAP = {
    "t-grid": ("t_grid", parse_float_grid),
    "m": ("stage_counts", parse_int_list),
    "mean-n": ("mean_photons", float),
    "mean-grid": ("mean_grid", parse_float_grid),
    "a-grid": ("a_grid", parse_float_grid),
    "t": ("transmission", float),
    "nu": ("nu", int),
    "eta": ("detector_eff", float),
    "eta-stage": ("stage_transmission", float),
    "eta-herald": ("herald_eff", float),
    "optics": ("optics_transmission", float),
    "rounds": ("rounds", int),
    "trials": ("trials", int),
    "redraw": ("redraw", str),
    "negatives": ("negatives", str),
    "seed": ("seed", int),
}


def _apply_keys(cfg: SweepConfig, items: dict[str, str], origin: str) -> SweepConfig:
    updates = {}
    for key, raw in items.items():
        if key not in _KEY_MAP:
            raise ConfigError(key, f"unknown key in {origin}")
        field, parser = _KEY_MAP[key]
        try:
            updates[field] = parser(raw)
        except (TypeError, ValueError) as err:
            raise ConfigError(key, f"invalid value {raw!r} in {origin}: {err}") from err
    return replace(cfg, **updates)


def load_config_file(cfg: SweepConfig, path: str) -> SweepConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError("config", f"cannot read config file {path!r}")
    if parser.has_section("defaults"):
        cfg = _apply_keys(cfg, dict(parser.items("defaults")), f"{path} [defaults]")
    if parser.has_section(cfg.experiment):
        cfg = _apply_keys(
            cfg, dict(parser.items(cfg.experiment)), f"{path} [{cfg.experiment}]"
        )
    return cfg


def resolve_config(experiment: str, args: argparse.Namespace) -> SweepConfig:
    cfg = SweepConfig(experiment=experiment)
    cfg = replace(cfg, **PER_EXPERIMENT_DEFAULTS[experiment])
    config_path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if config_path:
        cfg = load_config_file(cfg, config_path)
    flag_items = {
        key: getattr(args, key.replace("-", "_"))
        for key in _KEY_MAP
        if getattr(args, key.replace("-", "_"), None) is not None
    }
    return _apply_keys(cfg, {k: str(v) for k, v in flag_items.items()}, "command line")


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="INI config file (or set $SUBSHOT_CONFIG)")
    sub.add_argument("--out", help="output path (default: <experiment>.<format>)")
    sub.add_argument(
        "--format", choices=("csv", "json", "both"), default="csv", help="output format"
    )
    for key in _KEY_MAP:
        sub.add_argument(f"--{key}", dest=key.replace("-", "_"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subshot",
        description="Sub-shot-noise transmission measurement sweeps",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    help_lines = {
        "nr-ratio": "MSE ratios vs the shot-noise reference, number-resolving detectors",
        "threshold-bias": "estimator bias across the transmission grid, threshold detectors",
        "threshold-ratio": "MSE ratios vs the shot-noise reference, threshold detectors",
        "intensity-sweep": "MSE ratios vs input mean photon number at fixed transmission",
        "asymptotic": "infinite-repetition relative MSE floor of threshold estimators",
        "fluctuations": "MSE vs Gaussian pump-fluctuation size, with 68% bands",
        "mc-validate": "Monte Carlo cross-check of the exact estimator reports",
    }
    for name in EXPERIMENTS:
        sub = subparsers.add_parser(name, help=help_lines[name])
        _add_common_flags(sub)
    show = subparsers.add_parser("show-config", help="print the resolved configuration")
    show.add_argument("experiment", nargs="?", choices=EXPERIMENTS)
    _add_common_flags(show)
    return parser


def _show_config(args: argparse.Namespace) -> int:
    names = [args.experiment] if args.experiment else list(EXPERIMENTS)
    for name in names:
        cfg = resolve_config(name, args)
        print(f"[{name}]")
        print(f"  eta={cfg.detector_eff} optics={cfg.optics_transmission} "
              f"eta-stage={cfg.stage_transmission} eta-herald={cfg.herald_eff}")
        print(f"  nu={cfg.nu} seed={cfg.seed} mean-n={cfg.mean_photons} t={cfg.transmission}")
        print(f"  t-grid: {len(cfg.t_grid)} points in "
              f"[{cfg.t_grid[0]:g}, {cfg.t_grid[-1]:g}]  m={list(cfg.stage_counts)}")
        if name == "fluctuations":
            print(f"  a-grid={list(cfg.a_grid)} rounds={cfg.rounds} "
                  f"redraw={cfg.redraw} negatives={cfg.negatives}")
        if name == "mc-validate":
            print(f"  trials={cfg.trials}")
        print(f"  config-hash={cfg.digest()}")
    return 0


def _write_outputs(rows, experiment: str, out: str | None, fmt: str) -> list[str]:
    base = Path(out) if out else Path(f"{experiment}.{'csv' if fmt != 'json' else 'json'}")
    written = []
    if fmt in ("csv", "both"):
        path = base if base.suffix == ".csv" or fmt == "csv" else base.with_suffix(".csv")
        path.write_text(rows_to_csv(rows))
        written.append(str(path))
    if fmt in ("json", "both"):
        path = base.with_suffix(".json") if base.suffix != ".json" else base
        path.write_text(rows_to_json(rows))
        written.append(str(path))
    return written


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "show-config":
        return _show_config(args)
    try:
        cfg = resolve_config(args.command, args)
        rows = run_experiment(cfg)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 1
    except (RuntimeError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    try:
        written = _write_outputs(rows, cfg.experiment, args.out, args.format)
    except OSError as err:
        print(f"cannot write output: {err}", file=sys.stderr)
        return 1
    print(f"{cfg.experiment}: {len(rows)} rows -> {', '.join(written)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
