"""Command-line interface: simulate, estimate, montecarlo.

Exit codes: 0 success, 2 usage or input validation, 3 runtime/numerical
failure. Every run echoes its fully resolved configuration to stderr. A JSON
file passed via --config supplies defaults; explicit flags win.
"""

import argparse
import csv
import json
import sys

from . import __version__
from .data import build_ygrid, load_csv, save_csv
from .dgp import generator
from .errors import (
    ConfigError,
    CsvParseError,
    DataValidationError,
    DivlateError,
    SchemaError,
)
from .estimator import estimate, write_curve_csv
from .forest import ForestConfig
from .kan import KanConfig
from .montecarlo import McConfig, run_montecarlo, write_results_csv
from .nuisance import ForestBackend, KanBackend

_BACKENDS = ("kan", "rf")


def _make_backend(name: str, seed: int = 0):
    if name == "kan":
        return KanBackend(KanConfig(seed=seed))
    if name == "rf":
        return ForestBackend(ForestConfig(seed=seed))
    raise ConfigError(f"unknown backend '{name}'; choose from {', '.join(_BACKENDS)}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="divlate",
        description="Distributional IV treatment-effect curves via cross-fitted orthogonal scores.",
    )
    parser.add_argument("--version", action="version", version=f"divlate {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw a synthetic dataset to CSV")
    sim.add_argument("--config", default=None, help="JSON file with flag defaults")
    sim.add_argument("--dgp", type=int, choices=(1, 2), default=None)
    sim.add_argument("--n", type=int, default=None)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", default=None, help="output CSV path")
    sim.add_argument(
        "--latents", default=None,
        help="optional sidecar CSV with complier flag and potential outcomes",
    )

    est = sub.add_parser("estimate", help="estimate the curve from a CSV dataset")
    est.add_argument("--config", default=None, help="JSON file with flag defaults")
    est.add_argument("--data", default=None, help="input CSV path")
    est.add_argument("--outcome", default=None)
    est.add_argument("--treatment", default=None)
    est.add_argument("--instrument", default=None)
    est.add_argument("--covariates", default=None, help="comma-separated column names")
    est.add_argument("--backend", choices=_BACKENDS, default=None)
    est.add_argument("--folds", type=int, default=None)
    est.add_argument("--ygrid-size", type=int, default=None)
    est.add_argument("--ygrid-lo-pct", type=float, default=None)
    est.add_argument("--ygrid-hi-pct", type=float, default=None)
    est.add_argument("--seed", type=int, default=None)
    est.add_argument("--threads", type=int, default=None)
    est.add_argument("--out", default=None, help="output curve CSV path")

    mc = sub.add_parser("montecarlo", help="replicate simulations and report bias/RMSE")
    mc.add_argument("--config", default=None, help="JSON file with flag defaults")
    mc.add_argument("--dgp", type=int, choices=(1, 2), default=None)
    mc.add_argument("--n", type=int, default=None)
    mc.add_argument("--reps", type=int, default=None)
    mc.add_argument("--backends", default=None, help="comma-separated subset of kan,rf")
    mc.add_argument("--folds", type=int, default=None)
    mc.add_argument("--ygrid-size", type=int, default=None)
    mc.add_argument("--seed", type=int, default=None)
    mc.add_argument("--threads", type=int, default=None)
    mc.add_argument("--out", default=None, help="output results CSV path")
    mc.add_argument("--dump-curves", default=None, help="optional JSON dump of per-rep curves")
    return parser


_DEFAULTS = {
    "simulate": {"dgp": 2, "n": 2000, "seed": 0, "out": None, "latents": None},
    "estimate": {
        "data": None,
        "outcome": "y",
        "treatment": "w",
        "instrument": "z",
        "covariates": None,
        "backend": None,
        "folds": 5,
        "ygrid_size": 30,
        "ygrid_lo_pct": 1.0,
        "ygrid_hi_pct": 99.0,
        "seed": 0,
        "threads": 1,
        "out": None,
    },
    "montecarlo": {
        "dgp": 2,
        "n": 2000,
        "reps": 50,
        "backends": "kan,rf",
        "folds": 3,
        "ygrid_size": 30,
        "seed": 0,
        "threads": 1,
        "out": None,
        "dump_curves": None,
    },
}

_REQUIRED = {
    "simulate": ("out",),
    "estimate": ("data", "covariates", "backend", "out"),
    "montecarlo": ("out",),
}


def _resolve(args: argparse.Namespace) -> dict:
    """Merge flags over --config file values over hard defaults."""
    defaults = dict(_DEFAULTS[args.command])
    from_file = {}
    if args.config is not None:
        try:
            with open(args.config) as fh:
                from_file = json.load(fh)
        except OSError as e:
            raise ConfigError(f"cannot read config file: {e}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file is not valid JSON: {e}") from None
        if not isinstance(from_file, dict):
            raise ConfigError("config file must hold a JSON object")
        for key in from_file:
            if key.replace("-", "_") not in defaults:
                raise ConfigError(
                    f"config key '{key}' is not a flag of '{args.command}'"
                )
    resolved = defaults
    for key, val in from_file.items():
        resolved[key.replace("-", "_")] = val
    for key in defaults:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            resolved[key] = flag_val
    for key in _REQUIRED[args.command]:
        if resolved.get(key) is None:
            raise ConfigError(f"--{key.replace('_', '-')} is required")
    return resolved


def _echo_config(command: str, cfg: dict) -> None:
    print(f"divlate {command} config: {json.dumps(cfg, sort_keys=True)}", file=sys.stderr)


def _cmd_simulate(cfg: dict) -> int:
    data, lat = generator(cfg["dgp"])(cfg["n"], cfg["seed"])
    save_csv(data, cfg["out"])
    if cfg["latents"]:
        complier = lat.complier
        with open(cfg["latents"], "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["complier", "y0", "y1"])
            for i in range(data.n):
                writer.writerow(
                    [str(int(complier[i])), repr(float(lat.y0[i])), repr(float(lat.y1[i]))]
                )
    return 0


def _cmd_estimate(cfg: dict) -> int:
    schema = {
        "outcome": cfg["outcome"],
        "treatment": cfg["treatment"],
        "instrument": cfg["instrument"],
        "covariates": [c.strip() for c in str(cfg["covariates"]).split(",") if c.strip()],
    }
    data = load_csv(cfg["data"], schema)
    ygrid = build_ygrid(
        data.y, cfg["ygrid_size"], cfg["ygrid_lo_pct"], cfg["ygrid_hi_pct"]
    )
    backend = _make_backend(cfg["backend"], seed=cfg["seed"])
    curve = estimate(
        data,
        ygrid,
        backend,
        n_folds=cfg["folds"],
        seed=cfg["seed"],
        threads=cfg["threads"],
    )
    write_curve_csv(curve, cfg["out"])
    return 0


def _cmd_montecarlo(cfg: dict) -> int:
    names = [b.strip() for b in str(cfg["backends"]).split(",") if b.strip()]
    backends = [_make_backend(name) for name in names]
    mc_config = McConfig(
        dgp=cfg["dgp"],
        n=cfg["n"],
        reps=cfg["reps"],
        n_folds=cfg["folds"],
        ygrid_size=cfg["ygrid_size"],
        base_seed=cfg["seed"],
    )
    result = run_montecarlo(mc_config, backends, threads=cfg["threads"])
    write_results_csv(result, cfg["out"])
    if cfg["dump_curves"]:
        doc = {
            "levels": result.ygrid.levels.tolist(),
            "truth": result.truth.tolist(),
            "curves": {k: v.tolist() for k, v in result.curves.items()},
            "rep_ids": {k: v.tolist() for k, v in result.rep_ids.items()},
            "n_failed": result.n_failed,
        }
        with open(cfg["dump_curves"], "w") as fh:
            json.dump(doc, fh)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
        _echo_config(args.command, cfg)
        if args.command == "simulate":
            return _cmd_simulate(cfg)
        if args.command == "estimate":
            return _cmd_estimate(cfg)
        return _cmd_montecarlo(cfg)
    except (SchemaError, DataValidationError, CsvParseError, ConfigError) as e:
        print(f"divlate: error: {e}", file=sys.stderr)
        return 2
    except DivlateError as e:
        print(f"divlate: runtime error: {e}", file=sys.stderr)
        return 3
    except Exception as e:  # pragma: no cover - defensive
        print(f"divlate: unexpected error: {e!r}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
