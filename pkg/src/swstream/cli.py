"""Command-line front end: exponent curves, simulations, verification suites.

Exit codes: 0 success, 1 verification failure, 2 usage/config error.
All numbers are computed in nats; `--units bits` rescales at format time.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import sys
import time
from pathlib import Path

from . import __version__
from .codec import BinningSchedule
from .exponents import CURVE_HEADER, RatePair, curve_row, format_curve_row
from .info_core import JointDistribution
from .sim import TrialConfig, fit_exponent, fit_to_json, run_trials, stats_to_csv
from .verify import SUITES, run_suite

LN2 = math.log(2.0)

EXAMPLE_1_JSON = {
    "alphabet_x": 2,
    "alphabet_y": 2,
    "probs": [[0.45, 0.05], [0.05, 0.45]],
}
EXAMPLE_2_JSON = {
    "alphabet_x": 2,
    "alphabet_y": 2,
    "probs": [[0.1, 0.05], [0.05, 0.8]],
}


class ConfigError(Exception):
    """Malformed user input; mapped to exit code 2."""


def _parse_grid(spec: str):
    """`a:b:step` sweeps inclusive of both ends (within step/2); `v` is a
    single value."""
    parts = spec.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) == 3:
            a, b, step = (float(p) for p in parts)
            if step <= 0 or b < a:
                raise ValueError
            out = []
            v = a
            while v <= b + step / 2:
                out.append(round(v, 12))
                v += step
            return out
    except ValueError:
        pass
    raise ConfigError(f"bad rate grid {spec!r}; expected 'v' or 'a:b:step'")


def _load_source(path: str) -> JointDistribution:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read source file: {e}") from e
    try:
        return JointDistribution.from_json(text)
    except (KeyError, ValueError, json.JSONDecodeError) as e:
        raise ConfigError(f"bad source config {path}: {e}") from e


def _write_manifest(out_dir: Path, command: str, config: dict, seed,
                    outputs, started: float) -> Path:
    manifest = {
        "command": command,
        "config": config,
        "version": __version__,
        "seed": seed,
        "outputs": [str(p) for p in outputs],
        "duration_s": round(time.monotonic() - started, 3),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _curve_worker(args):
    source_json, rx, ry = args
    d = JointDistribution.from_json(source_json)
    return curve_row(d, RatePair(rx, ry))


def _compute_curve(d: JointDistribution, rx_grid, ry_grid, threads: int):
    points = [(d.to_json(), rx, ry) for ry in ry_grid for rx in rx_grid]
    if threads > 1 and len(points) > 8:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_curve_worker, points, chunksize=4))
    return [_curve_worker(p) for p in points]


def cmd_exponents(args) -> int:
    started = time.monotonic()
    d = _load_source(args.source)
    rx_grid = _parse_grid(args.rx)
    ry_grid = _parse_grid(args.ry) if args.ry is not None else [0.0]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = _compute_curve(d, rx_grid, ry_grid, args.threads)
    scale = LN2 if args.units == "bits" else 1.0
    csv_path = out_dir / "exponents.csv"
    lines = [CURVE_HEADER] + [format_curve_row(r, scale) for r in rows]
    csv_path.write_text("\n".join(lines) + "\n")
    _write_manifest(
        out_dir,
        "exponents",
        {
            "source": json.loads(d.to_json()),
            "rx": args.rx,
            "ry": args.ry,
            "units": args.units,
            "threads": args.threads,
        },
        args.seed,
        [csv_path],
        started,
    )
    print(f"wrote {csv_path} ({len(rows)} rate points)")
    return 0


def _load_trial_config(path: str, seed_override) -> TrialConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read trial config: {e}") from e
    try:
        source = JointDistribution.from_json(json.dumps(obj["source"]))
        schedule_x = BinningSchedule(tuple(obj["schedule_x"]))
        schedule_y = (
            BinningSchedule(tuple(obj["schedule_y"]))
            if obj.get("schedule_y") else None
        )
        base_seed = int(obj["base_seed"]) if seed_override is None else seed_override
        return TrialConfig(
            source=source,
            schedule_x=schedule_x,
            schedule_y=schedule_y,
            n=int(obj["n"]),
            delays=tuple(int(v) for v in obj["delays"]),
            trials=int(obj["trials"]),
            base_seed=base_seed,
            decoder=str(obj["decoder"]),
        )
    except KeyError as e:
        raise ConfigError(f"trial config missing field {e}") from e
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad trial config: {e}") from e


def cmd_simulate(args) -> int:
    started = time.monotonic()
    cfg = _load_trial_config(args.config, args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stats = run_trials(cfg, threads=args.threads)
    fit = fit_exponent(stats)
    stats_path = out_dir / "stats.csv"
    fit_path = out_dir / "fit.json"
    stats_path.write_text(stats_to_csv(stats))
    fit_path.write_text(fit_to_json(fit))
    _write_manifest(
        out_dir,
        "simulate",
        {
            "config_path": args.config,
            "base_seed": cfg.base_seed,
            "trials": cfg.trials,
            "decoder": cfg.decoder,
            "threads": args.threads,
        },
        cfg.base_seed,
        [stats_path, fit_path],
        started,
    )
    if stats.aborted:
        print(f"warning: {stats.aborted} trials aborted at the candidate cap")
    print(f"wrote {stats_path} and {fit_path}")
    return 0


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        print(
            f"unknown suite {args.suite!r}; choose from: {', '.join(sorted(SUITES))}",
            file=sys.stderr,
        )
        return 2
    checks = run_suite(args.suite)
    failed = 0
    for name, ok, detail in checks:
        tag = "PASS" if ok else "FAIL"
        print(f"{tag} {name}: {detail}")
        if not ok:
            failed += 1
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else 1


def _reproduce(args, example_json: dict, ry_values, label: str) -> int:
    started = time.monotonic()
    d = JointDistribution.from_json(json.dumps(example_json))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rx_grid = _parse_grid("0.30:1.05:0.01")
    outputs = []
    for ry in ry_values:
        rows = _compute_curve(d, rx_grid, [ry], args.threads)
        scale = LN2 if args.units == "bits" else 1.0
        path = out_dir / f"{label}_ry{ry:g}.csv"
        lines = [CURVE_HEADER] + [format_curve_row(r, scale) for r in rows]
        path.write_text("\n".join(lines) + "\n")
        outputs.append(path)
        print(f"wrote {path}")
    _write_manifest(
        out_dir,
        label,
        {"source": example_json, "ry_values": list(ry_values), "units": args.units},
        args.seed,
        outputs,
        started,
    )
    return 0


def cmd_reproduce_example1(args) -> int:
    return _reproduce(args, EXAMPLE_1_JSON, (0.49, 0.67), "example1")


def cmd_reproduce_example2(args) -> int:
    return _reproduce(args, EXAMPLE_2_JSON, (0.35, 0.49), "example2")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swstream",
        description="Streaming random-binning source coding: exponents, "
        "simulations, verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--units", choices=("nats", "bits"), default="nats")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        p.add_argument("--out", default="out")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("exponents", help="compute exponent curves over a rate grid")
    p.add_argument("source", help="JSON source distribution file")
    p.add_argument("--rx", required=True, help="rate grid 'a:b:step' or value, nats")
    p.add_argument("--ry", default=None, help="rate grid or value, nats")
    common(p)
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("simulate", help="Monte Carlo error-vs-delay run")
    p.add_argument("config", help="JSON trial configuration file")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run a self-check suite")
    p.add_argument("suite", help="one of: " + ", ".join(sorted(SUITES)))
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reproduce-example1", help="canned curves for the symmetric source")
    common(p)
    p.set_defaults(func=cmd_reproduce_example1)

    p = sub.add_parser("reproduce-example2", help="canned curves for the skewed source")
    common(p)
    p.set_defaults(func=cmd_reproduce_example2)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
