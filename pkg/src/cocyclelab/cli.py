"""Command line batch runner: ``cocyclelab <subcommand> [options]``.

Every run resolves a configuration (built-in defaults, then a YAML file given
with ``--config``, then explicit flags), hashes it, and writes CSV/JSON
artifacts that carry the hash and the tool version.  No timestamps or host
information go into artifacts, so a rerun with the same configuration
reproduces them byte for byte.

Exit codes: 0 on completion (verdicts are data), 1 when ``--assert-expected``
finds a mismatch with the catalog, 2 for a bad configuration, 3 for runtime
failures such as an exhausted symbolic window.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, catalog
from .dynamics import Subshift, TorusPoint, TwistMap
from .exceptions import (
    CocycleLabError,
    DimensionMismatch,
    EmptySample,
    InvalidParameter,
    InvalidSpectrumShape,
    SplittingUnresolved,
    WindowExhausted,
    WordTooLong,
)
from .io import config_hash, load_config, render_csv, render_json, write_text
from .lyapunov import check_schedule, geometric_schedule
from .regularity import (
    IRREGULAR,
    ProbeConfig,
    common_exponent,
    oscillation_witness,
    probe_complete_regularity,
)
from .splitting import (
    DominationConfig,
    _domination_from_table,
    estimate_oseledets,
    estimate_sacker_sell,
    log_sv_table,
)

ENV_OUTPUT = "COCYCLELAB_OUTPUT_DIR"
COMMANDS = ("spectrum", "gap", "dominate", "oseledets", "sacker-sell", "regularity", "complete", "witness")

DEFAULTS = {
    "example": None,
    "points": None,
    "seed": 0,
    "level": 6,
    "n": 4096,
    "schedule": None,
    "k": None,
    "tol": 0.02,
    "grid_step": 0.02,
    "dims": None,
    "alpha": 0.1,
    "beta": None,
    "margin": None,
    "sample_y": None,
    "block": 16,
    "output_dir": None,
    "assert_expected": False,
}

BAD_CONFIG = (InvalidParameter, InvalidSpectrumShape, EmptySample, DimensionMismatch)
RUNTIME = (WindowExhausted, WordTooLong)


class ConfigError(Exception):
    pass


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML file of key: value settings (flags override it)")
    p.add_argument("--example", help="catalog example name (see `catalog list`)")
    p.add_argument("--points", type=int, help="number of sample points")
    p.add_argument("--seed", type=int)
    p.add_argument("--level", type=int, help="word level of the symbolic window (walters)")
    p.add_argument("--n", type=int, help="horizon")
    p.add_argument("--schedule", help="comma separated horizons (default: powers of two up to --n)")
    p.add_argument("--k", type=int, help="splitting index")
    p.add_argument("--tol", type=float)
    p.add_argument("--grid-step", type=float, dest="grid_step")
    p.add_argument("--dims", help="comma separated bundle dimensions for oseledets")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float, help="default: common top exponent minus 0.05")
    p.add_argument("--margin", type=int, help="minimum distance of symbolic origins from the window ends")
    p.add_argument("--sample-y", dest="sample_y", help="comma separated heights y for twist_diagonal")
    p.add_argument("--block", type=int)
    p.add_argument("--output-dir", dest="output_dir", help=f"artifact directory (default ${ENV_OUTPUT} or .)")
    p.add_argument("--assert-expected", dest="assert_expected", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cocyclelab", description="Numerical diagnostics for linear cocycles.")
    parser.add_argument("--version", action="version", version=f"cocyclelab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _add_run_options(sub.add_parser(name))
    cat = sub.add_parser("catalog", help="list, describe or export the example catalog")
    cat.add_argument("action", choices=("list", "describe", "export"))
    cat.add_argument("name", nargs="?")
    cat.add_argument("--output-dir", dest="output_dir")
    return parser


def _int_list(value, key):
    if value is None:
        return None
    if isinstance(value, str):
        parts = [v for v in value.replace(" ", "").split(",") if v]
    else:
        parts = list(value)
    try:
        return [int(v) for v in parts]
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a list of integers, got {value!r}") from None


def _fraction_list(value, key):
    if value is None:
        return None
    parts = value.replace(" ", "").split(",") if isinstance(value, str) else list(value)
    try:
        return [Fraction(str(v)) for v in parts if str(v)]
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{key} must be a list of numbers, got {value!r}") from None


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        file_cfg = load_config(args.config)
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(file_cfg)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if not cfg["example"]:
        raise ConfigError("no example given (use --example or the config file)")
    if cfg["example"] not in catalog.REGISTRY:
        raise ConfigError(f"unknown example {cfg['example']!r}; known: {', '.join(catalog.names())}")
    for key in ("n", "seed", "level", "block"):
        if not isinstance(cfg[key], int) or isinstance(cfg[key], bool):
            raise ConfigError(f"{key} must be an integer")
    if cfg["n"] < 2:
        raise ConfigError("n must be >= 2")
    if cfg["points"] is not None and (not isinstance(cfg["points"], int) or cfg["points"] < 1):
        raise ConfigError("points must be a positive integer")
    cfg["schedule"] = _int_list(cfg["schedule"], "schedule")
    cfg["dims"] = _int_list(cfg["dims"], "dims")
    ys = _fraction_list(cfg["sample_y"], "sample_y")
    cfg["sample_y"] = None if ys is None else [str(y) for y in ys]
    cfg["assert_expected"] = bool(cfg["assert_expected"])
    return cfg


def _example(cfg) -> catalog.NamedExample:
    if cfg["example"] == "walters":
        return catalog.walters_cocycle(cfg["level"])
    return catalog.get(cfg["example"])


def _sample(ex: catalog.NamedExample, cfg) -> list:
    if cfg["sample_y"] is not None:
        if not isinstance(ex.system, TwistMap):
            raise ConfigError("--sample-y only applies to the twist map")
        return [TorusPoint(Fraction(1, 3), Fraction(y)) for y in cfg["sample_y"]]
    margin = cfg["margin"]
    if margin is None:
        margin = cfg["n"] if isinstance(ex.system, Subshift) else 0
    if cfg["points"] is None and ex.points is not None:
        return list(ex.points)
    return ex.sample(cfg["points"] or ex.sample_count, cfg["seed"], margin)


def _schedule(cfg) -> list[int]:
    if cfg["schedule"]:
        return check_schedule(cfg["schedule"])
    return geometric_schedule(cfg["n"])


def _point_cols(pts) -> list[str]:
    out = []
    for p in pts:
        js = p.to_json()
        out.append(";".join(f"{k}={v}" for k, v in js.items() if k != "type"))
    return out


# ---------------------------------------------------------------------------
# subcommands; each returns (csv_table or None, json_payload or None, stdout lines)


def run_spectrum(ex, pts, cfg):
    sched = _schedule(cfg)
    L = ex.cocycle.log_svd_paths(pts, sched, cfg["block"]) / np.array(sched, float)[None, :, None]
    d = ex.dim
    cols = ["n"] + [f"chi{i + 1}" for i in range(d)] + ["point"]
    rows = [[n] + [float(v) for v in L[s, t]] + [s] for s in range(len(pts)) for t, n in enumerate(sched)]
    final = L[:, -1, :]
    payload = {
        "points": _point_cols(pts),
        "final": [[float(v) for v in row] for row in final],
        "schedule": sched,
    }
    lines = [f"point {s}: " + " ".join(f"{v:+.6f}" for v in final[s]) for s in range(len(pts))]
    return (cols, rows), payload, lines


def run_gap(ex, pts, cfg):
    k = cfg["k"] or 1
    if not 1 <= k < ex.dim:
        raise InvalidParameter(f"k must lie in 1..{ex.dim - 1}")
    sched = _schedule(cfg)
    L = log_sv_table(ex.cocycle, pts, sched, cfg["block"])
    G = np.maximum((L[:, :, k - 1] - L[:, :, k]) / np.array(sched, float), 0.0)
    rows = [[s, n, float(G[s, t])] for s in range(len(pts)) for t, n in enumerate(sched)]
    mins = G.min(axis=1)
    best = int(np.argmin(mins))
    payload = {
        "k": k,
        "schedule": sched,
        "points": _point_cols(pts),
        "liminf_gap": [float(v) for v in mins],
        "min_gap": float(mins.min()),
        "median_min_gap": float(np.median(mins)),
        "best_point": best,
    }
    lines = [f"k={k}: min gap {mins.min():.6g} at point {best}; median {np.median(mins):.6g}"]
    return (["point", "n", "gap"], rows), payload, lines


def run_dominate(ex, pts, cfg):
    sched = _schedule(cfg)
    L = log_sv_table(ex.cocycle, pts, sched, cfg["block"])
    ks = [cfg["k"]] if cfg["k"] else list(range(1, ex.dim))
    verdicts = [_domination_from_table(L, sched, k, DominationConfig(block=cfg["block"])) for k in ks]
    payload = {"schedule": sched, "verdicts": [v.to_json() for v in verdicts],
               "dominated_indices": [v.k for v in verdicts if v.dominated]}
    lines = [f"k={v.k}: dominated={v.dominated} rate={v.rate:.6g} offset={v.log_offset:.6g}" for v in verdicts]
    return None, payload, lines


def run_oseledets(ex, pts, cfg):
    dims = cfg["dims"] or [1] * ex.dim
    out, lines = [], []
    for s, x in enumerate(pts):
        try:
            est = estimate_oseledets(ex.cocycle, x, cfg["n"], dims, block=cfg["block"])
        except SplittingUnresolved as err:
            out.append({"point": x.to_json(), "unresolved": str(err)})
            lines.append(f"point {s}: unresolved ({err})")
            continue
        out.append(est.to_json())
        lines.append(f"point {s}: exponents " + " ".join(f"{v:+.6f}" for v in est.exponents)
                     + f" min angle {est.min_angle:.4g}")
    return None, {"n": cfg["n"], "dims": list(dims), "estimates": out}, lines


def run_sacker_sell(ex, pts, cfg):
    est = estimate_sacker_sell(ex.cocycle, pts, schedule=_schedule(cfg),
                               config=DominationConfig(block=cfg["block"]), grid_step=cfg["grid_step"])
    lines = [f"[{a:+.4f}, {b:+.4f}]" for a, b in est.intervals]
    return None, est.to_json(), lines


def run_regularity(ex, pts, cfg):
    rep = probe_complete_regularity(ex.cocycle, pts, cfg["n"], ProbeConfig(tol=cfg["tol"], block=cfg["block"]))
    lines = [r.summary_line() for r in rep.reports]
    lines.append(f"spread={rep.spectrum_spread:.6g} deficit={rep.uniformity_deficit:.6g} -> {rep.verdict}")
    return None, rep.to_json(), lines


def run_complete(ex, pts, cfg):
    rep = probe_complete_regularity(ex.cocycle, pts, cfg["n"], ProbeConfig(tol=cfg["tol"], block=cfg["block"]))
    counts = rep.verdict_counts()
    lines = [f"{rep.verdict}: spread={rep.spectrum_spread:.6g} deficit={rep.uniformity_deficit:.6g} "
             + " ".join(f"{k}={v}" for k, v in sorted(counts.items()))]
    return None, rep.to_json(), lines


def run_witness(ex, pts, cfg):
    sched = _schedule(cfg)
    alpha, beta = cfg["alpha"], cfg["beta"]
    c_hat = None
    if beta is None:
        rep = probe_complete_regularity(ex.cocycle, pts, sched[-1], ProbeConfig(tol=cfg["tol"], block=cfg["block"]))
        tops = [r.forward_spectrum.values[0] for r in rep.reports if r.verdict != IRREGULAR]
        if not tops:
            raise InvalidParameter("no regular-looking point to estimate beta from; pass --beta")
        c_hat, _ = common_exponent(tops, 0.05)
        beta = c_hat - 0.05
    if isinstance(ex.system, Subshift):
        count = cfg["points"] or ex.sample_count
        sample_I, sample_S = catalog.walters_witness_offsets(ex.system, sched[-1], alpha, beta, count)
    else:
        sample_I = sample_S = pts
    rep = oscillation_witness(ex.cocycle, sample_I, sample_S, alpha, beta, sched, cfg["block"])
    payload = rep.to_json()
    payload["c_hat"] = c_hat
    payload["sample_I"] = [p.to_json() for p in sample_I]
    payload["sample_S"] = [p.to_json() for p in sample_S]
    lines = [f"alpha={alpha:g} beta={beta:.6g}: {len(rep.i_witnesses)} I-witnesses "
             f"({len(rep.i_failures)} failed), {len(rep.s_witnesses)} S-witnesses ({len(rep.s_failures)} failed)"]
    return None, payload, lines


RUNNERS = {
    "spectrum": run_spectrum,
    "gap": run_gap,
    "dominate": run_dominate,
    "oseledets": run_oseledets,
    "sacker-sell": run_sacker_sell,
    "regularity": run_regularity,
    "complete": run_complete,
    "witness": run_witness,
}


def _output_dir(cfg_value) -> Path:
    return Path(cfg_value or os.environ.get(ENV_OUTPUT) or ".")


def run(command: str, cfg: dict, out=None) -> int:
    out = out or sys.stdout
    ex = _example(cfg)
    pts = _sample(ex, cfg)
    table, payload, lines = RUNNERS[command](ex, pts, cfg)
    hashed = {k: v for k, v in cfg.items() if k not in ("output_dir", "assert_expected")}
    hashed["command"] = command
    meta = {"config_hash": config_hash(hashed), "version": __version__}
    outdir = _output_dir(cfg["output_dir"])
    stem = f"{command.replace('-', '_')}_{ex.name}"
    if table is not None:
        cols, rows = table
        path = write_text(outdir / f"{stem}.csv", render_csv(cols, rows, meta))
        print(f"wrote {path}", file=out)
    if payload is not None:
        path = write_text(outdir / f"{stem}.json", render_json(payload, dict(meta, config=hashed)))
        print(f"wrote {path}", file=out)
    for line in lines:
        print(line, file=out)
    if cfg["assert_expected"]:
        results = catalog.check_example(ex)
        failed = [r for r in results if not r.passed]
        for r in results:
            print(r.line(), file=out)
        if failed:
            print(f"{len(failed)} expectation(s) not met", file=sys.stderr)
            return 1
    return 0


def run_catalog(args, out=None) -> int:
    out = out or sys.stdout
    if args.action == "list":
        for name in catalog.names():
            ex = catalog.get(name)
            print(f"{name:26s} {ex.description}", file=out)
        return 0
    if args.action == "describe":
        if not args.name:
            raise ConfigError("catalog describe needs an example name")
        print(catalog.describe(args.name), file=out)
        return 0
    names = [args.name] if args.name else None
    payload = catalog.export_expectations(names)
    text = render_json({"examples": payload}, {"version": __version__})
    if args.output_dir or os.environ.get(ENV_OUTPUT):
        path = write_text(_output_dir(args.output_dir) / "catalog.json", text)
        print(f"wrote {path}", file=out)
    else:
        out.write(text)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "catalog":
            return run_catalog(args)
        cfg = resolve_config(args)
        return run(args.command, cfg)
    except (ConfigError, *BAD_CONFIG) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except RUNTIME as err:
        print(f"runtime error: {err}", file=sys.stderr)
        return 3
    except CocycleLabError as err:
        print(f"runtime error: {type(err).__name__}: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
