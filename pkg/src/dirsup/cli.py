"""Batch experiment driver: ``dirsup {verify,simulate,cube,bounds,profile,report}``.

Every command reads a flat JSON config (``--config``) whose keys mirror the
flags; explicit flags override file values.  Tables are written as CSV with a
JSON sidecar carrying the config echo, the schema version and ``git describe``.

Exit codes: 0 success, 1 invariant violation, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import subprocess
import sys
from pathlib import Path

from .bounds import (
    halasz_predictor,
    improved_rate_predictor,
    queffelec_predictor,
    smooth_upper_functional,
    weighted_predictor,
)
from .cube import (
    block_abs_expectations,
    cube_decomposition,
    khintchine_band,
    smooth_lower_functional,
)
from .dirichlet import PolynomialSpec
from .numtheory import _primes_upto
from .plots import line_plot
from .supremum import METHODS, EstimatorConfig, expected_sup, resolve_workers
from .weights import WeightSpec, cumulative_profile

__all__ = ["main", "SCHEMAS", "SCHEMA_VERSION", "ConfigError", "run_command"]

SCHEMA_VERSION = 1

SCHEMAS = {
    "simulate": ["N", "sigma", "weight", "n_draws", "mean", "stderr", "predictor", "ratio"],
    "cube": ["N", "tau", "sigma", "weight", "e_sup", "band_lo", "band_hi", "lower_pred", "ratio"],
    "cube_blocks": ["N", "tau", "sigma", "weight", "j", "L_size", "m_j", "sqrt_m_j",
                    "E_abs_S_j", "band_lo", "band_hi"],
    "profile": ["M", "D1", "D2", "D1_tilde", "D2_tilde"],
    "bounds": ["name", "N", "sigma", "tau", "b", "value"],
}

CLI_WEIGHTS = ("unit", "divisor", "mangoldt")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- options

def _int(v):
    if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
        raise ConfigError(f"expected an integer, got {v!r}")
    try:
        return int(v)
    except (TypeError, ValueError):
        raise ConfigError(f"expected an integer, got {v!r}") from None


def _float(v):
    if isinstance(v, bool):
        raise ConfigError(f"expected a number, got {v!r}")
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {v!r}") from None


def _str(v):
    if not isinstance(v, str):
        raise ConfigError(f"expected a string, got {v!r}")
    return v


def _list(conv):
    def parse(v):
        items = v if isinstance(v, list) else [v]
        if not items:
            raise ConfigError("empty list")
        return [conv(x) for x in items]
    parse.is_list = True
    return parse


def _opt(conv):
    def parse(v):
        return None if v is None else conv(v)
    parse.is_list = getattr(conv, "is_list", False)
    return parse


COMMON = {"seed": (_opt(_int), None), "workers": (_opt(_int), None), "out": (_str, "out")}

OPTIONS = {
    "verify": {"khintchine_c": (_opt(_float), None)},
    "simulate": {
        "N": (_list(_int), [64, 128, 256, 512, 1024, 2048, 4096]),
        "sigma": (_list(_float), [0.0]),
        "weight": (_list(_str), ["unit"]),
        "n_draws": (_int, 20),
        "method": (_str, "torus_multistart"),
        "starts": (_int, 64),
        "iters": (_int, 200),
        "per_axis": (_int, 64),
        "grid_count": (_int, 10**6),
        "T": (_opt(_float), None),
    },
    "cube": {
        "N": (_list(_int), [20]),
        "tau": (_opt(_list(_int)), None),
        "sigma": (_list(_float), [0.0]),
        "weight": (_list(_str), ["unit"]),
        "mode": (_str, "auto"),
        "n_draws": (_int, 4000),
    },
    "bounds": {
        "N": (_list(_int), [10**3, 10**4, 10**5, 10**6]),
        "sigma": (_list(_float), [0.0, 0.5]),
        "tau": (_opt(_list(_int)), None),
        "b": (_list(_float), [0.35, 0.4, 0.45]),
        "weight": (_list(_str), ["unit"]),
    },
    "profile": {"M": (_int, 10**4), "weight": (_list(_str), ["divisor"])},
    "report": {"input": (_opt(_str), None)},
}

SEEDED = ("simulate", "cube")


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dirsup", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, opts in OPTIONS.items():
        p = sub.add_parser(cmd)
        p.add_argument("--config", help="flat JSON config; flags override its keys")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--workers", type=int, help="worker processes (env DIRSUP_THREADS)")
        p.add_argument("--out", help="output directory")
        for key, (conv, _) in opts.items():
            nargs = "+" if getattr(conv, "is_list", False) else None
            p.add_argument(_flag(key), dest=key, nargs=nargs)
    return parser


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    table = {**COMMON, **OPTIONS[command]}
    raw: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {args.config}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(raw) - set(table))
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {unknown}")
    for key in table:
        v = getattr(args, key, None)
        if v is not None:
            raw[key] = v
    cfg = {}
    for key, (conv, default) in table.items():
        try:
            cfg[key] = conv(raw[key]) if key in raw else default
        except ConfigError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    _validate(command, cfg)
    return cfg


def _validate(command: str, cfg: dict):
    if command in SEEDED and cfg["seed"] is None:
        raise ConfigError(f"{command} needs a seed (--seed or config key 'seed')")
    if cfg["seed"] is not None and not 0 <= cfg["seed"] < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg["workers"] is not None and cfg["workers"] < 1:
        raise ConfigError("workers must be positive")
    for w in cfg.get("weight", []):
        if w not in CLI_WEIGHTS:
            raise ConfigError(f"unknown weight {w!r}; choose from {CLI_WEIGHTS}")
    for s in cfg.get("sigma", []):
        if not 0.0 <= s <= 0.5:
            raise ConfigError(f"sigma={s} outside [0, 1/2]")
    if command == "simulate":
        if cfg["method"] not in METHODS:
            raise ConfigError(f"unknown method {cfg['method']!r}; choose from {METHODS}")
        if cfg["n_draws"] < 1:
            raise ConfigError("n_draws must be positive")
        if min(cfg["N"]) < 1:
            raise ConfigError("N must be at least 1")
    if command == "cube":
        if cfg["mode"] not in ("exact", "mc", "auto"):
            raise ConfigError(f"unknown mode {cfg['mode']!r}")
        if cfg["n_draws"] < 2:
            raise ConfigError("n_draws must be at least 2")
    if command in ("cube", "bounds") and min(cfg["N"]) < 3:
        raise ConfigError("N must be at least 3")
    if command == "bounds" and min(cfg["N"]) < 16:
        raise ConfigError("bounds needs N >= 16")
    if command == "profile" and cfg["M"] < 1:
        raise ConfigError("M must be positive")


# ---------------------------------------------------------------- output

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if not math.isfinite(v) else repr(v)
    return str(v)


def write_csv(path: Path, header: list[str], rows: list[dict]) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r.get(k)) for k in header])
    return path


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def git_describe() -> str:
    try:
        res = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=10)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return res.stdout.strip() if res.returncode == 0 and res.stdout.strip() else "unknown"


def write_sidecar(path: Path, command: str, cfg: dict, artifacts: list[str]) -> Path:
    echo = {k: v for k, v in cfg.items() if k not in ("workers", "out")}
    doc = {
        "command": command,
        "config": echo,
        "schema_version": SCHEMA_VERSION,
        "git_describe": git_describe(),
        "artifacts": artifacts,
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _ratio(a, b):
    if a is None or b is None or not (math.isfinite(a) and math.isfinite(b)) or b == 0:
        return None
    return a / b


def _weight(name: str) -> WeightSpec:
    return WeightSpec(kind=name)


def _auto_tau(N: int) -> int:
    return max(2, int(_primes_upto(math.isqrt(N)).size))


# ---------------------------------------------------------------- commands

def simulate_rows(cfg: dict) -> list[dict]:
    est = EstimatorConfig(method=cfg["method"], T=cfg["T"], grid_count=cfg["grid_count"],
                          starts=cfg["starts"], iters=cfg["iters"], per_axis=cfg["per_axis"])
    workers = resolve_workers(cfg["workers"])
    rows = []
    for wname in cfg["weight"]:
        weight = _weight(wname)
        for sigma in cfg["sigma"]:
            for N in cfg["N"]:
                spec = PolynomialSpec(N=N, sigma=sigma, weight=weight)
                mc = expected_sup(spec, est, n_draws=cfg["n_draws"], seed=cfg["seed"],
                                  workers=workers)
                pred = weighted_predictor(N, sigma, weight) if N >= 2 else None
                rows.append({"N": N, "sigma": sigma, "weight": wname, "n_draws": mc.n_draws,
                             "mean": mc.mean, "stderr": mc.stderr, "predictor": pred,
                             "ratio": _ratio(mc.mean, pred)})
    return rows


def cube_rows(cfg: dict) -> tuple[list[dict], list[dict]]:
    rows, blocks = [], []
    for wname in cfg["weight"]:
        weight = _weight(wname)
        for sigma in cfg["sigma"]:
            for N in cfg["N"]:
                pi_n = int(_primes_upto(N).size)
                taus = cfg["tau"] if cfg["tau"] is not None else [_auto_tau(N)]
                for tau in taus:
                    if not 2 <= tau <= pi_n:
                        raise ConfigError(f"tau={tau} outside [2, pi({N})={pi_n}]")
                    decomp = cube_decomposition(N, tau, sigma, weight)
                    means, _ = block_abs_expectations(decomp, cfg["mode"], cfg["n_draws"],
                                                      cfg["seed"])
                    e_sup = float(sum(means[j] for j in decomp.block_ids))
                    lo, hi = khintchine_band(decomp)
                    low = smooth_lower_functional(N, tau)
                    rows.append({"N": N, "tau": tau, "sigma": sigma, "weight": wname,
                                 "e_sup": e_sup, "band_lo": lo, "band_hi": hi,
                                 "lower_pred": low, "ratio": _ratio(e_sup, low)})
                    for j in decomp.block_ids:
                        m = decomp.masses[j]
                        blocks.append({"N": N, "tau": tau, "sigma": sigma, "weight": wname,
                                       "j": j, "L_size": len(decomp.blocks[j]), "m_j": m,
                                       "sqrt_m_j": math.sqrt(m), "E_abs_S_j": means[j],
                                       "band_lo": math.sqrt(m) * 2**-0.5,
                                       "band_hi": math.sqrt(m)})
    return rows, blocks


def bounds_rows(cfg: dict) -> list[dict]:
    rows = []
    for N in cfg["N"]:
        rows.append({"name": "halasz", "N": N, "value": halasz_predictor(N)})
        for sigma in cfg["sigma"]:
            rows.append({"name": "queffelec", "N": N, "sigma": sigma,
                         "value": queffelec_predictor(N, sigma)})
            for wname in cfg["weight"]:
                rows.append({"name": f"weighted_{wname}", "N": N, "sigma": sigma,
                             "value": weighted_predictor(N, sigma, _weight(wname))})
            for b in cfg["b"]:
                try:
                    v = improved_rate_predictor(N, sigma, b)
                except ValueError as exc:
                    raise ConfigError(f"b={b}: {exc}") from None
                rows.append({"name": "improved_rate", "N": N, "sigma": sigma, "b": b, "value": v})
        pi_n = int(_primes_upto(N).size)
        taus = cfg["tau"] if cfg["tau"] is not None else [_auto_tau(N)]
        for tau in taus:
            if not 2 <= tau <= pi_n:
                raise ConfigError(f"tau={tau} outside [2, pi({N})={pi_n}]")
            up = smooth_upper_functional(N, tau)
            rows.append({"name": f"smooth_upper_r{up.regime}", "N": N, "sigma": 0.5,
                         "tau": tau, "value": up.value})
            rows.append({"name": "smooth_lower", "N": N, "sigma": 0.5, "tau": tau,
                         "value": smooth_lower_functional(N, tau)})
    return rows


def profile_rows(M: int, weight: str) -> list[dict]:
    prof = cumulative_profile(_weight(weight), M)
    return [{"M": m, "D1": float(prof.D1[m - 1]), "D2": float(prof.D2[m - 1]),
             "D1_tilde": float(prof.D1_tilde[m - 1]), "D2_tilde": float(prof.D2_tilde[m - 1])}
            for m in range(1, M + 1)]


def _num(s: str):
    return float(s) if s != "" else None


def _series(rows, x, y, key):
    out: dict[str, tuple[list, list]] = {}
    for r in rows:
        xs, ys = out.setdefault(key(r), ([], []))
        xs.append(_num(r[x]))
        ys.append(_num(r[y]))
    return out


def report_figures(indir: Path, outdir: Path) -> list[Path]:
    """One SVG per metric for each CSV table found in ``indir``."""
    made = []
    sim = indir / "simulate.csv"
    if sim.exists():
        rows = read_csv(sim)
        key = lambda r: f"{r['weight']}, sigma={r['sigma']}"  # noqa: E731
        for metric in ("mean", "ratio"):
            made.append(line_plot(_series(rows, "N", metric, key),
                                  outdir / f"simulate_{metric}.svg", "N", metric,
                                  f"simulate: {metric}"))
    cub = indir / "cube.csv"
    if cub.exists():
        rows = read_csv(cub)
        key = lambda r: f"{r['weight']}, sigma={r['sigma']}"  # noqa: E731
        for metric in ("e_sup", "ratio"):
            made.append(line_plot(_series(rows, "N", metric, key),
                                  outdir / f"cube_{metric}.svg", "N", metric,
                                  f"cube: {metric}"))
    bnd = indir / "bounds.csv"
    if bnd.exists():
        rows = read_csv(bnd)

        def key(r):
            parts = [r["name"]]
            if r["sigma"]:
                parts.append(f"sigma={r['sigma']}")
            if r["b"]:
                parts.append(f"b={r['b']}")
            return ", ".join(parts)
        made.append(line_plot(_series(rows, "N", "value", key), outdir / "bounds_value.svg",
                              "N", "predictor value", "bounds", logy=True))
    for prof in sorted(indir.glob("profile_*.csv")):
        rows = read_csv(prof)
        wname = prof.stem[len("profile_"):]
        for metric in ("D1", "D2", "D1_tilde", "D2_tilde"):
            made.append(line_plot(_series(rows, "M", metric, lambda r: wname),
                                  outdir / f"profile_{wname}_{metric}.svg", "M", metric,
                                  f"{wname}: {metric}"))
    return made


def run_command(command: str, cfg: dict) -> list[Path]:
    """Execute ``command`` and return the written artifacts."""
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    made: list[Path] = []
    if command == "simulate":
        made.append(write_csv(out / "simulate.csv", SCHEMAS["simulate"], simulate_rows(cfg)))
    elif command == "cube":
        rows, blocks = cube_rows(cfg)
        made.append(write_csv(out / "cube.csv", SCHEMAS["cube"], rows))
        made.append(write_csv(out / "cube_blocks.csv", SCHEMAS["cube_blocks"], blocks))
    elif command == "bounds":
        made.append(write_csv(out / "bounds.csv", SCHEMAS["bounds"], bounds_rows(cfg)))
    elif command == "profile":
        for w in cfg["weight"]:
            made.append(write_csv(out / f"profile_{w}.csv", SCHEMAS["profile"],
                                  profile_rows(cfg["M"], w)))
    elif command == "report":
        indir = Path(cfg["input"]) if cfg["input"] is not None else out
        if not indir.is_dir():
            raise ConfigError(f"input directory not found: {indir}")
        made = report_figures(indir, out)
        if not made:
            raise ConfigError(f"no input CSV (simulate, cube, bounds, profile_*) in {indir}")
    else:
        raise ConfigError(f"unknown command {command!r}")
    made.append(write_sidecar(out / f"{command}.json", command, cfg,
                              [p.name for p in made]))
    return made


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    try:
        cfg = resolve_config(args.command, args)
        if args.command == "verify":
            from .checks import run_suite
            return run_suite(cfg)
        for p in run_command(args.command, cfg):
            print(p)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
