"""Command-line experiment runner.

Subcommands
-----------
sweep   run one engine over an ``(n, beta)`` grid and write a CSV table
fit     fit the logarithmic entropy law or the exponential gap law to a CSV
gap     tabulate XY spectral gaps against ``n`` (input for ``fit --law gap_exp``)
check   cross-engine equivalence suite on small random chains

Configs are YAML trees; command-line flags override them. When the
environment variable ``THERMALCHAIN_OUTPUT_DIR`` is set, relative output
paths are resolved against it. Failures exit nonzero after printing one JSON
object with an ``"error"`` key on stderr.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence

import numpy as np
import yaml

from . import freefermion as ff
from . import mpoengine as mpo
from . import oracle
from .models import FAMILIES, ChainSpec, build_majorana_form, build_term_list, staggered_fields
from .numerics import fit_log_law

log = logging.getLogger(__name__)

ENGINES = ("freefermion", "mpo", "oracle")
OUTPUT_ENV = "THERMALCHAIN_OUTPUT_DIR"
COLUMNS = (
    "engine", "family", "n", "n_A", "beta", "s_sharp", "s_A", "s_B", "s_total", "qmi",
    "purity_log2", "mutual_purity", "D_used", "discarded_weight", "epsilon", "wall_time",
)
DEFAULT_WINDOW = (4.0, 64.0)

DEFAULTS: Dict[str, Any] = {
    "engine": "freefermion",
    "family": "XY",
    "n": 64,
    "gamma": 0.0,
    "h": 0.0,
    "hx": 0.0,
    "hz": 0.0,
    "delta": 0.0,
    "field_pattern": "zero",
    "beta_grid": {"start": 0.5, "stop": 128.0, "num": 15},
    "cut": None,
    "mpo": {
        "epsilon": mpo.DEFAULT_EPSILON,
        "D_max": 128,
        "svd_cut": mpo.DEFAULT_SVD_CUT,
        "reorth_every": 1,
    },
    "fit": {"enabled": False, "window": list(DEFAULT_WINDOW)},
    "output": "sweep.csv",
}


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class MpoSettings:
    epsilon: float = mpo.DEFAULT_EPSILON
    D_max: int = 128
    svd_cut: float = mpo.DEFAULT_SVD_CUT
    reorth_every: int = 1


@dataclass
class FitSettings:
    enabled: bool = False
    window: tuple = DEFAULT_WINDOW


@dataclass
class RunConfig:
    engine: str
    family: str
    sizes: List[int]
    betas: List[float]
    gamma: float = 0.0
    h: float = 0.0
    hx: float = 0.0
    hz: float = 0.0
    delta: float = 0.0
    field_pattern: Any = "zero"
    cut: Optional[int] = None
    mpo: MpoSettings = field(default_factory=MpoSettings)
    fit: FitSettings = field(default_factory=FitSettings)
    output: str = "sweep.csv"

    def spec(self, n: int) -> ChainSpec:
        fields = None
        if self.family == "XXZField":
            fields = site_fields(self.field_pattern, n)
        return ChainSpec(self.family, n, gamma=self.gamma, h=self.h, hx=self.hx, hz=self.hz,
                         delta=self.delta, fields=fields)

    def cut_for(self, n: int) -> int:
        n_a = n // 2 if self.cut is None else int(self.cut)
        if not 1 <= n_a < n:
            raise ConfigError(f"cut n_A = {n_a} is not inside 1..{n - 1}")
        return n_a


def site_fields(pattern, n: int) -> Optional[List[float]]:
    if pattern in (None, "zero"):
        return None
    if pattern == "staggered":
        return list(staggered_fields(n))
    if isinstance(pattern, (list, tuple)):
        if len(pattern) != n:
            raise ConfigError(f"field list has {len(pattern)} entries, chain has {n} sites")
        return [float(v) for v in pattern]
    raise ConfigError(f"unknown field_pattern {pattern!r}; use zero, staggered or a list")


def expand_betas(grid) -> List[float]:
    """A list of values or a ``{start, stop, num}`` geometric descriptor, in ascending order."""
    if isinstance(grid, dict):
        try:
            start, stop, num = float(grid["start"]), float(grid["stop"]), int(grid["num"])
        except KeyError as exc:
            raise ConfigError(f"geometric beta grid is missing {exc}") from None
        if start <= 0 or stop < start or num < 1:
            raise ConfigError("geometric beta grid needs 0 < start <= stop and num >= 1")
        values = np.geomspace(start, stop, num).tolist()
        if grid.get("include_zero"):
            values = [0.0] + values
    elif isinstance(grid, (list, tuple)):
        values = [float(b) for b in grid]
    else:
        values = [float(grid)]
    if not values:
        raise ConfigError("beta grid is empty")
    if any(b < 0 or not math.isfinite(b) for b in values):
        raise ConfigError("beta values must be finite and nonnegative")
    return sorted(set(values))


def _deep_update(base: Dict[str, Any], extra: Dict[str, Any]) -> Dict[str, Any]:
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], val)
        else:
            base[key] = val
    return base


def load_config(path: Optional[str]) -> Dict[str, Any]:
    tree = copy.deepcopy(DEFAULTS)
    if path:
        try:
            with open(path) as fh:
                user = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("config root must be a mapping")
        _deep_update(tree, user)
    return tree


def build_run_config(tree: Dict[str, Any]) -> RunConfig:
    engine = tree["engine"]
    family = tree["family"]
    if engine not in ENGINES:
        raise ConfigError(f"unknown engine {engine!r}, expected one of {ENGINES}")
    if family not in FAMILIES:
        raise ConfigError(f"unknown family {family!r}, expected one of {FAMILIES}")
    raw_n = tree["n"]
    sizes = sorted(set(int(v) for v in (raw_n if isinstance(raw_n, (list, tuple)) else [raw_n])))
    if not sizes or sizes[0] < 2:
        raise ConfigError("chain length must be at least 2")
    if engine == "freefermion" and family != "XY":
        raise ConfigError(f"engine freefermion requires the XY family, got {family}")
    if engine == "oracle" and sizes[-1] > oracle.MAX_SITES:
        raise ConfigError(f"engine oracle requires n <= {oracle.MAX_SITES}, got {sizes[-1]}")
    m = tree.get("mpo") or {}
    f = tree.get("fit") or {}
    window = tuple(float(v) for v in f.get("window", DEFAULT_WINDOW))
    if len(window) != 2 or window[0] > window[1]:
        raise ConfigError(f"fit window must be [lo, hi], got {list(window)}")
    settings = MpoSettings(
        epsilon=float(m.get("epsilon", mpo.DEFAULT_EPSILON)),
        D_max=int(m.get("D_max", 128)),
        svd_cut=float(m.get("svd_cut", mpo.DEFAULT_SVD_CUT)),
        reorth_every=int(m.get("reorth_every", 1)),
    )
    if settings.epsilon <= 0 or settings.D_max < 1 or settings.reorth_every < 1:
        raise ConfigError("mpo settings need epsilon > 0, D_max >= 1 and reorth_every >= 1")
    cfg = RunConfig(
        engine=engine,
        family=family,
        sizes=sizes,
        betas=expand_betas(tree["beta_grid"]),
        gamma=float(tree.get("gamma", 0.0)),
        h=float(tree.get("h", 0.0)),
        hx=float(tree.get("hx", 0.0)),
        hz=float(tree.get("hz", 0.0)),
        delta=float(tree.get("delta", 0.0)),
        field_pattern=tree.get("field_pattern", "zero"),
        cut=tree.get("cut"),
        mpo=settings,
        fit=FitSettings(bool(f.get("enabled", False)), window),
        output=str(tree.get("output", "sweep.csv")),
    )
    for n in sizes:
        cfg.cut_for(n)
        cfg.spec(n)
    return cfg


def resolve_output(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


# --- engines --------------------------------------------------------------------------

def _blank_row(cfg: RunConfig, n: int, n_a: int, beta: float) -> Dict[str, Any]:
    row = {c: None for c in COLUMNS}
    row.update(engine=cfg.engine, family=cfg.family, n=n, n_A=n_a, beta=beta)
    return row


def _freefermion_rows(cfg: RunConfig, n: int) -> Iterator[Dict[str, Any]]:
    n_a = cfg.cut_for(n)
    spectrum = ff.spectrum_of(cfg.spec(n))
    for beta in cfg.betas:
        t0 = time.perf_counter()
        rep = ff.qmi(spectrum, beta, n_a)
        gp = ff.gamma_thermal(spectrum, beta)
        row = _blank_row(cfg, n, n_a, beta)
        row.update(
            s_sharp=rep.s_sharp, s_A=rep.s_A, s_B=rep.s_B, s_total=rep.s_total, qmi=rep.qmi,
            purity_log2=ff.block_purity_log2(gp, range(n)),
            mutual_purity=ff.mutual_purity(spectrum, beta, n_a),
        )
        row["wall_time"] = time.perf_counter() - t0
        yield row


def _oracle_rows(cfg: RunConfig, n: int) -> Iterator[Dict[str, Any]]:
    n_a = cfg.cut_for(n)
    terms = build_term_list(cfg.spec(n))
    for beta in cfg.betas:
        t0 = time.perf_counter()
        rho = oracle.dense_thermal(terms, beta)
        ra, rb = oracle.partial_traces(rho, n_a)
        s_a = oracle.von_neumann_entropy(ra)
        s_b = oracle.von_neumann_entropy(rb)
        s_tot = oracle.von_neumann_entropy(rho.matrix)
        row = _blank_row(cfg, n, n_a, beta)
        row.update(
            s_sharp=oracle.dense_osee(rho, n_a), s_A=s_a, s_B=s_b, s_total=s_tot,
            qmi=s_a + s_b - s_tot,
            purity_log2=float(np.log2(oracle.purity(rho.matrix))),
            mutual_purity=oracle.dense_mutual_purity(rho, n_a),
        )
        row["wall_time"] = time.perf_counter() - t0
        yield row


def _mpo_rows(cfg: RunConfig, n: int) -> Iterator[Dict[str, Any]]:
    n_a = cfg.cut_for(n)
    terms = build_term_list(cfg.spec(n))
    s = cfg.mpo
    t0 = time.perf_counter()
    for point in mpo.cool(terms, cfg.betas, s.epsilon, s.D_max, s.svd_cut, s.reorth_every):
        st = point.state
        row = _blank_row(cfg, n, n_a, point.beta)
        row.update(
            s_sharp=mpo.osee_mpo(st, n_a),
            purity_log2=mpo.purity_log2(st),
            mutual_purity=mpo.mutual_purity(st, n_a),
            D_used=st.max_bond,
            discarded_weight=st.discarded_weight,
            epsilon=s.epsilon,
        )
        # cumulative: the trajectory is shared by all grid points
        row["wall_time"] = time.perf_counter() - t0
        yield row


_ENGINE_ROWS = {"freefermion": _freefermion_rows, "oracle": _oracle_rows, "mpo": _mpo_rows}


def run_rows(cfg: RunConfig) -> List[Dict[str, Any]]:
    rows: List[Dict[str, Any]] = []
    for n in cfg.sizes:
        log.info("%s %s n=%d, %d beta points", cfg.engine, cfg.family, n, len(cfg.betas))
        rows.extend(_ENGINE_ROWS[cfg.engine](cfg, n))
    rows.sort(key=lambda r: (r["n"], r["beta"]))
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(rows: Sequence[Dict[str, Any]], path: Path, columns: Sequence[str] = COLUMNS) -> None:
    """Write ``rows`` atomically: a sibling temporary file is renamed into place."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    path = Path(path)
    if not path.parent.exists():
        raise OSError(f"output directory {path.parent} does not exist")
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=".csv", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(buf.getvalue())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path) -> List[Dict[str, str]]:
    try:
        with open(path, newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def run_sweep(cfg: RunConfig) -> Dict[str, Any]:
    """Execute ``cfg``, write the CSV and return a summary record."""
    out = resolve_output(cfg.output)
    t0 = time.perf_counter()
    rows = run_rows(cfg)
    write_csv(rows, out)
    summary: Dict[str, Any] = {
        "output": str(out),
        "rows": len(rows),
        "engine": cfg.engine,
        "family": cfg.family,
        "sizes": cfg.sizes,
        "wall_time": time.perf_counter() - t0,
    }
    if cfg.fit.enabled:
        fits = {}
        for n in cfg.sizes:
            pts = [(r["beta"], r["s_sharp"]) for r in rows if r["n"] == n and r["beta"] > 0]
            fits[str(n)] = fit_log_law(pts, cfg.fit.window)._asdict()
        summary["fit"] = fits
    return summary


# --- fit ------------------------------------------------------------------------------

def _column(rows: List[Dict[str, str]], name: str) -> np.ndarray:
    if not rows or name not in rows[0]:
        raise ConfigError(f"CSV lacks required column {name!r}")
    try:
        return np.array([float(r[name]) if r[name] != "" else np.nan for r in rows])
    except ValueError as exc:
        raise ConfigError(f"malformed value in column {name!r}: {exc}") from None


def fit_command(path, law: str, window=None, n: Optional[int] = None,
                column: str = "s_sharp") -> Dict[str, Any]:
    rows = read_csv(path)
    if law == "log_beta":
        if n is not None:
            if rows and "n" not in rows[0]:
                raise ConfigError("CSV lacks required column 'n'")
            rows = [r for r in rows if int(r["n"]) == n]
        beta = _column(rows, "beta")
        val = _column(rows, column)
        keep = np.isfinite(val) & (beta > 0)
        lo, hi = window if window is not None else DEFAULT_WINDOW
        fit = fit_log_law(zip(beta[keep], val[keep]), (lo, hi))
        return {"law": law, "window": [lo, hi], **fit._asdict()}
    if law == "gap_exp":
        ns = _column(rows, "n")
        gaps = _column(rows, "gap")
        sel = gaps > ff.GAP_FLOOR
        if window is not None:
            sel &= (ns >= window[0]) & (ns <= window[1])
        if sel.sum() < 3:
            raise ConfigError("empty window: fewer than 3 sizes with usable gaps")
        xi, res = ff.fit_gap_law(ns[sel].astype(int), gaps[sel])
        return {"law": law, "xi": xi, "residual": res, "points": int(sel.sum())}
    raise ConfigError(f"unknown law {law!r}; use log_beta or gap_exp")


def gap_rows(gamma: float, h: float, sizes: Sequence[int]) -> List[Dict[str, Any]]:
    return [
        {"n": n, "gap": ff.spectral_gap(build_majorana_form(ChainSpec.xy(n, gamma, h)))}
        for n in sorted(set(sizes))
    ]


# --- check ----------------------------------------------------------------------------

def run_check(samples: int = 20, seed: int = 0, tol: float = 1e-8) -> Dict[str, Any]:
    """Compare freefermion and dense results on random small XY chains."""
    rng = np.random.default_rng(seed)
    worst = {"s_sharp": 0.0, "qmi": 0.0, "mutual_purity": 0.0}
    cases = 0
    for _ in range(samples):
        n = int(rng.integers(2, 7))
        spec = ChainSpec.xy(n, float(rng.uniform(-1, 1)), float(rng.uniform(-2, 2)))
        n_a = int(rng.integers(1, n))
        fs = ff.spectrum_of(spec)
        terms = build_term_list(spec)
        for beta in (0.3, 1.0, 3.0):
            rep = ff.qmi(fs, beta, n_a)
            rho = oracle.dense_thermal(terms, beta)
            diffs = {
                "s_sharp": abs(rep.s_sharp - oracle.dense_osee(rho, n_a)),
                "qmi": abs(rep.qmi - oracle.dense_qmi(rho, n_a)),
                "mutual_purity": abs(
                    ff.mutual_purity(fs, beta, n_a) - oracle.dense_mutual_purity(rho, n_a)
                ),
            }
            for k, v in diffs.items():
                worst[k] = max(worst[k], v)
            cases += 1
    passed = all(v < tol for v in worst.values())
    return {"cases": cases, "tolerance": tol, "max_error": worst, "passed": passed}


# --- argument handling ----------------------------------------------------------------

def _override(tree: Dict[str, Any], args: argparse.Namespace) -> Dict[str, Any]:
    for key in ("engine", "family", "gamma", "h", "hx", "hz", "delta", "cut", "output"):
        val = getattr(args, key, None)
        if val is not None:
            tree[key] = val
    if args.n:
        tree["n"] = args.n
    if args.field_pattern is not None:
        tree["field_pattern"] = args.field_pattern
    if args.betas:
        tree["beta_grid"] = args.betas
    elif args.beta_geom:
        start, stop, num = args.beta_geom
        tree["beta_grid"] = {"start": start, "stop": stop, "num": int(num)}
    for key, dest in (("epsilon", "epsilon"), ("D_max", "d_max"), ("svd_cut", "svd_cut"),
                      ("reorth_every", "reorth_every")):
        val = getattr(args, dest)
        if val is not None:
            tree["mpo"][key] = val
    if args.fit:
        tree["fit"]["enabled"] = True
    if args.window:
        tree["fit"]["window"] = list(args.window)
    return tree


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thermalchain", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="run an engine over an (n, beta) grid")
    sw.add_argument("--config", help="YAML config file")
    sw.add_argument("--engine", choices=ENGINES)
    sw.add_argument("--family", choices=FAMILIES)
    sw.add_argument("--n", type=int, nargs="+", help="one or more chain lengths")
    for name in ("gamma", "h", "hx", "hz", "delta"):
        sw.add_argument(f"--{name}", type=float)
    sw.add_argument("--field-pattern", dest="field_pattern", choices=("zero", "staggered"))
    sw.add_argument("--betas", type=float, nargs="+", help="explicit beta values")
    sw.add_argument("--beta-geom", type=float, nargs=3, metavar=("START", "STOP", "NUM"))
    sw.add_argument("--cut", type=int, help="sites in block A (default n/2)")
    sw.add_argument("--epsilon", type=float)
    sw.add_argument("--D-max", dest="d_max", type=int)
    sw.add_argument("--svd-cut", dest="svd_cut", type=float)
    sw.add_argument("--reorth-every", dest="reorth_every", type=int)
    sw.add_argument("--fit", action="store_true", help="fit the log law per n after the sweep")
    sw.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    sw.add_argument("-o", "--output")

    ft = sub.add_parser("fit", help="fit a law to a CSV table")
    ft.add_argument("csv")
    ft.add_argument("--law", choices=("log_beta", "gap_exp"), default="log_beta")
    ft.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    ft.add_argument("--n", type=int, help="restrict a log_beta fit to one chain length")
    ft.add_argument("--column", default="s_sharp", help="entropy column for log_beta")

    gp = sub.add_parser("gap", help="write an n,gap table for an XY chain")
    gp.add_argument("--gamma", type=float, required=True)
    gp.add_argument("--h", type=float, required=True)
    gp.add_argument("--n-range", type=int, nargs=2, default=(30, 60), metavar=("LO", "HI"))
    gp.add_argument("-o", "--output", required=True)

    ck = sub.add_parser("check", help="cross-engine equivalence suite")
    ck.add_argument("--samples", type=int, default=20)
    ck.add_argument("--seed", type=int, default=0)
    ck.add_argument("--tol", type=float, default=1e-8)
    return parser


def _emit_error(exc: BaseException, code: str) -> None:
    print(json.dumps({"error": code, "type": type(exc).__name__, "message": str(exc)}),
          file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "sweep":
            cfg = build_run_config(_override(load_config(args.config), args))
            result = run_sweep(cfg)
        elif args.command == "fit":
            result = fit_command(args.csv, args.law, args.window, args.n, args.column)
        elif args.command == "gap":
            lo, hi = args.n_range
            if lo < 2 or hi < lo:
                raise ConfigError("n range must satisfy 2 <= LO <= HI")
            out = resolve_output(args.output)
            write_csv(gap_rows(args.gamma, args.h, range(lo, hi + 1)), out, ("n", "gap"))
            result = {"output": str(out), "rows": hi - lo + 1}
        else:
            result = run_check(args.samples, args.seed, args.tol)
            print(json.dumps(result))
            return 0 if result["passed"] else 1
    except ConfigError as exc:
        _emit_error(exc, "config")
        return 2
    except OSError as exc:
        _emit_error(exc, "io")
        return 3
    except (ValueError, ArithmeticError) as exc:
        _emit_error(exc, "numerics")
        return 4
    print(json.dumps(result))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
