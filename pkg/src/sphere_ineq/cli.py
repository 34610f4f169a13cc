"""Command-line front end: ``sphere-ineq {series,certify,fig1,harness,constants}``.

Each command writes ``<command>.<fmt>`` files into the output directory
(``--out``, else ``$SPHERE_INEQ_OUT``, else ``./out``) and exits with a
status that says whether the checked contracts held.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import em_certifier as emc
from . import inequality_lab as lab
from . import report
from . import spectral_series as ss
from ._version import __version__

COMMANDS = ("series", "certify", "fig1", "harness", "constants")
FORMATS = ("csv", "json", "svg")

DEFAULTS = {
    "series": dict(p="2", m="0:10:0.5", formats="csv"),
    "certify": dict(p=None, formats="csv,json"),
    "fig1": dict(formats="csv,svg"),
    "harness": dict(p="1,2,4", m="1,2", n="1,3,8", q="4,10", formats="csv"),
    "constants": dict(q="2,4,6,10", formats="csv"),
}


class GridError(ValueError):
    pass


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive, endpoint snapped within 1e-12) or ``a,b,c``."""
    text = text.strip()
    if not text:
        raise GridError("empty grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise GridError(f"range must be start:stop:step, got {text!r}")
        try:
            start, stop, step = (float(x) for x in parts)
        except ValueError as exc:
            raise GridError(f"malformed range {text!r}") from exc
        if not (step > 0.0) or not all(map(math.isfinite, (start, stop, step))):
            raise GridError(f"range step must be positive and finite, got {text!r}")
        k = math.floor((stop - start) / step + 1e-12)
        vals = [round(start + i * step, 12) for i in range(k + 1)] if k >= 0 else []
        if vals and abs(vals[-1] - stop) <= 1e-12 * max(1.0, abs(stop)):
            vals[-1] = stop
    else:
        try:
            vals = [float(x) for x in text.split(",") if x.strip()]
        except ValueError as exc:
            raise GridError(f"malformed list {text!r}") from exc
    if not vals:
        raise GridError(f"grid {text!r} is empty")
    return vals


@dataclass
class RunConfig:
    command: str
    p: list[float] = field(default_factory=list)
    m: list[float] = field(default_factory=list)
    q: list[float] = field(default_factory=list)
    n: list[int] = field(default_factory=list)
    tol: float = 1e-9
    seed: int = 0
    jobs: int = 1
    formats: tuple[str, ...] = ("csv",)
    output_dir: Path = Path("out")
    flavor: str = "scalar"
    m_cap: float = 20.0
    m_points: int = 41

    def identity(self) -> dict:
        """Fields that determine the output (not where or how fast it is written)."""
        d = asdict(self)
        for k in ("output_dir", "jobs"):
            d.pop(k)
        d["formats"] = list(self.formats)
        return d


def _emit(cfg: RunConfig, rows: list[dict], columns: list[str]) -> list[Path]:
    files = []
    ident = cfg.identity()
    base = cfg.output_dir / cfg.command
    if "csv" in cfg.formats:
        files.append(report.write_csv(base.with_suffix(".csv"), rows, columns, ident))
    if "json" in cfg.formats:
        files.append(report.write_json(base.with_suffix(".json"), rows, columns, ident))
    return files


def _map(fn, tasks, jobs: int) -> list:
    if jobs <= 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


# -- series ---------------------------------------------------------------------

SERIES_COLUMNS = ["p", "m", "I_lo", "I_hi", "J_lo", "J_hi", "em_bound", "verdict", "error"]


def _series_cell(task) -> dict:
    p, m, tol = task
    row = {"p": p, "m": m}
    try:
        I = ss.eval_I(p, m, tol)
        J = ss.eval_J(p, m, tol)
        row.update(I_lo=I.lo, I_hi=I.hi, J_lo=J.lo, J_hi=J.hi)
        row["em_bound"] = emc.em_upper_bound(p, m) if m > 0.0 else None
        row["verdict"] = I.hi < 1.0 and J.hi < 1.0
    except Exception as exc:  # surfaced per cell, the sweep continues
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_series(cfg: RunConfig) -> tuple[int, list[Path]]:
    tasks = [(p, m, cfg.tol) for p in cfg.p for m in cfg.m]
    rows = sorted(_map(_series_cell, tasks, cfg.jobs), key=lambda r: (r["p"], r["m"]))
    files = _emit(cfg, rows, SERIES_COLUMNS)
    errors = sum(1 for r in rows if r.get("error"))
    bad = sum(1 for r in rows if r.get("verdict") is False)
    print(f"series: {len(rows)} cells, {bad} with hi >= 1, {errors} errored")
    return (1 if errors else 0), files


# -- certify --------------------------------------------------------------------

CERTIFY_COLUMNS = ["p", "m", "branch", "bound_value", "verdict", "reduced_p", "note"]


def default_certify_p() -> list[float]:
    """40 equispaced exponents in (1, 10]."""
    return [float(x) for x in np.linspace(1.0, 10.0, 41)[1:]]


def run_certify(cfg: RunConfig) -> tuple[int, list[Path]]:
    rep = emc.certify(cfg.p, cfg.m_cap, cfg.tol, cfg.m_points)
    files = _emit(cfg, rep.rows(), CERTIFY_COLUMNS)
    counts: dict[str, int] = {}
    for c in rep.cells:
        counts[c.branch.value] = counts.get(c.branch.value, 0) + 1
    tally = ", ".join(f"{k}={v}" for k, v in sorted(counts.items()))
    print(f"certify: {len(rep.cells)} cells ({tally}); p*={rep.p_star!r}; summary={rep.summary}")
    return (0 if rep.summary else 1), files


# -- fig1 -----------------------------------------------------------------------

FIG1_COLUMNS = ["p", "m1_minus_m0"]


def run_fig1(cfg: RunConfig) -> tuple[int, list[Path]]:
    ps = np.linspace(2.0, 2.5, 501)
    rows = [{"p": float(p), "m1_minus_m0": emc.p_star_gap(float(p))} for p in ps]
    p_star = emc.find_p_star(1e-12)
    files = _emit(cfg, rows, FIG1_COLUMNS)
    if "svg" in cfg.formats:
        svg = report.svg_line_chart(
            ps, [r["m1_minus_m0"] for r in rows], cfg.identity(),
            title="m1(p) - m0(p)", xlabel="p", ylabel="m1 - m0",
            marker=p_star, marker_label=f"p* = {p_star:.6f}",
        )
        files.append(report.write_text(cfg.output_dir / "fig1.svg", svg))
    print(f"fig1: p* = {p_star!r}")
    return 0, files


# -- harness --------------------------------------------------------------------

HARNESS_COLUMNS = ["kind", "flavor", "n", "m", "p", "q", "seed", "value", "bound", "quad_error", "holds", "error"]
_KIND_ORDER = {"family": 0, "gn": 1, "trace": 2, "variational": 3}
HARNESS_FIELD_DEGREE = 8
HARNESS_POTENTIAL_DEGREE = 3
HARNESS_GALERKIN_DEGREE = 6


def _harness_task(task) -> list[dict]:
    kind, flavor, n, m, ps, q, seed = task
    base = {"kind": kind, "flavor": flavor, "n": n, "m": m, "q": q, "seed": seed}
    try:
        if kind == "family":
            fam = lab.build_family(m, n, flavor, seed)
            out = []
            for p, r in lab.theorem1_ratios(fam, ps).items():
                out.append(dict(base, p=p, value=r.value, bound=1.0, quad_error=r.quad_error, holds=r.holds()))
            return out
        if kind == "gn":
            c = lab.random_field(HARNESS_FIELD_DEGREE, np.random.default_rng([seed, 1]))
            r = lab.gn_ratio(c, q)
            return [dict(base, value=r.value, bound=1.0, quad_error=r.quad_error, holds=r.holds())]
        V = lab.random_potential(HARNESS_POTENTIAL_DEGREE, np.random.default_rng([seed, 2]))
        if kind == "trace":
            out = []
            for p in ps:
                t = lab.alt_trace_check(m, p, V, HARNESS_GALERKIN_DEGREE, flavor=flavor)
                out.append(dict(base, p=p, value=t.lhs, bound=t.rhs, quad_error=0.0, holds=t.holds))
            return out
        fam = lab.build_family(m, n, flavor, seed, HARNESS_GALERKIN_DEGREE)
        sq, es = lab.variational_step_check(fam, V)
        return [dict(base, value=sq, bound=es, quad_error=0.0, holds=sq <= es * (1.0 + 1e-8))]
    except Exception as exc:
        return [dict(base, p=ps[0] if len(ps) == 1 else None, holds=False, error=f"{type(exc).__name__}: {exc}")]


def _harness_key(r: dict):
    def k(v):
        return -1.0 if v is None else float(v)

    return (_KIND_ORDER[r["kind"]], r["flavor"], k(r["n"]), k(r["m"]), k(r.get("p")), k(r["q"]))


def run_harness(cfg: RunConfig) -> tuple[int, list[Path]]:
    flavors = ["scalar", "vector"] if cfg.flavor == "both" else [cfg.flavor]
    max_dim = (HARNESS_GALERKIN_DEGREE + 1) ** 2 - 1
    trace_ps = [p for p in cfg.p if p > 1.0]
    tasks = []
    for fl in flavors:
        for n in cfg.n:
            for m in cfg.m:
                tasks.append(("family", fl, n, m, cfg.p, None, cfg.seed))
                if n <= max_dim:
                    tasks.append(("variational", fl, n, m, (None,), None, cfg.seed))
        for m in cfg.m:
            if trace_ps:
                tasks.append(("trace", fl, None, m, trace_ps, None, cfg.seed))
    for q in cfg.q:
        tasks.append(("gn", "scalar", None, None, (None,), q, cfg.seed))
    rows = [r for chunk in _map(_harness_task, tasks, cfg.jobs) for r in chunk]
    rows.sort(key=_harness_key)
    files = _emit(cfg, rows, HARNESS_COLUMNS)
    failed = [r for r in rows if not r["holds"]]
    print(f"harness: {len(rows)} checks, {len(failed)} failed")
    return (1 if failed else 0), files


# -- constants ------------------------------------------------------------------


def run_constants(cfg: RunConfig) -> tuple[int, list[Path]]:
    rows = [lab.compare_constants(q).row() for q in cfg.q]
    files = _emit(cfg, rows, list(lab.ConstantsTable.FIELDS))
    print(f"constants: {len(rows)} rows")
    return 0, files


RUNNERS = {
    "series": run_series,
    "certify": run_certify,
    "fig1": run_fig1,
    "harness": run_harness,
    "constants": run_constants,
}


# -- argument parsing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sphere-ineq", description="Lieb-Thirring and Gagliardo-Nirenberg checks on S^2.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--p", help="exponent grid (start:stop:step or a,b,c)")
        sp.add_argument("--m", help="mass grid")
        sp.add_argument("--q", help="Lebesgue exponent grid")
        sp.add_argument("--n", help="family sizes")
        sp.add_argument("--tol", type=float, default=1e-9)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--formats", help="comma list from csv,json,svg")
        sp.add_argument("--out", help="output directory (default $SPHERE_INEQ_OUT or ./out)")
        sp.add_argument("--flavor", choices=("scalar", "vector", "both"), default="scalar")
        sp.add_argument("--m-cap", type=float, default=20.0)
        sp.add_argument("--m-points", type=int, default=41)
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    d = DEFAULTS[args.command]

    def grid(name):
        text = getattr(args, name)
        if text is None:
            text = d.get(name)
        return [] if text is None else parse_grid(text)

    formats = tuple(f.strip() for f in (args.formats or d["formats"]).split(",") if f.strip())
    bad = [f for f in formats if f not in FORMATS]
    if bad or not formats:
        raise GridError(f"unknown formats {bad or formats}")
    cfg = RunConfig(
        command=args.command,
        p=grid("p"),
        m=grid("m"),
        q=grid("q"),
        n=[int(x) for x in grid("n")],
        tol=args.tol,
        seed=args.seed,
        jobs=args.jobs,
        formats=formats,
        output_dir=Path(args.out or os.environ.get("SPHERE_INEQ_OUT") or "out"),
        flavor=args.flavor,
        m_cap=args.m_cap,
        m_points=args.m_points,
    )
    if cfg.command == "certify" and not cfg.p:
        cfg.p = default_certify_p()
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if not (cfg.tol > 0.0):
        raise GridError("--tol must be positive")
    if cfg.jobs < 1:
        raise GridError("--jobs must be >= 1")
    if cfg.command in ("series", "certify") and any(p <= 1.0 for p in cfg.p):
        raise GridError("p grid must lie in (1, inf)")
    if cfg.command == "series" and any(m < 0.0 for m in cfg.m):
        raise GridError("m grid must be nonnegative")
    if cfg.command == "certify" and (cfg.m_cap <= 0.0 or cfg.m_points < 2):
        raise GridError("need --m-cap > 0 and --m-points >= 2")
    if cfg.command == "harness":
        if any(p < 1.0 for p in cfg.p) or any(m <= 0.0 for m in cfg.m) or any(n < 1 for n in cfg.n):
            raise GridError("harness needs p >= 1, m > 0, n >= 1")
    if cfg.command in ("harness", "constants") and any(q < 2.0 for q in cfg.q):
        raise GridError("q grid must lie in [2, inf)")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except GridError as exc:
        parser.error(str(exc))
    code, files = RUNNERS[cfg.command](cfg)
    for f in files:
        print(f"wrote {f}")
    return code


if __name__ == "__main__":
    sys.exit(main())
