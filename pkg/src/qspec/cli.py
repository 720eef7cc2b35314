"""Command-line front end.

Every subcommand builds a :class:`Result` (a summary, an optional table
and optional plot data) which is printed as a table on stdout and, with
``--out``, written as CSV or JSON.  Output depends only on the inputs and
the seed, never on timing or thread count.

Exit codes: 0 success, 1 a verification failed, 2 bad configuration or
unwritable path, 3 solver failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from qspec import plot as svg
from qspec.compose import (
    BallRule,
    SpectrumSample,
    accumulation_points,
    enumerate_spectrum,
    example1_sequence,
    example2_tail,
    union_first_eigenvalue,
)
from qspec.core import (
    Ball,
    ConvergenceError,
    InvalidInput,
    ProblemParams,
    QSpecError,
    Rectangle,
    RegimeError,
    domain_from_json,
    domain_to_json,
)
from qspec.grid2d import (
    SEED,
    SolverError,
    SolverOptions,
    dumbbell_experiment,
    minimize_rayleigh,
    rasterize,
    residual,
)
from qspec.radial import (
    Tolerances,
    ZeroNotFound,
    StiffnessError,
    ball_eigenvalue,
    boundary_slope_check,
    interval_eigenvalue,
    radial_family,
)

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
EXPERIMENTAL = "experimental evidence only"


class ConfigError(QSpecError, ValueError):
    pass


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    params: ProblemParams
    domain: object = None
    h: float = 1.0 / 64
    tol: float | None = None
    max_iter: int = 100_000
    seed: int = SEED
    fmt: str = "csv"
    plot: str | None = None
    out: str | None = None
    precision: int = 10
    extra: dict = field(default_factory=dict)

    def solver_options(self) -> SolverOptions:
        return SolverOptions(
            tol=1e-10 if self.tol is None else self.tol, max_iter=self.max_iter, seed=self.seed
        )

    def tolerances(self) -> Tolerances:
        if self.tol is None:
            return Tolerances()
        return Tolerances(rtol=self.tol, atol=self.tol * 1e-2)


def _number(text: str) -> float:
    """Parse 0.25, 1e-3 or 1/128."""
    try:
        return float(Fraction(text)) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _numbers(text: str) -> list:
    return [_number(t) for t in text.split(",") if t.strip()]


_DEFAULTS = {
    "solve-ball": {"N": 2, "q": 3.0},
    "solve-interval": {"N": 1, "q": 3.0},
    "solve-grid": {"N": 2, "q": 3.0},
    "compose": {"N": 2, "q": 1.5},
    "dumbbell": {"N": 2, "q": 3.0, "h": 1.0 / 64},
    "verify": {"N": 2, "q": 3.0, "h": 1.0 / 32},
    "sweep": {"N": 2, "q": 3.0},
    "repro": {"N": 2},
}

_KEYS = ("q", "N", "R", "L", "k", "eps", "h", "tol", "seed", "max_iter", "format", "precision", "out", "plot")


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, the --config file and explicit flags (in that order)."""
    merged = dict(_DEFAULTS.get(args.command, {}))
    if args.command == "repro":
        merged["q"] = 3.0 if args.name == "example-4.4" else 1.5
    file_cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ConfigError("config must be a JSON object")
        merged.update(file_cfg)
    for key in _KEYS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val

    try:
        N = int(merged["N"])
        q = float(merged["q"])
        sanity = q == 2.0
        params = ProblemParams(N, q, sanity=sanity)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid problem parameters: {exc}") from None

    domain = None
    if "domain" in merged:
        try:
            domain = domain_from_json(merged["domain"])
        except (OSError, ValueError, TypeError) as exc:
            raise ConfigError(f"invalid domain: {exc}") from None

    fmt = merged.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    try:
        h = float(merged.get("h", 1.0 / 64))
        precision = int(merged.get("precision", 10))
        max_iter = int(merged.get("max_iter", 100_000))
        seed = int(merged.get("seed", SEED))
        tol = None if merged.get("tol") is None else float(merged["tol"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid option: {exc}") from None
    if not h > 0 or not 1 <= precision <= 17 or max_iter < 1 or (tol is not None and not tol > 0):
        raise ConfigError("h and tol must be positive, precision in 1..17, max_iter >= 1")
    extra = {k: v for k, v in merged.items() if k not in _KEYS + ("domain",)}
    for key in ("R", "L", "k", "eps"):
        if key in merged:
            extra[key] = merged[key]
    return RunConfig(
        subcommand=args.command,
        params=params,
        domain=domain,
        h=h,
        tol=tol,
        max_iter=max_iter,
        seed=seed,
        fmt=fmt,
        plot=merged.get("plot"),
        out=merged.get("out"),
        precision=precision,
        extra=extra,
    )


def _check_writable(path):
    if path is None:
        return
    parent = os.path.dirname(os.path.abspath(path)) or "."
    if not os.path.isdir(parent) or not os.access(parent, os.W_OK):
        raise ConfigError(f"cannot write to {path}")
    if os.path.isdir(path):
        raise ConfigError(f"{path} is a directory")


# ---------------------------------------------------------------------------
# Results and formatting


@dataclass
class Result:
    summary: dict
    columns: tuple = ()
    rows: list = field(default_factory=list)
    plot_kind: str | None = None
    plot_data: dict = field(default_factory=dict)
    passed: bool = True


def _round(x, p):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.{p}g}") + 0.0  # no "-0"
    if isinstance(x, dict):
        return {str(k): _round(v, p) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v, p) for v in x]
    if hasattr(x, "__float__"):  # mpmath numbers
        return _round(float(x), p)
    return x


def _cell(x, p):
    x = _round(x, p)
    if isinstance(x, float):
        return f"{x:.{p}g}"
    if isinstance(x, bool):
        return "true" if x else "false"
    return str(x)


def to_csv(res: Result, p: int) -> str:
    buf = io.StringIO()
    buf.write(",".join(res.columns) + "\n")
    for row in res.rows:
        buf.write(",".join(_cell(v, p) for v in row) + "\n")
    return buf.getvalue()


def to_json(res: Result, p: int) -> str:
    doc = {
        "summary": res.summary,
        "columns": list(res.columns),
        "rows": [list(r) for r in res.rows],
    }
    return json.dumps(_round(doc, p), indent=2, sort_keys=True) + "\n"


def to_table(res: Result, p: int, max_rows: int = 40) -> str:
    out = []
    summary = _round(res.summary, p)
    width = max((len(k) for k in summary), default=0)
    for k in sorted(summary):
        v = summary[k]
        if isinstance(v, (list, dict)):
            v = json.dumps(v, sort_keys=True)
        elif isinstance(v, float):
            v = f"{v:.{p}g}"
        out.append(f"{k.ljust(width)}  {v}")
    if res.columns:
        cells = [[_cell(v, p) for v in row] for row in res.rows[:max_rows]]
        widths = [max([len(c)] + [len(r[i]) for r in cells]) for i, c in enumerate(res.columns)]
        out.append("")
        out.append("  ".join(c.rjust(w) for c, w in zip(res.columns, widths)))
        for r in cells:
            out.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
        if len(res.rows) > max_rows:
            out.append(f"... {len(res.rows) - max_rows} more rows")
    return "\n".join(out) + "\n"


def render_plot(res: Result) -> str:
    d = res.plot_data
    if res.plot_kind == "profile":
        return svg.profile_svg(d.get("rho", []), d.get("u", []), d.get("zeros", ()), d.get("title", "profile"))
    if res.plot_kind == "spectrum":
        return svg.spectrum_svg(d.get("values", []), d.get("clusters", ()), d.get("title", "spectrum"))
    return svg.sweep_svg(
        d.get("x", []), d.get("y", []), d.get("xlabel", "parameter"), d.get("ylabel", "lambda"), d.get("title", "sweep")
    )


# ---------------------------------------------------------------------------
# Subcommands


def _profile_result(pair, cfg: RunConfig, title: str) -> Result:
    prof = pair.eigenfunction
    summary = {
        "lambda": pair.lam,
        "q": cfg.params.q,
        "N": cfg.params.N,
        "k": pair.meta["k"],
        "family": pair.meta["family"],
        "zeros": list(prof.zeros),
        "amplitude": prof.amplitude,
        "residual": prof.residual,
        "sign_class": pair.sign_class,
    }
    rows = list(zip(prof.rho, prof.u, prof.uprime))
    return Result(
        summary,
        ("rho", "u", "uprime"),
        rows,
        "profile",
        {"rho": prof.rho, "u": prof.u, "zeros": prof.zeros, "title": title},
    )


def cmd_solve_ball(cfg: RunConfig) -> Result:
    R = float(cfg.extra.get("R", 1.0))
    k = int(cfg.extra.get("k", 1))
    pair = ball_eigenvalue(cfg.params, R, k, cfg.tolerances())
    res = _profile_result(pair, cfg, f"radial family k={k}, q={cfg.params.q}, N={cfg.params.N}")
    res.summary["R"] = R
    if k == 1:
        res.summary["boundary_slope_gap"] = boundary_slope_check(pair)
    return res


def cmd_solve_interval(cfg: RunConfig) -> Result:
    if cfg.params.N != 1:
        raise ConfigError("solve-interval needs N = 1")
    L = float(cfg.extra.get("L", cfg.extra.get("R", 1.0)))
    k = int(cfg.extra.get("k", 1))
    pair = interval_eigenvalue(cfg.params, L, k, cfg.tolerances())
    res = _profile_result(pair, cfg, f"interval k={k}, q={cfg.params.q}")
    res.summary["L"] = L
    return res


def cmd_solve_grid(cfg: RunConfig) -> Result:
    domain = cfg.domain if cfg.domain is not None else Rectangle(1.0, 1.0)
    grid = rasterize(domain, cfg.h)
    pair = minimize_rayleigh(cfg.params, grid, cfg.solver_options())
    f = pair.eigenfunction
    x, y = grid.coords()
    summary = {
        "lambda": pair.lam,
        "q": cfg.params.q,
        "N": cfg.params.N,
        "h": cfg.h,
        "points": grid.n,
        "iterations": pair.meta["iterations"],
        "residual": residual(pair),
        "domain": domain_to_json(domain),
        "mask_sha256": grid.mask_hash(),
    }
    rows = list(zip(x, y, f.values)) if grid.ndim == 2 else list(zip(x, f.values))
    cols = ("x", "y", "value") if grid.ndim == 2 else ("x", "value")
    return Result(summary, cols, rows)


def _sample_row(smp: SpectrumSample):
    return (smp.value, smp.count, str(smp.spins), ";".join(f"{i}:{m}" for i, m in smp.modes))


def cmd_compose(cfg: RunConfig) -> Result:
    comps = cfg.extra.get("components")
    if comps is None:
        raise ConfigError("compose needs 'components' in the config")
    p = cfg.params
    if isinstance(comps, dict):
        if comps.get("rule") != "geometric":
            raise ConfigError("only the geometric radii rule is supported")
        try:
            rule = BallRule(float(comps["r0"]), float(comps["gamma"]), float(comps["lambda1_unit"]))
        except KeyError as exc:
            raise ConfigError(f"rule is missing {exc}") from None
        lam1 = union_first_eigenvalue(rule, p)
        K = int(cfg.extra.get("K", 20))
        rows, values = [], []
        if p.q < 2:
            tail = example2_tail(rule, p, K)
            rows = [(i + 1, v, d) for i, (v, d) in enumerate(zip(tail.values, tail.excess))]
            values = tail.values
        return Result(
            {"lambda1_union": lam1, "q": p.q, "N": p.N, "K": K, "note": EXPERIMENTAL},
            ("k", "Lambda_k", "excess") if rows else (),
            rows,
            "spectrum",
            {"values": values, "clusters": [lam1], "title": "partial unions"},
        )
    try:
        spectra = [[float(x) for x in c] for c in comps]
    except (TypeError, ValueError):
        raise ConfigError("components must be lists of numbers") from None
    ceiling = cfg.extra.get("ceiling")
    count = cfg.extra.get("count")
    en = enumerate_spectrum(
        spectra, p, ceiling=None if ceiling is None else float(ceiling), count=None if count is None else int(count)
    )
    tol = cfg.extra.get("cluster_tol")
    clusters = accumulation_points(en.samples, float(tol)) if tol is not None else []
    summary = {
        "q": p.q,
        "N": p.N,
        "lambda1_union": union_first_eigenvalue([c[0] for c in spectra], p),
        "samples": len(en.samples),
        "ceiling": en.ceiling,
        "truncated": en.truncated,
        "completeness": en.note,
        "clusters": [{"point": c.point, "side": c.side, "witnesses": len(c.witnesses)} for c in clusters],
        "note": EXPERIMENTAL,
    }
    return Result(
        summary,
        ("value", "multiplicity", "spins", "modes"),
        [_sample_row(s) for s in en.samples],
        "spectrum",
        {"values": [s.value for s in en.samples], "clusters": [c.point for c in clusters], "title": "composite spectrum"},
    )


def _dumbbell(cfg: RunConfig, eps: float):
    return dumbbell_experiment(eps, cfg.params, cfg.h, cfg.solver_options())


def cmd_dumbbell(cfg: RunConfig) -> Result:
    eps = float(cfg.extra.get("eps", 0.0625))
    rep = _dumbbell(cfg, eps).to_json()
    return Result(rep, ("key", "value"), sorted(rep.items()))


# --- verify


def cmd_verify(cfg: RunConfig) -> Result:
    from qspec import verify as V

    p = cfg.params
    reports = []
    q_nl = p.q if not p.is_linear else 3.0
    P2 = ProblemParams(2, q_nl)
    e1 = ball_eigenvalue(P2, 1.0, 1)
    e2 = ball_eigenvalue(P2, 1.0, 2)
    reports.append(V.pohozaev_check(e1, Ball(1.0), P2))
    reports.append(V.eigenpair_sanity(e1, e1.lam, P2))
    reports.append(V.eigenpair_sanity(e2, e1.lam, P2))

    Pg = ProblemParams(2, 2.0, sanity=True)
    sq = Rectangle(1.0, 1.0)
    gp = minimize_rayleigh(Pg, rasterize(sq, cfg.h), cfg.solver_options())
    reports.append(V.pohozaev_check(gp, sq, Pg, tol=0.05))
    reports.append(V.eigenpair_sanity(gp, gp.lam, Pg))

    P3 = ProblemParams(3, 3.0)
    reports.append(V.linf_bound_ratio([ball_eigenvalue(P3, R, 1) for R in (0.5, 1.0, 2.0, 4.0)], P3))

    rng = np.random.default_rng(cfg.seed)
    n = 65
    x = np.linspace(0.0, 1.0, n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    Pp = ProblemParams(2, 1.5)
    for _ in range(int(cfg.extra.get("picone_pairs", 10))):
        a, b, c, d = rng.uniform(0.5, 8.0, 4)
        psi = 2.0 + np.sin(a * X) * np.sin(b * Y)
        phi = 1.0 + np.cos(c * X) * np.cos(d * Y)
        reports.append(V.picone_check(psi, phi, x[1], "classical"))
        reports.append(V.picone_check(psi, phi, x[1], "generalized", Pp))

    rows = [(r.name, r.passed, r.measured, r.bound_or_target, r.tolerance) for r in reports]
    passed = all(r.passed for r in reports)
    summary = {"checks": len(reports), "failed": sum(not r.passed for r in reports), "passed": passed}
    res = Result(summary, ("name", "passed", "measured", "target", "tolerance"), rows, passed=passed)
    res.plot_data["reports"] = [r.to_json() for r in reports]
    return res


# --- sweep


def _sweep_point(task):
    target, base, param, value = task
    cfg = dict(base)
    cfg[param] = value
    params = ProblemParams(int(cfg["N"]), float(cfg["q"]), sanity=float(cfg["q"]) == 2.0)
    if target == "ball":
        return ball_eigenvalue(params, float(cfg.get("R", 1.0)), int(cfg.get("k", 1))).lam
    if target == "interval":
        return interval_eigenvalue(params, float(cfg.get("L", 1.0)), int(cfg.get("k", 1))).lam
    opts = SolverOptions(seed=int(cfg["seed"]), max_iter=int(cfg["max_iter"]))
    if target == "grid":
        dom = domain_from_json(cfg["domain"]) if "domain" in cfg else Rectangle(1.0, 1.0)
        return minimize_rayleigh(params, rasterize(dom, float(cfg["h"])), opts).lam
    if target == "dumbbell":
        return dumbbell_experiment(float(cfg["eps"]), params, float(cfg["h"]), opts, error_estimate=False).ratio
    raise ConfigError(f"unknown sweep target {target!r}")


def threads() -> int:
    raw = os.environ.get("QSPEC_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def cmd_sweep(cfg: RunConfig) -> Result:
    target = cfg.extra.get("target", "ball")
    param = cfg.extra.get("param", "R")
    values = cfg.extra.get("values")
    if isinstance(values, str):
        values = _numbers(values)
    if not values:
        raise ConfigError("sweep needs --values (or 'values' in the config)")
    if target not in ("ball", "interval", "grid", "dumbbell"):
        raise ConfigError(f"unknown sweep target {target!r}")
    if param not in ("R", "L", "q", "k", "h", "eps"):
        raise ConfigError(f"cannot sweep over {param!r}")
    base = {
        "N": cfg.params.N,
        "q": cfg.params.q,
        "h": cfg.h,
        "seed": cfg.seed,
        "max_iter": cfg.max_iter,
        **{k: v for k, v in cfg.extra.items() if k in ("R", "L", "k", "eps", "domain")},
    }
    if cfg.domain is not None:
        base["domain"] = domain_to_json(cfg.domain)
    tasks = [(target, base, param, float(v)) for v in values]
    for t in tasks:  # validate every point before any work starts
        b = dict(t[1])
        b[param] = t[3]
        ProblemParams(int(b["N"]), float(b["q"]), sanity=float(b["q"]) == 2.0)
    workers = min(threads(), len(tasks))
    if workers == 1:
        out = [_sweep_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_sweep_point, tasks))  # map keeps input order
    ylabel = "ratio" if target == "dumbbell" else "lambda"
    rows = [(float(v), y) for v, y in zip(values, out)]
    return Result(
        {"target": target, "param": param, "points": len(rows), "q": cfg.params.q, "N": cfg.params.N},
        (param, ylabel),
        rows,
        "sweep",
        {"x": [r[0] for r in rows], "y": out, "xlabel": param, "ylabel": ylabel, "title": f"{target} sweep"},
    )


# --- repro


def repro_example_34(cfg: RunConfig) -> Result:
    """Two unit balls: Λ_{n,k} built from modes (k, n) approaches λ_k."""
    p = cfg.params
    if not 1 < p.q < 2:
        raise ConfigError("example-3.4 needs 1 < q < 2")
    n_max = int(cfg.extra.get("n", 50))
    kmax = int(cfg.extra.get("k", 1))
    R = float(cfg.extra.get("R", 1.0))
    fam = radial_family(p, R, max(n_max, kmax))
    rows, samples, clusters = [], [], []
    monotone = True
    for k in range(1, kmax + 1):
        seq = example1_sequence(fam, fam[:n_max], p, k=k)
        monotone &= all(a < b for a, b in zip(seq.exact, seq.exact[1:]))
        monotone &= all(v < seq.exact_target for v in seq.exact)
        for n, v in enumerate(seq.values, start=1):
            rows.append((k, n, v, seq.target - v))
        samples.extend(seq.values)
        samples.append(seq.target)
    samples.sort()
    tol = float(cfg.extra.get("cluster_tol", 0.01 * fam[0]))
    found = accumulation_points(samples, tol, int(cfg.extra.get("min_cluster", 10)))
    for c in found:
        clusters.append({"point": c.point, "side": c.side, "witnesses": len(c.witnesses)})
    summary = {
        "example": "3.4",
        "q": p.q,
        "N": p.N,
        "R": R,
        "n_max": n_max,
        "radial_family": fam[:kmax],
        "monotone": bool(monotone),
        "clusters": clusters,
        "note": EXPERIMENTAL,
    }
    return Result(
        summary,
        ("k", "n", "Lambda", "gap_to_lambda_k"),
        rows,
        "spectrum",
        {"values": samples, "clusters": [c.point for c in found], "title": "two balls"},
    )


def repro_example_35(cfg: RunConfig) -> Result:
    """Balls of radii 2^{-i}: partial spin values decrease to λ₁ of the union."""
    p = cfg.params
    if not 1 < p.q < 2:
        raise ConfigError("example-3.5 needs 1 < q < 2")
    K = int(cfg.extra.get("K", 50))
    gamma = float(cfg.extra.get("gamma", 0.5))
    lam_unit = ball_eigenvalue(p, 1.0, 1).lam
    rule = BallRule(1.0, gamma, lam_unit)
    tail = example2_tail(rule, p, K)
    tol = float(cfg.extra.get("cluster_tol", 1e-2 * tail.limit))
    ordered = sorted(tail.exact)
    found = accumulation_points(ordered, tol, int(cfg.extra.get("min_cluster", 10)))
    rows = [(k + 1, v, d) for k, (v, d) in enumerate(zip(tail.values, tail.excess))]
    summary = {
        "example": "3.5",
        "q": p.q,
        "N": p.N,
        "gamma": gamma,
        "K": K,
        "lambda1_unit_ball": lam_unit,
        "limit": tail.limit,
        "series_limit": union_first_eigenvalue(rule, p),
        "strictly_decreasing": all(a > b for a, b in zip(tail.exact, tail.exact[1:])),
        "above_limit": all(d > 0 for d in tail.excess),
        "clusters": [{"point": float(c.point), "side": c.side, "witnesses": len(c.witnesses)} for c in found],
        "note": EXPERIMENTAL,
    }
    return Result(
        summary,
        ("k", "Lambda_k", "excess"),
        rows,
        "spectrum",
        {"values": tail.values, "clusters": [float(c.point) for c in found], "title": "partial unions"},
    )


def repro_example_44(cfg: RunConfig) -> Result:
    """Dumbbell symmetry breaking over a list of neck widths."""
    eps_list = [float(cfg.extra["eps"])] if "eps" in cfg.extra else [0.125, 0.0625]
    reports = [_dumbbell(cfg, e).to_json() for e in eps_list]
    cols = ("epsilon", "lambda1", "lambda1_sym", "mu_q_half", "ratio", "localization", "identity_gap", "cube_bound")
    rows = [tuple(r[c] for c in cols) for r in reports]
    summary = {"example": "4.4", "q": cfg.params.q, "h": cfg.h, "reports": reports}
    return Result(
        summary,
        cols,
        rows,
        "sweep",
        {"x": eps_list, "y": [r["ratio"] for r in reports], "xlabel": "epsilon", "ylabel": "ratio", "title": "dumbbell"},
    )


REPROS = {"example-3.4": repro_example_34, "example-3.5": repro_example_35, "example-4.4": repro_example_44}


def cmd_repro(cfg: RunConfig) -> Result:
    return REPROS[cfg.extra["name"]](cfg)


COMMANDS = {
    "solve-ball": cmd_solve_ball,
    "solve-interval": cmd_solve_interval,
    "solve-grid": cmd_solve_grid,
    "compose": cmd_compose,
    "dumbbell": cmd_dumbbell,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "repro": cmd_repro,
}


# ---------------------------------------------------------------------------
# Argument parsing


def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("problem and solver")
    g.add_argument("--q", type=_number, help="exponent q, 1 < q < 2* (q = 2 runs the linear check)")
    g.add_argument("--N", type=int, help="dimension")
    g.add_argument("--R", type=_number, help="ball radius")
    g.add_argument("--L", type=_number, help="interval length")
    g.add_argument("--k", type=int, help="mode index (radial family) or number of modes")
    g.add_argument("--eps", type=_number, help="dumbbell neck parameter in (0, 1)")
    g.add_argument("--h", type=_number, help="mesh width, e.g. 1/128")
    g.add_argument("--tol", type=_number, help="solver tolerance")
    g.add_argument("--seed", type=int, help=f"random seed (default {SEED})")
    g.add_argument("--max-iter", dest="max_iter", type=int, help="iteration cap for grid solves")
    g.add_argument("--config", help="JSON file with any of the options above plus domain/components")
    o = p.add_argument_group("output")
    o.add_argument("--out", help="write results to this path")
    o.add_argument("--plot", help="write an SVG plot to this path")
    o.add_argument("--format", choices=("csv", "json"), help="format of --out (default csv)")
    o.add_argument("--precision", type=int, help="significant digits printed (default 10)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qspec",
        description="Eigenvalues of -Δu = λ‖u‖_q^{2-q}|u|^{q-2}u with Dirichlet conditions.",
        epilog="Environment: QSPEC_THREADS caps the worker pool of 'sweep'. "
        "Exit codes: 0 ok, 1 verification failed, 2 bad configuration, 3 solver error.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "solve-ball": "radial family eigenpair on a ball (shooting)",
        "solve-interval": "eigenpair on an interval (N = 1)",
        "solve-grid": "first eigenpair on a rasterized planar domain",
        "compose": "spectrum of a disjoint union from component spectra",
        "dumbbell": "symmetry breaking on the dumbbell domain",
        "verify": "run the verification checks; exit 1 if any fails",
        "sweep": "solve over a list of parameter values in parallel",
        "repro": "canned reproductions: example-3.4, example-3.5, example-4.4",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text, description=text)
        if name == "repro":
            sp.add_argument("name", choices=sorted(REPROS))
        if name == "sweep":
            sp.add_argument("--target", choices=("ball", "interval", "grid", "dumbbell"))
            sp.add_argument("--param", help="parameter to vary: R, L, q, k, h or eps")
            sp.add_argument("--values", help="comma separated values, e.g. 0.5,1,2")
        _common(sp)
    return parser


def _emit(res: Result, cfg: RunConfig, stdout):
    p = cfg.precision
    stdout.write(to_table(res, p))
    if cfg.subcommand == "verify":
        for rep in res.plot_data.get("reports", []):
            stdout.write(json.dumps(_round(rep, p), sort_keys=True) + "\n")
    if cfg.out:
        text = to_json(res, p) if cfg.fmt == "json" else to_csv(res, p)
        with open(cfg.out, "w") as fh:
            fh.write(text)
        if cfg.fmt == "csv" and res.summary:
            with open(cfg.out + ".json", "w") as fh:
                fh.write(json.dumps(_round(res.summary, p), indent=2, sort_keys=True) + "\n")
    if cfg.plot:
        with open(cfg.plot, "w") as fh:
            fh.write(render_plot(res))


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = build_config(args)
        if args.command == "repro":
            cfg.extra["name"] = args.name
        if args.command == "sweep":
            for key in ("target", "param", "values"):
                if getattr(args, key) is not None:
                    cfg.extra[key] = getattr(args, key)
        _check_writable(cfg.out)
        _check_writable(cfg.plot)
    except (ConfigError, InvalidInput, RegimeError) as exc:
        stderr.write(f"qspec: configuration error: {exc}\n")
        return EXIT_CONFIG
    try:
        res = COMMANDS[args.command](cfg)
    except (ConfigError, InvalidInput, RegimeError) as exc:
        stderr.write(f"qspec: configuration error: {exc}\n")
        return EXIT_CONFIG
    except (ConvergenceError, SolverError, ZeroNotFound, StiffnessError, QSpecError, ArithmeticError) as exc:
        stderr.write(f"qspec: solver error: {exc}\n")
        return EXIT_SOLVER
    try:
        _emit(res, cfg, stdout)
    except OSError as exc:
        stderr.write(f"qspec: cannot write output: {exc}\n")
        return EXIT_CONFIG
    return EXIT_OK if res.passed else EXIT_VERIFY


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
