"""Independent checks applied to solver output.

Each check returns a :class:`CheckReport`; nothing here feeds back into
the solvers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson, trapezoid
from scipy.interpolate import CubicHermiteSpline

from qspec.core import (
    Ball,
    InvalidInput,
    ProblemParams,
    QEigenpair,
    QSpecError,
    Rectangle,
    unit_ball_volume,
)
from qspec.grid2d import GridField, dirichlet_energy, lq_norm
from qspec.radial import RadialProfile, pohozaev_constant


class UnsupportedDomain(QSpecError, ValueError):
    pass


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    measured: float
    bound_or_target: float
    tolerance: float
    context: dict = field(default_factory=dict)
    details: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.passed))
        object.__setattr__(self, "measured", float(self.measured))
        object.__setattr__(self, "bound_or_target", float(self.bound_or_target))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "measured": _num(self.measured),
            "bound_or_target": _num(self.bound_or_target),
            "tolerance": _num(self.tolerance),
            "context": self.context,
            "details": [d.to_json() for d in self.details],
        }

    def to_jsonl(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _num(x):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


# ---------------------------------------------------------------------------
# Rellich-Pohozaev


def _radial_energy(prof: RadialProfile, lam: float, q: float, n: int = 20_001) -> float:
    """∫_{B_R} |∇u|² with u'' taken from the equation for the spline."""
    N = prof.N
    r = prof.rho
    with np.errstate(divide="ignore", invalid="ignore"):
        upp = -(N - 1) / r * prof.uprime - lam * np.abs(prof.u) ** (q - 1) * np.sign(prof.u)
    upp[0] = -lam * abs(prof.u[0]) ** (q - 1) * np.sign(prof.u[0]) / N
    spline = CubicHermiteSpline(r, prof.uprime, upp)
    x = np.linspace(r[0], r[-1], n)
    w = N * unit_ball_volume(N) * x ** (N - 1)
    return float(simpson(w * spline(x) ** 2, x=x))


def _radial_lq(prof: RadialProfile, q: float, n: int = 20_001) -> float:
    spline = CubicHermiteSpline(prof.rho, prof.u, prof.uprime)
    x = np.linspace(prof.rho[0], prof.rho[-1], n)
    w = prof.N * unit_ball_volume(prof.N) * x ** (prof.N - 1)
    return float(simpson(w * np.abs(spline(x)) ** q, x=x) ** (1.0 / q))


def _boundary_flux_rectangle(field_: GridField, dom: Rectangle) -> float:
    """∫_{∂Ω} |∂_ν u|² ⟨x, ν⟩ on a centered rectangle.

    Normal derivatives use the second-order one-sided difference
    (4u_1 - u_2) / 2h with u_0 = 0 on the boundary.
    """
    g = field_.grid
    h = g.h
    a, b = dom.a / 2.0, dom.b / 2.0
    for half in (a, b):
        if abs(half / h - round(half / h)) > 1e-9:
            raise UnsupportedDomain("rectangle sides must lie on the lattice")
    arr = g.to_array(field_.values)
    i_lo = int(round((-a - g.origin[0]) / h))
    i_hi = int(round((a - g.origin[0]) / h))
    j_lo = int(round((-b - g.origin[1]) / h))
    j_hi = int(round((b - g.origin[1]) / h))
    if i_lo < -1 or j_lo < -1:
        raise UnsupportedDomain("grid does not cover the rectangle")

    def side(u1, u2, length):
        d = (4.0 * u1 - u2) / (2.0 * h)
        vals = np.concatenate([[0.0], d**2, [0.0]])
        return simpson(vals, dx=h) if len(vals) % 2 == 1 else trapezoid(vals, dx=h)

    def at(i, j0, j1, axis):
        if axis == 0:
            return arr[i, j0:j1]
        return arr[j0:j1, i]

    # interior index ranges (exclusive of boundary lattice lines)
    jr = (j_lo + 1, j_hi)
    ir = (i_lo + 1, i_hi)
    total = 0.0
    total += a * side(arr[i_lo + 1, jr[0] : jr[1]], arr[i_lo + 2, jr[0] : jr[1]], 2 * b)
    total += a * side(arr[i_hi - 1, jr[0] : jr[1]], arr[i_hi - 2, jr[0] : jr[1]], 2 * b)
    total += b * side(arr[ir[0] : ir[1], j_lo + 1], arr[ir[0] : ir[1], j_lo + 2], 2 * a)
    total += b * side(arr[ir[0] : ir[1], j_hi - 1], arr[ir[0] : ir[1], j_hi - 2], 2 * a)
    return float(total)


def pohozaev_check(pair: QEigenpair, domain, params: ProblemParams, tol: float = 1e-4) -> CheckReport:
    """Compare λ(∫|u|^q)^{2/q} with C_{q,N} ∫_{∂Ω} |∇u|² ⟨x, ν⟩."""
    C = pohozaev_constant(params)
    ef = pair.eigenfunction
    if isinstance(domain, Ball) and isinstance(ef, RadialProfile) and ef.coordinate == "radial":
        R = float(ef.rho[-1])
        if abs(R - domain.radius) > 1e-9 * domain.radius:
            raise InvalidInput("profile radius does not match the ball")
        lhs = pair.lam * _radial_lq(ef, params.q) ** 2
        area = params.N * unit_ball_volume(params.N) * R ** (params.N - 1)
        rhs = C * ef.uprime[-1] ** 2 * R * area
        kind = "radial"
    elif isinstance(domain, Rectangle) and isinstance(ef, GridField):
        lhs = pair.lam * lq_norm(ef.grid, ef.values, params.q) ** 2
        rhs = C * _boundary_flux_rectangle(ef, domain)
        kind = "grid"
    else:
        raise UnsupportedDomain(
            f"Pohozaev check supports radial balls and grid rectangles, not {type(domain).__name__}"
        )
    mismatch = abs(lhs - rhs) / abs(lhs)
    return CheckReport(
        "pohozaev",
        mismatch <= tol,
        mismatch,
        0.0,
        tol,
        {"kind": kind, "lhs": lhs, "rhs": rhs, "C_qN": C, **_ctx(pair)},
    )


def _ctx(pair):
    return {k: v for k, v in pair.meta.items() if k in ("solver", "h", "k", "family", "R")}


# ---------------------------------------------------------------------------
# L-infinity scaling


def linf_ratio(pair: QEigenpair, params: ProblemParams) -> float:
    """‖U‖_∞ / ((√λ)^{2*/(2*-q)} ‖U‖_q)."""
    ts = params.two_star
    ef = pair.eigenfunction
    sup = float(np.max(np.abs(ef.u if isinstance(ef, RadialProfile) else ef.values)))
    return sup / (math.sqrt(pair.lam) ** (ts / (ts - params.q)) * pair.lq_norm)


def linf_bound_ratio(pairs, params: ProblemParams, spread_bound: float = 1.01) -> CheckReport:
    """The ratio above is domain independent, so across a radius sweep it
    must stay constant up to numerical error."""
    if params.N < 3:
        raise UnsupportedDomain("the scale-free L∞ ratio is tested for N >= 3")
    pairs = list(pairs)
    if not pairs:
        raise InvalidInput("no eigenpairs")
    rhos = [linf_ratio(p, params) for p in pairs]
    spread = max(rhos) / min(rhos)
    return CheckReport(
        "linf_ratio",
        spread <= spread_bound,
        spread,
        spread_bound,
        spread_bound - 1.0,
        {"ratios": rhos, "R": [p.meta.get("R") for p in pairs]},
    )


# ---------------------------------------------------------------------------
# Picone

# Calibrated on smooth pairs ψ = 2 + sin(ax)sin(by), φ = 1 + cos(cx)cos(dy),
# near-equality pairs φ ≈ cψ and rough random fields on the unit square at
# h = 1/32, 1/64, 1/128: the worst violation was below 1e-11·h·(1 + max|rhs|),
# i.e. roundoff. A slack of one leaves a wide margin for real fields.
PICONE_SLACK = 1.0


def picone_check(
    psi,
    phi,
    h: float,
    variant: str = "classical",
    params: ProblemParams | None = None,
    slack: float = PICONE_SLACK,
) -> CheckReport:
    """Pointwise Picone inequality on a common grid, centered differences.

    classical:    ⟨∇ψ, ∇(φ²/ψ)⟩ <= |∇φ|²
    generalized:  ⟨∇ψ, ∇(φ^q/ψ^{q-1})⟩ <= |∇φ|^q |∇ψ|^{2-q},   1 < q < 2
    """
    psi = np.asarray(psi, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if psi.shape != phi.shape:
        raise InvalidInput("fields must share a grid")
    if not np.min(psi) > 0:
        raise InvalidInput("psi must be strictly positive")
    if np.min(phi) < 0:
        raise InvalidInput("phi must be nonnegative")
    if variant == "classical":
        comp = phi**2 / psi
        gpsi = np.gradient(psi, h)
        gphi = np.gradient(phi, h)
        gcomp = np.gradient(comp, h)
        lhs = sum(a * b for a, b in zip(gpsi, gcomp))
        rhs = sum(a * a for a in gphi)
        q = 2.0
    elif variant == "generalized":
        if params is None or not 1 < params.q < 2:
            raise InvalidInput("generalized Picone is checked for 1 < q < 2")
        q = params.q
        comp = phi**q / psi ** (q - 1)
        gpsi = np.gradient(psi, h)
        gphi = np.gradient(phi, h)
        gcomp = np.gradient(comp, h)
        lhs = sum(a * b for a, b in zip(gpsi, gcomp))
        npsi = np.sqrt(sum(a * a for a in gpsi))
        nphi = np.sqrt(sum(a * a for a in gphi))
        rhs = nphi**q * npsi ** (2 - q)
    else:
        raise InvalidInput(f"unknown variant {variant!r}")
    viol = float(np.max(lhs - rhs))
    allowed = slack * h * (1.0 + float(np.max(np.abs(rhs))))
    return CheckReport(
        f"picone_{variant}",
        viol <= allowed,
        max(viol, 0.0),
        0.0,
        allowed,
        {"h": h, "q": q, "points": int(psi.size)},
    )


# ---------------------------------------------------------------------------
# Eigenpair sanity


def eigenpair_sanity(
    pair: QEigenpair, lambda1: float, params: ProblemParams, tol: float = 1e-6
) -> CheckReport:
    """λ >= λ₁, sign of first eigenfunctions, unit L^q norm and the energy
    identity ∫|∇u|² = λ (∫|u|^q)^{2/q}."""
    ef = pair.eigenfunction
    q = params.q
    if isinstance(ef, GridField):
        u = ef.values
        norm = lq_norm(ef.grid, u, q)
        energy = dirichlet_energy(ef.grid, u)
    elif isinstance(ef, RadialProfile) and ef.coordinate == "radial":
        u = ef.u
        norm = _radial_lq(ef, q)
        energy = _radial_energy(ef, pair.lam, q)
    elif isinstance(ef, RadialProfile):
        u = ef.u
        norm = float(simpson(np.abs(u) ** q, x=ef.rho) ** (1 / q))
        energy = float(simpson(ef.uprime**2, x=ef.rho))
    else:
        raise InvalidInput("unknown eigenfunction payload")

    subs = []
    subs.append(CheckReport("lower_bound", pair.lam >= lambda1 * (1 - tol), pair.lam, lambda1, tol))
    if pair.sign_class == "positive":
        neg = float(max(-np.min(u), 0.0) / np.max(np.abs(u)))
        subs.append(CheckReport("nonnegative", neg <= tol, neg, 0.0, tol))
    else:
        changes = bool(np.min(u) < 0 < np.max(u))
        subs.append(CheckReport("sign_changing", changes, float(np.min(u)), 0.0, 0.0))
    subs.append(CheckReport("unit_norm", abs(norm - 1.0) <= tol, norm, 1.0, tol))
    target = pair.lam * norm**2
    gap = abs(energy - target) / target
    subs.append(CheckReport("energy_identity", gap <= tol, energy, target, tol))
    return CheckReport(
        "eigenpair_sanity",
        all(s.passed for s in subs),
        pair.lam,
        lambda1,
        tol,
        _ctx(pair),
        tuple(subs),
    )
