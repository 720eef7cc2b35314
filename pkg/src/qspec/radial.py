"""Shooting for the free Lane-Emden equation on balls and intervals.

The free radial problem

    -(ρ^{N-1} u')' = ρ^{N-1} |u|^{q-2} u,    u(0) = a,  u'(0) = 0

is integrated forward from the origin.  Its k-th zero R_k gives a
Dirichlet solution on B_{R_k}; the eigenvalue there is ‖U‖_{L^q}^{q-2}
and the scaling law moves it to any other radius.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from qspec.core import (
    ConvergenceError,
    InvalidInput,
    ProblemParams,
    QEigenpair,
    QSpecError,
    scale_eigenvalue,
    unit_ball_volume,
)

log = logging.getLogger(__name__)


class StiffnessError(QSpecError, RuntimeError):
    pass


class ZeroNotFound(QSpecError, RuntimeError):
    def __init__(self, message, window):
        super().__init__(message)
        self.window = window


@dataclass(frozen=True)
class Tolerances:
    rtol: float = 1e-10
    atol: float = 1e-12
    zero: float = 1e-12
    residual: float = 1e-6


DEFAULT_TOL = Tolerances()

# uniform samples added to the adaptive steps of a stored eigenfunction
PROFILE_POINTS = 4001


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Samples of a radial (or one-dimensional) solution.

    ``coordinate`` is ``"radial"`` for ϱ = |x| on a ball and
    ``"interval"`` for x on (0, L).
    """

    rho: np.ndarray
    u: np.ndarray
    uprime: np.ndarray
    zeros: tuple
    N: int
    q: float
    amplitude: float
    coordinate: str = "radial"
    residual: float = 0.0
    meta: dict = field(default_factory=dict)

    def to_csv(self, precision: int = 17) -> str:
        lines = ["rho,u,uprime"]
        fmt = f"{{:.{precision}g}}"
        for r, a, b in zip(self.rho, self.u, self.uprime):
            lines.append(",".join(fmt.format(v) for v in (r, a, b)))
        return "\n".join(lines) + "\n"

    def header(self, lam: float | None = None) -> dict:
        head = {
            "N": self.N,
            "q": self.q,
            "amplitude": self.amplitude,
            "zeros": list(self.zeros),
            "coordinate": self.coordinate,
        }
        if lam is not None:
            head["lambda"] = lam
        return head

    def write(self, path, lam: float | None = None, precision: int = 17):
        """Write ``path`` (CSV) and ``path + '.json'`` (header)."""
        with open(path, "w") as fh:
            fh.write(self.to_csv(precision))
        with open(str(path) + ".json", "w") as fh:
            json.dump(self.header(lam), fh, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# Shooting


def _rhs(N, q):
    def f(r, y):
        u, up = y[0], y[1]
        au = abs(u)
        nl = au ** (q - 1.0) * math.copysign(1.0, u) if au > 0 else 0.0
        return (up, -(N - 1) / r * up - nl, r ** (N - 1) * au**q)

    return f


def _start(N, q, a):
    """Two-term Taylor start at ϱ = h0."""
    h0 = 1e-6 * max(1.0, a ** ((2.0 - q) / 2.0))
    c = a ** (q - 1.0) / (2.0 * N)
    u0 = a - c * h0**2
    up0 = -2.0 * c * h0
    # ∫_0^{h0} s^{N-1} a^q ds, leading order
    m0 = a**q * h0**N / N
    return h0, np.array([u0, up0, m0])


class _Shot:
    """Piecewise dense output of a forward shot plus its events."""

    def __init__(self, params: ProblemParams, amplitude: float, tol: Tolerances):
        if not amplitude > 0:
            raise InvalidInput("amplitude must be positive")
        self.N, self.q, self.a, self.tol = params.N, params.q, float(amplitude), tol
        self.h0, y0 = _start(self.N, self.q, self.a)
        self.t = [np.array([0.0, self.h0])]
        self.y = [np.array([[self.a, y0[0]], [0.0, y0[1]], [0.0, y0[2]]])]
        self.pieces = []  # (t0, t1, OdeSolution)
        self.zeros = []
        self.zero_states = []
        self.end = self.h0
        self.state = y0
        self.rhs = _rhs(self.N, self.q)

    def advance(self, t1, max_zeros=None):
        """Integrate from the current end to ``t1``, stopping at the
        ``max_zeros``-th zero in total if given."""

        def event(r, y):
            return y[0]

        if max_zeros is not None:
            event.terminal = max_zeros - len(self.zeros)
        sol = solve_ivp(
            self.rhs,
            (self.end, t1),
            self.state,
            method="DOP853",
            rtol=self.tol.rtol,
            atol=self.tol.atol,
            dense_output=True,
            events=event,
        )
        if sol.status == -1:
            raise StiffnessError(f"integration failed at ϱ≈{self.end}: {sol.message}")
        self.pieces.append((sol.t[0], sol.t[-1], sol.sol))
        self.t.append(sol.t)
        self.y.append(sol.y)
        for te, ye in zip(sol.t_events[0], sol.y_events[0]):
            if self.zeros and te <= self.zeros[-1]:
                continue
            self.zeros.append(float(te))
            self.zero_states.append(ye.copy())
        self.end = float(sol.t[-1])
        self.state = sol.y[:, -1].copy()
        return sol.status == 1

    def __call__(self, r):
        """Evaluate (u, u', mass) on an array of radii in [0, end]."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty((3, r.size))
        c = self.a ** (self.q - 1.0) / (2.0 * self.N)
        near = r <= self.h0
        out[0, near] = self.a - c * r[near] ** 2
        out[1, near] = -2.0 * c * r[near]
        out[2, near] = self.a**self.q * r[near] ** self.N / self.N
        for t0, t1, s in self.pieces:
            sel = (r > t0) & (r <= t1) & ~near
            if sel.any():
                out[:, sel] = s(r[sel])
        return out

    def samples(self, upto):
        t = np.concatenate(self.t)
        y = np.concatenate(self.y, axis=1)
        t, idx = np.unique(t, return_index=True)
        y = y[:, idx]
        keep = t <= upto
        return t[keep], y[:, keep]

    def residual(self, upto, npts=40_001):
        """Residual of the integrated equation

            ϱ^{N-1} u'(ϱ) + ∫_0^ϱ s^{N-1} |u|^{q-2}u ds = 0

        on a dense grid, relative to max |ϱ^{N-1} u'|."""
        from scipy.integrate import cumulative_simpson

        r = np.linspace(0.0, upto, npts)
        u, up, _ = self(r)
        w = r ** (self.N - 1)
        f = w * np.abs(u) ** (self.q - 1) * np.sign(u)
        res = w * up + cumulative_simpson(f, x=r, initial=0.0)
        return float(np.max(np.abs(res)) / np.max(np.abs(w * up)))


def _check_crossings(shot: _Shot):
    # tangential touches without sign change are ignored by the event search
    t, y = shot.samples(shot.end)
    tiny = (np.abs(y[0]) < 1e-13) & (t > shot.h0)
    if tiny.any():
        log.info("near-zero values without detected crossing at ϱ=%s", t[tiny][:5])


def shoot_free(
    params: ProblemParams,
    amplitude: float = 1.0,
    rho_max: float = 10.0,
    tol: Tolerances = DEFAULT_TOL,
) -> RadialProfile:
    """Shoot from the origin and record every zero in [0, rho_max]."""
    if not rho_max > 0:
        raise InvalidInput("rho_max must be positive")
    shot = _Shot(params, amplitude, tol)
    if rho_max > shot.h0:
        shot.advance(rho_max)
    _check_crossings(shot)
    t, y = shot.samples(rho_max)
    return RadialProfile(
        rho=t,
        u=y[0],
        uprime=y[1],
        zeros=tuple(z for z in shot.zeros if z <= rho_max),
        N=params.N,
        q=params.q,
        amplitude=float(amplitude),
        residual=shot.residual(min(rho_max, shot.end)),
    )


def _shoot_to_zero(params, amplitude, k, tol, rho0=None, max_doublings=60):
    if int(k) != k or k < 1:
        raise InvalidInput("k must be a positive integer")
    shot = _Shot(params, amplitude, tol)
    t1 = rho0 or 4.0 * max(1.0, amplitude ** ((2.0 - params.q) / 2.0))
    for _ in range(max_doublings):
        if shot.advance(t1, max_zeros=k) or len(shot.zeros) >= k:
            return shot
        t1 *= 2.0
    raise ZeroNotFound(f"only {len(shot.zeros)} of {k} zeros found up to ϱ={shot.end:g}", shot.end)


def kth_zero_radius(params: ProblemParams, amplitude: float, k: int, tol: Tolerances = DEFAULT_TOL) -> float:
    return _shoot_to_zero(params, amplitude, k, tol).zeros[k - 1]


def pohozaev_constant(params: ProblemParams) -> float:
    """C_{q,N} = q / (2N - q(N-2)).

    Equals q/4 for N = 2 and (1/2N)·2*q/(2*-q) for N >= 3; N = 1 uses the
    same closed form.
    """
    N, q = params.N, params.q
    return q / (2.0 * N - q * (N - 2.0))


@dataclass(frozen=True)
class BallConstants:
    omega_N: float
    C_qN: float
    script_C: float


def ball_constants(params: ProblemParams, lam: float, R: float) -> BallConstants:
    """Unit-ball volume, Pohozaev constant and the boundary slope
    sqrt(λ / (N ω_N R^N C_{q,N})) of a unit-L^q first eigenfunction."""
    w = unit_ball_volume(params.N)
    C = pohozaev_constant(params)
    return BallConstants(w, C, math.sqrt(lam / (params.N * w * R**params.N * C)))


def _eigenpair_from_shot(shot, params, R_k, mass, R, lam_k, k, coordinate, family):
    """Rescale the shot on [0, R_k] to a unit-L^q eigenfunction on radius R."""
    N, q = params.N, params.q
    norm = mass ** (1.0 / q)
    t = R / R_k
    c = (1.0 / t) ** (N / q) / norm
    lam = lam_k if t == 1.0 else scale_eigenvalue(lam_k, t, params)
    r, _ = shot.samples(R_k)
    r = np.union1d(r, np.linspace(0.0, R_k, PROFILE_POINTS))
    y = shot(r)
    y[0, -1] = 0.0
    prof = RadialProfile(
        rho=r * t,
        u=c * y[0],
        uprime=c * y[1] / t,
        zeros=tuple(z * t for z in shot.zeros[:k]),
        N=N,
        q=q,
        amplitude=c * shot.a,
        coordinate=coordinate,
        residual=shot.residual(R_k),
        meta={"shot_radius": R_k, "shot_amplitude": shot.a, "scale": t},
    )
    return QEigenpair(
        lam=lam,
        eigenfunction=prof,
        lq_norm=(c**q * t**N * mass) ** (1.0 / q),
        sign_class="positive" if k == 1 else "sign_changing",
        params=params,
        meta={
            "solver": "radial-shooting",
            "k": k,
            "family": family,
            "R": R,
            "simpson_lq_norm": _radial_lq_norm(prof, params),
        },
    )


def _radial_lq_norm(prof: RadialProfile, params: ProblemParams, n: int = 10_001) -> float:
    """‖u‖_{L^q(B_R)} by composite Simpson on a monotone cubic densification."""
    from scipy.integrate import simpson
    from scipy.interpolate import CubicHermiteSpline

    spline = CubicHermiteSpline(prof.rho, prof.u, prof.uprime)
    r = np.linspace(prof.rho[0], prof.rho[-1], n)
    w = params.N * unit_ball_volume(params.N) * r ** (params.N - 1)
    return float(simpson(w * np.abs(spline(r)) ** params.q, x=r) ** (1.0 / params.q))


def ball_eigenvalue(
    params: ProblemParams, R: float = 1.0, k: int = 1, tol: Tolerances = DEFAULT_TOL
) -> QEigenpair:
    """k-th member of the radial family on B_R (k = 1 is λ₁(B_R; q)).

    The mass ∫ϱ^{N-1}|u|^q is carried as an extra ODE component, so the
    L^q norm at R_k comes from the same adaptive integration as the zero.
    """
    if not R > 0:
        raise InvalidInput("R must be positive")
    shot = _shoot_to_zero(params, 1.0, k, tol)
    R_k = shot.zeros[k - 1]
    mass = params.N * unit_ball_volume(params.N) * shot.zero_states[k - 1][2]
    lam_k = 1.0 if params.is_linear else mass ** ((params.q - 2.0) / params.q)
    return _eigenpair_from_shot(shot, params, R_k, mass, R, lam_k, k, "radial", "radial")


def radial_family(params: ProblemParams, R: float, kmax: int, tol: Tolerances = DEFAULT_TOL) -> list[float]:
    """Eigenvalues of the first ``kmax`` radial modes on B_R from one shot."""
    if not R > 0:
        raise InvalidInput("R must be positive")
    shot = _shoot_to_zero(params, 1.0, kmax, tol)
    vol = params.N * unit_ball_volume(params.N)
    out = []
    for R_k, state in zip(shot.zeros[:kmax], shot.zero_states):
        lam_k = 1.0 if params.is_linear else (vol * state[2]) ** ((params.q - 2.0) / params.q)
        out.append(scale_eigenvalue(lam_k, R / R_k, params))
    return out


def interval_eigenvalue(
    params: ProblemParams, L: float = 1.0, k: int = 1, tol: Tolerances = DEFAULT_TOL
) -> QEigenpair:
    """k-th Dirichlet q-eigenvalue of (0, L).

    The one-dimensional equation is autonomous, so the k-th eigenfunction
    is k alternating copies of the positive bump on (-z₁, z₁), where z₁ is
    the first zero of the even shot.
    """
    if params.N != 1:
        raise InvalidInput("interval_eigenvalue needs N = 1")
    if not L > 0:
        raise InvalidInput("L must be positive")
    if int(k) != k or k < 1:
        raise InvalidInput("k must be a positive integer")
    q = params.q
    shot = _shoot_to_zero(params, 1.0, 1, tol)
    z1 = shot.zeros[0]
    bump_mass = 2.0 * shot.zero_states[0][2]
    length = 2.0 * k * z1
    mass = k * bump_mass
    lam_len = 1.0 if params.is_linear else mass ** ((q - 2.0) / q)
    t = L / length
    lam = lam_len if t == 1.0 else scale_eigenvalue(lam_len, t, params)

    c = t ** (-1.0 / q) / mass ** (1.0 / q)
    x = np.linspace(0.0, length, 400 * k + 1)
    j = np.minimum((x // (2 * z1)).astype(int), k - 1)
    s = x - (2 * j + 1) * z1
    vals = shot(np.abs(s))
    sign = np.where(j % 2 == 0, 1.0, -1.0)
    prof = RadialProfile(
        rho=x * t,
        u=c * sign * vals[0],
        uprime=c * sign * np.sign(s) * vals[1] / t,
        zeros=tuple(2 * z1 * i * t for i in range(1, k)),
        N=1,
        q=q,
        amplitude=c,
        coordinate="interval",
        residual=shot.residual(z1),
        meta={"bump_half_width": z1 * t},
    )
    return QEigenpair(
        lam=lam,
        eigenfunction=prof,
        lq_norm=1.0,
        sign_class="positive" if k == 1 else "sign_changing",
        params=params,
        meta={"solver": "radial-shooting", "k": k, "family": "interval", "L": L},
    )


def boundary_slope_check(pair: QEigenpair, R: float | None = None) -> float:
    """Relative gap between |u'(R)| and the boundary slope constant."""
    if pair.sign_class != "positive":
        raise InvalidInput("boundary slope check needs a first (positive) eigenpair")
    prof = pair.eigenfunction
    if not isinstance(prof, RadialProfile) or prof.coordinate != "radial":
        raise InvalidInput("boundary slope check needs a radial profile")
    R = prof.rho[-1] if R is None else R
    const = ball_constants(pair.params, pair.lam, R)
    slope = abs(prof.uprime[-1])
    return abs(slope - const.script_C) / const.script_C
