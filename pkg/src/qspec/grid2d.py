"""Finite differences on rasterized planar domains.

Grid points sit on the lattice h·Z² (h·Z for intervals).  A point is
interior when it lies strictly inside the domain; every other lattice
point carries the homogeneous Dirichlet value 0.  The discrete Dirichlet
energy is the edge sum Σ w_e (u_i - u_j)², which for unit weights is the
5-point Laplacian, and integrals use the nodal mass h² per point.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh, splu

from qspec.core import (
    Ball,
    ConvergenceError,
    DisjointUnion,
    Interval,
    InvalidInput,
    ProblemParams,
    QEigenpair,
    QSpecError,
    RasterMask,
    Rectangle,
    scaling_exponent,
)


class EmptyDomainError(QSpecError, ValueError):
    pass


class SymmetryError(QSpecError, ValueError):
    pass


class SolverError(QSpecError, RuntimeError):
    pass


SEED = 0x5EED


@dataclass(frozen=True)
class Dumbbell:
    """Two unit ℓ¹-balls {|x1 ∓ (1-ε)| + |x2| < 1}, each cut at x1 = 0.

    The pieces meet through a neck {x1 = 0, |x2| < ε}.
    """

    eps: float

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise InvalidInput("eps must lie in (0, 1)")

    def contains(self, x, y):
        c = 1.0 - self.eps
        right = (x >= 0) & (np.abs(x - c) + np.abs(y) < 1.0)
        left = (x <= 0) & (np.abs(x + c) + np.abs(y) < 1.0)
        return right | left

    @property
    def bbox(self):
        c = 1.0 - self.eps
        return (-c - 1.0, c + 1.0), (-1.0, 1.0)


@dataclass(frozen=True)
class Diamond:
    """ℓ¹-ball {|x1 - c1| + |x2 - c2| < r}."""

    r: float
    center: tuple = (0.0, 0.0)

    def contains(self, x, y):
        return np.abs(x - self.center[0]) + np.abs(y - self.center[1]) < self.r

    @property
    def bbox(self):
        cx, cy = self.center
        return (cx - self.r, cx + self.r), (cy - self.r, cy + self.r)


# ---------------------------------------------------------------------------
# Grids


@dataclass(frozen=True, eq=False)
class Grid:
    """Rasterized domain together with its assembled discrete operators.

    ``mask[i, j]`` refers to the point origin + h·(i, j); axis 0 is x1.
    ``labels`` numbers the components of a disjoint union (0 elsewhere).
    ``half_axis`` marks the column x1 = 0 of a half domain on which the
    mirror (natural) condition is imposed.
    """

    mask: np.ndarray
    h: float
    origin: tuple
    ndim: int = 2
    labels: np.ndarray | None = None
    half_axis: int | None = None
    stiffness: sp.csr_matrix = field(default=None, repr=False)
    mass: np.ndarray = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return int(self.mask.sum())

    @property
    def index(self) -> np.ndarray:
        idx = -np.ones(self.mask.shape, dtype=np.int64)
        idx[self.mask] = np.arange(self.n)
        return idx

    def coords(self):
        i, j = np.nonzero(self.mask)
        return self.origin[0] + self.h * i, self.origin[1] + self.h * j

    def to_array(self, values) -> np.ndarray:
        out = np.zeros(self.mask.shape)
        out[self.mask] = values
        return out

    def reflection(self, center: float = 0.0) -> np.ndarray:
        """Permutation p with values[p] the reflection x1 -> 2c - x1."""
        shift = (2.0 * center - 2.0 * self.origin[0]) / self.h - (self.mask.shape[0] - 1)
        s = int(round(shift))
        if abs(shift - s) > 1e-9 or s != 0:
            raise SymmetryError("lattice is not symmetric about the reflection axis")
        if not np.array_equal(self.mask, self.mask[::-1, :]):
            raise SymmetryError("mask is not invariant under the reflection")
        return self.index[::-1, :][self.mask]

    def mask_hash(self) -> str:
        return hashlib.sha256(np.packbits(self.mask).tobytes() + str(self.mask.shape).encode()).hexdigest()


def _lattice(lo, hi, h):
    """Points lo + i·h in [lo, hi], anchored at the lower corner.

    A box symmetric about 0 whose width is a multiple of h gets exactly
    mirrored coordinates, so reflection symmetry survives rounding.
    """
    n = math.floor((hi - lo) / h + 1e-9) + 1
    i = np.arange(n)
    xs = lo + h * i
    if lo == -hi and abs((n - 1) * h - (hi - lo)) <= 1e-9 * h:
        xs = np.where(i <= (n - 1) // 2, xs, -(lo + h * (n - 1 - i)))
        if (n - 1) % 2 == 0:
            xs[(n - 1) // 2] = 0.0
    return xs


def _raster_predicate(contains, bbox, h):
    (x0, x1), (y0, y1) = bbox
    xs = _lattice(x0, x1, h)
    ys = _lattice(y0, y1, h)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return contains(X, Y), (float(xs[0]), float(ys[0]))


def _raster_single(dom, h):
    if isinstance(dom, Rectangle):
        a, b = dom.a / 2.0, dom.b / 2.0
        return _raster_predicate(lambda x, y: (np.abs(x) < a) & (np.abs(y) < b), ((-a, a), (-b, b)), h)
    if isinstance(dom, Ball):
        R = dom.radius
        return _raster_predicate(lambda x, y: x * x + y * y < R * R, ((-R, R), (-R, R)), h)
    if isinstance(dom, (Dumbbell, Diamond)):
        return _raster_predicate(dom.contains, dom.bbox, h)
    if isinstance(dom, RasterMask):
        if abs(dom.h - h) > 1e-12 * h:
            raise InvalidInput(f"mask was drawn at h={dom.h}, requested h={h}")
        return dom.mask.copy(), tuple(dom.origin)
    raise InvalidInput(f"cannot rasterize {type(dom).__name__} in the plane")


def rasterize(domain, h: float) -> Grid:
    """Rasterize ``domain`` at mesh width ``h`` and assemble its operators.

    Interior points are the lattice nodes x_min + h·i strictly inside the
    domain, the lattice being anchored at the lower corner of the bounding
    box.  Rectangles, disks and the dumbbell are centered at the origin.
    Components of a :class:`DisjointUnion` are laid out left to right
    along x1 with the declared separation between bounding boxes.
    """
    if not h > 0:
        raise InvalidInput("h must be positive")
    if isinstance(domain, Interval):
        n = math.ceil(domain.length / h) + 1
        xs = np.arange(n) * h
        mask = ((xs > 0) & (xs < domain.length))[:, None]
        return _finish(mask, h, (0.0, 0.0), ndim=1)
    if isinstance(domain, DisjointUnion):
        return _raster_union(domain, h)
    mask, origin = _raster_single(domain, h)
    return _finish(mask, h, origin)


def _raster_union(dom: DisjointUnion, h):
    parts = []
    for c in dom.components:
        if isinstance(c, (DisjointUnion, Interval)):
            raise InvalidInput("union components must be planar and not nested")
        m, _ = _raster_single(c, h)
        parts.append(m)
    gap = max(2, math.ceil(dom.separation / h))
    height = max(m.shape[1] for m in parts)
    width = sum(m.shape[0] for m in parts) + gap * (len(parts) - 1)
    mask = np.zeros((width, height), dtype=bool)
    labels = np.zeros((width, height), dtype=np.int32)
    x = 0
    for k, m in enumerate(parts, start=1):
        y = (height - m.shape[1]) // 2
        mask[x : x + m.shape[0], y : y + m.shape[1]] = m
        labels[x : x + m.shape[0], y : y + m.shape[1]][m] = k
        x += m.shape[0] + gap
    return _finish(mask, h, (0.0, 0.0), labels=labels)


def half_domain(grid: Grid) -> Grid:
    """Restriction of a reflection-symmetric grid to x1 >= 0, with the
    mirror condition on the column x1 = 0."""
    grid.reflection()
    i_axis = int(round(-grid.origin[0] / grid.h))
    if abs(grid.origin[0] + i_axis * grid.h) > 1e-9 * grid.h:
        raise SymmetryError("the mirror line x1 = 0 is not a lattice column")
    mask = grid.mask[i_axis:, :].copy()
    return _finish(mask, grid.h, (0.0, grid.origin[1]), half_axis=0)


def _finish(mask, h, origin, ndim=2, labels=None, half_axis=None) -> Grid:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyDomainError(f"no interior lattice points at h={h}")
    K, m = _assemble(mask, h, ndim, half_axis)
    return Grid(mask, float(h), tuple(float(o) for o in origin), ndim, labels, half_axis, K, m)


def _assemble(mask, h, ndim, half_axis):
    """Edge-weighted graph Laplacian (scaled by h^{d-2}) and nodal masses h^d."""
    n = int(mask.sum())
    idx = -np.ones(mask.shape, dtype=np.int64)
    idx[mask] = np.arange(n)
    padded = np.pad(idx, 1, constant_values=-1)
    node_w = np.ones(mask.shape)
    if half_axis is not None:
        node_w[0, :] = 0.5
    diag = np.zeros(n)
    rows, cols, vals = [], [], []
    axes = (0,) if ndim == 1 else (0, 1)
    for ax in axes:
        for step in (1, -1):
            nb = np.roll(padded, -step, axis=ax)[1:-1, 1:-1]
            w = np.ones(mask.shape)
            if half_axis is not None:
                if ax == 0:
                    # mirror: the edge to x1 = -h duplicates the edge to +h
                    w[0, :] = 0.0 if step == -1 else 1.0
                else:
                    w[0, :] = 0.5
            src = idx[mask]
            dst = nb[mask]
            ww = w[mask]
            diag += ww
            inner = dst >= 0
            rows.append(src[inner])
            cols.append(dst[inner])
            vals.append(-ww[inner])
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    K = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    K = K * h ** (ndim - 2)
    return K, node_w[mask] * h**ndim


# ---------------------------------------------------------------------------
# Fields


@dataclass(frozen=True, eq=False)
class GridField:
    grid: Grid
    values: np.ndarray

    @property
    def h(self):
        return self.grid.h

    def to_csv(self, precision: int = 17) -> str:
        x, y = self.grid.coords()
        fmt = f"{{:.{precision}g}}"
        lines = ["x,y,value"]
        for a, b, v in zip(x, y, self.values):
            lines.append(f"{fmt.format(a)},{fmt.format(b)},{fmt.format(v)}")
        return "\n".join(lines) + "\n"

    def header(self) -> dict:
        g = self.grid
        nx, ny = g.mask.shape
        return {
            "h": g.h,
            "bbox": [g.origin[0], g.origin[1], g.origin[0] + g.h * (nx - 1), g.origin[1] + g.h * (ny - 1)],
            "shape": [nx, ny],
            "mask_sha256": g.mask_hash(),
            "points": g.n,
        }

    def write(self, path, precision: int = 17):
        with open(path, "w") as fh:
            fh.write(self.to_csv(precision))
        with open(str(path) + ".json", "w") as fh:
            json.dump(self.header(), fh, indent=2, sort_keys=True)


def lq_norm(grid: Grid, u, q) -> float:
    return float(np.sum(grid.mass * np.abs(u) ** q) ** (1.0 / q))


def dirichlet_energy(grid: Grid, u) -> float:
    return float(u @ (grid.stiffness @ u))


def rayleigh_quotient(grid: Grid, u, q) -> float:
    return dirichlet_energy(grid, u) / lq_norm(grid, u, q) ** 2


# ---------------------------------------------------------------------------
# Nonlinear inverse iteration


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 100_000
    seed: int = SEED
    # additionally require the equation residual below this value
    res_tol: float = 1e-7


DEFAULT_OPTS = SolverOptions()


def _factor(grid: Grid):
    try:
        return splu(grid.stiffness.tocsc(), permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise SolverError(f"sparse factorization failed: {exc}") from exc


def _residual_vec(grid, u, lam, q):
    return grid.stiffness @ u / grid.mass - lam * np.abs(u) ** (q - 1) * np.sign(u)


def residual(pair: QEigenpair, grid: Grid | None = None) -> float:
    """max |-Δ_h u - λ|u|^{q-2}u| / (λ ‖u‖_∞^{q-1}) over interior points."""
    field_ = pair.eigenfunction
    grid = grid or field_.grid
    u = field_.values
    q = pair.params.q
    r = _residual_vec(grid, u, pair.lam, q)
    return float(np.max(np.abs(r)) / (pair.lam * np.max(np.abs(u)) ** (q - 1)))


def _iterate(grid, params, u0, opts, project=None):
    q = params.q
    lu = _factor(grid)
    u = np.abs(u0)
    if project is not None:
        u = project(u)
    u = u / lq_norm(grid, u, q)
    lam = rayleigh_quotient(grid, u, q)
    history = [lam]
    for it in range(1, opts.max_iter + 1):
        v = lu.solve(grid.mass * u ** (q - 1))
        if not np.all(np.isfinite(v)):
            raise SolverError("linear solve produced non-finite values")
        if project is not None:
            v = project(v)
        v = np.maximum(v, 0.0)
        u = v / lq_norm(grid, v, q)
        new = rayleigh_quotient(grid, u, q)
        history.append(new)
        done = abs(new - lam) <= opts.tol * abs(new)
        lam = new
        if done:
            r = np.max(np.abs(_residual_vec(grid, u, lam, q))) / (lam * np.max(u) ** (q - 1))
            if r <= opts.res_tol:
                return lam, u, it, history
    raise ConvergenceError(f"no convergence after {opts.max_iter} iterations", last_value=lam)


def _pair(grid, params, lam, u, it, history, solver, **meta):
    return QEigenpair(
        lam=float(lam),
        eigenfunction=GridField(grid, u),
        lq_norm=lq_norm(grid, u, params.q),
        sign_class="positive",
        params=params,
        meta={"solver": solver, "h": grid.h, "iterations": it, "quotients": history, **meta},
    )


def random_start(grid: Grid, seed: int = SEED) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return 0.5 + rng.random(grid.n)


def minimize_rayleigh(
    params: ProblemParams, grid: Grid, opts: SolverOptions = DEFAULT_OPTS, start=None
) -> QEigenpair:
    """First q-eigenpair on the grid by normalized inverse iteration

        -Δ_h v = u_k^{q-1},   u_{k+1} = v / ‖v‖_{L^q}.

    Starts from a seeded positive random field unless ``start`` is given.
    """
    _check_q(params)
    u0 = random_start(grid, opts.seed) if start is None else np.asarray(start, dtype=float)
    lam, u, it, hist = _iterate(grid, params, u0, opts)
    return _pair(grid, params, lam, u, it, hist, "inverse-iteration")


def minimize_rayleigh_symmetric(
    params: ProblemParams,
    grid: Grid,
    axis: float = 0.0,
    opts: SolverOptions = DEFAULT_OPTS,
    start=None,
) -> QEigenpair:
    """Minimum of the quotient over fields even in x1 about x1 = ``axis``."""
    _check_q(params)
    perm = grid.reflection(axis)

    def project(v):
        return 0.5 * (v + v[perm])

    u0 = random_start(grid, opts.seed) if start is None else np.asarray(start, dtype=float)
    lam, u, it, hist = _iterate(grid, params, u0, opts, project)
    return _pair(grid, params, lam, u, it, hist, "inverse-iteration-symmetric", axis=axis)


def _check_q(params):
    if not 1 < params.q < params.two_star:
        raise InvalidInput("need 1 < q < 2*")
    if params.N not in (1, 2):
        raise InvalidInput("grid solvers are planar (N = 2) or one-dimensional (N = 1)")


def richardson(coarse: float, fine: float, order: int = 2) -> float:
    """Extrapolate values at h and h/2 assuming error ~ h**order."""
    f = 2.0**order
    return (f * fine - coarse) / (f - 1.0)


# ---------------------------------------------------------------------------
# Linearized operator


@dataclass(frozen=True)
class LinearizedSpectrum:
    mu: tuple
    m: int
    ground_state_sign: str
    second_changes_sign: bool
    vectors: np.ndarray = field(default=None, repr=False)


def _sign_pattern(v, rel=1e-8):
    big = np.max(np.abs(v))
    pos = np.any(v > rel * big)
    neg = np.any(v < -rel * big)
    if pos and neg:
        return "sign_changing"
    return "positive" if pos else "negative"


def linearized_spectrum(pair: QEigenpair, params: ProblemParams, m: int = 4) -> LinearizedSpectrum:
    """Smallest ``m`` eigenvalues μ of -Δ_h φ - (q-1)λ₁ U^{q-2} φ.

    Shift-invert Lanczos with a shift below the Gershgorin lower bound, so
    the eigenvalues nearest the shift are the bottom of the spectrum.
    """
    q = params.q
    if not 2 < q < params.two_star:
        raise InvalidInput("linearized spectrum is studied for 2 < q < 2*")
    if pair.sign_class != "positive":
        raise InvalidInput("need a first positive eigenpair")
    grid = pair.eigenfunction.grid
    U = pair.eigenfunction.values
    lam = pair.lam
    weight = (q - 1.0) * lam * np.abs(U) ** (q - 2.0)
    A = (grid.stiffness - sp.diags(grid.mass * weight)).tocsc()
    M = sp.diags(grid.mass).tocsc()
    shift = -(q - 1.0) * lam * np.max(np.abs(U)) ** (q - 2.0) - 1.0
    try:
        mu, vecs = eigsh(A, k=m, M=M, sigma=shift, which="LM", tol=1e-12)
    except Exception as exc:  # ARPACK stagnation
        raise ConvergenceError(f"linearized eigen-iteration failed: {exc}") from exc
    order = np.argsort(mu)
    mu, vecs = mu[order], vecs[:, order]
    return LinearizedSpectrum(
        mu=tuple(float(x) for x in mu),
        m=m,
        ground_state_sign=_sign_pattern(vecs[:, 0]),
        second_changes_sign=_sign_pattern(vecs[:, 1]) == "sign_changing" if m > 1 else False,
        vectors=vecs,
    )


def l2_norm_sq(grid: Grid, u) -> float:
    return float(np.sum(grid.mass * u * u))


# ---------------------------------------------------------------------------
# Dumbbell


def lobe_start(grid: Grid) -> np.ndarray:
    """Positive field concentrated in the lobe x1 > 0."""
    x, y = grid.coords()
    return np.where(x > 0, 1.0, 1e-3) + 0.0 * y


def _orient(grid, u, q):
    """Reflect u so that its heavier lobe is x1 > 0."""
    x, _ = grid.coords()
    w = grid.mass * np.abs(u) ** q
    if np.sum(w[x < 0]) > np.sum(w[x > 0]):
        return u[grid.reflection()]
    return u


def localization(grid: Grid, u, q) -> float:
    """Share of ∫|u|^q carried by {x1 > 0}."""
    x, _ = grid.coords()
    w = grid.mass * np.abs(u) ** q
    return float(np.sum(w[x > 0]) / np.sum(w))


@dataclass
class DumbbellReport:
    epsilon: float
    q: float
    h: float
    lambda1: float
    lambda1_sym: float
    mu_q_half: float
    ratio: float
    localization: float
    factor: float
    identity_gap: float
    lambda1_cube: float
    cube_bound: float
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = {
            "epsilon": self.epsilon,
            "q": self.q,
            "h": self.h,
            "lambda1": self.lambda1,
            "lambda1_sym": self.lambda1_sym,
            "mu_q_half": self.mu_q_half,
            "ratio": self.ratio,
            "localization": self.localization,
            "factor": self.factor,
            "identity_gap": self.identity_gap,
            "lambda1_cube": self.lambda1_cube,
            "cube_bound": self.cube_bound,
        }
        d.update(self.extra)
        return d


def _solver_error(pair: QEigenpair) -> float:
    """Eigenvalue uncertainty of a converged iteration: the last quotient
    step or λ times the relative equation residual, whichever is larger."""
    hist = pair.meta["quotients"]
    step = abs(hist[-1] - hist[-2]) if len(hist) > 1 else 0.0
    return max(step, pair.lam * residual(pair), pair.lam * np.finfo(float).eps)


def symmetric_factor(q: float) -> float:
    return 2.0 ** (1.0 - 2.0 / q)


def dumbbell_experiment(
    epsilon: float,
    params: ProblemParams,
    h: float,
    opts: SolverOptions = DEFAULT_OPTS,
    cube_lambda: float | None = None,
    error_estimate: bool = True,
) -> DumbbellReport:
    """Symmetry breaking on the dumbbell Ω_ε.

    Computes λ₁ (lower of a random and a one-lobe start), λ₁^sym, and μ_q
    of the half domain with the mirror condition on x1 = 0.  ``cube_lambda``
    is λ₁(Q₁; q) of the unit ℓ¹-ball; when omitted it is obtained from a
    Richardson-extrapolated unit-square solve at (h, h/2) and the scaling
    law, Q₁ being a square of side √2.

    With ``error_estimate`` the full and symmetric problems are also solved
    at 2h; for a second-order scheme |λ(h) - λ(2h)|/3 estimates the error
    at h, and the report carries the margin λ₁^sym - λ₁ in those units.
    """
    if params.N != 2:
        raise InvalidInput("dumbbell experiment is planar")
    q = params.q
    if not 2 < q < params.two_star:
        raise InvalidInput("symmetry breaking needs 2 < q < 2*")
    grid = rasterize(Dumbbell(epsilon), h)
    full_a = minimize_rayleigh(params, grid, opts)
    full_b = minimize_rayleigh(params, grid, opts, start=lobe_start(grid))
    full = min((full_a, full_b), key=lambda p: p.lam)
    sym = minimize_rayleigh_symmetric(params, grid, 0.0, opts)
    half = half_domain(grid)
    mu = minimize_rayleigh(params, half, opts)

    u = _orient(grid, full.eigenfunction.values, q)
    factor = symmetric_factor(q)
    if cube_lambda is None:
        cube_lambda = unit_square_extrapolated(params, h, opts) * math.sqrt(2.0) ** scaling_exponent(params)
    bound = (1.0 - epsilon) ** scaling_exponent(params) * cube_lambda
    solver_error = _solver_error(sym) + factor * _solver_error(mu)
    extra = {
        "solver_error": solver_error,
        "identity_in_errors": abs(sym.lam - factor * mu.lam) / solver_error,
        "lambda1_random_start": full_a.lam,
        "lambda1_lobe_start": full_b.lam,
        "points": grid.n,
        "half_points": half.n,
    }
    if error_estimate:
        g2 = rasterize(Dumbbell(epsilon), 2 * h)
        c_full = min(
            minimize_rayleigh(params, g2, opts).lam,
            minimize_rayleigh(params, g2, opts, start=lobe_start(g2)).lam,
        )
        c_sym = minimize_rayleigh_symmetric(params, g2, 0.0, opts).lam
        err = abs(full.lam - c_full) / 3.0 + abs(sym.lam - c_sym) / 3.0
        extra.update(
            {
                "lambda1_coarse": c_full,
                "lambda1_sym_coarse": c_sym,
                "discretization_error": err,
                "margin": sym.lam - full.lam,
                "margin_in_errors": (sym.lam - full.lam) / err if err > 0 else math.inf,
            }
        )
    return DumbbellReport(
        epsilon=epsilon,
        q=q,
        h=h,
        lambda1=full.lam,
        lambda1_sym=sym.lam,
        mu_q_half=mu.lam,
        ratio=sym.lam / full.lam,
        localization=localization(grid, u, q),
        factor=factor,
        identity_gap=abs(sym.lam - factor * mu.lam) / sym.lam,
        lambda1_cube=cube_lambda,
        cube_bound=bound,
        extra=extra,
    )


def unit_square_extrapolated(params: ProblemParams, h: float, opts: SolverOptions = DEFAULT_OPTS) -> float:
    coarse = minimize_rayleigh(params, rasterize(Rectangle(1.0, 1.0), h), opts).lam
    fine = minimize_rayleigh(params, rasterize(Rectangle(1.0, 1.0), h / 2), opts).lam
    return richardson(coarse, fine)
