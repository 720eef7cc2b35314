"""Problem parameters, domain descriptions and the scalar arithmetic of the q-spectrum.

Everything in here is a pure function of immutable values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence, Union

import numpy as np
from scipy.special import zeta


class QSpecError(Exception):
    """Base class for all library errors."""


class InvalidInput(QSpecError, ValueError):
    pass


class RegimeError(QSpecError, ValueError):
    """Operation is undefined for the given exponent q (typically q = 2)."""


class InadmissibleError(QSpecError, ValueError):
    pass


class ConvergenceError(QSpecError, RuntimeError):
    def __init__(self, message, last_value=None):
        super().__init__(message)
        self.last_value = last_value


def critical_exponent(N: int) -> float:
    """Critical Sobolev exponent 2* = 2N/(N-2); +inf when N <= 2."""
    if int(N) != N or N <= 0:
        raise InvalidInput(f"invalid dimension N={N!r}")
    if N <= 2:
        return math.inf
    return 2.0 * N / (N - 2)


@dataclass(frozen=True)
class ProblemParams:
    """Dimension ``N`` and exponent ``q``.

    ``q = 2`` (the linear Helmholtz case) is only accepted with
    ``sanity=True``; it is used to check solvers against classical values.
    """

    N: int
    q: float
    sanity: bool = False

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise InvalidInput(f"invalid dimension N={self.N!r}")
        q = float(self.q)
        if not q > 1.0:
            raise InvalidInput(f"q must exceed 1, got {q}")
        if not q < self.two_star:
            raise InvalidInput(f"q={q} is not subcritical (2*={self.two_star})")
        if q == 2.0 and not self.sanity:
            raise RegimeError("q = 2 requires sanity=True")

    @property
    def two_star(self) -> float:
        return critical_exponent(self.N)

    @property
    def is_linear(self) -> bool:
        return self.q == 2.0

    @property
    def subhomogeneous(self) -> bool:
        return self.q < 2.0

    def require_nonlinear(self, what: str = "operation"):
        if self.q == 2.0:
            raise RegimeError(f"{what} is undefined for q = 2")

    def to_json(self) -> dict:
        ts = self.two_star
        return {"N": self.N, "q": self.q, "two_star": "inf" if math.isinf(ts) else ts}


def scaling_exponent(params: ProblemParams) -> float:
    """Exponent e with λ(tΩ) = t**e λ(Ω)."""
    return params.N - 2.0 - 2.0 * params.N / params.q


def scale_eigenvalue(lam: float, t: float, params: ProblemParams) -> float:
    if not lam > 0 or not t > 0:
        raise InvalidInput("lambda and t must be positive")
    return t ** scaling_exponent(params) * lam


# ---------------------------------------------------------------------------
# Domains


@dataclass(frozen=True)
class Interval:
    length: float

    def __post_init__(self):
        _positive(self.length, "length")


@dataclass(frozen=True)
class Ball:
    radius: float

    def __post_init__(self):
        _positive(self.radius, "radius")


@dataclass(frozen=True)
class Rectangle:
    a: float
    b: float

    def __post_init__(self):
        _positive(self.a, "a")
        _positive(self.b, "b")


@dataclass(frozen=True, eq=False)
class RasterMask:
    """Boolean raster of interior points with mesh width ``h``.

    ``origin`` is the coordinate of ``mask[0, 0]``; axis 0 is x1.
    """

    mask: np.ndarray
    h: float
    origin: tuple = (0.0, 0.0)
    path: str | None = None

    def __post_init__(self):
        _positive(self.h, "h")
        m = np.asarray(self.mask, dtype=bool)
        if m.ndim != 2:
            raise InvalidInput("mask must be two-dimensional")
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)


@dataclass(frozen=True)
class DisjointUnion:
    """Components placed at pairwise positive distance.

    ``separation`` is metadata only; the geometry is never overlapped.
    """

    components: tuple
    separation: float = 1.0

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise InvalidInput("union needs at least one component")
        _positive(self.separation, "separation")
        object.__setattr__(self, "components", comps)


DomainSpec = Union[Interval, Ball, Rectangle, RasterMask, DisjointUnion]


def _positive(x, name):
    if not (isinstance(x, (int, float, np.floating)) and x > 0 and math.isfinite(x)):
        raise InvalidInput(f"{name} must be a positive finite number, got {x!r}")


def domain_from_json(obj: dict | str) -> DomainSpec:
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("type")
    try:
        if kind == "ball":
            return Ball(float(obj["radius"]))
        if kind == "interval":
            return Interval(float(obj["length"]))
        if kind == "rectangle":
            return Rectangle(float(obj["a"]), float(obj["b"]))
        if kind == "mask":
            mask = np.loadtxt(obj["path"], dtype=int).astype(bool)
            origin = tuple(obj.get("origin", (0.0, 0.0)))
            return RasterMask(mask, float(obj["h"]), origin, obj["path"])
        if kind == "union":
            comps = tuple(domain_from_json(c) for c in obj["components"])
            return DisjointUnion(comps, float(obj.get("separation", 1.0)))
    except KeyError as exc:
        raise InvalidInput(f"domain {kind!r} is missing field {exc}") from None
    raise InvalidInput(f"unknown domain type {kind!r}")


def domain_to_json(dom: DomainSpec) -> dict:
    if isinstance(dom, Ball):
        return {"type": "ball", "radius": dom.radius}
    if isinstance(dom, Interval):
        return {"type": "interval", "length": dom.length}
    if isinstance(dom, Rectangle):
        return {"type": "rectangle", "a": dom.a, "b": dom.b}
    if isinstance(dom, RasterMask):
        return {"type": "mask", "path": dom.path, "h": dom.h, "origin": list(dom.origin)}
    if isinstance(dom, DisjointUnion):
        return {
            "type": "union",
            "components": [domain_to_json(c) for c in dom.components],
            "separation": dom.separation,
        }
    raise InvalidInput(f"not a domain: {dom!r}")


# ---------------------------------------------------------------------------
# Eigenpairs


@dataclass(frozen=True, eq=False)
class QEigenpair:
    """An eigenvalue together with a unit-L^q eigenfunction.

    ``eigenfunction`` is a :class:`qspec.radial.RadialProfile` or a
    :class:`qspec.grid2d.GridField`.  ``meta`` records provenance
    (solver, tolerances, mode index, family label).
    """

    lam: float
    eigenfunction: Any
    lq_norm: float
    sign_class: str
    params: ProblemParams
    meta: dict = field(default_factory=dict)

    NORM_TOL = 1e-8

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidInput(f"eigenvalue must be positive, got {self.lam}")
        if abs(self.lq_norm - 1.0) > self.NORM_TOL:
            raise InvalidInput(f"eigenfunction not normalized (‖u‖_q = {self.lq_norm})")
        if self.sign_class not in ("positive", "sign_changing"):
            raise InvalidInput(f"bad sign class {self.sign_class!r}")


# ---------------------------------------------------------------------------
# Ball unions


@dataclass(frozen=True)
class GeometricRadii:
    """r_i = r0 * gamma**i for i = 0, 1, 2, ..."""

    r0: float
    gamma: float

    def radius(self, i: int) -> float:
        return self.r0 * self.gamma**i


@dataclass(frozen=True)
class PowerRadii:
    """r_i = r0 * (i + 1)**(-p) for i = 0, 1, 2, ..."""

    r0: float
    p: float

    def radius(self, i: int) -> float:
        return self.r0 * (i + 1.0) ** (-self.p)


@dataclass(frozen=True)
class AdmissibilityResult:
    status: str  # "admissible" | "inadmissible" | "undecided"
    exponent: float
    partial_sum: float
    series_value: float | None
    terms: int


def admissibility_exponent(params: ProblemParams) -> float:
    """Exponent N + 2q/(2-q) in the radii summability condition."""
    q = params.q
    return params.N + 2.0 * q / (2.0 - q)


def check_ball_union_admissible(
    radii: GeometricRadii | PowerRadii | Sequence[float],
    params: ProblemParams,
    K: int = 50,
    *,
    truncated: bool = False,
    envelope: GeometricRadii | None = None,
) -> AdmissibilityResult:
    """Summability test Σ r_i**(N + 2q/(2-q)) < ∞ for a union of disjoint balls.

    An explicit list is a finite union and hence admissible, unless
    ``truncated=True`` marks it as the head of an infinite family, in which
    case the answer is "undecided" without a dominating geometric
    ``envelope``.
    """
    if not params.q < 2.0:
        raise RegimeError("ball-union admissibility is stated for 1 < q < 2")
    e = admissibility_exponent(params)

    if isinstance(radii, GeometricRadii):
        _positive(radii.r0, "r0")
        partial = math.fsum(radii.radius(i) ** e for i in range(K))
        if not radii.gamma > 0:
            raise InvalidInput("gamma must be positive")
        if radii.gamma >= 1.0:
            return AdmissibilityResult("inadmissible", e, partial, math.inf, K)
        total = radii.r0**e / (1.0 - radii.gamma**e)
        return AdmissibilityResult("admissible", e, partial, total, K)

    if isinstance(radii, PowerRadii):
        _positive(radii.r0, "r0")
        partial = math.fsum(radii.radius(i) ** e for i in range(K))
        s = radii.p * e
        if s <= 1.0:
            return AdmissibilityResult("inadmissible", e, partial, math.inf, K)
        return AdmissibilityResult("admissible", e, partial, radii.r0**e * float(zeta(s, 1.0)), K)

    rs = [float(r) for r in radii]
    for r in rs:
        _positive(r, "radius")
    partial = math.fsum(r**e for r in rs)
    if not truncated:
        return AdmissibilityResult("admissible", e, partial, partial, len(rs))
    if envelope is not None and envelope.gamma < 1.0:
        if all(r <= envelope.radius(i) * (1 + 1e-12) for i, r in enumerate(rs)):
            bound = envelope.r0**e / (1.0 - envelope.gamma**e)
            return AdmissibilityResult("admissible", e, partial, bound, len(rs))
    return AdmissibilityResult("undecided", e, partial, None, len(rs))


# ---------------------------------------------------------------------------
# Free functional  F(φ) = ½∫|∇φ|² − (1/q)∫|φ|^q


def free_functional_correspondence(lam: float, params: ProblemParams) -> tuple[float, float]:
    """Return (amplitude factor λ^{1/(q-2)}, critical value (1/2 - 1/q) λ^{q/(q-2)})."""
    params.require_nonlinear("free functional correspondence")
    if not lam > 0:
        raise InvalidInput("lambda must be positive")
    q = params.q
    return lam ** (1.0 / (q - 2.0)), (0.5 - 1.0 / q) * lam ** (q / (q - 2.0))


def eigenvalue_from_critical_value(value: float, params: ProblemParams) -> float:
    """Inverse of the critical-value map of :func:`free_functional_correspondence`."""
    params.require_nonlinear("free functional correspondence")
    q = params.q
    return (value / (0.5 - 1.0 / q)) ** ((q - 2.0) / q)


def unit_ball_volume(N: int) -> float:
    return math.pi ** (N / 2.0) / math.gamma(N / 2.0 + 1.0)
