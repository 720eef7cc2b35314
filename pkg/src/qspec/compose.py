"""Spectra of disjoint unions.

For Ω = ⋃ Ω_i with the pieces at positive distance and q ≠ 2, every
q-eigenvalue of Ω is a power mean

    Λ = [ Σ_{active i} λ_i^{-s} ]^{-1/s},     s = q / (2 - q),

of eigenvalues λ_i of the pieces over a nonempty set of active pieces.
Inactive pieces are left out of the sum (for q > 2 the literal term
0^{s} would be infinite).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath

from qspec.core import (
    GeometricRadii,
    InadmissibleError,
    InvalidInput,
    ProblemParams,
    admissibility_exponent,
    check_ball_union_admissible,
    scale_eigenvalue,
    scaling_exponent,
)

HARD_CAP = 1_000_000


class InvalidSpin(InvalidInput):
    pass


@dataclass(frozen=True)
class SpinVector:
    delta: tuple

    def __post_init__(self):
        d = tuple(int(b) for b in self.delta)
        if any(b not in (0, 1) for b in d):
            raise InvalidSpin("spins must be 0 or 1")
        if not any(d):
            raise InvalidSpin("at least one spin must be active")
        object.__setattr__(self, "delta", d)

    def __len__(self):
        return len(self.delta)

    def __str__(self):
        return "".join(map(str, self.delta))


@dataclass(frozen=True)
class SpectrumSample:
    """A composite eigenvalue and where it comes from.

    ``component_eigenvalues`` lists (component index, λ_i) for active
    pieces, ``modes`` the position of λ_i in that piece's list (if known),
    and ``multiplicity`` collects other selections giving the same value.
    """

    value: float
    spins: SpinVector
    component_eigenvalues: tuple
    alpha: tuple
    q: float
    modes: tuple = ()
    multiplicity: tuple = ()

    def recompute(self) -> float:
        return _power_mean([lam for (_, lam) in self.component_eigenvalues], self.q)

    @property
    def count(self) -> int:
        return 1 + len(self.multiplicity)


def spin_exponent(q: float) -> float:
    return q / (2.0 - q)


def _power_mean(lams: Sequence[float], q: float) -> float:
    """[Σ λ_i^{-s}]^{-1/s} evaluated relative to a reference eigenvalue.

    With ref = min λ (q < 2) or max λ (q > 2) every term
    exp(-s·log(λ_i/ref)) lies in (0, 1], so nothing overflows for any q.
    """
    if len(lams) == 1:
        return float(lams[0])
    s = spin_exponent(q)
    ref = min(lams) if s > 0 else max(lams)
    lref = math.log(ref)
    total = math.fsum(math.exp(-s * (math.log(lam) - lref)) for lam in lams)
    return ref * math.exp(-math.log(total) / s)


def spin_eigenvalue(lambdas: Sequence[float], spins, params: ProblemParams) -> SpectrumSample:
    params.require_nonlinear("spin formula")
    spins = spins if isinstance(spins, SpinVector) else SpinVector(tuple(spins))
    if len(lambdas) != len(spins):
        raise InvalidInput("one eigenvalue per component is required")
    for lam in lambdas:
        if not lam > 0:
            raise InvalidInput("component eigenvalues must be positive")
    active = [(i, float(lam)) for i, (lam, d) in enumerate(zip(lambdas, spins.delta)) if d]
    value = _power_mean([lam for _, lam in active], params.q)
    return SpectrumSample(
        value=value,
        spins=spins,
        component_eigenvalues=tuple(active),
        alpha=_alphas(value, lambdas, spins.delta, params.q),
        q=params.q,
    )


def _alphas(value, lambdas, delta, q):
    return tuple((value / lam) ** (1.0 / (2.0 - q)) if d else 0.0 for lam, d in zip(lambdas, delta))


# ---------------------------------------------------------------------------
# First eigenvalue of a union


@dataclass(frozen=True)
class BallRule:
    """Balls of radii r_i = r0·gamma**i, λ₁(B_{r_i}) obtained by scaling
    ``lambda1_unit`` = λ₁(B_1)."""

    r0: float
    gamma: float
    lambda1_unit: float

    def radii(self) -> GeometricRadii:
        return GeometricRadii(self.r0, self.gamma)

    def eigenvalue(self, i: int, params: ProblemParams) -> float:
        return scale_eigenvalue(self.lambda1_unit, self.r0 * self.gamma**i, params)


def union_first_eigenvalue(components, params: ProblemParams) -> float:
    """λ₁ of a disjoint union from the first eigenvalues of its pieces.

    q < 2: every piece active; q > 2: a single piece, the smallest.
    """
    params.require_nonlinear("union first eigenvalue")
    q = params.q
    if isinstance(components, BallRule):
        rule = components
        if q > 2:
            if not 0 < rule.gamma < 1:
                raise InadmissibleError("radii must decrease geometrically")
            return rule.eigenvalue(0, params)
        res = check_ball_union_admissible(rule.radii(), params)
        if res.status != "admissible":
            raise InadmissibleError(f"radii sum diverges (exponent {res.exponent})")
        s = spin_exponent(q)
        return rule.lambda1_unit * res.series_value ** (-1.0 / s)
    lams = [float(x) for x in components]
    if not lams:
        raise InvalidInput("no components")
    if q > 2:
        return min(lams)
    return _power_mean(lams, q)


# ---------------------------------------------------------------------------
# Enumeration


@dataclass
class Enumeration:
    samples: list
    ceiling: float
    truncated: bool
    note: str


def enumerate_spectrum(
    component_spectra: Sequence[Sequence[float]],
    params: ProblemParams,
    ceiling: float | None = None,
    count: int | None = None,
    hard_cap: int = HARD_CAP,
) -> Enumeration:
    """All composite eigenvalues Λ <= ``ceiling`` built from the given
    component lists, merged on exact ties and sorted by (value, spins).

    The search is complete below the ceiling.  For q < 2 a selection
    qualifies iff Σ (C/λ_i)^s >= 1, and the remaining pieces can add at
    most Σ (C/λ_{j,1})^s, which bounds every branch; for q > 2 it
    qualifies iff Σ (λ_i/C)^p <= 1 with p = q/(q-2), and adding pieces
    only increases the sum.  ``count`` keeps the smallest ``count``.
    """
    params.require_nonlinear("spectrum enumeration")
    q = params.q
    spectra = [sorted(float(x) for x in comp) for comp in component_spectra]
    if not spectra or any(not comp for comp in spectra):
        raise InvalidInput("every component needs at least one eigenvalue")
    for comp in spectra:
        if comp[0] <= 0:
            raise InvalidInput("eigenvalues must be positive")
    if ceiling is None:
        ceiling = 10.0 * union_first_eigenvalue([c[0] for c in spectra], params)
    C = float(ceiling)
    n = len(spectra)
    sub = q < 2
    s = spin_exponent(q)
    if sub:
        terms = [[(C / lam) ** s for lam in comp] for comp in spectra]
        rest = [0.0] * (n + 1)
        for j in range(n - 1, -1, -1):
            rest[j] = rest[j + 1] + terms[j][0]
    else:
        p = q / (q - 2.0)
        terms = [[(lam / C) ** p for lam in comp] for comp in spectra]

    found = []
    truncated = False
    choice = [-1] * n
    slack = 1e-12

    def leaf():
        nonlocal truncated
        if all(c < 0 for c in choice):
            return
        if len(found) >= hard_cap:
            truncated = True
            return
        lams = [spectra[j][c] if c >= 0 else 1.0 for j, c in enumerate(choice)]
        delta = tuple(1 if c >= 0 else 0 for c in choice)
        smp = spin_eigenvalue(lams, SpinVector(delta), params)
        if smp.value <= C:
            found.append(
                SpectrumSample(
                    smp.value,
                    smp.spins,
                    smp.component_eigenvalues,
                    smp.alpha,
                    q,
                    modes=tuple((j, c) for j, c in enumerate(choice) if c >= 0),
                )
            )

    def dfs(j, S):
        if truncated:
            return
        if j == n:
            leaf()
            return
        if sub:
            if S + rest[j] < 1.0 - slack:
                return
            choice[j] = -1
            dfs(j + 1, S)
            for c, t in enumerate(terms[j]):
                if S + t + rest[j + 1] < 1.0 - slack:
                    break
                choice[j] = c
                dfs(j + 1, S + t)
        else:
            choice[j] = -1
            dfs(j + 1, S)
            for c, t in enumerate(terms[j]):
                if S + t > 1.0 + slack:
                    break
                choice[j] = c
                dfs(j + 1, S + t)
        choice[j] = -1

    dfs(0, 0.0)
    found.sort(key=lambda x: (x.value, x.spins.delta, x.modes))
    merged = _merge(found)
    if count is not None and len(merged) > count:
        merged = merged[:count]
    note = (
        "complete below ceiling: for 1<q<2 activating pieces lowers the value and the "
        "unexplored pieces contribute at most the sum of their first-eigenvalue terms; "
        "for q>2 activating pieces raises the value"
    )
    if truncated:
        note += f"; TRUNCATED at {hard_cap} samples"
    return Enumeration(merged, C, truncated, note)


def _merge(samples, ulps: int = 4):
    out = []
    for smp in samples:
        if out and abs(smp.value - out[-1].value) <= ulps * math.ulp(out[-1].value):
            head = out[-1]
            extra = ((smp.spins, smp.component_eigenvalues, smp.modes),)
            out[-1] = SpectrumSample(
                head.value,
                head.spins,
                head.component_eigenvalues,
                head.alpha,
                head.q,
                head.modes,
                head.multiplicity + extra,
            )
        else:
            out.append(smp)
    return out


# ---------------------------------------------------------------------------
# Accumulation points


@dataclass(frozen=True)
class Cluster:
    point: object
    side: str  # "above" | "below": the side the witnesses approach from
    witnesses: tuple
    limit_is_sample: bool = False


def _value(x):
    return x.value if isinstance(x, SpectrumSample) else x


def accumulation_points(samples: Sequence, tol, min_cluster: int = 10) -> list[Cluster]:
    """Points approached by strictly monotone runs of sorted samples.

    A run qualifies when its consecutive gaps shrink strictly toward one
    end, it has at least ``min_cluster`` members and they all lie within
    ``tol`` of the extrapolated limit.  The limit is estimated by Aitken's
    Δ² on the last three members and snapped to a sample just past the end
    of the run when that sample is closer to the estimate.  Values may be
    floats or ``mpmath.mpf``.
    """
    items = list(samples)
    vals = [_value(x) for x in items]
    for a, b in zip(vals, vals[1:]):
        if b < a:
            raise InvalidInput("samples must be sorted")
    if len(vals) < 3:
        return []
    return _clusters(items, vals, tol, max(min_cluster, 3))


def _clusters(items, vals, tol, min_cluster):
    n = len(vals)
    gaps = [vals[i + 1] - vals[i] for i in range(n - 1)]
    out = []
    # from above: end j, members j..j+m, gaps growing away from j
    for j in range(n - 1):
        if gaps[j] <= 0:
            continue
        if j > 0 and 0 < gaps[j - 1] < gaps[j]:
            continue
        m = 1
        while j + m < n - 1 and gaps[j + m - 1] < gaps[j + m] and vals[j + m + 1] - vals[j] <= tol:
            m += 1
        members = list(range(j + m, j - 1, -1))
        c = _make(items, vals, members, "above", tol, min_cluster, beyond=j - 1)
        if c:
            out.append(c)
    # from below: end j, members j-m..j, gaps growing away from j
    for j in range(n - 1, 0, -1):
        if gaps[j - 1] <= 0:
            continue
        if j < n - 1 and 0 < gaps[j] < gaps[j - 1]:
            continue
        m = 1
        while j - m > 0 and gaps[j - m] < gaps[j - m - 1] and vals[j] - vals[j - m - 1] <= tol:
            m += 1
        members = list(range(j - m, j + 1))
        c = _make(items, vals, members, "below", tol, min_cluster, beyond=j + 1)
        if c:
            out.append(c)
    out.sort(key=lambda c: (c.point, c.side))
    return out


def _make(items, vals, members, side, tol, min_cluster, beyond):
    if len(members) < min_cluster:
        return None
    a0, a1, a2 = (vals[i] for i in members[-3:])
    d1, d2 = a1 - a0, a2 - a1
    denom = d2 - d1
    point = a2
    if denom != 0:
        est = a2 - d2 * d2 / denom
        if (side == "above" and est <= a2) or (side == "below" and est >= a2):
            point = est
    snapped = False
    if 0 <= beyond < len(vals):
        b = vals[beyond]
        if abs(b - point) < abs(point - a2):
            point, snapped = b, True
    if any(abs(vals[i] - point) > tol for i in members):
        return None
    return Cluster(point, side, tuple(items[i] for i in members), snapped)


# ---------------------------------------------------------------------------
# Reproductions


@dataclass
class TailResult:
    """Truncated all-spins-on values Λ_k over the first k balls."""

    values: list  # floats
    excess: list  # Λ_k - limit, computed in extended precision
    limit: float
    exact: list  # mpmath values of Λ_k
    exact_limit: object
    series_value: float


def example2_tail(rule: BallRule, params: ProblemParams, K: int, dps: int | None = None) -> TailResult:
    """Λ_k = [Σ_{i<k} λ₁(B_{r_i})^{-s}]^{-1/s} for k = 1..K and their limit.

    The gaps Λ_k - limit fall below double precision after a handful of
    terms, so the sequence is evaluated with mpmath.
    """
    q = params.q
    if not 1 < q < 2:
        raise InvalidInput("the tail construction needs 1 < q < 2")
    res = check_ball_union_admissible(rule.radii(), params)
    if res.status != "admissible":
        raise InadmissibleError("radii sum diverges")
    e = admissibility_exponent(params)
    if dps is None:
        dps = 40 + int(K * e * max(1.0, -math.log10(rule.gamma))) + 10
    s = spin_exponent(q)
    with mpmath.workdps(dps):
        mq = mpmath.mpf(q)
        ms = mq / (2 - mq)
        me = params.N + 2 * mq / (2 - mq)
        lam_unit = mpmath.mpf(rule.lambda1_unit)
        r0, g = mpmath.mpf(rule.r0), mpmath.mpf(rule.gamma)
        sexp = params.N - 2 - 2 * params.N / mq
        partial = mpmath.mpf(0)
        exact = []
        for i in range(K):
            lam_i = lam_unit * (r0 * g**i) ** sexp
            partial += lam_i ** (-ms)
            exact.append(partial ** (-1 / ms))
        total = r0**me / (1 - g**me)
        limit = lam_unit * total ** (-1 / ms)
        excess = [x - limit for x in exact]
        for a, b in zip(exact, exact[1:]):
            if not b < a:
                raise AssertionError("tail values are not strictly decreasing")
        if any(not d > 0 for d in excess):
            raise AssertionError("tail value at or below the limit")
        return TailResult(
            values=[float(x) for x in exact],
            excess=[float(d) for d in excess],
            limit=float(limit),
            exact=exact,
            exact_limit=limit,
            series_value=float(total),
        )


@dataclass
class PairSequence:
    """Λ_{n,k} for a fixed mode k on the first ball and n = 1..n_max on the second."""

    target: float
    values: list
    exact: list
    exact_target: object


def example1_sequence(
    family_R: Sequence[float], family_r: Sequence[float], params: ProblemParams, k: int = 1, dps: int = 60
) -> PairSequence:
    """Spin values of two active balls with modes (k, n), n = 1, 2, ...

    ``family_R`` and ``family_r`` are eigenvalue lists of the two balls.
    For 1 < q < 2 the values increase to λ_k of the first ball.
    """
    params.require_nonlinear("spin formula")
    with mpmath.workdps(dps):
        mq = mpmath.mpf(params.q)
        ms = mq / (2 - mq)
        t = mpmath.mpf(family_R[k - 1])
        exact = [(t ** (-ms) + mpmath.mpf(lam) ** (-ms)) ** (-1 / ms) for lam in family_r]
        return PairSequence(float(t), [float(x) for x in exact], exact, t)


def scale_union_samples(samples: Sequence[SpectrumSample], t: float, params: ProblemParams) -> list:
    """Rescale every component by t; composite values move by t^{N-2-2N/q}."""
    out = []
    for smp in samples:
        lams = [1.0] * len(smp.spins)
        for i, lam in smp.component_eigenvalues:
            lams[i] = scale_eigenvalue(lam, t, params)
        out.append(spin_eigenvalue(lams, smp.spins, params))
    return out


__all__ = [
    "SpinVector",
    "SpectrumSample",
    "BallRule",
    "Cluster",
    "Enumeration",
    "spin_eigenvalue",
    "union_first_eigenvalue",
    "enumerate_spectrum",
    "accumulation_points",
    "example2_tail",
    "example1_sequence",
    "scale_union_samples",
    "scaling_exponent",
]
