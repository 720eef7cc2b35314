"""Independent oracles for the frozen reference values in the test suite.

Nothing here imports qspec.  Run ``python3 tests/oracles/derive.py`` to
regenerate; the printed numbers are pasted into ``tests/reference.py``.

1. Fixed-step classical RK4 (step 1e-5) for u'' + (N-1)/r u' + |u|^{q-2}u = 0,
   u(0) = 1, carrying the mass ∫ r^{N-1}|u|^q.  Zeros are refined by Newton
   steps of a single RK4 step of variable length.
2. One-dimensional finite differences (h = 1e-4) with normalized inverse
   iteration for the Dirichlet q-eigenvalue of (0, 1).
3. mpmath series for the geometric ball union.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy.linalg import solve_banded


def rk4_zeros(N, q, nzeros, step=1e-5):
    def f(r, y):
        u, v, _ = y
        nl = abs(u) ** (q - 1) * math.copysign(1.0, u) if u != 0 else 0.0
        return (v, -(N - 1) / r * v - nl, r ** (N - 1) * abs(u) ** q)

    def rk4(r, y, h):
        k1 = f(r, y)
        k2 = f(r + h / 2, tuple(a + h / 2 * b for a, b in zip(y, k1)))
        k3 = f(r + h / 2, tuple(a + h / 2 * b for a, b in zip(y, k2)))
        k4 = f(r + h, tuple(a + h * b for a, b in zip(y, k3)))
        return tuple(a + h / 6 * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(y, k1, k2, k3, k4))

    # Taylor start at r0 (u = 1 - r²/(2N) + ...)
    r = step
    y = (1 - r * r / (2 * N), -r / N, r**N / N)
    out = []
    while len(out) < nzeros:
        y1 = rk4(r, y, step)
        if y[0] != 0 and math.copysign(1, y1[0]) != math.copysign(1, y[0]):
            dt = -y[0] / y[1]
            for _ in range(30):
                ys = rk4(r, y, dt)
                new = dt - ys[0] / ys[1]
                if abs(new - dt) < 1e-16:
                    break
                dt = new
            ys = rk4(r, y, dt)
            out.append((r + dt, ys[1], ys[2]))
        r += step
        y = y1
    return out


def fd_interval(q, n=10_000, tol=1e-13):
    """λ₁ of (0,1) on n intervals: K v = h u^{q-1}, u = v/‖v‖_q."""
    h = 1.0 / n
    m = n - 1
    ab = np.zeros((3, m))
    ab[0, 1:] = -1 / h
    ab[1, :] = 2 / h
    ab[2, :-1] = -1 / h
    x = np.linspace(h, 1 - h, m)
    u = np.sin(np.pi * x)

    def norm(w):
        return (h * np.sum(np.abs(w) ** q)) ** (1 / q)

    def quot(w):
        d = np.diff(np.concatenate([[0.0], w, [0.0]]))
        return np.sum(d * d) / h / norm(w) ** 2

    u /= norm(u)
    lam = quot(u)
    for _ in range(100_000):
        v = solve_banded((1, 1), ab, h * u ** (q - 1))
        u = v / norm(v)
        new = quot(u)
        if abs(new - lam) < tol * new:
            return new
        lam = new
    raise RuntimeError("no convergence")


def main():
    for N, q, k in ((2, 3.0, 2), (2, 1.5, 3), (3, 3.0, 1), (2, 2.0, 2), (1, 1.5, 1)):
        zs = rk4_zeros(N, q, k)
        vol = 2 * math.pi if N == 2 else (4 * math.pi if N == 3 else 2.0)
        e = N - 2 - 2 * N / q
        for i, (z, slope, mass) in enumerate(zs, start=1):
            lam_z = 1.0 if q == 2 else (vol * mass) ** ((q - 2) / q)
            size = 2 * z if N == 1 else z  # interval (-z, z) has length 2z
            lam_unit = size * size if q == 2 else size ** (-e) * lam_z
            print(f"N={N} q={q} zero{i}={z!r} slope={slope!r} lam_unit={lam_unit!r}")
    for q in (1.5, 3.0):
        print(f"fd interval q={q} lam1={fd_interval(q)!r}")
    with mpmath.workdps(50):
        print("union limit factor (256/255)^(-1/3) =", (mpmath.mpf(256) / 255) ** (-mpmath.mpf(1) / 3))
        print("2^(1/3) =", mpmath.cbrt(2), " 2^(-1/3) =", 1 / mpmath.cbrt(2))


if __name__ == "__main__":
    main()
