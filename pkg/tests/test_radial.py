import json
import math

import numpy as np
import pytest

from qspec.core import InvalidInput, ProblemParams
from qspec.radial import (
    DEFAULT_TOL,
    ZeroNotFound,
    _shoot_to_zero,
    ball_constants,
    ball_eigenvalue,
    boundary_slope_check,
    interval_eigenvalue,
    kth_zero_radius,
    pohozaev_constant,
    radial_family,
    shoot_free,
)
from reference import (
    DISK_LAM1_Q2,
    LAM1_B1_Q3_N2,
    LAM1_B1_Q3_N3,
    LAM1_INT_Q15_FD,
    LAM1_INT_Q15_RK4,
    LAM1_INT_Q3_FD,
    LAM2_B1_Q3_N2,
    LAM_B1_Q15_N2,
    ZERO1_Q3_N2,
    ZERO2_Q3_N2,
    ZEROS_Q15_N2,
)

P3 = ProblemParams(2, 3.0)
P15 = ProblemParams(2, 1.5)


def test_zeros_match_rk4_oracle():
    assert kth_zero_radius(P3, 1.0, 1) == pytest.approx(ZERO1_Q3_N2, rel=1e-8)
    assert kth_zero_radius(P3, 1.0, 2) == pytest.approx(ZERO2_Q3_N2, rel=1e-8)
    for k, z in enumerate(ZEROS_Q15_N2, start=1):
        assert kth_zero_radius(P15, 1.0, k) == pytest.approx(z, rel=1e-8)


def test_ball_eigenvalues_match_oracle():
    assert ball_eigenvalue(P3, 1.0, 1).lam == pytest.approx(LAM1_B1_Q3_N2, rel=1e-8)
    assert ball_eigenvalue(P3, 1.0, 2).lam == pytest.approx(LAM2_B1_Q3_N2, rel=1e-8)
    for k, lam in enumerate(LAM_B1_Q15_N2, start=1):
        assert ball_eigenvalue(P15, 1.0, k).lam == pytest.approx(lam, rel=1e-8)
    assert ball_eigenvalue(ProblemParams(3, 3.0), 1.0, 1).lam == pytest.approx(LAM1_B1_Q3_N3, rel=1e-8)


def test_radial_family_matches_individual_solves():
    fam = radial_family(P15, 2.0, 3)
    for k in range(1, 4):
        assert fam[k - 1] == pytest.approx(ball_eigenvalue(P15, 2.0, k).lam, rel=1e-12)
    assert fam == sorted(fam)


def test_q2_disk_and_bessel_zero():
    p = ProblemParams(2, 2.0, sanity=True)
    assert ball_eigenvalue(p).lam == pytest.approx(DISK_LAM1_Q2, rel=1e-9)


def test_q2_three_dim_zeros_at_multiples_of_pi():
    p = ProblemParams(3, 2.0, sanity=True)
    shot = _shoot_to_zero(p, 1.0, 2, DEFAULT_TOL)
    assert shot.zeros[0] == pytest.approx(math.pi, rel=1e-9)
    assert shot.zeros[1] == pytest.approx(2 * math.pi, rel=1e-9)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_q2_interval_anchor(k):
    p = ProblemParams(1, 2.0, sanity=True)
    assert interval_eigenvalue(p, 1.0, k).lam == pytest.approx((k * math.pi) ** 2, rel=1e-9)


def test_interval_q15_against_finite_differences():
    lam = interval_eigenvalue(ProblemParams(1, 1.5), 1.0, 1).lam
    assert lam == pytest.approx(LAM1_INT_Q15_RK4, rel=1e-8)
    assert lam == pytest.approx(LAM1_INT_Q15_FD, rel=1e-3)


def test_interval_q3_against_finite_differences():
    assert interval_eigenvalue(ProblemParams(1, 3.0), 1.0, 1).lam == pytest.approx(LAM1_INT_Q3_FD, rel=1e-3)


@pytest.mark.parametrize("q", [1.5, 3.0])
def test_interval_higher_modes_are_k_squared(q):
    # k bumps = k pieces (0, 1/k) all active in the union formula:
    # k^{-(2-q)/q} (1/k)^{e} λ₁ with e = -1 - 2/q, i.e. k² λ₁ for every q
    p = ProblemParams(1, q)
    l1 = interval_eigenvalue(p, 1.0, 1).lam
    for k in (2, 3):
        assert interval_eigenvalue(p, 1.0, k).lam == pytest.approx(k * k * l1, rel=1e-10)


def test_eigenfunction_shape():
    pair = ball_eigenvalue(P3, 1.0, 2)
    prof = pair.eigenfunction
    assert pair.sign_class == "sign_changing"
    assert prof.rho[0] == 0 and prof.rho[-1] == pytest.approx(1.0)
    assert abs(prof.u[-1]) < 1e-10
    assert len(prof.zeros) == 2 and prof.zeros[-1] == pytest.approx(1.0)
    assert np.all(np.diff(prof.rho) > 0)
    assert pair.meta["simpson_lq_norm"] == pytest.approx(1.0, abs=1e-6)
    assert pair.meta["family"] == "radial"


def test_first_eigenfunction_positive():
    prof = ball_eigenvalue(P15, 1.0, 1).eigenfunction
    assert np.all(prof.u[:-1] > 0)


def test_residual_small():
    for k in (1, 2, 3):
        assert ball_eigenvalue(P15, 1.0, k).eigenfunction.residual < 1e-5
        assert ball_eigenvalue(P3, 1.0, k).eigenfunction.residual < 1e-5


def test_scaling_law_in_radius():
    e = 2 - 2 - 4 / 3.0
    l1 = ball_eigenvalue(P3, 1.0).lam
    assert ball_eigenvalue(P3, 3.0).lam == pytest.approx(3.0**e * l1, rel=1e-12)


def test_shoot_free_and_zero_window():
    prof = shoot_free(P3, 1.0, rho_max=5.0)
    assert prof.zeros[0] == pytest.approx(ZERO1_Q3_N2, rel=1e-8)
    with pytest.raises(ZeroNotFound):
        _shoot_to_zero(P3, 1.0, 1, DEFAULT_TOL, max_doublings=0, rho0=0.5)


def test_amplitude_scaling_of_zeros():
    # u_a(r) = a u_1(a^{(q-2)/2} r): zeros move by a^{-(q-2)/2}
    a = 4.0
    assert kth_zero_radius(P3, a, 1) == pytest.approx(ZERO1_Q3_N2 * a ** (-0.5), rel=1e-8)


def test_pohozaev_constant():
    assert pohozaev_constant(P3) == pytest.approx(3.0 / 4.0)
    assert pohozaev_constant(ProblemParams(2, 1.5)) == pytest.approx(1.5 / 4.0)
    assert pohozaev_constant(ProblemParams(3, 2.0, sanity=True)) == pytest.approx(0.5)
    # N >= 3: q / (2N - q(N-2))
    assert pohozaev_constant(ProblemParams(3, 3.0)) == pytest.approx(3.0 / (6.0 - 3.0))


def test_boundary_slope_constant():
    for p in (P3, P15, ProblemParams(3, 3.0)):
        pair = ball_eigenvalue(p, 1.5, 1)
        assert boundary_slope_check(pair) < 1e-8
        c = ball_constants(p, pair.lam, 1.5)
        assert c.script_C > 0
    with pytest.raises(InvalidInput):
        boundary_slope_check(ball_eigenvalue(P3, 1.0, 2))


def test_serialization(tmp_path):
    pair = ball_eigenvalue(P3, 1.0, 1)
    path = tmp_path / "p.csv"
    pair.eigenfunction.write(path, pair.lam, precision=12)
    lines = path.read_text().splitlines()
    assert lines[0] == "rho,u,uprime"
    head = json.loads((tmp_path / "p.csv.json").read_text())
    assert head["lambda"] == pytest.approx(pair.lam)
    assert set(head) >= {"N", "q", "amplitude", "zeros", "lambda"}


def test_input_errors():
    with pytest.raises(InvalidInput):
        ball_eigenvalue(P3, -1.0)
    with pytest.raises(InvalidInput):
        interval_eigenvalue(P3)
    with pytest.raises(InvalidInput):
        interval_eigenvalue(ProblemParams(1, 3.0), 1.0, 0)
