import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from virtual_fence.optimizer import (
    ConvergenceError,
    QpParams,
    closed_form,
    cost,
    gradient,
    hessian,
    kkt_residual,
    solve_sqp,
)

NOMINAL = dict(alpha=1.0, beta=0.85, d_min=4.0, d_max=11.0)


def P(d_desired, d_prev, **kw):
    args = {**NOMINAL, **kw}
    return QpParams(args["alpha"], args["beta"], d_desired, d_prev, args["d_min"], args["d_max"])


@st.composite
def params(draw):
    alpha = draw(st.floats(0.01, 100))
    beta = draw(st.floats(0.01, 100))
    lo = draw(st.floats(-50, 50))
    hi = lo + draw(st.floats(0.01, 50))
    d_des = draw(st.floats(-100, 100))
    d_prev = draw(st.floats(-100, 100))
    return QpParams(alpha, beta, d_des, d_prev, lo, hi)


def _grid_min(p, n=200_001):
    # brute-force oracle, independent of both the solver and the closed form
    d = np.linspace(p.d_min, p.d_max, n)
    j = p.alpha * (d - p.d_desired) ** 2 + p.beta * (d - p.d_prev) ** 2
    return d[np.argmin(j)], (p.d_max - p.d_min) / (n - 1)


def test_cost_examples():
    assert cost(5, P(5, 5)) == 0
    assert cost(7, P(10, 5)) == pytest.approx(12.4, abs=1e-12)


@given(params(), st.floats(0, 20))
def test_cost_symmetric_about_unconstrained_min(p, h):
    m = (p.alpha * p.d_desired + p.beta * p.d_prev) / (p.alpha + p.beta)
    assert cost(m + h, p) == pytest.approx(cost(m - h, p), rel=1e-9, abs=1e-9)


def test_hessian_nominal_weights():
    assert hessian(P(10, 5)) == 3.7


def test_gradient_zero_at_stationary_point():
    p = P(10, 5)
    assert gradient((p.alpha * 10 + p.beta * 5) / (p.alpha + p.beta), p) == pytest.approx(0, abs=1e-12)


@given(params(), st.floats(-100, 100))
def test_gradient_central_difference(p, d):
    h = 1e-4
    fd = (cost(d + h, p) - cost(d - h, p)) / (2 * h)
    # cancellation error scales with the cost magnitude
    scale = max(1.0, cost(d, p))
    assert abs(fd - gradient(d, p)) <= 1e-6 * scale


def test_solve_interior():
    s = solve_sqp(P(10, 5))
    assert s.d_star == pytest.approx(14.25 / 1.85, abs=1e-12)
    assert s.d_star == pytest.approx(7.702703, abs=1e-6)
    assert s.lambda_lo == 0 and s.lambda_hi == 0
    assert s.kkt_residual <= 1e-8


def test_solve_fixed_point():
    s = solve_sqp(P(5, 5))
    assert s.d_star == 5 and s.lambda_lo == 0 and s.lambda_hi == 0


def test_solve_upper_bound_active():
    s = solve_sqp(P(12, 11.5))
    assert s.d_star == 11
    # -grad(11) = -(2*(11-12) + 1.7*(11-11.5)) = 2.85
    assert s.lambda_hi == pytest.approx(2.85, abs=1e-12)
    assert s.lambda_lo == 0


def test_solve_lower_bound_active():
    s = solve_sqp(P(2, 3))
    assert s.d_star == 4
    assert s.lambda_lo == pytest.approx(2 * (4 - 2) + 1.7 * (4 - 3), abs=1e-12)
    assert s.lambda_hi == 0


def test_closed_form_examples():
    assert closed_form(P(8, 6, alpha=2.0, beta=2.0)) == 7
    assert closed_form(P(10, 10)) == 10
    assert closed_form(P(10, 4)) == pytest.approx(13.4 / 1.85, abs=1e-12)
    assert closed_form(P(10, 4)) == pytest.approx(7.243243, abs=1e-6)


def test_closed_form_matches_grid():
    for p in (P(10, 5), P(10, 4), P(12, 11.5), P(2, 3)):
        g, step = _grid_min(p)
        assert abs(closed_form(p) - g) <= step


@settings(max_examples=500)
@given(params())
def test_solver_matches_closed_form_and_kkt(p):
    s = solve_sqp(p)
    assert abs(s.d_star - closed_form(p)) <= 1e-8
    assert p.d_min <= s.d_star <= p.d_max
    assert s.lambda_lo >= 0 and s.lambda_hi >= 0
    assert s.lambda_lo == 0 or s.lambda_hi == 0
    assert kkt_residual(s.d_star, s.lambda_lo, s.lambda_hi, p) == s.kkt_residual
    assert s.kkt_residual <= 1e-8 * max(1.0, hessian(p) * (abs(p.d_desired) + abs(p.d_prev)))


@settings(max_examples=100)
@given(params(), st.lists(st.floats(0, 1), min_size=1, max_size=100))
def test_solution_is_global_min(p, us):
    s = solve_sqp(p)
    j = cost(s.d_star, p)
    for u in us:
        d = p.d_min + u * (p.d_max - p.d_min)
        assert j <= cost(d, p) + 1e-9 * max(1.0, j)


def test_contraction_toward_target():
    d = 5.0
    errs = []
    for _ in range(12):
        d_new = solve_sqp(P(10, d)).d_star
        assert d_new - d == pytest.approx((1 / 1.85) * (10 - d), abs=1e-12)
        errs.append(10 - d_new)
        d = d_new
    ratios = [b / a for a, b in zip(errs, errs[1:])]
    assert ratios == pytest.approx([0.85 / 1.85] * len(ratios), abs=1e-6)


def test_invalid_params():
    with pytest.raises(ValueError):
        QpParams(0, 1, 5, 5, 4, 11)
    with pytest.raises(ValueError):
        QpParams(1, 1, 5, 5, 11, 4)
    with pytest.raises(ValueError):
        QpParams(1, 1, float("nan"), 5, 4, 11)
    with pytest.raises(ValueError):
        solve_sqp(P(5, 5), tol=0)


def test_iteration_cap_raises():
    with pytest.raises(ConvergenceError):
        solve_sqp(P(10, 5), max_iter=0)
