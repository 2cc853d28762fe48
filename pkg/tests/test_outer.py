import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from orthowall import dynamics, integrate, outer
from orthowall.params import derive_params, working_scaling


@pytest.fixture(scope="module")
def p():
    return derive_params(0.1, 1.5)


@pytest.fixture(scope="module")
def sc(p):
    return working_scaling(p)


def test_b0_left_profile_example():
    p2 = derive_params(0.1, 2.0)
    b00 = 0.5
    c2 = 1.0 + 0.5 * p2.delta**2
    cosh_x0 = 1.0 / (b00 * math.sqrt(c2))
    assert cosh_x0 == pytest.approx(1.6329932, abs=1e-7)
    assert math.acosh(cosh_x0) == pytest.approx(1.0729483, abs=1e-7)
    assert math.acosh(cosh_x0) == pytest.approx(1.0729586, abs=2e-5)
    x_star = 2.0
    assert outer.b0_left_profile(-x_star, b00, p2, x_star) == pytest.approx(
        b00, rel=1e-14)
    assert outer.b0_left_profile(-500.0, b00, p2, x_star) < 1e-10
    with pytest.raises(ValueError):
        outer.b0_left_profile(0.0, 0.9, p2, x_star)


def test_b0_left_profile_solves_principal_equation(p, sc):
    # the sech form is the exact solution of b' = eps*delta*b*sqrt(1-(1+d^2/2)b^2)
    xs = np.linspace(-40.0, -sc.x_star, 200)
    b = outer.b0_left_profile(xs, sc.b00, p, sc.x_star)
    db = np.gradient(b, xs)
    rhs = outer._leaf_b1_principal(b, p)
    assert np.abs(db - rhs)[1:-1].max() < 1e-5  # interior gradient accuracy


def test_v_right_profile_values():
    p2 = derive_params(0.1, 2.0)
    assert 1.0 + outer.v_right_profile(0.0, p2) == pytest.approx(
        0.70710678, abs=1e-8)
    v5 = outer.v_right_profile(5.0, p2)
    assert v5 == pytest.approx(-0.15599747, abs=1e-7)
    # tail rate consistency: matches the end-state linearization
    xs = np.linspace(40.0, 90.0, 200)
    rate = -np.polyfit(xs, np.log(-outer.v_right_profile(xs, p2)), 1)[0]
    assert rate == pytest.approx(math.sqrt(2.0) * p2.epsilon, rel=1e-3)
    assert outer.v_right_profile(1e5, p2) == pytest.approx(0.0, abs=1e-12)


def test_v_envelope_brackets_leading_profile(p, sc):
    xs = np.linspace(-sc.x_star, 60.0, 400)
    v = outer.v_right_profile(xs, p)
    b00 = 1.0 + outer.v_right_profile(-sc.x_star, p)
    lo, hi = outer.v_envelope(xs, sc.x_star, b00, p)
    assert np.all(v >= lo - 1e-12)
    assert np.all(v <= hi + 1e-12)


def test_unstable_seed(p, sc):
    s = outer.unstable_seed(sc, p, (0.0, 0.0))
    da = p.delta * sc.alpha_minus
    assert s[0] == pytest.approx(da, rel=1e-14)
    assert s[1] == pytest.approx(
        -sc.alpha_minus**2 * p.delta / math.sqrt(2.0) * sc.b00, rel=1e-14)
    assert s[2] == 0.0 and s[3] == 0.0
    assert s[4] == sc.b00
    assert abs(dynamics.first_integral(s, p)) < 1e-12


def test_unstable_seed_ball(p, sc):
    radius = sc.k0 * math.sqrt(p.delta * p.g1)
    outer.unstable_seed(sc, p, (radius, 0.0))
    with pytest.raises(outer.BallViolation):
        outer.unstable_seed(sc, p, (1.01 * radius, 0.0))
    outer.unstable_seed(sc, p, (0.2, 0.1), k0=math.inf)


def test_stable_seed(p, sc):
    k1 = 0.05
    s = outer.stable_seed(sc, p, (k1, 0.0))
    dap = p.delta * sc.alpha_plus
    assert s[0] == pytest.approx(k1 * dap, rel=1e-14)
    assert s[1] == pytest.approx(-k1 * dap**1.5 / math.sqrt(2.0), rel=1e-14)
    assert s[2] == 0.0
    assert s[3] == pytest.approx(k1 * dap**2.5 / math.sqrt(2.0), rel=1e-14)
    assert abs(dynamics.first_integral(s, p)) < 1e-12
    zero = outer.stable_seed(sc, p, (0.0, 0.0))
    assert np.all(zero[:4] == 0.0)
    with pytest.raises(outer.BallViolation):
        outer.stable_seed(sc, p, (0.06, 0.0))


def test_eigen_seed_trivial(p):
    assert np.array_equal(outer.eigen_seed("minus", p, h=0.0), dynamics.M_MINUS)


def test_eigen_seed_slow_rate(p):
    s = outer.eigen_seed("minus", p, coeffs=(1.0, 0.0, 0.0), h=1e-4)
    assert abs(dynamics.first_integral(s, p)) < 1e-14
    # the window stays short of the horizon where the quadratic seed
    # contamination of the fast pair takes over
    tr = integrate.integrate(s, (0.0, 14.0), p,
                             integrate.IntegratorConfig(rel_tol=1e-12,
                                                        abs_tol=1e-16))
    xs = np.linspace(2.0, 14.0, 100)
    b = tr.sample(xs)[:, 4]
    rate = np.polyfit(xs, np.log(np.abs(b)), 1)[0]
    assert abs(rate - p.epsilon * p.delta) < 0.02 * p.epsilon * p.delta


def test_eigen_seed_stable_backward(p):
    s = outer.eigen_seed("plus", p, coeffs=(-1.0, 0.0, 0.0), h=1e-4)
    tr = integrate.integrate(s, (0.0, -15.0), p)
    assert tr.states[-1][4] < 1.0 - 5e-4
    assert np.all(tr.states[:, 4] <= 1.0 + 1e-9)


def test_slow_leaf_flow_consistency(p):
    s0 = outer.slow_leaf_state(0.35, p)
    assert abs(dynamics.first_integral(s0, p)) < 1e-10
    sol = solve_ivp(lambda x, y: dynamics.vector_field(y, p), (0.0, 2.0), s0,
                    method="DOP853", rtol=1e-13, atol=1e-16)
    b_end = sol.y[4, -1]
    ref = outer.slow_leaf_state(float(b_end), p)
    assert np.abs(sol.y[:, -1] - ref).max() < 5e-6


def test_left_tail_matches_leading_profile_to_first_order(p, sc, profile15):
    prof = profile15.value
    lo = prof.x_left_leaf_end - 30.0
    xs = np.linspace(lo, prof.x_left_leaf_end, 200)
    b_profile = prof.sample(xs)[:, 4]
    b_leading = outer.b0_left_profile(
        xs + prof.x_shift, sc.b00, p, sc.x_star)
    rel = np.abs(b_profile - b_leading) / b_profile
    assert rel.max() < 0.5 * p.epsilon


def test_right_tail_rate(p, sc):
    s0 = outer.stable_seed(sc, p, (0.0, 0.0))
    tr = integrate.integrate(s0, (0.0, 60.0), p,
                             integrate.IntegratorConfig(rel_tol=1e-12,
                                                        abs_tol=1e-14))
    xs = np.linspace(5.0, 50.0, 200)
    one_minus_b = 1.0 - tr.sample(xs)[:, 4]
    rate = -np.polyfit(xs, np.log(one_minus_b), 1)[0]
    assert abs(rate - math.sqrt(2.0) * p.epsilon) < 0.1 * math.sqrt(2.0) * p.epsilon
    ref = outer.right_tail_b0(xs, 0.0, sc.b01, p)
    assert np.abs(tr.sample(xs)[:, 4] - ref).max() < 1e-9


def test_b1_positive_along_unstable_shot(p, sc, profile15):
    prof = profile15.value
    xs = np.linspace(prof.x[0], prof.x_star_left, 400)
    st = prof.sample(xs)
    assert np.all(st[:, 5] > 0.0)
    assert np.all((st[:, 4] > 0) & (st[:, 4] < sc.b00 * (1 + 1e-9)))
