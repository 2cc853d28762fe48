import numpy as np
import pytest

from orthowall import verify

def test_fit_plain_rate():
    x = np.linspace(0.0, 30.0, 400)
    fit = verify.fit_exponential_rate(x, np.exp(-0.3 * x), target=0.3)
    assert abs(fit.rate - 0.300) < 1e-3
    assert fit.rel_err < 1e-3 / 0.3


def test_fit_envelope_rate():
    x = np.linspace(0.0, 60.0, 4000)
    y = np.exp(-0.2 * x) * np.cos(x)
    fit = verify.fit_exponential_rate(x, y, envelope=True, target=0.2)
    assert abs(fit.rate - 0.200) < 5e-3
    assert fit.envelope and fit.n_points >= 3


def test_fit_constant_data():
    x = np.linspace(0.0, 10.0, 50)
    fit = verify.fit_exponential_rate(x, np.full(50, 0.7))
    assert fit.rate == 0.0


def test_fit_insufficient_tail():
    x = np.linspace(0.0, 3.0, 40)
    with pytest.raises(verify.InsufficientTail):
        verify.fit_exponential_rate(x, np.exp(-x) * np.cos(x), envelope=True)


def test_profile_rates_within_ten_percent(profile15):
    fits = verify.fit_decay_rates(profile15.value)
    assert set(fits) == {"left_b", "left_a", "right_b", "right_a_envelope"}
    for fit in fits.values():
        assert fit.rel_err < 0.10


def test_envelope_bounds_pass(profile15):
    rep = verify.envelope_bounds(profile15.value)
    assert rep.passed
    for e in rep.entries:
        assert e.measured <= 50.0


def test_envelope_violation_flagged(p15, profile15):
    prof = profile15.value

    class Tampered:
        p = p15
        x = prof.x
        x_star_plus = prof.x_star_plus

        @staticmethod
        def sample(xs):
            st = prof.sample(xs)
            st = st.copy()
            st[:, 0] = 10.0  # absurd flat amplitude violates every envelope
            return st

    rep = verify.envelope_bounds(Tampered())
    assert not rep.passed


def test_verify_profile_battery(profile15):
    rep = verify.verify_profile(profile15.value)
    assert rep.passed
    names = [e.name for e in rep.entries]
    assert "first_integral" in names and "b_prime_positive" in names
    d = rep.to_dict()
    assert d["passed"] is True
    # deterministic: a second pass gives the identical report
    rep2 = verify.verify_profile(profile15.value)
    assert rep2.to_dict() == d


def test_scaling_study_preconditions():
    with pytest.raises(ValueError, match="at least 4"):
        verify.scaling_study(1.5, [0.1])
    with pytest.raises(ValueError, match="octaves"):
        verify.scaling_study(1.5, [0.1, 0.09, 0.08, 0.07])


def test_scaling_study_slopes(sweep15):
    fit = sweep15.value
    assert abs(fit.slope_a0 - 0.40) <= 0.08
    assert abs(fit.slope_width - (-0.20)) <= 0.05
    assert len(fit.rows) == 4
    assert not fit.excluded


def test_scaling_study_excludes_failures():
    # one member beyond the epsilon ceiling fails and is reported
    fit = verify.scaling_study(1.5, [0.2, 0.1, 0.05, 0.025, 0.26])
    assert len(fit.excluded) == 1
    assert fit.excluded[0]["epsilon"] == 0.26
    assert len(fit.rows) == 4
