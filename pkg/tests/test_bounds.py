import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from invctrl.bounds import DeviationBounds
from invctrl.kernels import IsotropicKernel

SE = IsotropicKernel("squared_exponential", 1.0, 2.0 * math.sqrt(2.0))

# the benchmark's constants: lip_f = 6.5, lip_c = 0.22, norm bound 1
BENCH = DeviationBounds(lip_f=6.5, lip_c=0.22, rkhs_bound=1.0, delay=1,
                     eta_mode="profile", profile=SE.profile,
                     profile_deficit=SE.profile_deficit)

EXPLICIT = DeviationBounds(lip_f=6.5, lip_c=0.22, rkhs_bound=1.0, delay=1,
                           eta_mode="explicit",
                           explicit_eta=lambda e: np.sqrt(-np.expm1(-np.asarray(e) ** 2 / 16.0)))

LINEAR = DeviationBounds(lip_f=3.59, lip_c=336000.0, rkhs_bound=20.0, delay=2,
                         eta_mode="profile", profile=SE.profile,
                         profile_deficit=SE.profile_deficit,
                         gamma_mode="linear", gamma_slope=1.005)


def eta_closed_form(eps):
    # independent oracle: sqrt(1 - exp(-eps^2/16)), cancellation-free
    return math.sqrt(-math.expm1(-eps * eps / 16.0))


def test_interp_err_zero_at_zero():
    assert BENCH.interp_err(0.0) == 0.0
    assert EXPLICIT.interp_err(0.0) == 0.0


def test_interp_err_known_value():
    assert EXPLICIT.interp_err(4.0) == pytest.approx(eta_closed_form(4.0), rel=1e-12)
    assert EXPLICIT.interp_err(4.0) == pytest.approx(0.7950600976206501, rel=1e-12)


def test_interp_err_saturates_at_norm_bound():
    assert BENCH.interp_err(1e6) == pytest.approx(1.0, abs=1e-12)


def test_profile_mode_reproduces_closed_form():
    # with the squared-exponential profile at scale 2*sqrt(2) and norm bound 1
    # the profile-derived bound equals sqrt(1 - exp(-eps^2/16)) exactly
    eps = np.concatenate([np.logspace(-8, 1.3, 200), [0.0]])
    assert np.allclose(BENCH.interp_err(eps), EXPLICIT.interp_err(eps),
                       rtol=1e-12, atol=1e-15)


def test_input_dev_values():
    assert BENCH.input_dev(0.0) == 0.0
    expected = 0.22 + eta_closed_form(1.0)
    assert BENCH.input_dev(1.0) == pytest.approx(expected, rel=1e-12)
    assert BENCH.input_dev(2.0) > BENCH.input_dev(1.0)


def test_output_dev_values():
    assert BENCH.output_dev(0.0) == 0.0
    expected = 6.5 * (1.0 + 0.22 + eta_closed_form(1.0))
    assert BENCH.output_dev(1.0) == pytest.approx(expected, rel=1e-12)
    eps = np.logspace(-3, 1, 50)
    assert np.all(BENCH.output_dev(eps) >= 6.5 * eps)


def test_output_dev_rejected_for_delay_two():
    with pytest.raises(ValueError):
        LINEAR.output_dev(1.0)


def test_state_dev_composed_identity():
    # composed form must equal (lc + lf + lf*lc + 1) eps + (1 + lf) eta(eps)
    lf, lc = 6.5, 0.22
    for e in (1e-4, 0.03, 0.2, 1.0, 3.3):
        expected = (lc + lf + lf * lc + 1.0) * e + (1.0 + lf) * eta_closed_form(e)
        assert BENCH.state_dev(e) == pytest.approx(expected, rel=1e-12)


def test_state_dev_delay_two_form():
    b = DeviationBounds(lip_f=3.0, lip_c=2.0, rkhs_bound=1.0, delay=2,
                        eta_mode="profile", profile=SE.profile,
                        profile_deficit=SE.profile_deficit)
    e = 0.37
    expected = b.input_dev(e) + (1.0 + 3.0) * e
    assert b.state_dev(e) == pytest.approx(expected, rel=1e-14)


def test_linear_override():
    assert LINEAR.state_dev(0.2) == pytest.approx(0.201, rel=1e-15)
    assert LINEAR.state_dev_inv(0.201) == pytest.approx(0.2, rel=1e-15)


def test_inverse_at_zero():
    assert BENCH.state_dev_inv(0.0) == 0.0


def test_inverse_self_consistency():
    # forward-evaluation oracle over 100 log-spaced radii
    rs = np.logspace(-6, 3, 100)
    back = BENCH.state_dev(BENCH.state_dev_inv(rs))
    assert np.max(np.abs(back - rs) / np.maximum(1.0, rs)) <= 1e-9


def test_negative_arguments_rejected():
    with pytest.raises(ValueError):
        BENCH.interp_err(-0.1)
    with pytest.raises(ValueError):
        BENCH.state_dev_inv(-1.0)


def test_class_k_grid():
    grid = np.logspace(-9, 3, 1000)
    for fn in (BENCH.input_dev, BENCH.output_dev, BENCH.state_dev):
        vals = fn(grid)
        assert fn(0.0) == 0.0
        assert np.all(np.diff(vals) > 0)
    vals = BENCH.interp_err(grid)
    live = vals < vals[-1] * (1.0 - 1e-12)  # below float saturation
    assert np.all(np.diff(vals[live]) > 0) and np.all(np.diff(vals) >= 0)


def test_invalid_configurations_rejected():
    with pytest.raises(ValueError):
        DeviationBounds(lip_f=0.0, lip_c=1.0, rkhs_bound=1.0)
    with pytest.raises(ValueError):
        DeviationBounds(lip_f=1.0, lip_c=1.0, rkhs_bound=1.0, eta_mode="profile")
    with pytest.raises(ValueError):
        DeviationBounds(lip_f=1.0, lip_c=1.0, rkhs_bound=1.0, delay=3,
                        eta_mode="linear", eta_slope=1.0)
    with pytest.raises(ValueError):
        DeviationBounds(lip_f=1.0, lip_c=1.0, rkhs_bound=1.0,
                        eta_mode="linear", eta_slope=1.0, gamma_mode="linear")


@given(st.floats(1e-8, 1e3), st.floats(1.01, 3.0))
@settings(max_examples=60, deadline=None)
def test_state_dev_strictly_monotone(eps, factor):
    assert BENCH.state_dev(eps * factor) > BENCH.state_dev(eps)


@given(st.floats(1e-6, 5e2))
@settings(max_examples=60, deadline=None)
def test_inverse_round_trip_property(r):
    eps = BENCH.state_dev_inv(r)
    assert abs(BENCH.state_dev(eps) - r) <= 1e-9 * max(1.0, r)
