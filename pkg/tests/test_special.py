import math

import numpy as np
import pytest
import scipy.special as sps
from hypothesis import given, settings
from hypothesis import strategies as st

from chainlab.special import bessel_j0, bessel_j1, j0_zero


def test_first_zero_matches_tabulated_value():
    assert abs(j0_zero() - 2.404825557695773) < 1e-12


def test_zeros_match_scipy_oracle():
    ours = [j0_zero(n) for n in range(1, 8)]
    assert np.allclose(ours, sps.jn_zeros(0, 7), rtol=0, atol=1e-11)


def test_zero_bracketed_by_sign_change():
    z = j0_zero()
    assert bessel_j0(z - 1e-9) > 0 > bessel_j0(z + 1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 60.0))
def test_j0_j1_agree_with_scipy(x):
    assert abs(bessel_j0(x) - sps.j0(x)) < 1e-10
    assert abs(bessel_j1(x) - sps.j1(x)) < 1e-10


def test_vectorized_evaluation():
    x = np.linspace(0, 30, 101)
    assert np.allclose(bessel_j0(x), sps.j0(x), atol=1e-10)


@pytest.mark.parametrize("x", [0.0, 1e-8])
def test_values_at_origin(x):
    assert math.isclose(bessel_j0(x), 1.0, abs_tol=1e-15)
    assert abs(bessel_j1(x)) < 1e-8
