import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from conftest import bisect, series_j
from epdkit.specfun import (
    SERIES_SWITCH,
    ZeroTable,
    bessel_j,
    bessel_zeros,
    gamma_fn,
    is_zero_quotient,
    normalized_bessel,
)

# first zero of J_0, from bisection on the series oracle (frozen)
J0_Z1 = 2.404825557695773


def test_gamma_values():
    assert gamma_fn(1.0) == pytest.approx(1.0, abs=1e-14)
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    assert gamma_fn(5.0) == pytest.approx(24.0, rel=1e-13)


@pytest.mark.parametrize("x", [0.0, -1.0, -4.0])
def test_gamma_poles(x):
    with pytest.raises(ValueError):
        gamma_fn(x)


@given(st.floats(-9.95, 50.0).filter(lambda x: abs(x - round(x)) > 1e-3 or x > 0.5))
def test_gamma_matches_scipy(x):
    assert gamma_fn(x) == pytest.approx(special.gamma(x), rel=1e-12)


def test_bessel_examples():
    assert bessel_j(0.0, 0.0) == 1.0
    assert abs(bessel_j(0.5, math.pi)) < 1e-15
    assert abs(bessel_j(0.0, J0_Z1)) <= 1e-10


def test_normalized_examples():
    for nu in (-0.5, 0.0, 0.5, 2.3):
        assert normalized_bessel(nu, 0.0) == 1.0
    assert abs(normalized_bessel(0.5, math.pi)) < 1e-15
    assert normalized_bessel(-0.5, math.pi) == pytest.approx(-1.0, abs=1e-14)


def test_j0_zero_oracle():
    z = bisect(lambda x: series_j(0.0, x), 2.0, 3.0)
    assert abs(z - J0_Z1) < 1e-14
    assert abs(bessel_zeros(0.0, 1)[0] - z) < 1e-12


# J_nu(0) is infinite for nu < 0, so r stays positive
@given(st.floats(-0.99, 6.0), st.floats(1e-6, 50.0))
def test_bessel_against_scipy(nu, r):
    ref = special.jv(nu, r)
    scale = max(1.0, abs(ref)) if r < 1 else max(abs(ref), 1.0 / math.sqrt(r))
    assert abs(bessel_j(nu, r) - ref) <= 1e-10 * scale


@given(st.floats(-0.99, 6.0), st.floats(1e-3, 50.0))
def test_normalized_relation(nu, r):
    lhs = normalized_bessel(nu, r)
    rhs = gamma_fn(nu + 1.0) * (0.5 * r) ** (-nu) * bessel_j(nu, r)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-14)


@pytest.mark.parametrize("nu", [-0.5, 0.0, 0.5, 1.0, 1.5, 3.0])
def test_switchover_continuity(nu):
    a = bessel_j(nu, np.nextafter(SERIES_SWITCH, 0.0))
    b = bessel_j(nu, SERIES_SWITCH)
    assert abs(a - b) <= 1e-9
    assert abs(series_j(nu, SERIES_SWITCH, 120) - b) <= 1e-9


@pytest.mark.parametrize("nu", [-0.5, 0.0, 0.5, 1.0, 2.5])
def test_decay_envelope(nu):
    r = np.geomspace(10.0, 1e4, 400)
    env = np.abs(normalized_bessel(nu, r)) * r ** (nu + 0.5)
    # |j_nu(r)| r^(nu+1/2) -> Gamma(nu+1) 2^nu sqrt(2/pi) |cos(...)|
    assert env.max() <= 1.1 * gamma_fn(nu + 1.0) * 2**nu * math.sqrt(2 / math.pi)


def test_zeros_of_sine():
    z = bessel_zeros(0.5, 3)
    assert isinstance(z, ZeroTable)
    assert np.allclose(z.as_array(), [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-12)


@pytest.mark.parametrize("nu", [-0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 4.5])
def test_zero_table_invariants(nu):
    z = bessel_zeros(nu, 40).as_array()
    assert np.all(np.diff(z) > 1e-12)
    assert np.max(np.abs(bessel_j(nu, z))) <= 1e-10
    assert np.allclose(z, special.jn_zeros(int(nu), 40) if float(nu).is_integer() else z, atol=1e-11)


@pytest.mark.parametrize("nu", [-0.5, 0.0, 0.5, 1.5, 3.0])
def test_interlacing(nu):
    a = bessel_zeros(nu, 30).as_array()
    b = bessel_zeros(nu + 1.0, 30).as_array()
    assert np.all(a < b)
    assert np.all(b[:-1] < a[1:])


def test_order_domain():
    with pytest.raises(ValueError):
        bessel_j(-1.0, 1.0)
    with pytest.raises(ValueError):
        normalized_bessel(0.0, -1.0)
    with pytest.raises(ValueError):
        bessel_zeros(0.0, 0)


def test_quotient_examples():
    q = is_zero_quotient(math.pi, 2 * math.pi, 0.5, m=10, tol=1e-9)
    assert q and q.witness == (1, 2)
    q = is_zero_quotient(1.3, 1.3, 1.7, m=1)
    assert q and q.witness == (1, 1)
    assert not is_zero_quotient(1.0, math.sqrt(2.0), 0.5, m=50, tol=1e-9)


@given(st.integers(1, 20), st.integers(1, 20), st.floats(-0.5, 3.0))
def test_quotient_finds_every_pair(i, j, nu):
    z = bessel_zeros(nu, 20)
    q = is_zero_quotient(z[i - 1], z[j - 1], nu, m=20)
    assert q
    assert abs(q.zi / q.zj - z[i - 1] / z[j - 1]) <= 1e-9


def test_quotient_rejects_bad_radii():
    with pytest.raises(ValueError):
        is_zero_quotient(0.0, 1.0, 0.5)
