import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from epdkit.grid import (
    ConfigurationError,
    Field,
    Grid,
    apodization_window,
    apodize,
    dft_forward,
    dft_inverse,
    interior,
    read_field,
    write_field,
)


def test_grid_points_and_spacing():
    g = Grid((8, 16), (2.0, 4.0))
    assert g.spacing == (0.5, 0.5)
    x, y = g.axes()
    assert x[0] == -2.0 and x[-1] == 1.5
    assert g.points().shape == (128, 2)
    assert Grid((8, 8), 3.0).half_extent == (3.0, 3.0)


@pytest.mark.parametrize("samples", [(6,), (12, 16), (4,), (8,) * 5])
def test_grid_rejects_bad_sizes(samples):
    with pytest.raises(ConfigurationError):
        Grid(samples, 1.0)


def test_grid_rejects_bad_extent():
    with pytest.raises(ConfigurationError):
        Grid((8,), 0.0)
    with pytest.raises(ConfigurationError):
        Grid((8, 8), (1.0, 2.0, 3.0))


def test_field_is_immutable_and_checked():
    g = Grid((8,), 1.0)
    f = Field(g, np.arange(8.0))
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(ConfigurationError):
        Field(g, np.zeros(7))
    with pytest.raises(ConfigurationError):
        Field(g, np.zeros(8), "fourier")


def test_gaussian_fourier_pair():
    # oracle: direct quadrature of int exp(-x^2) exp(i x xi) dx
    g = Grid((256,), 12.0)
    F = dft_forward(Field(g, np.exp(-g.axes()[0] ** 2)))
    xi = g.frequencies()[0]
    sel = np.abs(xi) <= 8
    ref = np.sqrt(np.pi) * np.exp(-xi[sel] ** 2 / 4)
    assert np.max(np.abs(F.values[sel] - ref) / ref) <= 1e-8
    for x in (0.0, 1.3, 5.9):
        quad = integrate.quad(lambda s: math.exp(-s * s) * math.cos(x * s), -np.inf, np.inf)[0]
        assert quad == pytest.approx(math.sqrt(math.pi) * math.exp(-x * x / 4), abs=1e-12)


def test_sign_convention_shifted_gaussian():
    # f(x - x0) transforms to exp(+i x0 xi) fhat(xi)
    g = Grid((256,), 12.0)
    x0 = 1.25
    F = dft_forward(Field(g, np.exp(-(g.axes()[0] - x0) ** 2)))
    xi = g.frequencies()[0]
    sel = np.abs(xi) <= 6
    ref = np.sqrt(np.pi) * np.exp(-xi ** 2 / 4) * np.exp(1j * x0 * xi)
    assert np.max(np.abs(F.values[sel] - ref[sel])) <= 1e-10


def test_zero_field():
    g = Grid((16, 16), 2.0)
    z = Field(g, np.zeros(g.shape))
    assert dft_forward(z).sup() == 0.0
    assert dft_inverse(Field(g, np.zeros(g.shape), "spectral")).sup() == 0.0


@given(arrays(np.float64, (8, 16), elements=st.floats(-1, 1)), arrays(np.float64, (8, 16), elements=st.floats(-1, 1)),
       st.floats(-3, 3))
def test_round_trip_parseval_linearity(a, b, c):
    g = Grid((8, 16), (1.0, 2.5))
    fa, fb = Field(g, a), Field(g, b)
    A = dft_forward(fa)
    back = dft_inverse(A, real=True)
    assert np.max(np.abs(back.values - a)) <= 1e-12 * max(1.0, np.abs(a).max())
    lhs = fa.norm2() ** 2 * (2 * np.pi) ** 2
    assert A.norm2() ** 2 == pytest.approx(lhs, rel=1e-10, abs=1e-300)
    comb = dft_forward(fa + c * fb)
    assert np.allclose(comb.values, A.values + c * dft_forward(fb).values, atol=1e-12)


def test_real_even_stays_real():
    g = Grid((32, 32), 4.0)
    r = g.radius()
    F = dft_forward(Field(g, np.exp(-r * r)))
    out = dft_inverse(F.with_values(F.values * np.cos(g.frequency_radius())))
    assert not out.is_complex


def test_wrong_domain():
    g = Grid((8,), 1.0)
    with pytest.raises(ConfigurationError):
        dft_inverse(Field(g, np.zeros(8)))
    with pytest.raises(ConfigurationError):
        dft_forward(Field(g, np.zeros(8), "spectral"))


def test_apodization_window():
    g = Grid((64, 64), 4.0)
    w = apodization_window(g, 0.15)
    assert w[32, 32] == 1.0
    assert w[0, 32] == pytest.approx(0.0, abs=1e-15)
    half = w[32, 32:]
    assert np.all(np.diff(half) <= 0)
    f = apodize(Field(g, np.ones(g.shape)))
    assert f.values[32, 32] == 1.0
    with pytest.raises(ValueError):
        apodization_window(g, 0.5)


def test_interior_is_central_half():
    g = Grid((16, 32), 1.0)
    sub = interior(Field(g, np.zeros(g.shape)))
    assert sub.shape[0] in (8, 9) and sub.shape[1] in (16, 17)


@pytest.mark.parametrize("complex_", [False, True])
def test_epdt1_round_trip(tmp_path, complex_):
    g = Grid((8, 16, 8), (1.0, 2.0, 0.1))
    rng = np.random.default_rng(0)
    v = rng.standard_normal(g.shape)
    if complex_:
        v = v + 1j * rng.standard_normal(g.shape)
    path = tmp_path / "f.epdt"
    write_field(path, Field(g, v))
    back = read_field(path)
    assert back.grid == g
    assert np.array_equal(back.values, v)
    header = path.read_bytes().split(b"\n", 1)[0].decode()
    assert header.split()[0] == "EPDT1" and header.split()[-1] == ("complex" if complex_ else "real")


def test_epdt1_rejects_garbage(tmp_path):
    p = tmp_path / "bad.epdt"
    p.write_bytes(b"NOPE 1 8 1.0 real\n" + b"\0" * 64)
    with pytest.raises(ConfigurationError):
        read_field(p)
    p.write_bytes(b"EPDT1 1 8 1.0 real\n" + b"\0" * 10)
    with pytest.raises(ConfigurationError):
        read_field(p)
