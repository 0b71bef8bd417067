import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from epdkit.grid import Field, Grid
from epdkit.kplane import (
    PlaneParam,
    StiefelFrame,
    divergence_demo,
    kplane_transform,
    random_frames,
    raw_ball_factor,
    read_sinogram_csv,
    shifted_kplane,
    shifted_kplane_alpha,
    shifted_kplane_ball,
    sinogram,
    uniform_frames,
    write_sinogram_csv,
)
from epdkit.phantoms import PhantomSpec, render
from epdkit.radial import RadialProfile, counterexample_profile, radial_kplane


def line(theta, t):
    return PlaneParam(StiefelFrame(np.array([[math.cos(theta)], [math.sin(theta)]])), np.array([t]))


@pytest.fixture(scope="module")
def disk():
    return PhantomSpec("ball", Grid((256, 256), 2.0), {"radius": 1.0})


@pytest.mark.parametrize("n,k", [(2, 1), (3, 1), (3, 2), (4, 1), (4, 2)])
def test_random_frames_orthonormal(n, k):
    for fr in random_frames(n, k, 5, seed=11):
        assert fr.v.shape == (n, n - k)
        np.testing.assert_allclose(fr.v.T @ fr.v, np.eye(n - k), atol=1e-12)
        W = np.hstack([fr.v, fr.complement])
        np.testing.assert_allclose(W.T @ W, np.eye(n), atol=1e-12)


def test_frames_deterministic_and_validated():
    a = random_frames(3, 1, 4, seed=5)
    b = random_frames(3, 1, 4, seed=5)
    assert all(x == y for x, y in zip(a, b))
    assert uniform_frames(4)[1] == StiefelFrame(np.array([[math.cos(math.pi / 4)], [math.sin(math.pi / 4)]]))
    with pytest.raises(ValueError):
        StiefelFrame(np.array([[1.0], [1.0]]))
    with pytest.raises(ValueError):
        StiefelFrame(np.eye(2))
    with pytest.raises(ValueError):
        PlaneParam(StiefelFrame(np.array([[1.0], [0.0]])), np.array([0.0, 1.0]))


def test_unsupported_pair():
    fr = StiefelFrame(np.array([[1.0], [0.0], [0.0], [0.0]]))
    g = PhantomSpec("gaussian", Grid((8,) * 4, 4.0))
    with pytest.raises(ValueError):
        kplane_transform(g, PlaneParam(fr, np.array([0.0])))


@pytest.mark.parametrize("n,k", [(2, 1), (3, 1), (3, 2), (4, 2)])
def test_gaussian_plane_integral(n, k):
    spec = PhantomSpec("gaussian", Grid((16,) * n, 6.0))
    fr = random_frames(n, k, 1, seed=2)[0]
    t = np.full(n - k, 0.4)
    want = math.pi ** (k / 2) * math.exp(-np.sum(t * t))
    assert kplane_transform(spec, PlaneParam(fr, t)) == pytest.approx(want, rel=1e-10)


def test_disk_chord(disk):
    for t in (0.0, 0.3, 0.8):
        assert kplane_transform(disk, line(0.7, t)) == pytest.approx(2 * math.sqrt(1 - t * t), rel=1e-12)
    f = render(disk)
    h = f.grid.spacing[0]
    for t in (0.0, 0.5):
        assert abs(kplane_transform(f, line(0.7, t)) - 2 * math.sqrt(1 - t * t)) < 2 * h
    val, info = kplane_transform(disk, line(0.0, 1.5), return_info=True)
    assert val == 0.0 and info["missed"]


def test_gaussian_field_frame_independence():
    f = render(PhantomSpec("gaussian", Grid((64, 64), 5.0)))
    frames = random_frames(2, 1, 32, seed=9)
    vals = [kplane_transform(f, PlaneParam(fr, np.array([0.3]))) for fr in frames]
    assert np.ptp(vals) < 1e-5
    assert np.mean(vals) == pytest.approx(math.sqrt(math.pi) * math.exp(-0.09), abs=1e-5)


def test_two_line_average(disk):
    assert shifted_kplane(disk, line(0.2, 0.0), 0.5) == pytest.approx(math.sqrt(3), rel=1e-12)


def test_strip_average_of_disk(disk):
    ref = integrate.quad(lambda s: 2 * math.sqrt(1 - s * s), -1, 1)[0] / 2
    assert ref == pytest.approx(math.pi / 2)
    # the strip edges touch the disk boundary, a square-root endpoint singularity
    assert shifted_kplane_ball(disk, line(1.1, 0.0), 1.0) == pytest.approx(ref, rel=1e-5)
    inner = integrate.quad(lambda s: 2 * math.sqrt(1 - s * s), -0.6, 0.6)[0] / 1.2
    assert shifted_kplane_ball(disk, line(1.1, 0.0), 0.6) == pytest.approx(inner, rel=1e-10)
    assert raw_ball_factor(2, 1, 1.0) == pytest.approx(2.0)


def test_small_rho_is_second_order():
    spec = PhantomSpec("gaussian", Grid((16, 16), 6.0))
    p = line(0.3, 0.2)
    base = kplane_transform(spec, p)
    errs = [abs(shifted_kplane(spec, p, r) - base) for r in (0.1, 0.05)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_ball_is_alpha_one_and_zero_field(disk):
    p = line(0.4, 0.1)
    assert shifted_kplane_ball(disk, p, 0.6) == pytest.approx(shifted_kplane_alpha(disk, p, 0.6, 1.0), abs=1e-10)
    f = Field(Grid((64, 64), 2.0), np.zeros((64, 64)))
    assert shifted_kplane_alpha(f, p, 0.6, 1.0) == 0.0
    with pytest.raises(ValueError):
        shifted_kplane_alpha(disk, p, 0.6, -0.5)
    with pytest.raises(ValueError):
        shifted_kplane_alpha(disk, p, 0.0, 1.0)


@pytest.mark.parametrize("n,k,alpha", [(2, 1, 0.0), (2, 1, 1.0), (3, 1, 0.5), (3, 2, 1.0)])
def test_psi_closed_form(n, k, alpha):
    spec = PhantomSpec("psi", Grid((16,) * n, 8.0))
    fr = random_frames(n, k, 1, seed=4)[0]
    t = np.full(n - k, 0.35)
    rho = 1.3
    got = shifted_kplane_alpha(spec, PlaneParam(fr, t), rho, alpha)
    want = counterexample_profile(n, k, alpha, rho, float(np.linalg.norm(t)))
    assert got == pytest.approx(want, abs=1e-3)


def test_alpha_to_zero_continuity(disk):
    p = line(0.0, 0.2)
    a0 = shifted_kplane(disk, p, 0.5)
    assert abs(shifted_kplane_alpha(disk, p, 0.5, 1e-4) - a0) < 1e-3


def test_sinogram_matches_pointwise(disk):
    frames = uniform_frames(3)
    T = np.array([[-0.4], [0.0], [0.25]])
    s = sinogram(disk, frames, T, rho=0.5, alpha=1.0, seed=-1)
    for i, fr in enumerate(frames):
        for j, t in enumerate(T):
            assert s.values[i, j] == pytest.approx(shifted_kplane_ball(disk, PlaneParam(fr, t), 0.5), abs=1e-9)


def test_sinogram_linearity_and_permutation():
    g = Grid((64, 64), 4.0)
    f1 = render(PhantomSpec("gaussian", g, {"sigma": 0.7}))
    f2 = render(PhantomSpec("bump", g, {"radius": 1.5}))
    combo = Field(g, 2.0 * f1.values - 0.5 * f2.values)
    frames = uniform_frames(4)
    og = Grid((64,), 3.0)
    # fixed node count: the operator is then exactly linear
    s1, s2, s12 = (sinogram(x, frames, og, rho=0.4, alpha=1.0, nodes=24) for x in (f1, f2, combo))
    np.testing.assert_allclose(s12.values, 2.0 * s1.values - 0.5 * s2.values, atol=1e-12)
    rev = sinogram(f1, frames[::-1], og, rho=0.4, alpha=1.0, nodes=24)
    np.testing.assert_allclose(rev.values, s1.values[::-1], atol=1e-14)


def test_sinogram_grid_vs_direct():
    f = render(PhantomSpec("gaussian", Grid((128, 128), 5.0)))
    frames = uniform_frames(2)
    og = Grid((128,), 5.0)
    a = sinogram(f, frames, og, rho=0.8, alpha=1.0, method="grid")
    b = sinogram(f, frames, og, rho=0.8, alpha=1.0, method="direct")
    mid = np.abs(og.points()[:, 0]) < 2.0
    assert np.abs(a.values[:, mid] - b.values[:, mid]).max() < 1e-6


def test_csv_round_trip():
    spec = PhantomSpec("gaussian", Grid((16, 16, 16), 4.0))
    frames = random_frames(3, 1, 3, seed=8)
    s = sinogram(spec, frames, Grid((8, 8), 1.0), rho=0.5, seed=8)
    buf = io.StringIO()
    write_sinogram_csv(buf, s, comments=["config abc"])
    assert buf.getvalue().splitlines()[1] == "# config abc"
    buf.seek(0)
    back = read_sinogram_csv(buf)
    assert back.values.tobytes() == s.values.tobytes()
    np.testing.assert_array_equal(back.offsets, s.offsets)
    assert all(x == y for x, y in zip(back.frames, frames))
    assert back.offset_grid == s.offset_grid
    with pytest.raises(ValueError):
        read_sinogram_csv(io.StringIO("1,2,3\n"))


@pytest.mark.parametrize("n,k", [(2, 1), (3, 1), (3, 2)])
def test_consistent_with_radial_reduction(n, k):
    spec = PhantomSpec("gaussian", Grid((16,) * n, 6.0))
    fr = random_frames(n, k, 1, seed=1)[0]
    s = 0.7
    t = np.zeros(n - k)
    t[0] = s
    direct = kplane_transform(spec, PlaneParam(fr, t))
    radial = radial_kplane(RadialProfile.gaussian(), k, s)
    assert direct == pytest.approx(radial, rel=1e-6)


def test_divergence_demo_grows():
    vals = divergence_demo(2.0, [1e2, 1e4, 1e8])
    assert vals[0] < vals[1] < vals[2]
    assert all(np.diff(vals) > 0.2)
    with pytest.raises(ValueError):
        divergence_demo(1.5, [10.0])


@given(st.floats(0.0, math.pi), st.floats(-0.9, 0.9))
def test_disk_chord_property(theta, t):
    spec = PhantomSpec("ball", Grid((8, 8), 2.0), {"radius": 1.0})
    assert kplane_transform(spec, line(theta, t)) == pytest.approx(2 * math.sqrt(1 - t * t), rel=1e-9)
