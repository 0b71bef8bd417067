import math

import numpy as np
import pytest
from scipy import signal

from epdkit.grid import Grid
from epdkit.phantoms import KINDS, PhantomError, PhantomSpec, render, unit_ball_volume
from epdkit.specfun import gamma_fn


def test_point_values():
    g = Grid((64, 64), 4.0)
    assert render(PhantomSpec("gaussian", g, {"sigma": 1.0})).values[32, 32] == 1.0
    assert render(PhantomSpec("psi", g)).values[32, 32] == 1.0
    ball = PhantomSpec("ball", g, {"radius": 1.0})
    assert ball.evaluate(np.array([[0.2, 0.3], [1.2, 0.0]])).tolist() == [1.0, 0.0]
    bump = PhantomSpec("bump", g, {"radius": 1.0})
    assert bump.evaluate(np.zeros(2)) == 1.0 and bump.evaluate(np.array([1.0, 0.0])) == 0.0


def test_zgrn_formula():
    spec = PhantomSpec("zgrn", Grid((8, 8), 1.0), {"p": 2.0})
    assert spec.evaluate(np.array([3.0, 4.0])) == pytest.approx(7.0 ** (-1.0) / math.log(7.0))
    assert math.isinf(spec.support_radius)


def test_psi_decay_envelope():
    n, L = 2, 64.0
    f = render(PhantomSpec("psi", Grid((1024, 1024), L)))
    x = f.grid.axes()[0]
    row = f.values[:, 512]
    sel = (x >= 5) & (x <= L / 2)
    peaks = signal.argrelmax(np.abs(row[sel]))[0]
    env = gamma_fn(n / 2) * 2 ** (n / 2 - 1) * math.sqrt(2 / math.pi) * x[sel][peaks] ** (-(n - 1) / 2)
    ratio = np.abs(row[sel][peaks]) / env
    assert len(peaks) > 5
    assert np.all((ratio > 0.5) & (ratio < 2.0))


@pytest.mark.parametrize("kind", ["gaussian", "ball", "bump", "psi", "zgrn"])
def test_render_is_reproducible(kind):
    g = Grid((32, 32), 4.0)
    a = render(PhantomSpec(kind, g))
    spec = PhantomSpec.from_json(PhantomSpec(kind, g).to_json())
    b = render(spec)
    assert a.values.tobytes() == b.values.tobytes()
    assert a.meta["phantom"]["kind"] == kind


def test_invalid_parameters():
    g = Grid((16, 16), 2.0)
    with pytest.raises(PhantomError):
        PhantomSpec("ball", g, {"radius": 2.5})
    with pytest.raises(PhantomError):
        PhantomSpec("gaussian", g, {"center": (3.0, 0.0)})
    with pytest.raises(PhantomError):
        PhantomSpec("psi", g, {"margin": 0.05})
    with pytest.raises(PhantomError):
        PhantomSpec("shepp-logan", g)
    with pytest.raises(PhantomError):
        PhantomSpec("bump", g, {"width": 1.0})
    with pytest.raises(PhantomError):
        PhantomSpec("zgrn", g, {"p": 0.5})
    with pytest.raises(PhantomError):
        PhantomSpec.from_dict({"kind": "ball"})


def test_psi_is_windowed():
    g = Grid((64, 64), 16.0)
    f = render(PhantomSpec("psi", g, {"margin": 0.2}))
    assert np.all(f.values[0, :] == 0.0)
    assert f.meta["analytic"]["mean_eigenvalue"].startswith("j_")


def test_closed_form_plane_integrals():
    g = Grid((16, 16, 16), 4.0)
    v = np.array([[1.0], [0.0], [0.0]])
    ball = PhantomSpec("ball", g, {"radius": 1.5})
    assert ball.plane_integral(v, np.array([0.9])) == pytest.approx(math.pi * (1.5**2 - 0.81))
    gauss = PhantomSpec("gaussian", g, {"sigma": 0.5})
    assert gauss.plane_integral(v, np.array([0.0])) == pytest.approx(math.pi * 0.25)
    assert PhantomSpec("bump", g).plane_integral(v, np.array([0.0])) is None
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)


def test_kinds_listed():
    assert set(KINDS) == {"gaussian", "ball", "bump", "psi", "zgrn"}
