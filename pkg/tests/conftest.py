import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from epdkit.grid import Grid
from epdkit.phantoms import PhantomSpec, render

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def series_j(nu, r, terms=80):
    """Direct power-series summation of J_nu(r) in plain floats (test oracle)."""
    total, term = 0.0, (0.5 * r) ** nu / math.gamma(nu + 1.0)
    for m in range(terms):
        total += term
        term *= -(0.5 * r) ** 2 / ((m + 1) * (m + 1 + nu))
    return total


def bisect(fn, a, b, tol=1e-15):
    fa = fn(a)
    while b - a > tol:
        c = 0.5 * (a + b)
        fc = fn(c)
        if (fc < 0) == (fa < 0):
            a, fa = c, fc
        else:
            b = c
    return 0.5 * (a + b)


@pytest.fixture(scope="session")
def gauss2():
    return render(PhantomSpec("gaussian", Grid((128, 128), 8.0)))


@pytest.fixture(scope="session")
def psi2():
    return render(PhantomSpec("psi", Grid((256, 256), 32.0)))
