"""Acceptance criteria, one test each, at the stated tolerances.

Each test prints one PASS/FAIL line (run with ``-s`` to see them).  The
tolerances are restated here rather than read from the suites, so a change
of a suite default cannot loosen a criterion silently.
"""

import math
import warnings

import pytest

from epdkit.classify import example_fixtures
from epdkit.reconstruct import IllPosedWarning
from epdkit.verify import SUITES


def _evaluate(number, title, checks, limits):
    """limits: list of (name prefix, '<=' or '>=', tolerance); every check must match one."""
    failures = []
    for c in checks:
        match = [lim for lim in limits if c.name.startswith(lim[0])]
        assert match, f"no stated tolerance for check {c.name!r}"
        _, sense, tol = match[0]
        ok = c.value <= tol if sense == "<=" else c.value >= tol
        if not ok:
            failures.append(f"{c.name}: {c.value:.3g} {sense} {tol:g} fails")
    detail = "; ".join(f"{c.name}={c.value:.3g}" for c in checks)
    status = "FAIL" if failures else "PASS"
    print(f"\n{status} criterion {number} ({title}): {detail}")
    assert not failures, failures


def _run(name):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IllPosedWarning)
        return SUITES[name]()


def test_criterion_1_representation_equivalence():
    checks = _run("representation")
    assert {c.name for c in checks} >= {f"representation n={n}" for n in (1, 2, 3)}
    _evaluate(1, "representation equivalence", checks,
              [("representation n=1 runtime", "<=", 30.0), ("representation n=2 runtime", "<=", 30.0),
               ("representation n=3 runtime", "<=", 30.0), ("representation", "<=", 1e-6)])


def test_criterion_2_eigenrelation():
    checks = _run("eigen")
    assert len(checks) == 6
    _evaluate(2, "eigenrelation", checks, [("eigen", "<=", 1e-3)])


def test_criterion_3_null_witnesses():
    checks = _run("null")
    assert any("tubes n=3" in c.name for c in checks) and any("tubes n=4" in c.name for c in checks)
    _evaluate(3, "non-injectivity witnesses", checks, [("null", "<=", 1e-3)])


def test_criterion_4_two_radius():
    checks = _run("two-radius")
    _evaluate(4, "two-radius reconstruction", checks,
              [("two-radius (1, sqrt 2)", "<=", 1e-3), ("two-radius (pi, 2 pi)", ">=", 0.1)])


def test_criterion_5_radial_chain():
    checks = _run("radial")
    _evaluate(5, "radial oracle chain", checks,
              [("kplane", "<=", 1e-5), ("erdelyi-kober", "<=", 1e-8), ("I^(1/2) j_(1/2)", "<=", 1e-4),
               ("radial_kplane", "<=", 1e-5)])


def test_criterion_6_full_pipeline():
    checks = _run("pipeline")
    _evaluate(6, "strip pipeline", checks, [("strips pipeline runtime", "<=", 120.0), ("strips pipeline", "<=", 5e-3)])


def test_criterion_7_divergence():
    checks = _run("divergence")
    _evaluate(7, "divergence", checks, [("divergence strictly increasing", ">=", 1.0), ("divergence growth", ">=", 0.2)])


def test_criterion_8_classifier_fixtures():
    fixtures = example_fixtures()
    # every family and every unresolved range listed in the examples is present
    assert len(fixtures) >= 9
    assert sum(f[2] == "unresolved" for f in fixtures) == 4
    checks = _run("classifier")
    assert len(checks) == len(fixtures)
    _evaluate(8, "classifier fixtures", checks, [("", ">=", 1.0)])


def test_criterion_9_bessel_suite():
    checks = _run("bessel")
    _evaluate(9, "Bessel suite", checks, [("J_1/2", "<=", 1e-10), ("J_0", "<=", 1e-10), ("quotient", ">=", 1.0)])
