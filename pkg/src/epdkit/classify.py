"""Injectivity classification for EPD means (k = 0) and shifted k-plane transforms.

The verdict depends only on (n, k, alpha, p) and the radius or radius pair.
Every report carries a clause tag naming the result it rests on; queries
that fall between the known results are reported as unresolved, never
guessed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .specfun import bessel_j, bessel_zeros, is_zero_quotient

__all__ = [
    "VERDICTS",
    "AdmissibilityQuery",
    "AdmissibilityReport",
    "classify",
    "is_bessel_zero",
    "example_fixtures",
]

VERDICTS = ("injective", "non-injective", "unresolved", "out-of-domain")

# clause tags
MEAN_I, MEAN_II, MEAN_III = "Thm 2.1(i)", "Thm 2.1(ii)", "Thm 2.1(iii)"
MEAN_GAP = "Thm 2.1 (not covered)"
MEAN_ALPHA = "Thm 2.1 (alpha < (1-n)/2)"
HYPERPLANE = "Thm 2.3"
KPL_I, KPL_II, KPL_III, KPL_IV = "Thm 2.4(i)", "Thm 2.4(ii)", "Thm 2.4(iii)", "Thm 2.4(iv)"
KPL_GAP = "Thm 2.4 (not covered)"
DIVERGENT = "Lemma 2.2"
ALPHA_NEG = "alpha >= 0 required"
P_RANGE = "p >= 1 required"

ZERO_TOL = 1e-9


@dataclass(frozen=True)
class AdmissibilityQuery:
    """n, plane dimension k (0 for the mean operator itself), alpha, p and radii."""

    n: int
    k: int
    alpha: float
    p: float
    rho: float | None = None
    rho2: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if int(self.k) != self.k or not 0 <= self.k <= self.n - 1:
            raise ValueError("k must be an integer with 0 <= k <= n - 1")
        for r in (self.rho, self.rho2):
            if r is not None and not r > 0:
                raise ValueError("radii must be positive")
        if self.rho2 is not None and self.rho is None:
            raise ValueError("rho2 needs rho")
        if math.isnan(self.p):
            raise ValueError("p must be a number")

    @property
    def nu(self):
        """Bessel order governing the query."""
        d = self.n - self.k
        return 0.5 * d + self.alpha - 1.0


@dataclass(frozen=True)
class AdmissibilityReport:
    verdict: str
    clause: str
    query: AdmissibilityQuery
    detail: str = ""

    def to_dict(self):
        q = asdict(self.query)
        if math.isinf(q["p"]):
            q["p"] = "inf"
        return {"verdict": self.verdict, "clause": self.clause, "query": q, "detail": self.detail}


def is_bessel_zero(nu, rho, tol=ZERO_TOL):
    """True if rho is (within tol, relative) a positive zero of J_nu."""
    if nu <= -1:
        return False
    m = int(rho / math.pi + abs(nu) + 4)
    z = bessel_zeros(nu, m).as_array()
    if np.min(np.abs(z - rho)) <= tol * max(1.0, rho):
        return True
    # fall back to the function value for radii beyond the table
    return rho > z[-1] and abs(bessel_j(nu, rho)) <= tol


def _report(verdict, clause, q, detail=""):
    return AdmissibilityReport(verdict, clause, q, detail)


def _classify_mean(q):
    n, p = q.n, q.p
    if q.alpha < 0.5 * (1 - n):
        return _report("out-of-domain", MEAN_ALPHA, q, "alpha below (1-n)/2")
    if q.rho2 is not None:
        quo = is_zero_quotient(q.rho, q.rho2, q.nu)
        if not quo:
            return _report("injective", MEAN_III, q, "rho1/rho2 is not a quotient of Bessel zeros")
        fallback = _classify_mean(AdmissibilityQuery(q.n, 0, q.alpha, q.p, q.rho))
        return _report(fallback.verdict, fallback.clause, q,
                       f"rho1/rho2 = z_{quo.i}/z_{quo.j}; two-radius test fails, single-radius clauses used")
    crit = math.inf if n == 1 else 2.0 * n / (n - 1)
    if (n == 1 and p < math.inf) or (n > 1 and p <= crit):
        return _report("injective", MEAN_I, q)
    if q.rho is not None and is_bessel_zero(q.nu, q.rho):
        return _report("non-injective", MEAN_II, q, f"J_{q.nu:g}(rho) = 0")
    return _report("unresolved", MEAN_GAP, q, "p above the critical exponent without a Bessel zero at rho")


def _listed_gap(n, k, p):
    if n == 3 and k == 1:
        return 2 < p < 3
    if n == 4 and k == 1:
        return 2 < p <= 8 / 3
    if n == 4 and k == 2:
        return 8 / 5 < p < 2
    if n >= 5 and k < 0.5 * (n - 1):
        return 2 * n / (n + k - 1) < p <= 2 * n / (n - 1)
    return False


def _classify_kplane(q):
    n, k, p = q.n, q.k, q.p
    if q.alpha < 0:
        return _report("out-of-domain", ALPHA_NEG, q)
    if p >= n / k:
        return _report("out-of-domain", DIVERGENT, q, "k-plane integrals diverge for p >= n/k")
    if k == n - 1:
        return _report("injective", HYPERPLANE, q)
    if q.rho2 is not None:
        quo = is_zero_quotient(q.rho, q.rho2, q.nu)
        if not quo:
            return _report("injective", KPL_IV, q, "rho1/rho2 is not a quotient of Bessel zeros")
        fallback = _classify_kplane(AdmissibilityQuery(n, k, q.alpha, p, q.rho))
        return _report(fallback.verdict, fallback.clause, q,
                       f"rho1/rho2 = z_{quo.i}/z_{quo.j}; two-radius test fails, single-radius clauses used")
    if p <= 2 * n / (n + k - 1):
        return _report("injective", KPL_I, q)
    if _listed_gap(n, k, p):
        return _report("unresolved", KPL_III, q)
    if 2 * n / (n - 1) < p < n / k:
        if q.rho is None:
            return _report("unresolved", KPL_GAP, q, "no radius given")
        if is_bessel_zero(q.nu, q.rho):
            return _report("non-injective", KPL_II, q, f"J_{q.nu:g}(rho) = 0")
        return _report("unresolved", KPL_GAP, q, "rho is not a Bessel zero")
    return _report("unresolved", KPL_GAP, q)


def classify(query):
    """Decide injectivity for a query; always returns exactly one verdict and clause."""
    q = query
    if q.p < 1:
        return _report("out-of-domain", P_RANGE, q)
    if q.k == 0:
        return _classify_mean(q)
    return _classify_kplane(q)


def example_fixtures():
    """The worked examples: (name, query, expected verdict, expected clause)."""
    z12 = math.pi
    z32 = bessel_zeros(1.5, 1)[0]
    out = [
        ("strips R2, 1 <= p < 2", AdmissibilityQuery(2, 1, 1.0, 1.5, 1.0), "injective", HYPERPLANE),
        ("slabs R3, 1 <= p < 3/2", AdmissibilityQuery(3, 2, 1.0, 1.25, 1.0), "injective", HYPERPLANE),
        ("pipes R3, 1 <= p <= 2", AdmissibilityQuery(3, 1, 0.0, 2.0, 1.0), "injective", KPL_I),
        ("pipes R3, 2 < p < 3", AdmissibilityQuery(3, 1, 0.0, 2.5, 1.0), "unresolved", KPL_III),
        ("solid tubes R3, 1 <= p <= 2", AdmissibilityQuery(3, 1, 1.0, 1.5, 1.0), "injective", KPL_I),
        ("solid tubes R3, 2 < p < 3", AdmissibilityQuery(3, 1, 1.0, 2.9, 1.0), "unresolved", KPL_III),
        ("pipes R4, 1 <= p <= 2", AdmissibilityQuery(4, 1, 0.0, 2.0, 1.0), "injective", KPL_I),
        ("pipes R4, 2 < p <= 8/3", AdmissibilityQuery(4, 1, 0.0, 8 / 3, z12), "unresolved", KPL_III),
        ("pipes R4, 8/3 < p < 4, J_1/2(rho) = 0", AdmissibilityQuery(4, 1, 0.0, 3.0, z12), "non-injective", KPL_II),
        ("solid tubes R4, 1 <= p <= 2", AdmissibilityQuery(4, 1, 1.0, 1.0, 1.0), "injective", KPL_I),
        ("solid tubes R4, 2 < p <= 8/3", AdmissibilityQuery(4, 1, 1.0, 2.5, z32), "unresolved", KPL_III),
        ("solid tubes R4, 8/3 < p < 4, J_3/2(rho) = 0", AdmissibilityQuery(4, 1, 1.0, 3.5, z32), "non-injective", KPL_II),
    ]
    return out
