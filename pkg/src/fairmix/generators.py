"""Named fixtures, worst-case instance families, and the large counterexample
constructions.

The fixtures are the small worked examples used throughout the test suite
and addressable from the CLI by name.  The parametric families exhibit the
worst-case inefficiency of the conditional-utilitarian and random-priority
rules; the appendix-style constructions are large profiles whose Nash
optima are known rational mixtures, certified exactly by a zero KKT
residual.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .core import Mixture, Problem, TypedProfile

__all__ = [
    "fixture",
    "fixture_names",
    "fixture_description",
    "CutWorstCaseParams",
    "RpWorstCaseParams",
    "cut_worstcase",
    "rp_worstcase",
    "cut_bound",
    "rp_family_ratio",
    "appendix_36",
    "appendix_860",
    "appendix_sp0",
    "APPENDIX_860_Z",
    "APPENDIX_860_Z_MISREPORT",
    "SP0_Z_REPORTED",
    "SP0_Z_TRUTHFUL",
    "RP_WORSTCASE_MAX_OUTCOMES",
]

RP_WORSTCASE_MAX_OUTCOMES = 2 * 10**5


# ---------------------------------------------------------------------------
# fixtures

_FIXTURES = {
    # five agents, five outcomes; the last outcome is dominated by the fourth
    "ex3": (
        (
            (0, 0, 0, 1, 1),
            (0, 0, 1, 1, 0),
            (1, 1, 0, 0, 0),
            (1, 0, 1, 0, 0),
            (0, 1, 0, 1, 1),
        ),
        "five agents, five outcomes; outcome e dominated by d; the standard "
        "example separating the rules",
    ),
    # six agents, five outcomes; CUT picks (0,0,0,1/2,1/2), RP is dominated
    "ex5": (
        (
            (1, 0, 0, 1, 0),
            (1, 0, 0, 0, 1),
            (0, 1, 0, 1, 0),
            (0, 1, 0, 0, 1),
            (0, 0, 1, 1, 0),
            (0, 0, 1, 0, 1),
        ),
        "six agents, five outcomes; CUT strictly Pareto-dominates RP here",
    ),
    "egal-true": (
        ((1, 1, 0), (0, 1, 0), (0, 0, 1)),
        "simplest profile where EGAL is manipulable by a shrinking misreport",
    ),
    "egal-misreport": (
        ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
        "the egal-true profile after agent 1 drops outcome b from her report",
    ),
    "afs-example": (
        (
            (1, 0, 0, 0),
            (1, 1, 1, 0),
            (0, 0, 1, 1),
            (0, 1, 0, 1),
            (0, 0, 0, 1),
        ),
        "five agents, four outcomes; average fair share pins the mixture "
        "(2/5,0,0,3/5), which is the Nash max product outcome",
    ),
    "cfs-example": (
        ((1, 0, 0), (1, 1, 0), (0, 1, 0), (0, 0, 1)),
        "four agents, three outcomes; (7/20,7/20,3/10) passes AFS but "
        "coalition {1,2,3} blocks it via (1/2,1/2,0)",
    ),
    "dec-m": (
        ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
        "polarized problem with blocks {1}|{a} and {2,3}|{b,c}",
    ),
    "dec-mprime": (
        ((1, 0, 0), (0, 1, 0), (0, 1, 1)),
        "polarized problem where UTIL picks (0,1,0) and EGAL picks "
        "(1/2,1/2,0), both violating blockwise proportionality",
    ),
}


def fixture(name: str) -> Problem:
    """Look up a named fixture problem."""
    if name == "appendix36":
        return appendix_36(misreport=False).to_problem()
    if name == "appendix36-misreport":
        return appendix_36(misreport=True).to_problem()
    if name == "appendix860":
        return appendix_860(misreport=False).to_problem()
    if name == "appendix860-misreport":
        return appendix_860(misreport=True).to_problem()
    try:
        rows, _ = _FIXTURES[name]
    except KeyError:
        raise ValueError(f"unknown fixture {name!r}") from None
    return Problem(rows)


def fixture_names() -> tuple:
    return tuple(_FIXTURES) + (
        "appendix36",
        "appendix36-misreport",
        "appendix860",
        "appendix860-misreport",
    )


def fixture_description(name: str) -> str:
    if name in _FIXTURES:
        return _FIXTURES[name][1]
    if name.startswith("appendix36"):
        return "36-agent profile on which the Nash rule is manipulable by inflation"
    if name.startswith("appendix860"):
        return "860-agent profile with an exactly rational Nash optimum"
    raise ValueError(f"unknown fixture {name!r}")


# ---------------------------------------------------------------------------
# worst-case families


@dataclass(frozen=True)
class CutWorstCaseParams:
    """Parameters of the cyclic family exhibiting CUT's inefficiency.

    Requires p < n1, p < n2, and n1 | (p-1)*n2; q = (p-1)*n2/n1 is the
    window width of the first agent group.
    """

    n1: int
    n2: int
    p: int

    def __post_init__(self) -> None:
        if min(self.n1, self.n2, self.p) < 1:
            raise ValueError("parameters must be positive")
        if not (self.p < self.n1 and self.p < self.n2):
            raise ValueError("requires p < n1 and p < n2")
        if ((self.p - 1) * self.n2) % self.n1 != 0:
            raise ValueError("requires n1 to divide (p-1)*n2")

    @property
    def q(self) -> int:
        return (self.p - 1) * self.n2 // self.n1


@dataclass(frozen=True)
class RpWorstCaseParams:
    """Parameters of the family exhibiting RP's inefficiency: n = k*d agents
    in d blocks of k, plus one outcome per ell-subset of agents."""

    k: int
    d: int
    ell: int

    def __post_init__(self) -> None:
        if min(self.k, self.d, self.ell) < 1:
            raise ValueError("parameters must be positive")
        if not (2 <= self.ell < self.k):
            raise ValueError("requires 2 <= ell < k")

    @property
    def n(self) -> int:
        return self.k * self.d


def cut_worstcase(params: CutWorstCaseParams) -> Problem:
    """The cyclic two-group family.

    Outcomes are ``a``, the ring ``B`` of size n2, and the ring ``C`` of size
    n2.  Group-one agent i likes ``a`` plus the q consecutive B-outcomes
    starting at i*q (mod n2); the windows tile the ring exactly p-1 times, so
    every B-outcome is liked by p-1 group-one agents.  Group-two agent j
    likes ``b_j`` plus the p-1 consecutive C-outcomes starting at j.  Column
    supports: n1 for ``a``, p for each B-outcome, p-1 for each C-outcome.
    """
    n1, n2, p, q = params.n1, params.n2, params.p, params.q
    m = 2 * n2 + 1
    rows = []
    for i in range(n1):
        row = [0] * m
        row[0] = 1
        for t in range(q):
            row[1 + (i * q + t) % n2] = 1
        rows.append(tuple(row))
    for j in range(n2):
        row = [0] * m
        row[1 + j] = 1
        for t in range(p - 1):
            row[1 + n2 + (j + t) % n2] = 1
        rows.append(tuple(row))
    return Problem(tuple(rows))


def rp_worstcase(params: RpWorstCaseParams) -> Problem:
    """d block outcomes, each liked by one block of k agents, plus one
    outcome for every ell-subset of agents."""
    from itertools import combinations

    k, d, ell, n = params.k, params.d, params.ell, params.n
    m = d + comb(n, ell)
    if m > RP_WORSTCASE_MAX_OUTCOMES:
        raise ValueError(
            f"instance would have {m} outcomes, above the cap "
            f"{RP_WORSTCASE_MAX_OUTCOMES}"
        )
    subsets = list(combinations(range(n), ell))
    rows = []
    for i in range(n):
        row = [0] * m
        row[i // k] = 1
        for c, S in enumerate(subsets):
            if i in S:
                row[d + c] = 1
        rows.append(tuple(row))
    return Problem(tuple(rows))


def _cbrt_rational(n: int, digits: int = 9) -> Fraction:
    """Rational approximation of n**(1/3), accurate to 10**-digits."""
    scale = 10**digits
    target = n * scale**3
    lo, hi = 0, max(2, n)* scale
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid**3 <= target:
            lo = mid
        else:
            hi = mid - 1
    return Fraction(lo, scale)


def cut_bound(n: int) -> Fraction:
    """Guaranteed efficiency of CUT: 1/n + (1 - 1/n^(1/3)) * 3/n^(1/3).

    The cube root is approximated rationally to 10**-9.
    """
    if n < 5:
        raise ValueError("cut_bound requires n >= 5")
    c = _cbrt_rational(n)
    return Fraction(1, n) + (1 - 1 / c) * (3 / c)


def rp_family_ratio(params: RpWorstCaseParams) -> Fraction:
    """Realized welfare ratio of RP on the family, in closed form:
    (1 - ell/k) * ((k-1)...(k-ell+1)) / ((n-1)...(n-ell+1)) + ell/k."""
    k, ell, n = params.k, params.ell, params.n
    num = 1
    den = 1
    for j in range(1, ell):
        num *= k - j
        den *= n - j
    return (1 - Fraction(ell, k)) * Fraction(num, den) + Fraction(ell, k)


# ---------------------------------------------------------------------------
# appendix constructions

# 36 agents, outcomes (a, b, c, d)
_A36_TRUTHFUL = (
    (4, (0,)),
    (4, (1, 2, 3)),
    (1, (2,)),
    (1, (3,)),
    (2, (0, 1, 2)),
    (2, (0, 1, 3)),
    (7, (0, 2)),
    (7, (0, 3)),
    (4, (1, 2)),
    (4, (1, 3)),
)


def appendix_36(misreport: bool = False) -> TypedProfile:
    """The 36-agent, 4-outcome profile on which the Nash rule rewards a
    type-{a} agent for additionally reporting b."""
    if not misreport:
        return TypedProfile(m=4, entries=_A36_TRUTHFUL)
    entries = ((3, (0,)), (1, (0, 1))) + _A36_TRUTHFUL[1:]
    return TypedProfile(m=4, entries=entries)


#: Nash optimum of the truthful 860-agent profile (exact, certified).
APPENDIX_860_Z = Mixture(
    (Fraction(9, 20), Fraction(1, 20), Fraction(1, 4), Fraction(1, 4))
)
#: Nash optimum after 44 type-{a} agents report {a,b} instead.
APPENDIX_860_Z_MISREPORT = Mixture(
    (Fraction(1, 2), Fraction(1, 6), Fraction(1, 6), Fraction(1, 6))
)


def appendix_860(misreport: bool = False) -> TypedProfile:
    """860 agents over outcomes (a, b, c1, c2).

    The truthful profile's Nash optimum is exactly (9/20, 1/20, 1/4, 1/4);
    after K = 44 of the 45 type-{a} agents report {a, b} it moves to
    (1/2, 1/6, 1/6, 1/6), so each of them gains weight on a - an inflation
    manipulation certified by exact rational stationarity at both mixtures.
    """
    common = (
        (55, (1, 2, 3)),  # b c1 c2
        (5, (2,)),
        (5, (3,)),
        (15, (0, 1, 2)),  # a b c1
        (15, (0, 1, 3)),
        (252, (0, 2)),  # a c1
        (252, (0, 3)),
        (108, (1, 2)),  # b c1
        (108, (1, 3)),
    )
    if misreport:
        entries = ((1, (0,)), (44, (0, 1))) + common
    else:
        entries = ((45, (0,)),) + common
    return TypedProfile(m=4, entries=entries)


#: Nash optimum when the K switching agents report {a, a', a''}.
SP0_Z_REPORTED = Mixture(
    (
        Fraction(1, 6),
        Fraction(1, 6),
        Fraction(1, 6),
        Fraction(1, 32),
        Fraction(15, 32),
    )
)
#: Nash optimum at the true profile, where they like {a, a', a'', b}.
SP0_Z_TRUTHFUL = Mixture(
    (
        Fraction(1, 16),
        Fraction(1, 16),
        Fraction(1, 16),
        Fraction(1, 4),
        Fraction(9, 16),
    )
)

_SP0_K = 13832  # = 8 * 19 * 91


def appendix_sp0():
    """The dropped-outcome manipulation pair over (a, a', a'', b, c).

    Returns ``(truthful, misreported)``: K = 13832 agents who truly like
    {a, a', a'', b} report {a, a', a''} instead and end up with more weight
    on the a-outcomes even though they can no longer consume b.  Both target
    mixtures are stationary with exact residual zero.

    Type sizes follow from the proportionality system of the construction
    with gamma = 48/13 and delta = 360/13: n_aaab = 27132, n_c = 23940,
    n_aab = 139650 and n_ac = 243390 (each three times, symmetric in the
    a-outcomes), next to K agents of the switching type and K of type {b,c}.
    """
    switching_true = (_SP0_K, (0, 1, 2, 3))
    switching_reported = (_SP0_K, (0, 1, 2))
    rest = (
        (_SP0_K, (3, 4)),  # b c
        (27132, (0, 1, 2, 3)),  # a a' a'' b
        (23940, (4,)),  # c
        (139650, (1, 2, 3)),  # a' a'' b
        (139650, (0, 2, 3)),
        (139650, (0, 1, 3)),
        (243390, (0, 4)),  # a c
        (243390, (1, 4)),
        (243390, (2, 4)),
    )
    truthful = TypedProfile(m=5, entries=(switching_true,) + rest)
    misreported = TypedProfile(m=5, entries=(switching_reported,) + rest)
    return truthful, misreported
