"""Executable checkers for fairness, incentive, participation, and
decentralization properties.

Every checker returns an :class:`~fairmix.core.AxiomVerdict`.  A failing
verdict carries a machine-checkable witness: the coalition, the misreport,
or the improving mixture, with both sides of the violated inequality as
exact rationals.  Checkers for numeric rules (NMP, h-rules) apply a tie
guard: a deviation only counts as profitable when the gain exceeds ten times
the solver tolerance, and near-ties come back as inconclusive (``passed is
None``) instead of a verdict.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from . import lp, rules
from .core import AxiomVerdict, Mixture, Problem, UtilityProfile, format_rational, utilities

__all__ = [
    "SpVariant",
    "Partition",
    "polarized_partition",
    "check_ifs",
    "check_ufs",
    "check_gfs",
    "check_afs",
    "check_cfs",
    "check_sp",
    "check_participation",
    "check_dec",
    "format_verdict",
    "COALITION_MAX_AGENTS",
    "SP_MAX_OUTCOMES",
    "SP_MAX_AGENTS_EXACT",
]

COALITION_MAX_AGENTS = 16
SP_MAX_OUTCOMES = 6
SP_MAX_AGENTS_EXACT = 8

_ZERO = Fraction(0)


class SpVariant(enum.Enum):
    """Strategyproofness flavors.

    SP: any misreport, payoff judged by the true like-set.
    SP_PLUS: misreports that inflate the like-set.
    SP_MINUS: misreports that shrink it, consumption limited to the report.
    SP_STAR: shrinking misreports judged by the true like-set.
    EXSP: any misreport, consumption capped at the coordinate-wise minimum of
    the true and reported like-sets (excludable public outcomes).
    """

    SP = "sp"
    SP_PLUS = "sp+"
    SP_MINUS = "sp-"
    SP_STAR = "sp*"
    EXSP = "exsp"


@dataclass(frozen=True)
class Partition:
    """Aligned partitions of agents and outcomes into polarized blocks."""

    agent_blocks: tuple  # tuple of tuples of agent indices
    outcome_blocks: tuple  # tuple of tuples of outcome indices

    def __post_init__(self) -> None:
        if len(self.agent_blocks) != len(self.outcome_blocks):
            raise ValueError("agent and outcome partitions must align")
        if any(not b for b in self.agent_blocks + self.outcome_blocks):
            raise ValueError("partition blocks must be nonempty")

    @property
    def blocks(self) -> int:
        return len(self.agent_blocks)


def polarized_partition(P: Problem) -> Partition:
    """Connected components of the agent-outcome incidence graph.

    Blocks are ordered by their smallest outcome index.  Outcomes liked by
    nobody get attached to the last block (they belong to no agent's
    component and carry no weight under any of the rules checked here).
    """
    parent = list(range(P.n + P.m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    for i in range(P.n):
        for a in P.like_set(i):
            union(i, P.n + a)
    groups = {}
    for i in range(P.n):
        groups.setdefault(find(i), [[], []])[0].append(i)
    orphans = []
    for a in range(P.m):
        root = find(P.n + a)
        if root in groups:
            groups[root][1].append(a)
        else:
            orphans.append(a)
    blocks = sorted(groups.values(), key=lambda g: min(g[1]))
    if orphans:
        blocks[-1][1].extend(orphans)
        blocks[-1][1].sort()
    return Partition(
        agent_blocks=tuple(tuple(g[0]) for g in blocks),
        outcome_blocks=tuple(tuple(g[1]) for g in blocks),
    )


# ---------------------------------------------------------------------------
# share axioms


def check_ifs(P: Problem, U: UtilityProfile) -> AxiomVerdict:
    """Individual fair share: every agent gets at least 1/n."""
    share = Fraction(1, P.n)
    for i in range(P.n):
        if U[i] < share:
            return AxiomVerdict(
                passed=False,
                witness={"agent": i, "utility": U[i], "required": share},
            )
    return AxiomVerdict(passed=True)


def check_ufs(P: Problem, U: UtilityProfile) -> AxiomVerdict:
    """Unanimity fair share: s identical agents each get at least s/n."""
    classes = {}
    for i in range(P.n):
        classes.setdefault(P.u[i], []).append(i)
    for members in classes.values():
        share = Fraction(len(members), P.n)
        for i in members:
            if U[i] < share:
                return AxiomVerdict(
                    passed=False,
                    witness={
                        "agent": i,
                        "clone_class": tuple(members),
                        "utility": U[i],
                        "required": share,
                    },
                )
    return AxiomVerdict(passed=True)


def _require_coalition_scale(P: Problem) -> None:
    if P.n > COALITION_MAX_AGENTS:
        raise ValueError(
            f"coalition enumeration is capped at n <= {COALITION_MAX_AGENTS}"
        )


def check_gfs(P: Problem, U: UtilityProfile, z: Mixture) -> AxiomVerdict:
    """Group fair share: the pooled like-set of S carries weight >= |S|/n."""
    _require_coalition_scale(P)
    if utilities(P, z) != U:
        raise ValueError("mixture does not realize the supplied utilities")
    like = [P.like_mask(i) for i in range(P.n)]
    or_mask = [0] * (1 << P.n)
    weight_cache = {}
    for S in range(1, 1 << P.n):
        low = S & -S
        or_mask[S] = or_mask[S ^ low] | like[low.bit_length() - 1]
        pooled = or_mask[S]
        w = weight_cache.get(pooled)
        if w is None:
            w = sum(
                (z.z[a] for a in range(P.m) if pooled >> a & 1), _ZERO
            )
            weight_cache[pooled] = w
        share = Fraction(S.bit_count(), P.n)
        if w < share:
            return AxiomVerdict(
                passed=False,
                witness={
                    "coalition": _mask_to_tuple(S),
                    "pooled_weight": w,
                    "required": share,
                },
            )
    return AxiomVerdict(passed=True)


def check_afs(P: Problem, U: UtilityProfile, tol: Fraction = _ZERO) -> AxiomVerdict:
    """Average fair share for coalitions with a commonly liked outcome."""
    _require_coalition_scale(P)
    tol = Fraction(tol)
    like = [P.like_mask(i) for i in range(P.n)]
    full = (1 << P.m) - 1
    and_mask = [full] * (1 << P.n)
    usum = [_ZERO] * (1 << P.n)
    for S in range(1, 1 << P.n):
        low = S & -S
        i = low.bit_length() - 1
        and_mask[S] = and_mask[S ^ low] & like[i]
        usum[S] = usum[S ^ low] + U[i]
        if and_mask[S] == 0:
            continue
        s = S.bit_count()
        required = Fraction(s * s, P.n)
        if usum[S] < required - tol:
            return AxiomVerdict(
                passed=False,
                witness={
                    "coalition": _mask_to_tuple(S),
                    "total_utility": usum[S],
                    "required_total": required,
                },
            )
    return AxiomVerdict(passed=True)


def check_cfs(P: Problem, U: UtilityProfile, tol: Fraction = _ZERO) -> AxiomVerdict:
    """Core fair share: no coalition can block with its proportional share.

    Coalition S blocks if a mixture z' gives every member i at least
    U_i / (|S|/n), one strictly more - equivalently the per-coalition LP
    below has a positive optimum.
    """
    _require_coalition_scale(P)
    tol = Fraction(tol)
    for size in range(1, P.n + 1):
        share = Fraction(size, P.n)
        for S in itertools.combinations(range(P.n), size):
            # cheap upper bound on the LP optimum: the objective is linear in
            # z', so it is maximized at a pure outcome; no block is possible
            # unless some outcome beats the coalition's current total
            best_support = max(
                sum(P.u[i][a] for i in S) for a in range(P.m)
            )
            base = sum((U[i] for i in S), _ZERO)
            if share * best_support <= base + tol:
                continue
            constraints = [
                (
                    tuple(share * P.u[i][a] for a in range(P.m)),
                    lp.GE,
                    U[i],
                )
                for i in S
            ]
            constraints.append(((Fraction(1),) * P.m, lp.EQ, Fraction(1)))
            objective = tuple(
                share * Fraction(sum(P.u[i][a] for i in S)) for a in range(P.m)
            )
            out = lp.solve_lp(
                lp.LinearProgram(objective=objective, constraints=tuple(constraints))
            )
            if out.status != "optimal":
                continue  # coalition cannot even match U: no block from S
            if out.value > base + tol:
                zprime = Mixture(out.solution)
                return AxiomVerdict(
                    passed=False,
                    witness={
                        "coalition": S,
                        "blocking_mixture": zprime,
                        "surplus": out.value - base,
                    },
                )
    return AxiomVerdict(passed=True)


def _mask_to_tuple(mask: int) -> tuple:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


# ---------------------------------------------------------------------------
# strategyproofness


def _admissible_misreports(truth: int, m: int, variant: SpVariant):
    full = (1 << m) - 1
    for mask in range(1, full + 1):
        if mask == truth:
            continue
        if variant is SpVariant.SP_PLUS and (mask & truth) != truth:
            continue
        if variant in (SpVariant.SP_MINUS, SpVariant.SP_STAR) and (
            mask | truth
        ) != truth:
            continue
        yield mask


def _deviation_payoff(
    variant: SpVariant, truth: int, report: int, z: Mixture
) -> Fraction:
    if variant in (SpVariant.SP, SpVariant.SP_PLUS, SpVariant.SP_STAR):
        consume = truth
    elif variant is SpVariant.SP_MINUS:
        consume = report
    else:  # EXSP: consumption capped at the coordinate-wise minimum
        consume = truth & report
    return sum((z.z[a] for a in range(z.m) if consume >> a & 1), _ZERO)


def check_sp(
    rule: rules.RuleId,
    P: Problem,
    variant: SpVariant,
    tol: Fraction = rules.DEFAULT_NMP_TOL,
) -> AxiomVerdict:
    """Exhaustive misreport search for one strategyproofness variant.

    Iterates every agent (identical agents once) and every admissible
    misreported like-set, re-runs the rule, and compares the deviation payoff
    with the truthful utility.  Exact rules use exact comparisons; numeric
    rules count a deviation only beyond the 10*tol guard and report
    near-ties as inconclusive.
    """
    if P.m > SP_MAX_OUTCOMES:
        raise ValueError(f"check_sp is capped at m <= {SP_MAX_OUTCOMES}")
    numeric = rules.is_numeric(rule)
    if not numeric and P.n > SP_MAX_AGENTS_EXACT:
        raise ValueError(
            f"check_sp for exact rules is capped at n <= {SP_MAX_AGENTS_EXACT}"
        )
    guard = 10 * Fraction(tol) if numeric else _ZERO
    truthful_U, _ = rules.evaluate(rule, P)
    seen_rows = set()
    near_tie = None
    for i in range(P.n):
        if P.u[i] in seen_rows:
            continue
        seen_rows.add(P.u[i])
        truth = P.like_mask(i)
        for report in _admissible_misreports(truth, P.m, variant):
            row = tuple(1 if report >> a & 1 else 0 for a in range(P.m))
            _, zprime = rules.evaluate(rule, P.replace_row(i, row))
            payoff = _deviation_payoff(variant, truth, report, zprime)
            gain = payoff - truthful_U[i]
            if gain > guard:
                return AxiomVerdict(
                    passed=False,
                    witness={
                        "agent": i,
                        "misreport": _mask_to_tuple(report),
                        "truthful_utility": truthful_U[i],
                        "deviation_payoff": payoff,
                        "gain": gain,
                    },
                )
            if guard > 0 and gain > 0:
                near_tie = {
                    "agent": i,
                    "misreport": _mask_to_tuple(report),
                    "gain": gain,
                }
    if near_tie is not None:
        return AxiomVerdict(passed=None, witness=near_tie)
    return AxiomVerdict(passed=True)


# ---------------------------------------------------------------------------
# participation


def check_participation(
    rule: rules.RuleId,
    P: Problem,
    strict: bool = False,
    tol: Fraction = rules.DEFAULT_NMP_TOL,
) -> AxiomVerdict:
    """Casting one's ballot never hurts (strictly helps unless already at 1).

    An agent's utility without her own ballot is her utility, under her true
    like-set, at the rule's representative mixture on the problem with her
    row removed.
    """
    if P.n < 2:
        raise ValueError("participation needs at least two agents")
    numeric = rules.is_numeric(rule)
    guard = 10 * Fraction(tol) if numeric else _ZERO
    U, _ = rules.evaluate(rule, P)
    near_tie = None
    for i in range(P.n):
        _, z_without = rules.evaluate(rule, P.drop_agent(i))
        absent = sum(
            (z_without.z[a] for a in range(P.m) if P.u[i][a]), _ZERO
        )
        witness = {
            "agent": i,
            "with_ballot": U[i],
            "without_ballot": absent,
        }
        if U[i] < absent - guard:
            return AxiomVerdict(passed=False, witness=witness)
        if strict and absent < 1 - guard:
            if U[i] <= absent - guard:
                return AxiomVerdict(passed=False, witness=witness)
            if U[i] <= absent + guard:
                if guard > 0:
                    near_tie = witness
                else:
                    return AxiomVerdict(passed=False, witness=witness)
    if near_tie is not None:
        return AxiomVerdict(passed=None, witness=near_tie)
    return AxiomVerdict(passed=True)


# ---------------------------------------------------------------------------
# decentralization


def check_dec(
    rule: rules.RuleId,
    P: Problem,
    tol: Fraction = rules.DEFAULT_NMP_TOL,
) -> AxiomVerdict:
    """Blockwise proportionality on polarized problems.

    Requires the agent-outcome graph to split into at least two components;
    each agent's utility must equal |N^k|/n times her utility under the rule
    on her own block, exactly for exact rules, within the guard for numeric
    ones.
    """
    part = polarized_partition(P)
    if part.blocks < 2:
        raise ValueError("no polarized structure: the problem is connected")
    numeric = rules.is_numeric(rule)
    guard = 10 * Fraction(tol) if numeric else _ZERO
    U, _ = rules.evaluate(rule, P)
    for k in range(part.blocks):
        agents = part.agent_blocks[k]
        outcomes = part.outcome_blocks[k]
        sub = Problem(
            tuple(tuple(P.u[i][a] for a in outcomes) for i in agents)
        )
        subU, _ = rules.evaluate(rule, sub)
        scale = Fraction(len(agents), P.n)
        for local, i in enumerate(agents):
            expected = scale * subU[local]
            if abs(U[i] - expected) > guard:
                return AxiomVerdict(
                    passed=False,
                    witness={
                        "agent": i,
                        "block": k,
                        "utility": U[i],
                        "expected": expected,
                    },
                )
    return AxiomVerdict(passed=True)


# ---------------------------------------------------------------------------
# reporting


def format_verdict(axiom: str, rule: str, verdict: AxiomVerdict) -> str:
    """Line-oriented report: ``AXIOM rule=<id> result=<...> witness=<...>``."""
    result = {True: "pass", False: "fail", None: "inconclusive"}[verdict.passed]
    parts = [axiom.upper(), f"rule={rule}", f"result={result}"]
    if verdict.witness is not None:
        items = ",".join(
            f"{k}={_format_witness_value(v)}" for k, v in sorted(verdict.witness.items())
        )
        parts.append(f"witness=[{items}]")
    return " ".join(parts)


def _format_witness_value(v) -> str:
    if isinstance(v, Fraction):
        return format_rational(v)
    if isinstance(v, Mixture):
        return "(" + " ".join(format_rational(x) for x in v.z) + ")"
    if isinstance(v, UtilityProfile):
        return "(" + " ".join(format_rational(x) for x in v.U) + ")"
    if isinstance(v, tuple):
        return "(" + " ".join(str(x) for x in v) + ")"
    return str(v)
