"""The five mixing rules, sigma-priority, and generic power-family h-rules.

Each rule maps a problem to a utility profile together with one
representative mixture realizing it.  UTIL, CUT, RP, EGAL and sigma-priority
are exact (rational arithmetic end to end).  NMP and the h-rules maximize a
transcendental objective, so they run a numeric fixed-point iteration and
return a solution whose stationarity is certified afterwards by an exact
rational KKT residual.

Representative-mixture conventions (the rules are welfarist, so many
mixtures can realize the same utilities; these conventions make the output
deterministic and permutation-equivariant):

- UTIL: uniform over the distinct maximal-support column classes, split
  uniformly inside each class of identical columns.
- CUT: each agent splits her 1/n share the same way over the maximal-support
  classes within her like-set.
- sigma-priority: uniform over the final feasible outcome set.
- RP: the exact average of the sigma-priority mixtures.
- EGAL: the minimum-Euclidean-norm mixture among those realizing the leximin
  utilities (unique, hence equivariant).
"""

from __future__ import annotations

import functools
import math
import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from . import lp
from .core import Mixture, Problem, TypedProfile, UtilityProfile, utilities

__all__ = [
    "RuleId",
    "UTIL",
    "EGAL",
    "RP",
    "CUT",
    "NMP",
    "RP_MC",
    "HRULE",
    "NmpSolution",
    "HRuleSolution",
    "util_rule",
    "cut_rule",
    "sigma_priority",
    "rp_exact",
    "rp_monte_carlo",
    "egal_rule",
    "nmp_rule",
    "h_rule",
    "kkt_residual",
    "evaluate",
    "RP_MAX_AGENTS",
    "DEFAULT_NMP_TOL",
]

RP_MAX_AGENTS = 10
DEFAULT_NMP_TOL = Fraction(1, 10**9)
_NMP_ITERATION_CAP = 10**6
_SNAP = 1e-13  # numeric coordinates below this are treated as exact zeros


@dataclass(frozen=True)
class RuleId:
    """Identifier of a mixing rule, usable as a cache key.

    ``kind`` is one of UTIL, EGAL, RP, RP_MC, CUT, NMP, HRULE.  HRULE carries
    its exponent ``q``; RP_MC carries sample count and seed.
    """

    kind: str
    q: Optional[Fraction] = None
    samples: Optional[int] = None
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in {"UTIL", "EGAL", "RP", "RP_MC", "CUT", "NMP", "HRULE"}:
            raise ValueError(f"unknown rule kind {self.kind!r}")
        if self.kind == "HRULE":
            if self.q is None:
                raise ValueError("HRULE needs an exponent q")
            q = Fraction(self.q)
            if q >= 1 or q == 0:
                raise ValueError("HRULE exponent must satisfy q < 1, q != 0")
            object.__setattr__(self, "q", q)

    def __str__(self) -> str:
        if self.kind == "HRULE":
            return f"HRULE({self.q})"
        return self.kind


UTIL = RuleId("UTIL")
EGAL = RuleId("EGAL")
RP = RuleId("RP")
CUT = RuleId("CUT")
NMP = RuleId("NMP")


def RP_MC(samples: int, seed: int) -> RuleId:
    return RuleId("RP_MC", samples=samples, seed=seed)


def HRULE(q) -> RuleId:
    return RuleId("HRULE", q=Fraction(q))


@dataclass(frozen=True)
class NmpSolution:
    """Numeric Nash-max-product solution with an exact a-posteriori certificate.

    ``kkt_residual`` is the exact rational residual of the rounded mixture:
    the worst deviation of the log-welfare gradient from the agent count over
    supported outcomes, and its worst positive overshoot over unsupported
    ones.  Zero certifies exact stationarity.
    """

    z: Mixture
    kkt_residual: Fraction
    iterations: int
    converged: bool


@dataclass(frozen=True)
class HRuleSolution:
    z: Mixture
    gap: Fraction  # exact bound on the objective suboptimality scale
    iterations: int
    converged: bool


# ---------------------------------------------------------------------------
# helpers


def _typed_entries(P: Union[Problem, TypedProfile]):
    """(count, like-mask) pairs with identical agents merged, plus (n, m)."""
    if isinstance(P, TypedProfile):
        m = P.m
        counter = Counter()
        order = []
        for count, like in P.entries:
            mask = 0
            for a in like:
                mask |= 1 << a
            if mask not in counter:
                order.append(mask)
            counter[mask] += count
        return [(counter[mask], mask) for mask in order], sum(counter.values()), m
    counter = Counter()
    order = []
    for i in range(P.n):
        mask = P.like_mask(i)
        if mask not in counter:
            order.append(mask)
        counter[mask] += 1
    return [(counter[mask], mask) for mask in order], P.n, P.m


def _column_classes(P: Problem):
    """Group outcome indices by identical columns; returns list of lists."""
    groups = {}
    for a in range(P.m):
        groups.setdefault(P.column(a), []).append(a)
    return list(groups.values())


def _uniform_mixture(outcomes, m: int) -> Mixture:
    w = Fraction(1, len(outcomes))
    z = [Fraction(0)] * m
    for a in outcomes:
        z[a] = w
    return Mixture(tuple(z))


# ---------------------------------------------------------------------------
# UTIL and CUT


def util_rule(P: Problem):
    """Utilitarian rule: uniform average of the most-supported pure outcomes.

    Identical columns are collapsed into one class first, so duplicating an
    outcome never changes anybody's utility.
    """
    classes = _column_classes(P)
    best = max(P.column_sum(cls[0]) for cls in classes)
    winners = [cls for cls in classes if P.column_sum(cls[0]) == best]
    z = [Fraction(0)] * P.m
    for cls in winners:
        w = Fraction(1, len(winners) * len(cls))
        for a in cls:
            z[a] += w
    mix = Mixture(tuple(z))
    return utilities(P, mix), mix


def cut_rule(P: Problem):
    """Conditional utilitarian rule.

    Each agent controls a 1/n share and spreads it uniformly over the
    distinct column classes of maximal support within her own like-set.
    """
    z = [Fraction(0)] * P.m
    classes = _column_classes(P)
    for i in range(P.n):
        like = set(P.like_set(i))
        mine = [
            [a for a in cls if a in like]
            for cls in classes
            if any(a in like for a in cls)
        ]
        best = max(P.column_sum(cls[0]) for cls in mine)
        winners = [cls for cls in mine if P.column_sum(cls[0]) == best]
        for cls in winners:
            w = Fraction(1, P.n * len(winners) * len(cls))
            for a in cls:
                z[a] += w
    mix = Mixture(tuple(z))
    return utilities(P, mix), mix


# ---------------------------------------------------------------------------
# sigma-priority and random priority


def sigma_priority(P: Problem, order: Sequence[int]):
    """Lexicographic utility maximization along the agent order.

    Walk the order keeping a feasible outcome set; an agent whose like-set
    meets it is "relevant" and restricts it, anyone else is skipped.  The
    representative mixture is uniform over the final feasible set, which
    gives utility exactly 1 to relevant agents and 0 to skipped ones.
    """
    if sorted(order) != list(range(P.n)):
        raise ValueError("order must be a permutation of all agents")
    feasible = (1 << P.m) - 1
    for i in order:
        mask = P.like_mask(i)
        if feasible & mask:
            feasible &= mask
    outcomes = [a for a in range(P.m) if feasible >> a & 1]
    mix = _uniform_mixture(outcomes, P.m)
    return utilities(P, mix), mix


def rp_exact(P: Problem):
    """Random priority: the exact average of sigma-priority over all n! orders.

    Computed by dynamic programming over (feasible outcome set, set of agents
    still to come), which collapses the factorial into a small state space.
    Capped at n <= 10; the rule is #P-hard in general.
    """
    if P.n > RP_MAX_AGENTS:
        raise ValueError(f"rp_exact is capped at n <= {RP_MAX_AGENTS}")
    masks = [P.like_mask(i) for i in range(P.n)]
    m = P.m
    full = (1 << m) - 1

    @functools.lru_cache(maxsize=None)
    def average(feasible: int, remaining: int):
        if remaining == 0:
            outcomes = [a for a in range(m) if feasible >> a & 1]
            w = Fraction(1, len(outcomes))
            return tuple(w if feasible >> a & 1 else Fraction(0) for a in range(m))
        total = [Fraction(0)] * m
        count = 0
        rem = remaining
        while rem:
            bit = rem & -rem
            rem ^= bit
            i = bit.bit_length() - 1
            nxt = feasible & masks[i] or feasible
            sub = average(nxt, remaining ^ bit)
            for a in range(m):
                total[a] += sub[a]
            count += 1
        w = Fraction(1, count)
        return tuple(x * w for x in total)

    z = average(full, (1 << P.n) - 1)
    average.cache_clear()
    mix = Mixture(z)
    return utilities(P, mix), mix


def rp_monte_carlo(P: Problem, samples: int, seed: int):
    """Estimate the random-priority mixture from uniformly drawn orders.

    Deterministic for a fixed seed: the estimate is the exact rational
    average of the sampled sigma-priority mixtures.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = random.Random(seed)
    masks = [P.like_mask(i) for i in range(P.n)]
    full = (1 << P.m) - 1
    final_counts = Counter()
    order = list(range(P.n))
    for _ in range(samples):
        rng.shuffle(order)
        feasible = full
        for i in order:
            if feasible & masks[i]:
                feasible &= masks[i]
        final_counts[feasible] += 1
    z = [Fraction(0)] * P.m
    for feasible, c in final_counts.items():
        outcomes = [a for a in range(P.m) if feasible >> a & 1]
        w = Fraction(c, samples * len(outcomes))
        for a in outcomes:
            z[a] += w
    mix = Mixture(tuple(z))
    return utilities(P, mix), mix


# ---------------------------------------------------------------------------
# EGAL


def egal_rule(P: Problem):
    """Leximin-optimal utilities via iterated exact LPs.

    Round k maximizes a common floor t for the not-yet-frozen agents, then
    freezes every tight agent whose utility provably cannot exceed t (tested
    with one secondary LP each).  O(n^2) LPs overall, everything exact.
    Identical agents are merged first; clones always share one utility.
    """
    entries, n, m = _typed_entries(P)
    rows = [
        tuple(Fraction(1) if mask >> a & 1 else Fraction(0) for a in range(m))
        for _, mask in entries
    ]
    k = len(rows)
    simplex_row = ((Fraction(1),) * m + (Fraction(0),), lp.EQ, Fraction(1))

    frozen = {}  # class index -> utility
    unfrozen = set(range(k))
    zstar = None
    while unfrozen:
        # variables: z_0..z_{m-1}, t
        constraints = [simplex_row]
        for j in unfrozen:
            constraints.append((rows[j] + (Fraction(-1),), lp.GE, Fraction(0)))
        for j, val in frozen.items():
            constraints.append((rows[j] + (Fraction(0),), lp.EQ, val))
        objective = (Fraction(0),) * m + (Fraction(1),)
        out = lp.solve_lp(
            lp.LinearProgram(objective=objective, constraints=tuple(constraints))
        )
        assert out.status == "optimal"
        t = out.value
        zstar = out.solution[:m]
        newly = []
        for j in unfrozen:
            if sum(zstar[a] for a in range(m) if rows[j][a]) > t:
                continue  # already above the floor at the found vertex
            probe = lp.solve_lp(
                lp.LinearProgram(
                    objective=rows[j] + (Fraction(0),),
                    constraints=tuple(
                        [simplex_row]
                        + [
                            (rows[i] + (Fraction(0),), lp.GE, t)
                            for i in unfrozen
                        ]
                        + [
                            (rows[i] + (Fraction(0),), lp.EQ, val)
                            for i, val in frozen.items()
                        ]
                    ),
                )
            )
            assert probe.status == "optimal"
            if probe.value == t:
                newly.append(j)
        assert newly, "leximin round must freeze at least one agent"
        for j in newly:
            frozen[j] = t
            unfrozen.discard(j)

    class_util = [frozen[j] for j in range(k)]
    mix = _min_norm_mixture(rows, class_util, m, start=zstar)
    per_agent = {mask: frozen[j] for j, (_, mask) in enumerate(entries)}
    if isinstance(P, TypedProfile):  # pragma: no cover - callers pass Problem
        P = P.to_problem()
    U = UtilityProfile(tuple(per_agent[P.like_mask(i)] for i in range(P.n)))
    return U, mix


def _row_reduce_restricted(rows, rhs, pivot_cols):
    """Row echelon reduction choosing pivots only among ``pivot_cols``.

    Returns the independent reduced (full row, rhs) pairs; rows that vanish
    on the pivot columns must have zero rhs (the other columns correspond to
    variables fixed at 0), otherwise the system is inconsistent.
    """
    work = [list(r) + [v] for r, v in zip(rows, rhs)]
    ncols = len(rows[0]) if rows else 0
    r = 0
    for c in pivot_cols:
        pivot = next((i for i in range(r, len(work)) if work[i][c] != 0), None)
        if pivot is None:
            continue
        work[r], work[pivot] = work[pivot], work[r]
        inv = 1 / work[r][c]
        work[r] = [x * inv for x in work[r]]
        for i in range(len(work)):
            if i != r and work[i][c] != 0:
                f = work[i][c]
                work[i] = [x - f * y for x, y in zip(work[i], work[r])]
        r += 1
        if r == len(work):
            break
    for i in range(r, len(work)):
        if work[i][ncols] != 0:
            raise ValueError("inconsistent linear system")
    return [(tuple(row[:ncols]), row[ncols]) for row in work[:r]]


def _solve_square(A, b):
    """Solve a square nonsingular rational system exactly."""
    k = len(A)
    work = [list(A[i]) + [b[i]] for i in range(k)]
    for c in range(k):
        pivot = next(i for i in range(c, k) if work[i][c] != 0)
        work[c], work[pivot] = work[pivot], work[c]
        inv = 1 / work[c][c]
        work[c] = [x * inv for x in work[c]]
        for i in range(k):
            if i != c and work[i][c] != 0:
                f = work[i][c]
                work[i] = [x - f * y for x, y in zip(work[i], work[c])]
    return [work[i][k] for i in range(k)]


def _min_norm_mixture(util_rows, util_vals, m: int, start) -> Mixture:
    """The minimum-norm point of {z >= 0, sum z = 1, util_rows . z = util_vals}.

    Primal active-set iteration from the feasible ``start``; the optimum is
    the unique nearest point to the origin in the polytope, so the result is
    invariant under any relabeling symmetry of the input.
    """
    B = [tuple(Fraction(1) for _ in range(m))] + [tuple(r) for r in util_rows]
    c = [Fraction(1)] + [Fraction(v) for v in util_vals]
    z = [Fraction(x) for x in start]

    working = {a for a in range(m) if z[a] == 0}
    for _ in range(4 * (m + 2) * (m + 2) + 16):
        free = [a for a in range(m) if a not in working]
        reduced = _row_reduce_restricted(B, c, free)
        gram = [
            [sum(r1[a] * r2[a] for a in free) for r2, _ in reduced]
            for r1, _ in reduced
        ]
        w = _solve_square(gram, [v for _, v in reduced])
        z_eq = [Fraction(0)] * m
        for a in free:
            z_eq[a] = sum(wi * row[a] for wi, (row, _) in zip(w, reduced))
        if all(z_eq[a] >= 0 for a in free):
            # dual check on the working set: mu_a = -(B^T lambda)_a >= 0
            bad = None
            for a in sorted(working):
                grad = sum(wi * row[a] for wi, (row, _) in zip(w, reduced))
                if grad > 0:
                    bad = a
                    break
            if bad is None:
                return Mixture(tuple(z_eq))
            working.discard(bad)
            z = z_eq
            continue
        # line search from z toward z_eq, stop at the first blocking zero
        alpha = Fraction(1)
        blocker = None
        for a in free:
            if z_eq[a] < 0:
                step = z[a] / (z[a] - z_eq[a])
                if step < alpha:
                    alpha = step
                    blocker = a
        z = [z[a] + alpha * (z_eq[a] - z[a]) for a in range(m)]
        if blocker is not None:
            z[blocker] = Fraction(0)
            working.add(blocker)
    raise RuntimeError("active-set iteration failed to converge")  # pragma: no cover


# ---------------------------------------------------------------------------
# NMP and h-rules


def kkt_residual(P: Union[Problem, TypedProfile], z: Mixture) -> Fraction:
    """Exact stationarity residual of the Nash log-welfare gradient at ``z``.

    For supported outcomes the gradient sum must equal the agent count n; for
    unsupported ones it may not exceed n.  The returned rational is the worst
    violation; 0 certifies stationarity exactly.
    """
    entries, n, m = _typed_entries(P)
    if z.m != m:
        raise ValueError("dimension mismatch")
    inv = []
    for count, mask in entries:
        U = sum((z.z[a] for a in range(m) if mask >> a & 1), Fraction(0))
        if U == 0:
            raise ValueError("kkt_residual needs every agent utility positive")
        inv.append(Fraction(count) / U)
    residual = Fraction(0)
    for a in range(m):
        g = sum(
            (inv[t] for t, (_, mask) in enumerate(entries) if mask >> a & 1),
            Fraction(0),
        )
        if z.z[a] > 0:
            residual = max(residual, abs(g - n))
        else:
            residual = max(residual, g - n)
    return residual


def _float_to_mixture(zf, m: int) -> Mixture:
    """Round floats to dyadic rationals that sum to exactly 1."""
    scale = 1 << 52
    ints = [max(0, round(x * scale)) for x in zf]
    coords = [Fraction(v, scale) for v in ints]
    drift = 1 - sum(coords)
    top = max(range(m), key=lambda a: coords[a])
    coords[top] += drift
    return Mixture(tuple(coords))


def _solve_dense_float(A, b):
    """Gaussian elimination with partial pivoting; returns None if singular."""
    k = len(A)
    M = [row[:] + [b[i]] for i, row in enumerate(A)]
    for col in range(k):
        pivot = max(range(col, k), key=lambda r: abs(M[r][col]))
        if abs(M[pivot][col]) < 1e-300:
            return None
        M[col], M[pivot] = M[pivot], M[col]
        inv = 1.0 / M[col][col]
        for r in range(k):
            if r != col and M[r][col] != 0.0:
                f = M[r][col] * inv
                for c in range(col, k + 1):
                    M[r][c] -= f * M[col][c]
    return [M[r][k] / M[r][r] for r in range(k)]


def _nmp_newton(zf, counts, members, liking, n, m):
    """Newton refinement of the Nash stationarity system on the support.

    Solves phi_a(z) = lambda for all supported a together with sum z = 1.
    Coordinates driven to the boundary are dropped from the support.
    Returns the refined full-length iterate, or None if refinement failed.
    """
    z = list(zf)
    support = [a for a in range(m) if z[a] > 1e-10]
    if not support:
        return None
    for a in range(m):
        if a not in support:
            z[a] = 0.0
    total = sum(z)
    z = [x / total for x in z]
    lam = float(n)
    for _ in range(60):
        ntypes = len(counts)
        util = [sum(z[a] for a in members[t]) for t in range(ntypes)]
        if min(util[t] for t in range(ntypes) if counts[t]) <= 0:
            return None
        inv = [counts[t] / util[t] for t in range(ntypes)]
        k = len(support)
        phi = [sum(inv[t] for t in liking[a] ) for a in support]
        # bordered system: [J  -1; 1^T 0] [dz; dlam] = [lam - phi; 1 - sum z]
        A = [[0.0] * (k + 1) for _ in range(k + 1)]
        rhs = [0.0] * (k + 1)
        for i, a in enumerate(support):
            for j, b in enumerate(support):
                s = 0.0
                for t in liking[a]:
                    if b in members[t]:
                        s -= counts[t] / (util[t] * util[t])
                A[i][j] = s
            A[i][k] = -1.0
            rhs[i] = lam - phi[i]
        for j in range(k):
            A[k][j] = 1.0
        rhs[k] = 1.0 - sum(z[a] for a in support)
        step = _solve_dense_float(A, rhs)
        if step is None:
            # singular system (flat optimal face): regularize and retry so the
            # step still makes progress toward some stationary point
            for i in range(k):
                A[i][i] -= 1e-8
            step = _solve_dense_float(A, rhs)
            if step is None:
                return None
        alpha = 1.0
        for i, a in enumerate(support):
            if step[i] < 0 and z[a] + step[i] < 0.05 * z[a]:
                alpha = min(alpha, -0.95 * z[a] / step[i])
        if alpha < 1e-6:
            # a coordinate is being driven to the boundary: drop it
            drop = min(
                (i for i in range(k) if step[i] < 0),
                key=lambda i: z[support[i]],
            )
            z[support[drop]] = 0.0
            support.pop(drop)
            if not support:
                return None
            total = sum(z)
            z = [x / total for x in z]
            lam = float(n)
            continue
        moved = 0.0
        for i, a in enumerate(support):
            z[a] += alpha * step[i]
            moved = max(moved, abs(step[i]))
        lam += alpha * step[k]
        if moved < 1e-15:
            break
    return z


def nmp_rule(
    P: Union[Problem, TypedProfile], tol: Fraction = DEFAULT_NMP_TOL
) -> NmpSolution:
    """Nash max product: maximize the sum of log utilities over the simplex.

    Multiplicative fixed-point iteration derived from the stationarity
    condition: z_a <- z_a * (1/n) * sum over agents liking a of 1/U_i.
    The iteration preserves the simplex; a damping step (average with the
    previous iterate) is applied whenever the objective fails to increase.
    Once the iterate is close, a Newton refinement on the detected support
    polishes it to machine precision (falling back to the multiplicative
    loop if the support guess is wrong).  The final iterate is rounded to
    exact rationals and certified by ``kkt_residual``.
    """
    tol = Fraction(tol)
    if tol <= 0:
        raise ValueError("tol must be positive")
    entries, n, m = _typed_entries(P)
    masks = [mask for _, mask in entries]
    counts = [float(c) for c, _ in entries]

    # collapse outcomes liked by exactly the same agent types: the objective
    # only sees the total weight of such a class, and merging removes the
    # structural Jacobian singularity duplicates would cause
    by_key: dict = {}
    for a in range(m):
        key = 0
        for t, mask in enumerate(masks):
            if mask >> a & 1:
                key |= 1 << t
        by_key.setdefault(key, []).append(a)
    class_members = list(by_key.values())
    mr = len(class_members)
    liking = [
        [t for t in range(len(masks)) if masks[t] >> group[0] & 1]
        for group in class_members
    ]
    members = [
        set(c for c in range(mr) if masks[t] >> class_members[c][0] & 1)
        for t in range(len(masks))
    ]

    zf = [len(group) / m for group in class_members]
    tol_f = float(tol)

    def util(t, zz):
        return sum(zz[c] for c in members[t])

    def objective(zz):
        return sum(counts[t] * math.log(max(util(t, zz), 1e-300)) for t in range(len(masks)))

    def full_residual(zz):
        inv = [counts[t] / max(util(t, zz), 1e-300) for t in range(len(masks))]
        g = [sum(inv[t] for t in liking[c]) for c in range(mr)]
        res = 0.0
        for c in range(mr):
            if zz[c] > _SNAP:
                res = max(res, abs(g[c] - n))
            else:
                res = max(res, g[c] - n)
        return res, g

    obj = objective(zf)
    iterations = 0
    converged = False
    while iterations < _NMP_ITERATION_CAP:
        iterations += 1
        residual, g = full_residual(zf)
        if residual <= tol_f * 0.5:
            converged = True
            break
        if iterations % 25 == 0 and residual < 1e-1 * n:
            refined = _nmp_newton(zf, counts, members, liking, n, mr)
            if refined is not None:
                ref_res, ref_g = full_residual(refined)
                if ref_res <= tol_f * 0.5:
                    zf, converged = refined, True
                    break
                if ref_res < residual:
                    # correct direction but not converged, or the support must
                    # grow: reseed the violating coordinates and continue
                    zf = [
                        max(x, 1e-8) if ref_g[c] > n else x
                        for c, x in enumerate(refined)
                    ]
                    total = sum(zf)
                    zf = [x / total for x in zf]
                    obj = objective(zf)
                    continue
        cand = [zf[c] * g[c] / n for c in range(mr)]
        total = sum(cand)
        cand = [x / total for x in cand]
        cand_obj = objective(cand)
        if cand_obj < obj:
            cand = [(x + y) / 2 for x, y in zip(zf, cand)]
            cand_obj = objective(cand)
        zf, obj = cand, cand_obj

    zf = [0.0 if x <= _SNAP else x for x in zf]
    total = sum(zf)
    zf = [x / total for x in zf]
    # expand back: a class's weight is split uniformly among its columns
    zfull = [0.0] * m
    for c, group in enumerate(class_members):
        for a in group:
            zfull[a] = zf[c] / len(group)
    mix = _float_to_mixture(zfull, m)
    residual = kkt_residual(P, mix)
    return NmpSolution(
        z=mix,
        kkt_residual=residual,
        iterations=iterations,
        converged=converged and residual <= tol,
    )


def h_rule(P: Problem, q, tol: Fraction = Fraction(1, 10**9)) -> HRuleSolution:
    """Power-family welfare rule: maximize sum of sign(q) * U_i^q, q < 1, q != 0.

    Same multiplicative scheme as NMP with gradient weights h'(U) = |q| *
    U^(q-1).  The objective is strictly concave in utilities, so the optimal
    utility profile is unique; ``gap`` bounds the simplex-gradient optimality
    gap at the returned point.
    """
    q = Fraction(q)
    if q >= 1 or q == 0:
        raise ValueError("h_rule requires q < 1 and q != 0")
    tol_f = float(Fraction(tol))
    entries, n, m = _typed_entries(P)
    masks = [mask for _, mask in entries]
    counts = [float(c) for c, _ in entries]
    liking = [[t for t, mask in enumerate(masks) if mask >> a & 1] for a in range(m)]
    members = [[a for a in range(m) if mask >> a & 1] for mask in masks]
    qf = float(q)
    sign = 1.0 if q > 0 else -1.0

    def hprime(x):
        return abs(qf) * x ** (qf - 1.0)

    def objective(zz):
        return sum(
            counts[t] * sign * max(sum(zz[a] for a in members[t]), 1e-300) ** qf
            for t in range(len(masks))
        )

    zf = [1.0 / m] * m
    obj = objective(zf)
    iterations = 0
    converged = False
    gap = math.inf
    while iterations < _NMP_ITERATION_CAP:
        iterations += 1
        grad_w = [
            counts[t] * hprime(max(sum(zf[a] for a in members[t]), 1e-300))
            for t in range(len(masks))
        ]
        g = [sum(grad_w[t] for t in liking[a]) for a in range(m)]
        avg = sum(zf[a] * g[a] for a in range(m))
        gap = max(g) - avg
        if gap <= tol_f * max(1.0, avg):
            converged = True
            break
        cand = [zf[a] * g[a] / avg for a in range(m)]
        total = sum(cand)
        cand = [x / total for x in cand]
        cand_obj = objective(cand)
        if cand_obj <= obj:
            cand = [(x + y) / 2 for x, y in zip(zf, cand)]
            cand_obj = objective(cand)
        zf, obj = cand, cand_obj

    zf = [0.0 if x <= _SNAP else x for x in zf]
    total = sum(zf)
    zf = [x / total for x in zf]
    return HRuleSolution(
        z=_float_to_mixture(zf, m),
        gap=Fraction(gap).limit_denominator(10**15) if math.isfinite(gap) else Fraction(1),
        iterations=iterations,
        converged=converged,
    )


# ---------------------------------------------------------------------------
# dispatcher


@functools.lru_cache(maxsize=1 << 17)
def evaluate(rule: RuleId, P: Problem):
    """Evaluate a rule, returning (UtilityProfile, Mixture).  Memoized."""
    if rule.kind == "UTIL":
        return util_rule(P)
    if rule.kind == "CUT":
        return cut_rule(P)
    if rule.kind == "RP":
        return rp_exact(P)
    if rule.kind == "RP_MC":
        return rp_monte_carlo(P, rule.samples, rule.seed)
    if rule.kind == "EGAL":
        return egal_rule(P)
    if rule.kind == "NMP":
        sol = nmp_rule(P)
        return utilities(P, sol.z), sol.z
    if rule.kind == "HRULE":
        sol = h_rule(P, rule.q)
        return utilities(P, sol.z), sol.z
    raise ValueError(f"unknown rule {rule}")  # pragma: no cover


def is_numeric(rule: RuleId) -> bool:
    """Rules whose outputs carry a numeric tolerance rather than exactness."""
    return rule.kind in {"NMP", "HRULE"}
