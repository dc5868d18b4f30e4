"""End-to-end acceptance suite: one test (and one printed verdict line) per
criterion.

Reference constants below (mixtures, welfare-ratio tables, the guaranteed
efficiency row) are frozen from the external benchmark write-up this library
reproduces.  Two of them are known to disagree with a faithful implementation;
those tests fail with a diagnostic message rather than being weakened:

* criterion 3: the eight reference decimals for the 36-agent Nash outcome are
  under-converged (off by up to 1e-4 from the true optimum, and they break
  the c/d symmetry of the profile), so the 1e-6 coordinate match cannot hold;
* criterion 8: the reference EGAL averages match a plain maximin LP vertex
  solution, not the leximin rule implemented here, and the reference CUT
  average at (n,m)=(3,3) is smaller than the RP average, contradicting the
  exact welfare dominance of CUT over RP that criterion 6 verifies.
"""

import itertools
import random
import time
from fractions import Fraction

from fairmix import axioms, core, experiments, generators, rules
from fairmix.axioms import SpVariant
from fairmix.core import Mixture, Problem, utilities

F = Fraction

_RULE_IDS = {
    "UTIL": rules.UTIL,
    "EGAL": rules.EGAL,
    "CUT": rules.CUT,
    "RP": rules.RP,
    "NMP": rules.NMP,
}

# slack applied when judging numeric (NMP) outputs against exact axioms
_NUMERIC_SLACK = F(1, 10**6)


def _verdict(num, name, ok, detail=""):
    line = f"CRITERION {num:02d} [{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f" -- {detail}"
    print(line)
    assert ok, line


def _random_problem(rng, max_n, max_m, min_n=1):
    n = rng.randint(min_n, max_n)
    m = rng.randint(1, max_m)
    rows = []
    for _ in range(n):
        mask = rng.randrange(1, 1 << m)
        rows.append(tuple(1 if mask >> a & 1 else 0 for a in range(m)))
    return Problem(tuple(rows))


# ---------------------------------------------------------------------------
# criterion 1: exact outputs of CUT, RP and EGAL on the worked examples


def test_criterion_01_worked_example_exactness():
    start = time.monotonic()
    ex3 = generators.fixture("ex3")
    ex5 = generators.fixture("ex5")
    checks = [
        rules.cut_rule(ex3)[1].z == (F(1, 5), F(1, 10), F(1, 10), F(3, 5), F(0)),
        rules.rp_exact(ex3)[1].z == (F(1, 5), F(1, 6), F(1, 6), F(7, 15), F(0)),
        rules.cut_rule(ex5)[1].z == (F(0), F(0), F(0), F(1, 2), F(1, 2)),
        rules.rp_exact(ex5)[1].z == (F(1, 9), F(1, 9), F(1, 9), F(1, 3), F(1, 3)),
        rules.egal_rule(generators.fixture("egal-true"))[1].z
        == (F(0), F(1, 2), F(1, 2)),
        rules.egal_rule(generators.fixture("egal-misreport"))[1].z
        == (F(1, 3), F(1, 3), F(1, 3)),
    ]
    elapsed = time.monotonic() - start
    _verdict(
        1,
        "CUT/RP/EGAL exact on worked examples",
        all(checks) and elapsed < 1.0,
        f"{sum(checks)}/6 exact matches in {elapsed:.3f}s",
    )


# ---------------------------------------------------------------------------
# criterion 2: NMP convergence plus exact certificate on the AFS example


def test_criterion_02_nmp_kkt_exactness():
    start = time.monotonic()
    P = generators.fixture("afs-example")
    sol = rules.nmp_rule(P)
    target = (F(2, 5), F(0), F(0), F(3, 5))
    coord_err = max(abs(got - want) for got, want in zip(sol.z.z, target))
    residual = rules.kkt_residual(P, Mixture(target))
    elapsed = time.monotonic() - start
    _verdict(
        2,
        "NMP converges to (2/5,0,0,3/5) with exact certificate",
        sol.converged
        and coord_err <= F(1, 10**8)
        and residual == 0
        and elapsed < 1.0,
        f"coord error {float(coord_err):.2e}, residual {residual}, "
        f"{elapsed:.3f}s",
    )


# ---------------------------------------------------------------------------
# criterion 3: 36-agent manipulation -- coordinate match vs reference decimals

# reference decimals recorded for the 36-agent construction (truthful run and
# the run where one {a}-agent reports {a,b})
_A36_REFERENCE_TRUTHFUL = (
    0.4163514575435199,
    0.08787730532715962,
    0.2479123840667547,
    0.24785885306256383,
)
_A36_REFERENCE_MISREPORT = (
    0.4179621510380684,
    0.1389580435629242,
    0.22150747720884034,
    0.22157232819017458,
)


def test_criterion_03_a36_exsp_violation():
    start = time.monotonic()
    truthful = generators.appendix_36().to_problem()
    misreported = generators.appendix_36(misreport=True).to_problem()
    zt = rules.nmp_rule(truthful).z
    zm = rules.nmp_rule(misreported).z
    dev_t = max(
        abs(float(z) - ref) for z, ref in zip(zt.z, _A36_REFERENCE_TRUTHFUL)
    )
    dev_m = max(
        abs(float(z) - ref) for z, ref in zip(zm.z, _A36_REFERENCE_MISREPORT)
    )
    verdict = axioms.check_sp(rules.NMP, truthful, SpVariant.SP_PLUS)
    gain_ok = (
        verdict.passed is False
        and verdict.witness["misreport"] == (0, 1)
        and verdict.witness["gain"] > F(1, 1000)
    )
    elapsed = time.monotonic() - start
    _verdict(
        3,
        "36-agent NMP coordinates within 1e-6 of reference and SP+ gain > 1e-3",
        dev_t <= 1e-6 and dev_m <= 1e-6 and gain_ok and elapsed < 5.0,
        f"coordinate deviations {dev_t:.2e} / {dev_m:.2e} exceed 1e-6: the "
        f"reference decimals are under-converged (they violate the c/d "
        f"symmetry of the profile); the solver's optimum carries an exact "
        f"stationarity certificate. SP+ gain "
        f"{float(verdict.witness['gain']):.7f} > 1e-3 holds. {elapsed:.2f}s",
    )


# ---------------------------------------------------------------------------
# criterion 4: exact rational certificates for the large constructions


def test_criterion_04_exact_construction_certificates():
    start = time.monotonic()
    residuals = [
        rules.kkt_residual(generators.appendix_860(), generators.APPENDIX_860_Z),
        rules.kkt_residual(
            generators.appendix_860(misreport=True),
            generators.APPENDIX_860_Z_MISREPORT,
        ),
    ]
    sp0_truthful, sp0_misreported = generators.appendix_sp0()
    residuals += [
        rules.kkt_residual(sp0_truthful, generators.SP0_Z_TRUTHFUL),
        rules.kkt_residual(sp0_misreported, generators.SP0_Z_REPORTED),
    ]
    checks = [
        generators.APPENDIX_860_Z.z == (F(9, 20), F(1, 20), F(1, 4), F(1, 4)),
        generators.APPENDIX_860_Z_MISREPORT.z
        == (F(1, 2), F(1, 6), F(1, 6), F(1, 6)),
    ]
    elapsed = time.monotonic() - start
    _verdict(
        4,
        "kkt_residual exactly 0 on the 860-agent and SP0 constructions",
        all(r == 0 for r in residuals) and all(checks) and elapsed < 5.0,
        f"residuals {residuals}, {elapsed:.2f}s",
    )


# ---------------------------------------------------------------------------
# criterion 5: the full axiom matrix

# rows: axiom; columns: rule -> True for "+" (must never fail), False for "-"
# (must have a counterexample in the corpus)
_AXIOM_MATRIX = {
    "EFF": {"RP": False, "CUT": False, "UTIL": True, "EGAL": True, "NMP": True},
    "EXSP": {"RP": True, "CUT": True, "UTIL": True, "EGAL": True, "NMP": False},
    "SP": {"RP": True, "CUT": True, "UTIL": True, "EGAL": False, "NMP": False},
    "IFS": {"RP": True, "CUT": True, "UTIL": False, "EGAL": True, "NMP": True},
    "GFS": {"RP": True, "CUT": True, "UTIL": False, "EGAL": False, "NMP": True},
    "AFS": {"RP": False, "CUT": False, "UTIL": False, "EGAL": False, "NMP": True},
    "CFS": {"RP": False, "CUT": False, "UTIL": False, "EGAL": False, "NMP": True},
    "PART": {"RP": True, "CUT": True, "UTIL": True, "EGAL": True, "NMP": True},
    "PART*": {"RP": True, "CUT": True, "UTIL": False, "EGAL": False, "NMP": True},
    "DEC": {"RP": True, "CUT": True, "UTIL": False, "EGAL": False, "NMP": True},
}


def _evaluator(P):
    cache = {}

    def evald(rname):
        if rname not in cache:
            try:
                cache[rname] = rules.evaluate(_RULE_IDS[rname], P)
            except ValueError:  # size cap
                cache[rname] = None
        return cache[rname]

    return evald


def _axiom_outcome(axiom, rname, P, evald):
    """True = satisfied, False = counterexample, None = not applicable."""
    rid = _RULE_IDS[rname]
    slack = _NUMERIC_SLACK if rules.is_numeric(rid) else F(0)
    try:
        if axiom in ("SP", "EXSP"):
            variant = SpVariant.SP if axiom == "SP" else SpVariant.EXSP
            passed = axioms.check_sp(rid, P, variant).passed
            return None if passed is None else passed
        if axiom in ("PART", "PART*"):
            # re-evaluating the rule once per agent is impractical on the
            # large constructions; the random corpus covers these cells
            if P.n < 2 or P.n > axioms.COALITION_MAX_AGENTS:
                return None
            passed = axioms.check_participation(
                rid, P, strict=(axiom == "PART*")
            ).passed
            return None if passed is None else passed
        if axiom == "DEC":
            return axioms.check_dec(rid, P).passed
        Uz = evald(rname)
        if Uz is None:
            return None
        U, z = Uz
        if axiom == "EFF":
            v = core.is_efficient(P, U, source=z)
            return v.passed or v.witness["surplus"] <= slack
        if axiom == "IFS":
            v = axioms.check_ifs(P, U)
            return v.passed or (
                v.witness["required"] - v.witness["utility"] <= slack
            )
        if axiom == "GFS":
            v = axioms.check_gfs(P, U, z)
            return v.passed or (
                v.witness["required"] - v.witness["pooled_weight"] <= slack
            )
        if axiom == "AFS":
            return axioms.check_afs(P, U, tol=slack).passed
        if axiom == "CFS":
            return axioms.check_cfs(P, U, tol=slack).passed
    except ValueError:  # size caps, connected problems for DEC, n = 1
        return None
    raise AssertionError(f"unknown axiom {axiom}")  # pragma: no cover


def _minus_witnesses():
    ex3 = generators.fixture("ex3")
    ex5 = generators.fixture("ex5")
    egal_true = generators.fixture("egal-true")
    decmp = generators.fixture("dec-mprime")
    a36 = generators.appendix_36().to_problem()
    cw554 = generators.cut_worstcase(generators.CutWorstCaseParams(5, 5, 4))
    clone = Problem(((1, 0), (1, 0), (0, 1)))
    part_util = Problem(((1, 0), (0, 1), (0, 1)))
    return {
        ("EFF", "RP"): ex3,
        ("EFF", "CUT"): cw554,
        ("EXSP", "NMP"): a36,
        ("SP", "NMP"): a36,
        ("SP", "EGAL"): egal_true,
        ("IFS", "UTIL"): ex3,
        ("GFS", "UTIL"): ex3,
        ("GFS", "EGAL"): clone,
        ("AFS", "RP"): ex3,
        ("AFS", "CUT"): ex3,
        ("AFS", "UTIL"): ex3,
        ("AFS", "EGAL"): clone,
        ("CFS", "RP"): ex5,
        ("CFS", "CUT"): cw554,
        ("CFS", "UTIL"): ex3,
        ("CFS", "EGAL"): clone,
        ("PART*", "UTIL"): part_util,
        ("PART*", "EGAL"): clone,
        ("DEC", "UTIL"): decmp,
        ("DEC", "EGAL"): decmp,
    }


def test_criterion_05_axiom_matrix():
    start = time.monotonic()
    rng = random.Random(20260823)
    corpus = [
        (f"random-{k}", _random_problem(rng, max_n=6, max_m=5, min_n=2))
        for k in range(500)
    ]
    corpus += [(name, generators.fixture(name)) for name in
               generators.fixture_names()]

    plus_failures = []
    for tag, P in corpus:
        evald = _evaluator(P)
        for axiom, row in _AXIOM_MATRIX.items():
            for rname, is_plus in row.items():
                if not is_plus:
                    continue
                if _axiom_outcome(axiom, rname, P, evald) is False:
                    plus_failures.append((axiom, rname, tag))

    missing_minus = []
    for (axiom, rname), P in _minus_witnesses().items():
        if _axiom_outcome(axiom, rname, P, _evaluator(P)) is not False:
            missing_minus.append((axiom, rname))

    elapsed = time.monotonic() - start
    _verdict(
        5,
        "axiom matrix: zero '+' violations, a counterexample per '-' cell",
        not plus_failures and not missing_minus and elapsed < 600,
        f"'+' violations: {plus_failures or 'none'}; '-' cells without "
        f"counterexample: {missing_minus or 'none'}; {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# criterion 6: welfare dominance and efficiency inheritance of CUT over RP


def test_criterion_06_cut_dominates_rp():
    start = time.monotonic()
    rng = random.Random(60623)
    dominance_failures = 0
    inheritance_failures = 0
    rp_efficient_seen = 0
    for _ in range(1000):
        P = _random_problem(rng, max_n=8, max_m=5)
        Urp, zrp = rules.rp_exact(P)
        Ucut, zcut = rules.cut_rule(P)
        if Urp.total() > Ucut.total():
            dominance_failures += 1
        if core.is_efficient(P, Urp, source=zrp).passed:
            rp_efficient_seen += 1
            if not core.is_efficient(P, Ucut, source=zcut).passed:
                inheritance_failures += 1
    elapsed = time.monotonic() - start
    _verdict(
        6,
        "sum U^rp <= sum U^cut exactly; RP efficient => CUT efficient (1000x)",
        dominance_failures == 0
        and inheritance_failures == 0
        and rp_efficient_seen > 10
        and elapsed < 600,
        f"{rp_efficient_seen} RP-efficient instances, {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# criterion 7: worst-case families

_CUT_BOUND_ROW = {6: 91, 8: 87, 12: 82, 32: 68, 64: 58, 1024: 27, 16384: 11}


def test_criterion_07_worstcase_families():
    start = time.monotonic()
    bound_devs = {
        n: abs(float(generators.cut_bound(n)) * 100 - pct)
        for n, pct in _CUT_BOUND_ROW.items()
    }
    params = generators.RpWorstCaseParams(k=3, d=2, ell=2)
    ratio = generators.rp_family_ratio(params)
    P = generators.rp_worstcase(params)
    U, _ = rules.rp_exact(P)
    best = max(P.column_sum(a) for a in range(P.m))
    realized = U.total() / best
    elapsed = time.monotonic() - start
    _verdict(
        7,
        "cut_bound row within 1pp; rp family ratio 4/5 exact and realized",
        max(bound_devs.values()) <= 1.0
        and ratio == F(4, 5)
        and realized == ratio,
        f"max bound deviation {max(bound_devs.values()):.2f}pp, realized "
        f"ratio {realized}, {elapsed:.2f}s",
    )


# ---------------------------------------------------------------------------
# criterion 8: impartial-culture reproduction within +-0.03

# reference average welfare ratios from the benchmark tables
_REFERENCE_AVG = {
    "NMP": {(3, 3): 0.9451, (3, 5): 0.9652, (5, 3): 0.9171,
            (5, 5): 0.9309, (7, 3): 0.8926, (7, 5): 0.9324},
    "EGAL": {(3, 3): 0.9325, (3, 5): 0.9256, (5, 3): 0.8482,
             (5, 5): 0.8484, (7, 3): 0.8221, (7, 5): 0.8131},
    "CUT": {(3, 3): 0.9333, (3, 5): 0.9717, (5, 3): 0.9372,
            (5, 5): 0.9452, (7, 3): 0.9139, (7, 5): 0.9468},
    "RP": {(3, 3): 0.9483, (3, 5): 0.9733, (5, 3): 0.8992,
           (5, 5): 0.9302, (7, 3): 0.8851, (7, 5): 0.8952},
}


def test_criterion_08_experiment_reproduction():
    start = time.monotonic()
    rule_ids = (rules.NMP, rules.EGAL, rules.CUT, rules.RP)
    sums = {
        (rname, nm): F(0)
        for rname in _REFERENCE_AVG
        for nm in _REFERENCE_AVG[rname]
    }
    for seed in range(20):
        grid = experiments.ExperimentGrid(
            (3, 5, 7), (3, 5), draws=100, seed=seed, rules=rule_ids
        )
        for rule, n, m, _, _, cell in experiments.run_grid(grid):
            sums[(str(rule), (n, m))] += cell.avg_ratio

    measured = {key: float(total / 20) for key, total in sums.items()}
    out_of_band = [
        f"{rname}{nm}: measured {measured[(rname, nm)]:.4f} vs reference "
        f"{ref:+.4f} (diff {measured[(rname, nm)] - ref:+.4f})"
        for rname, cells in _REFERENCE_AVG.items()
        for nm, ref in cells.items()
        if abs(measured[(rname, nm)] - ref) > 0.03
    ]
    ordering_ok = all(
        measured[("CUT", (n, m))] >= measured[("NMP", (n, m))]
        >= measured[("EGAL", (n, m))]
        for n in (5, 7)
        for m in (3, 5)
    )
    elapsed = time.monotonic() - start
    _verdict(
        8,
        "average welfare ratios within +-0.03 of reference; CUT>=NMP>=EGAL",
        not out_of_band and ordering_ok and elapsed < 1800,
        f"ordering holds: {ordering_ok}; out-of-band cells: "
        f"{'; '.join(out_of_band) or 'none'}. The EGAL reference averages "
        f"match a plain maximin LP vertex (no leximin refinement), which "
        f"sits below the leximin rule implemented here; the CUT reference "
        f"at (3,3) is below the RP reference, contradicting CUT's exact "
        f"welfare dominance over RP. {elapsed:.0f}s",
    )


# ---------------------------------------------------------------------------
# criterion 9: EGAL against a brute-force grid leximin oracle


def _simplex_grid(np, m, step=1000):
    if m == 1:
        return np.ones((1, 1))
    if m == 2:
        i = np.arange(step + 1, dtype=float)
        return np.stack([i, step - i], axis=1) / step
    blocks = []
    for i in range(step + 1):
        j = np.arange(step - i + 1, dtype=float)
        blocks.append(
            np.stack([np.full_like(j, float(i)), j, step - i - j], axis=1)
        )
    return np.concatenate(blocks) / step


def test_criterion_09_egal_grid_oracle():
    import numpy as np

    start = time.monotonic()
    worst = 0.0
    checked = 0
    for m in (1, 2, 3):
        grid = _simplex_grid(np, m)
        row_types = [
            tuple(1 if mask >> a & 1 else 0 for a in range(m))
            for mask in range(1, 1 << m)
        ]
        for n in (1, 2, 3, 4):
            for combo in itertools.combinations_with_replacement(row_types, n):
                P = Problem(combo)
                U, _ = rules.egal_rule(P)
                exact = sorted(float(x) for x in U.U)
                scores = np.sort(grid @ np.array(P.u, dtype=float).T, axis=1)
                best = scores[np.lexsort(scores.T[::-1])[-1]]
                worst = max(worst, float(np.max(np.abs(best - exact))))
                checked += 1
    elapsed = time.monotonic() - start
    _verdict(
        9,
        "EGAL leximin equals the 1e-3-grid oracle within 2e-3 (n<=4, m<=3)",
        worst <= 2e-3,
        f"{checked} problems, worst coordinate gap {worst:.2e}, "
        f"{elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# criterion 10: invariant suites


def test_criterion_10_invariant_suites():
    timings = {}
    failures = []

    def suite(name):
        def wrap(fn):
            start = time.monotonic()
            try:
                fn()
            except AssertionError as exc:
                failures.append(f"{name}: {exc}")
            timings[name] = time.monotonic() - start

        return wrap

    @suite("anonymity+neutrality")
    def _():
        rng = random.Random(1001)
        for _ in range(12):
            P = _random_problem(rng, max_n=5, max_m=4)
            rperm = list(range(P.n))
            rng.shuffle(rperm)
            Pr = Problem(tuple(P.u[rperm[i]] for i in range(P.n)))
            cperm = list(range(P.m))
            rng.shuffle(cperm)
            Pc = Problem(
                tuple(tuple(row[cperm[a]] for a in range(P.m)) for row in P.u)
            )
            for rid in _RULE_IDS.values():
                U, z = rules.evaluate(rid, P)
                Ur, _ = rules.evaluate(rid, Pr)
                _, zc = rules.evaluate(rid, Pc)
                if rules.is_numeric(rid):
                    assert all(
                        abs(Ur.U[i] - U.U[rperm[i]]) < _NUMERIC_SLACK
                        for i in range(P.n)
                    )
                    assert all(
                        abs(zc.z[a] - z.z[cperm[a]]) < _NUMERIC_SLACK
                        for a in range(P.m)
                    )
                else:
                    assert Ur.U == tuple(U.U[rperm[i]] for i in range(P.n))
                    assert zc.z == tuple(z.z[cperm[a]] for a in range(P.m))

    @suite("egal clone invariance")
    def _():
        rng = random.Random(1003)
        for _ in range(15):
            P = _random_problem(rng, max_n=5, max_m=4)
            i = rng.randrange(P.n)
            clone = Problem(P.u + (P.u[i],))
            U, _ = rules.egal_rule(P)
            U2, _ = rules.egal_rule(clone)
            assert U2.U[: P.n] == U.U and U2.U[P.n] == U.U[i]

    @suite("nmp separation inequality")
    def _():
        rng = random.Random(1005)
        for _ in range(10):
            P = _random_problem(rng, max_n=5, max_m=4)
            Ustar = utilities(P, rules.nmp_rule(P).z)
            for _ in range(15):
                weights = [F(rng.randint(0, 5)) for _ in range(P.m)]
                if sum(weights) == 0:
                    continue
                z = Mixture(tuple(w / sum(weights) for w in weights))
                U = utilities(P, z)
                lhs = sum(U.U[i] / Ustar.U[i] for i in range(P.n))
                assert lhs <= P.n * (1 + rules.DEFAULT_NMP_TOL)

    @suite("decentralization NMP/CUT/RP")
    def _():
        rng = random.Random(1007)
        cases = [generators.fixture("dec-m"), generators.fixture("dec-mprime")]
        for _ in range(10):
            A = _random_problem(rng, max_n=3, max_m=3)
            B = _random_problem(rng, max_n=3, max_m=3)
            rows = [row + (0,) * B.m for row in A.u]
            rows += [(0,) * A.m + row for row in B.u]
            cases.append(Problem(tuple(rows)))
        for P in cases:
            for rid in (rules.NMP, rules.CUT, rules.RP):
                assert axioms.check_dec(rid, P).passed is True

    @suite("small-size efficiency")
    def _():
        rng = random.Random(1009)
        for _ in range(60):
            if rng.random() < 0.5:
                P = _random_problem(rng, max_n=4, max_m=6)
            else:
                P = _random_problem(rng, max_n=8, max_m=3)
            undom = sorted(core.undominated_outcomes(P))
            weights = [F(0)] * P.m
            for a in undom:
                weights[a] = F(rng.randint(0, 5))
            if sum(weights) == 0:
                weights[undom[0]] = F(1)
            z = Mixture(tuple(w / sum(weights) for w in weights))
            assert core.is_efficient(P, utilities(P, z), source=z).passed

    slow = [name for name, t in timings.items() if t >= 300]
    _verdict(
        10,
        "invariant suites (each under 5 minutes)",
        not failures and not slow,
        f"timings {[f'{k}={v:.1f}s' for k, v in timings.items()]}; "
        f"failures: {failures or 'none'}",
    )
