"""Acceptance criteria 1-8.  Each test records one pass/fail line, printed at the end of the run."""

import time

import numpy as np

from qsemi import catalog
from qsemi.classify import haar_type_report, tracial_check
from qsemi.fdalg import support_projection
from qsemi.hyper import (
    NotIntertwining,
    Target,
    build_hypergroup,
    factor_through,
    full_system,
    self_target,
    trivial_target,
    verify_hypergroup,
)
from qsemi.fdalg import Functional
from qsemi.idem import SolverConfig, find_idempotents, mult_domain_verify
from qsemi.qsg import cancellation_check

from conftest import ACCEPTANCE, idempotents_of, qs_named

THEOREM_TOL = 1e-8
NO_CANCELLATION = ("leftzero2", "rightzero2")  # all identities of the theorems fail here
THEOREM_SCOPE = tuple(n for n in catalog.CATALOG_NAMES if n not in NO_CANCELLATION)


def record(key, ok, detail):
    ACCEPTANCE[key] = (bool(ok), detail)
    assert ok, detail


def test_criterion_1_commutative_census():
    expected = {"CZ2": 2, "CZ4": 3, "CZ2xZ2": 5, "CS3": 6}
    t0 = time.perf_counter()
    problems = []
    for name, count in expected.items():
        qs = catalog.build(name)
        found = find_idempotents(qs, SolverConfig())
        oracle = [phi for _, phi in qs.oracle()]
        if len(found) != count or len(oracle) != count:
            problems.append(f"{name}: found {len(found)}, oracle {len(oracle)}")
            continue
        # bijection within the dedup radius
        pairs = [[c.state.distance(o) <= 1e-6 for o in oracle] for c in found]
        if not (all(sum(r) == 1 for r in pairs) and all(sum(col) == 1 for col in zip(*pairs))):
            problems.append(f"{name}: no bijection with the subgroup oracle")
        for c in found:
            rep = haar_type_report(qs, c.state)
            if not (rep.haar_type and rep.agreement):
                problems.append(f"{name}: non-Haar or disagreeing report")
    elapsed = time.perf_counter() - t0
    if elapsed >= 30:
        problems.append(f"runtime {elapsed:.1f}s")
    record(1, not problems, f"counts {list(expected.values())}, {elapsed:.1f}s " + "; ".join(problems))


def test_criterion_2_cocommutative_census():
    qs = qs_named("dualS3")
    found = idempotents_of("dualS3")
    oracle = [phi for _, phi in qs.oracle()]
    problems = []
    if len(found) != 6 or len(oracle) != 6:
        problems.append(f"found {len(found)}, oracle {len(oracle)}")
    if any(min(c.state.distance(o) for o in oracle) > 1e-8 for c in found):
        problems.append("found state not in oracle")
    if any(c.residual > 1e-8 for c in found):
        problems.append("residual above 1e-8")
    non_haar = []
    for c in found:
        rep = haar_type_report(qs, c.state)
        if not rep.haar_type:
            non_haar.append(rep)
    if len(non_haar) != 3:
        problems.append(f"{len(non_haar)} non-Haar states")
    for rep in non_haar:
        if rep.support_ranks != (1, 0, 1) or rep.cond2_central.holds:
            problems.append(f"ranks {rep.support_ranks}, central {rep.cond2_central.holds}")
    record(2, not problems, f"6 idempotents, {len(non_haar)} not Haar type " + "; ".join(problems))


def test_criterion_3_kac_paljutkin():
    qs = qs_named("kac-paljutkin")
    problems = []
    worst = max(qs.report.residuals.values())
    if worst > 1e-12:
        problems.append(f"axiom residual {worst:.2e}")
    found = find_idempotents(qs, SolverConfig(starts=256, rng_seed=42))
    haar = catalog.kac_paljutkin_haar()
    counit = qs.counit_candidates()[0]
    for label, ref in (("Haar", haar), ("counit", counit)):
        if min(c.state.distance(ref) for c in found) > 1e-8:
            problems.append(f"{label} state missing")
    non_haar = sum(not haar_type_report(qs, c.state).haar_type for c in found)
    if non_haar < 1:
        problems.append("no non-Haar-type idempotent")
    # regression value frozen on first computation (seed 42, 256 starts)
    if len(found) != 8:
        problems.append(f"count {len(found)} != frozen 8")
    record(3, not problems, f"{len(found)} idempotents (frozen 8), {non_haar} not Haar type " + "; ".join(problems))


def test_criterion_4_theorem_instances():
    problems = []
    checked = 0
    for name in THEOREM_SCOPE:
        qs = qs_named(name)
        for c in idempotents_of(name):
            checked += 1
            md = mult_domain_verify(qs, c.state)
            if md.max_residual > THEOREM_TOL:
                problems.append(f"{name}: multiplicative domain {md.max_residual:.1e}")
            H = build_hypergroup(qs, c.state)
            rep = verify_hypergroup(H, THEOREM_TOL)
            if max(rep.dp0, rep.ompom) > THEOREM_TOL:
                problems.append(f"{name}: Dp0/ompom")
            if not (rep.cp_margin >= -THEOREM_TOL and max(rep.left_invariance, rep.right_invariance) <= THEOREM_TOL and rep.uniqueness_dim == 1):
                problems.append(f"{name}: hypergroup")
            if not rep.passed:
                problems.append(f"{name}: verify_hypergroup")
            if not haar_type_report(qs, c.state, H=H).agreement:
                problems.append(f"{name}: five conditions disagree")
    # outside the hypotheses the identities genuinely fail
    lz = qs_named("leftzero2")
    broken = any(mult_domain_verify(lz, c.state).max_residual > 0.1 for c in idempotents_of("leftzero2"))
    if not broken or cancellation_check(lz).weak:
        problems.append("left-zero control did not fail")
    record(4, not problems, f"{checked} idempotents on {len(THEOREM_SCOPE)} QS " + "; ".join(problems[:5]))


def test_criterion_5_tracial_corollary():
    problems = []
    tracial = 0
    for name in THEOREM_SCOPE:
        qs = qs_named(name)
        for c in idempotents_of(name):
            if tracial_check(qs, c.state):
                tracial += 1
                if not all(haar_type_report(qs, c.state).conditions):
                    problems.append(f"{name}: tracial but not Haar type")
    qs = qs_named("dualS3")
    phi = dict(qs.oracle())["{e,(12)}"]
    if tracial_check(qs, phi) or haar_type_report(qs, phi).haar_type:
        problems.append("witness on dual S3 is tracial or Haar type")
    record(5, not problems, f"{tracial} tracial idempotents all Haar type; witness phi_(12) " + "; ".join(problems))


def test_criterion_6_classical_bridge():
    problems = []
    names = ["leftzero2", "rightzero2", "null3", "mult01", "Z2", "Z3", "Z4", "Z2xZ2", "S3", "D4", "Q8"]
    for name in names:
        t = catalog.table_by_name(name)
        classical = catalog.classical_cancellation(t)
        quantum = cancellation_check(catalog.build_function_algebra(t))
        if classical != {"left": quantum.proper_left, "right": quantum.proper_right}:
            problems.append(name)
    lz = catalog.left_zero_table(2)
    if catalog.classical_cancellation(lz)["right"] or cancellation_check(catalog.build_function_algebra(lz)).proper_right:
        problems.append("left-zero right cancellation")
    record(6, not problems, f"{len(names)} tables agree; left-zero fails right cancellation " + "; ".join(problems))


def test_criterion_7_universal_factorization():
    problems = []
    qs = qs_named("CS3")
    omega = dict(qs.oracle())["{e,(123),(132)}"]
    H = build_hypergroup(qs, omega)

    z3 = catalog.build_function_algebra(catalog.cyclic_group(3).table)
    sysY = full_system(z3.algebra)
    haarY = Functional(z3.algebra, tuple(np.array([[1 / 3]]) for _ in range(3)))

    def restriction(images):
        pi = np.zeros((3, 6))
        for slot, g in zip(images, (0, 2, 5)):
            pi[slot, g] = 1.0
        return Target(sysY, z3.delta.matrix, haarY, sysY.matrix.conj().T @ pi)

    worst = 0.0
    for label, target in (("trivial", trivial_target(omega)), ("self", self_target(H)), ("C(A3)", restriction((0, 1, 2)))):
        m = factor_through(qs, omega, target, H=H)
        res = max(m.factorization, m.unitality, m.intertwining, m.kernel_inclusion, -m.cp_margin)
        worst = max(worst, res)
        if res > THEOREM_TOL or not m.unique:
            problems.append(f"{label}: residual {res:.1e}")
    try:
        factor_through(qs, omega, restriction((1, 0, 2)), H=H)
        problems.append("non-intertwining map accepted")
    except NotIntertwining:
        pass
    record(7, not problems, f"3 instances, worst residual {worst:.1e}; non-intertwining rejected " + "; ".join(problems))


def test_criterion_8_finite_dimensional_scope():
    """Only the finite-dimensional shadows are checked: every support is compact and lies in pAp."""
    problems = []
    for name in THEOREM_SCOPE:
        qs = qs_named(name)
        for c in idempotents_of(name):
            p = support_projection(c.state)
            if not p.compact:
                problems.append(name)
            H = build_hypergroup(qs, c.state)
            if H.system.span_residual(p.element) > 1e-12:
                problems.append(f"{name}: p not in pAp")
            if verify_hypergroup(H).converse_witness > THEOREM_TOL:
                problems.append(f"{name}: converse witness")
    record(8, not problems, "no infinite-dimensional claim; compact-support shadows hold " + "; ".join(problems))
