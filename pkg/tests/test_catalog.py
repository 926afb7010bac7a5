import itertools

import numpy as np
import pytest

from qsemi import catalog
from qsemi.catalog import (
    InvalidTable,
    MultiplicationTable,
    classical_cancellation,
    classical_idempotent_oracle,
    dual_idempotent_oracle,
    subgroup_enumeration,
)
from qsemi.qsg import cancellation_check

from conftest import qs_named

SUBGROUP_COUNTS = {"Z2": 2, "Z3": 2, "Z4": 3, "Z2xZ2": 5, "S3": 6, "D4": 10, "Q8": 6}


@pytest.mark.parametrize("name,count", SUBGROUP_COUNTS.items())
def test_subgroup_counts(name, count):
    g = catalog.group_by_name(name)
    g.validate()
    assert len(subgroup_enumeration(g)) == count


@pytest.mark.parametrize("name", SUBGROUP_COUNTS)
def test_brute_force_dual_oracle_equals_subgroups(name):
    g = catalog.group_by_name(name)
    brute = {s for s, _ in dual_idempotent_oracle(g, brute_force=True)}
    assert brute == set(subgroup_enumeration(g))


def test_s3_irreps_and_labels():
    g = catalog.symmetric_group_3()
    assert g.dims == (1, 1, 2)
    assert g.table.labels == ("e", "(12)", "(123)", "(23)", "(13)", "(132)")
    assert not g.table(1, 2) == g.table(2, 1)


def test_table_validation():
    with pytest.raises(InvalidTable):
        MultiplicationTable(2, [[0, 2], [1, 0]])
    with pytest.raises(InvalidTable):
        MultiplicationTable(2, [[0, 1]])
    nonassoc = MultiplicationTable(2, [[1, 1], [0, 0]])  # x*y = 1 - x
    assert not nonassoc.is_associative()
    with pytest.raises(InvalidTable):
        catalog.build_function_algebra(nonassoc)
    with pytest.raises(InvalidTable):
        classical_cancellation(nonassoc)


def test_table_json_roundtrip():
    t = catalog.symmetric_group_3().table
    back = MultiplicationTable.from_json(t.to_json())
    assert np.array_equal(back.table, t.table) and back.labels == t.labels


@pytest.mark.parametrize("name", ["leftzero2", "rightzero2", "null3", "mult01", "Z4", "S3", "Q8"])
def test_classical_and_quantum_cancellation_agree(name):
    t = catalog.table_by_name(name)
    classical = classical_cancellation(t)
    quantum = cancellation_check(catalog.build_function_algebra(t))
    assert classical == {"left": quantum.proper_left, "right": quantum.proper_right}


def test_left_zero_classically():
    assert classical_cancellation(catalog.left_zero_table(2)) == {"left": True, "right": False}


def test_classical_oracle_for_groups_is_subgroup_uniforms():
    t = catalog.cyclic_group(4).table
    measures = classical_idempotent_oracle(t)
    assert len(measures) == 3
    for m in measures:
        conv = np.zeros(4)
        for x, y in itertools.product(range(4), repeat=2):
            conv[t(x, y)] += m[x] * m[y]
        assert np.allclose(conv, m)


def test_kac_paljutkin_structure():
    qs = qs_named("kac-paljutkin")
    assert qs.algebra.blocks == (1, 1, 1, 1, 2)
    assert max(qs.report.residuals.values()) <= 1e-12
    haar = catalog.kac_paljutkin_haar()
    # Haar state is invariant: h * mu = mu(1) h for any functional
    from qsemi.fdalg import random_state
    from qsemi.qsg import convolve

    mu = random_state(qs.algebra, np.random.default_rng(3))
    assert convolve(qs, haar, mu).distance(haar) < 1e-12
    assert convolve(qs, mu, haar).distance(haar) < 1e-12


def test_kac_paljutkin_is_not_cocommutative():
    qs = qs_named("kac-paljutkin")
    assert np.abs(qs.delta.opposite().matrix - qs.delta.matrix).max() > 0.1


def test_group_dual_oracle_states_are_idempotent():
    from qsemi.idem import idempotency_residual

    qs = qs_named("dualS3")
    for label, phi in qs.oracle():
        assert phi.is_state(1e-12)
        assert idempotency_residual(qs, phi) < 1e-12, label


def test_unknown_names():
    with pytest.raises(KeyError):
        catalog.build("nope")
    with pytest.raises(KeyError):
        catalog.group_by_name("A5")
    assert catalog.group_by_name("Z5").order == 5
