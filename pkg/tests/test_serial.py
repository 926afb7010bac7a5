import json

import numpy as np
import pytest

from qsemi import catalog, serial
from qsemi.idem import idempotency_residual

from conftest import idempotents_of, qs_named


@pytest.mark.parametrize("name", ["kac-paljutkin", "dualS3", "leftzero2"])
def test_algebra_roundtrip_bit_exact(name):
    qs = qs_named(name)
    text = serial.dumps("algebra", serial.algebra_payload(qs))
    _, payload = serial.loads(text, "algebra")
    back = serial.algebra_from_payload(payload)
    assert back.algebra == qs.algebra
    assert np.array_equal(back.delta.matrix, qs.delta.matrix)
    assert back.report.passed
    assert serial.algebra_hash(back) == serial.algebra_hash(qs)
    # oracle re-attached for unchanged catalog entries
    assert (back.oracle is None) == (qs.oracle is None)


def test_state_roundtrip_keeps_residual():
    qs = qs_named("dualD4")
    for c in idempotents_of("dualD4"):
        text = serial.dumps("state", serial.state_payload(qs, c.state))
        phi = serial.state_from_payload(serial.loads(text, "state")[1], qs)
        assert all(np.array_equal(a, b) for a, b in zip(phi.density, c.state.density))
        assert idempotency_residual(qs, phi) == idempotency_residual(qs, c.state)


def test_complex_encoding():
    enc = serial.encode_complex(np.array([[1 + 2j, 0.1]]))
    assert enc == [[[1.0, 2.0], [0.1, 0.0]]]
    assert serial.decode_complex(enc, 2)[0, 0] == 1 + 2j


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_refused_on_write(bad):
    with pytest.raises(serial.SchemaError):
        serial.encode_complex(np.array([bad]))


def test_non_finite_refused_on_read():
    qs = qs_named("CZ2")
    text = serial.dumps("algebra", serial.algebra_payload(qs)).replace("1.0", "NaN", 1)
    with pytest.raises(serial.SchemaError):
        serial.loads(text)


@pytest.mark.parametrize(
    "text",
    [
        "not json",
        "[]",
        json.dumps({"version": "2", "kind": "algebra", "payload": {}}),
        json.dumps({"version": "1", "kind": "banana", "payload": {}}),
        json.dumps({"version": "1", "kind": "algebra"}),
    ],
)
def test_schema_errors(text):
    with pytest.raises(serial.SchemaError):
        serial.loads(text)


def test_wrong_kind():
    text = serial.dumps("table", catalog.left_zero_table().to_json())
    with pytest.raises(serial.SchemaError):
        serial.loads(text, "algebra")


def test_bad_payloads():
    with pytest.raises(serial.SchemaError):
        serial.algebra_from_payload({"name": "x", "blocks": [1, 1], "delta": [[[1, 0]]]})
    with pytest.raises(serial.SchemaError):
        serial.algebra_from_payload({"name": "x", "blocks": [0], "delta": []})
    with pytest.raises(serial.SchemaError):
        serial.decode_complex([[1, 2, 3]], 1)


def test_state_for_other_algebra_rejected():
    cz2, cz3 = qs_named("CZ2"), qs_named("CZ3")
    payload = serial.state_payload(cz2, dict(cz2.oracle())["{0,1}"])
    with pytest.raises(serial.SchemaError):
        serial.state_from_payload(payload, cz3)
    payload["algebra_ref"]["sha256"] = "0" * 64
    with pytest.raises(serial.SchemaError):
        serial.state_from_payload(payload, cz2)


def test_report_sanitizes_infinities():
    text = serial.dumps("report", {"x": float("inf"), "y": np.float64(1.5), "z": np.bool_(True)})
    assert json.loads(text)["payload"] == {"x": None, "y": 1.5, "z": True}
