"""Versioned JSON files for algebras, states, hypergroups, tables and reports.

Complex numbers are written as [re, im] pairs.  Python's float repr is
round-trip exact, so parse(serialize(x)) reproduces every finite value
bit for bit; NaN and infinities are refused in both directions.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .catalog import CATALOG_NAMES, MultiplicationTable, build
from .fdalg import BlockStructure, Functional
from .qsg import QuantumSemigroup

VERSION = "1"
KINDS = ("algebra", "state", "hypergroup", "table", "report")


class SchemaError(ValueError):
    pass


def encode_complex(arr) -> list:
    a = np.asarray(arr, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise SchemaError("refusing to serialize NaN or infinite values")
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [encode_complex(x) for x in a]


def decode_complex(data, ndim: int) -> np.ndarray:
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"malformed complex array: {exc}") from exc
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2:
        raise SchemaError(f"expected a {ndim}-d array of [re, im] pairs, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise SchemaError("NaN or infinite value in file")
    return arr[..., 0] + 1j * arr[..., 1]


def _sanitize(obj: Any) -> Any:
    """numpy scalars to Python, non-finite floats to None (reports only)."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return encode_complex(obj)
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    return obj


def dumps(kind: str, payload: dict) -> str:
    if kind not in KINDS:
        raise SchemaError(f"unknown kind {kind!r}")
    doc = {"version": VERSION, "kind": kind, "payload": _sanitize(payload)}
    return json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n"


def _reject_constant(name):
    raise SchemaError(f"non-finite constant {name} in file")


def loads(text: str, kind: Optional[str] = None) -> tuple[str, dict]:
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != VERSION:
        raise SchemaError("missing or unsupported version")
    if doc.get("kind") not in KINDS or not isinstance(doc.get("payload"), dict):
        raise SchemaError("missing kind or payload")
    if kind is not None and doc["kind"] != kind:
        raise SchemaError(f"expected a {kind} file, got {doc['kind']}")
    return doc["kind"], doc["payload"]


def write(path, kind: str, payload: dict) -> None:
    Path(path).write_text(dumps(kind, payload))


def read(path, kind: Optional[str] = None) -> tuple[str, dict]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    return loads(text, kind)


# --- algebras -------------------------------------------------------------------


def algebra_payload(qs: QuantumSemigroup) -> dict:
    return {"name": qs.name, "blocks": list(qs.algebra.blocks), "delta": encode_complex(qs.delta.matrix)}


def algebra_hash(qs: QuantumSemigroup) -> str:
    p = algebra_payload(qs)
    canon = json.dumps({"blocks": p["blocks"], "delta": p["delta"]}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def algebra_from_payload(p: dict, tol: float = 1e-9) -> QuantumSemigroup:
    try:
        name = str(p["name"])
        blocks = [int(b) for b in p["blocks"]]
        delta = decode_complex(p["delta"], 2)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad algebra payload: {exc}") from exc
    if not blocks or min(blocks) < 1:
        raise SchemaError("blocks must be positive integers")
    algebra = BlockStructure(blocks)
    d = algebra.dim
    if delta.shape != (d * d, d):
        raise SchemaError(f"delta has shape {delta.shape}, expected {(d * d, d)}")
    oracle = None
    if name in CATALOG_NAMES:
        ref = build(name)
        if ref.algebra == algebra and np.array_equal(ref.delta.matrix, delta):
            oracle = ref.oracle
    # verification is the caller's business (``verify`` must report failures)
    from .qsg import Comultiplication, verify_quantum_semigroup

    dm = Comultiplication(algebra, delta)
    return QuantumSemigroup(name, algebra, dm, verify_quantum_semigroup(algebra, dm, tol), oracle)


# --- states ---------------------------------------------------------------------


def state_payload(qs: QuantumSemigroup, phi: Functional, **meta) -> dict:
    out = {
        "algebra_ref": {"name": qs.name, "sha256": algebra_hash(qs)},
        "density": [encode_complex(r) for r in phi.density],
    }
    out.update(meta)
    return out


def state_from_payload(p: dict, qs: Optional[QuantumSemigroup] = None) -> Functional:
    try:
        dens = [decode_complex(r, 2) for r in p["density"]]
        ref = p["algebra_ref"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"bad state payload: {exc}") from exc
    blocks = [r.shape[0] for r in dens]
    if any(r.shape != (n, n) for r, n in zip(dens, blocks)):
        raise SchemaError("density blocks must be square")
    if qs is not None:
        if list(qs.algebra.blocks) != blocks:
            raise SchemaError("state does not match the algebra's block structure")
        if isinstance(ref, dict) and ref.get("sha256") not in (None, algebra_hash(qs)):
            raise SchemaError("state was computed for a different algebra")
    return Functional(BlockStructure(blocks), tuple(dens))


def table_from_payload(p: dict) -> MultiplicationTable:
    try:
        return MultiplicationTable.from_json(p)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
