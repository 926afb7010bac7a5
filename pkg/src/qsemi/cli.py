"""Command-line front end.

Exit codes: 0 success (or Haar type), 1 I/O or schema error, 2 verification
failure or non-idempotent input, 3 idempotent but not of Haar type.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import catalog, serial
from .classify import haar_type_report
from .fdalg import DEFAULT_TOL, NotAStateError, StructureMismatch, support_projection
from .hyper import build_hypergroup, verify_hypergroup
from .idem import NotIdempotentError, SolverConfig, find_idempotents, idempotency_residual
from .qsg import QuantumSemigroup, cancellation_check

EXIT_OK, EXIT_IO, EXIT_FAIL, EXIT_NOT_HAAR = 0, 1, 2, 3


class CommandError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def resolve_tol(flag: Optional[float]) -> float:
    if flag is not None:
        return flag
    env = os.environ.get("QSEMI_TOL")
    if env:
        try:
            val = float(env)
        except ValueError as exc:
            raise CommandError(EXIT_IO, f"QSEMI_TOL is not a number: {env!r}") from exc
        if not (val > 0 and np.isfinite(val)):
            raise CommandError(EXIT_IO, "QSEMI_TOL must be positive and finite")
        return val
    return DEFAULT_TOL


def _emit(args, payload: dict, rows: list) -> None:
    if args.json:
        sys.stdout.write(serial.dumps("report", payload))
        return
    for row in rows:
        print("\t".join(_fmt(x) for x in row))


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.3e}"
    if isinstance(x, (list, tuple)):
        return ",".join(_fmt(v) for v in x)
    return str(x)


def _load_algebra(path: str, tol: float) -> QuantumSemigroup:
    try:
        _, payload = serial.read(path, "algebra")
        return serial.algebra_from_payload(payload, tol)
    except (serial.SchemaError, StructureMismatch) as exc:
        raise CommandError(EXIT_IO, str(exc)) from exc


def _load_state(path: str, qs: QuantumSemigroup):
    try:
        _, payload = serial.read(path, "state")
        return serial.state_from_payload(payload, qs)
    except (serial.SchemaError, StructureMismatch) as exc:
        raise CommandError(EXIT_IO, str(exc)) from exc


def _require_valid(qs: QuantumSemigroup) -> None:
    if not qs.report.passed:
        raise CommandError(EXIT_FAIL, f"algebra fails the quantum-semigroup axioms: {qs.report.residuals}")


def _require_idempotent(qs, phi, tol) -> float:
    try:
        r = idempotency_residual(qs, phi, max(tol, 1e-8))
    except NotAStateError as exc:
        raise CommandError(EXIT_FAIL, f"not a state: {exc}") from exc
    if r > max(tol, 1e-8):
        raise CommandError(EXIT_FAIL, f"state is not idempotent (residual {r:.3e})")
    return r


def _figures(args):
    if not args.figures:
        return None
    from . import plotting

    return plotting


# --- commands -------------------------------------------------------------------


def cmd_verify(args) -> int:
    tol = resolve_tol(args.tol)
    qs = _load_algebra(args.algebra, tol)
    canc = cancellation_check(qs, tol, seed=args.seed) if qs.report.passed else None
    payload = {"name": qs.name, "blocks": list(qs.algebra.blocks), "axioms": qs.report.as_dict()}
    rows = [("name", qs.name), ("blocks", list(qs.algebra.blocks))]
    rows += [(k, v) for k, v in qs.report.residuals.items()]
    rows.append(("axioms_passed", qs.report.passed))
    if canc is not None:
        payload["cancellation"] = canc.as_dict()
        rows += [
            ("proper_left", canc.proper_left),
            ("proper_right", canc.proper_right),
            ("weak", canc.weak),
            ("rank_left", canc.rank_left),
            ("rank_right", canc.rank_right),
        ]
    _emit(args, payload, rows)
    plot = _figures(args)
    if plot:
        plot.residual_bars(qs.report.residuals, tol, f"axioms: {qs.name}", args.figures, "axioms.png")
    return EXIT_OK if qs.report.passed else EXIT_FAIL


def cmd_idempotents(args) -> int:
    tol = resolve_tol(args.tol)
    qs = _load_algebra(args.algebra, tol)
    _require_valid(qs)
    config = SolverConfig(starts=args.starts, eps_idem=tol, rng_seed=args.seed)
    found = find_idempotents(qs, config)
    states = []
    rows = [("index", "residual", "provenance", "found_by", "support_ranks", "label")]
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    for i, c in enumerate(found):
        ranks = support_projection(c.state).ranks
        entry = {
            "index": i,
            "residual": c.residual,
            "provenance": c.provenance,
            "found_by": list(c.found_by),
            "support_ranks": list(ranks),
            "label": c.label,
        }
        if out_dir:
            path = out_dir / f"state_{i:03d}.json"
            serial.write(path, "state", serial.state_payload(qs, c.state, residual=c.residual, provenance=c.provenance, label=c.label))
            entry["file"] = path.name
        states.append(entry)
        rows.append((i, c.residual, c.provenance, list(c.found_by), list(ranks), c.label or "-"))
    payload = {
        "name": qs.name,
        "count": len(found),
        "complete": False,
        "config": {"starts": config.starts, "seed": config.rng_seed, "eps_idem": config.eps_idem},
        "states": states,
    }
    rows.append(("count", len(found)))
    rows.append(("note", "enumeration is best-effort; completeness is not guaranteed"))
    _emit(args, payload, rows)
    plot = _figures(args)
    if plot and found:
        labels = [c.label or str(i) for i, c in enumerate(found)]
        plot.spectra([c.state.density for c in found], labels, args.figures, "spectra.png")
        plot.residual_bars({lab: c.residual for lab, c in zip(labels, found)}, tol, f"idempotency residuals: {qs.name}", args.figures, "residuals.png")
    return EXIT_OK


def cmd_classify(args) -> int:
    tol = resolve_tol(args.tol)
    qs = _load_algebra(args.algebra, tol)
    _require_valid(qs)
    phi = _load_state(args.state, qs)
    _require_idempotent(qs, phi, tol)
    rep = haar_type_report(qs, phi, max(tol, 1e-9))
    payload = {"name": qs.name, "report": rep.as_dict()}
    rows = [
        ("cond1_two_sided_ideal", rep.cond1_two_sided_ideal.holds, rep.cond1_two_sided_ideal.residual),
        ("cond2_central", rep.cond2_central.holds, rep.cond2_central.residual),
        ("cond3_cstar_and_hom", rep.cond3_cstar_and_hom.holds, rep.cond3_cstar_and_hom.residual),
        ("cond4_cqg", rep.cond4_cqg.holds, rep.cond4_cqg.residual),
        ("cond5_haar_type", rep.cond5_haar_type),
        ("agreement", rep.agreement),
        ("is_tracial", rep.is_tracial),
        ("support_ranks", list(rep.support_ranks)),
        ("left_kernel_dim", rep.left_kernel_dim),
    ]
    if not rep.cond2_central.holds:
        rows.append(("note", "support projection is not central"))
    _emit(args, payload, rows)
    plot = _figures(args)
    if plot:
        conds = {
            "ideal": (rep.cond1_two_sided_ideal.holds, rep.cond1_two_sided_ideal.residual),
            "central": (rep.cond2_central.holds, rep.cond2_central.residual),
            "corner hom": (rep.cond3_cstar_and_hom.holds, rep.cond3_cstar_and_hom.residual),
            "CQG": (rep.cond4_cqg.holds, rep.cond4_cqg.residual),
            "Haar type": (rep.cond5_haar_type, rep.cond4_cqg.residual),
        }
        plot.condition_panel(conds, max(tol, 1e-9), args.figures, "conditions.png")
    return EXIT_OK if rep.haar_type else EXIT_NOT_HAAR


def cmd_hypergroup(args) -> int:
    tol = resolve_tol(args.tol)
    qs = _load_algebra(args.algebra, tol)
    _require_valid(qs)
    phi = _load_state(args.state, qs)
    _require_idempotent(qs, phi, tol)
    H = build_hypergroup(qs, phi, tol)
    rep = verify_hypergroup(H, max(tol, 1e-8))
    body = {
        "algebra_ref": {"name": qs.name, "sha256": serial.algebra_hash(qs)},
        "support_ranks": list(H.support.ranks),
        "system_basis": serial.encode_complex(H.system.matrix),
        "delta_omega": serial.encode_complex(H.delta_omega),
        "haar": serial.encode_complex(H.haar),
        "report": rep.as_dict(),
    }
    if args.out:
        try:
            serial.write(args.out, "hypergroup", body)
        except OSError as exc:
            raise CommandError(EXIT_IO, f"cannot write {args.out}: {exc}") from exc
    rows = [(k, v) for k, v in rep.as_dict().items()]
    rows.insert(0, ("dim_X", H.m))
    _emit(args, {"name": qs.name, "dim_X": H.m, "report": rep.as_dict()}, rows)
    plot = _figures(args)
    if plot:
        plot.matrix_heatmap(H.delta_omega, "compressed comultiplication", args.figures, "delta_omega.png")
        small = {k: v for k, v in rep.as_dict().items() if isinstance(v, float) and k not in ("tol", "faithfulness_margin", "cp_margin")}
        plot.residual_bars(small, rep.tol, "hypergroup identities", args.figures, "hypergroup.png")
    return EXIT_OK if rep.passed else EXIT_FAIL


def _catalog_table(name: str):
    if name in catalog.CATALOG_NAMES and not name.startswith("dual") and name != "kac-paljutkin":
        key = name[1:] if name.startswith("C") and name not in ("leftzero2", "rightzero2", "null3", "mult01") else name
        return catalog.table_by_name(key)
    raise CommandError(EXIT_IO, f"{name!r} is not a classical catalog entry")


def cmd_catalog(args) -> int:
    if args.list or not args.name:
        for n in catalog.CATALOG_NAMES:
            print(n)
        return EXIT_OK
    try:
        qs = catalog.build(args.name)
    except (KeyError, ValueError) as exc:
        raise CommandError(EXIT_IO, f"unknown catalog entry {args.name!r}") from exc
    out = args.out or f"{args.name}.json"
    try:
        if args.table:
            t = _catalog_table(args.name)
            serial.write(out, "table", t.to_json())
            _emit(args, {"name": args.name, "file": out}, [("name", args.name), ("file", out)])
            return EXIT_OK
        serial.write(out, "algebra", serial.algebra_payload(qs))
        written = []
        if args.states_dir and qs.oracle is not None:
            d = Path(args.states_dir)
            d.mkdir(parents=True, exist_ok=True)
            for i, (label, phi) in enumerate(qs.oracle()):
                path = d / f"oracle_{i:03d}.json"
                serial.write(path, "state", serial.state_payload(qs, phi, label=label, provenance="oracle"))
                written.append({"file": path.name, "label": label})
    except OSError as exc:
        raise CommandError(EXIT_IO, f"cannot write: {exc}") from exc
    rows = [("name", qs.name), ("blocks", list(qs.algebra.blocks)), ("file", out)]
    rows += [("oracle_state", w["file"], w["label"]) for w in written]
    _emit(args, {"name": qs.name, "file": out, "oracle_states": written}, rows)
    return EXIT_OK


def cmd_classical(args) -> int:
    tol = resolve_tol(args.tol)
    try:
        _, payload = serial.read(args.table, "table")
        t = serial.table_from_payload(payload)
    except serial.SchemaError as exc:
        raise CommandError(EXIT_IO, str(exc)) from exc
    if not t.is_associative():
        raise CommandError(EXIT_FAIL, "table is not associative")
    classical = catalog.classical_cancellation(t)
    qs = catalog.build_function_algebra(t, Path(args.table).stem)
    quantum = cancellation_check(qs, tol, seed=args.seed)
    measures = catalog.classical_idempotent_oracle(t, SolverConfig(starts=args.starts, rng_seed=args.seed, eps_idem=tol))
    agree = classical["left"] == quantum.proper_left and classical["right"] == quantum.proper_right
    payload = {
        "classical": classical,
        "quantum": quantum.as_dict(),
        "agree": agree,
        "is_group": t.is_group(),
        "idempotent_measures": [list(map(float, m)) for m in measures],
    }
    rows = [
        ("classical_left", classical["left"]),
        ("classical_right", classical["right"]),
        ("quantum_left", quantum.proper_left),
        ("quantum_right", quantum.proper_right),
        ("agree", agree),
        ("is_group", t.is_group()),
    ]
    rows += [("measure", [round(float(x), 12) for x in m]) for m in measures]
    _emit(args, payload, rows)
    return EXIT_OK if agree else EXIT_FAIL


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="tolerance (default 1e-9 or $QSEMI_TOL)")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--starts", type=int, default=64)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--figures", metavar="DIR", default=None, help="also render figures into DIR")

    p = argparse.ArgumentParser(prog="qsemi", description="Idempotent states on finite quantum semigroups")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("verify", parents=[common], help="check the axioms and cancellation")
    s.add_argument("algebra")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("idempotents", parents=[common], help="search for idempotent states")
    s.add_argument("algebra")
    s.add_argument("--out-dir", default=None, help="write one state file per idempotent")
    s.set_defaults(func=cmd_idempotents)

    s = sub.add_parser("classify", parents=[common], help="Haar-type report")
    s.add_argument("algebra")
    s.add_argument("state")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("hypergroup", parents=[common], help="build and verify the compressed hypergroup")
    s.add_argument("algebra")
    s.add_argument("state")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_hypergroup)

    s = sub.add_parser("catalog", parents=[common], help="write a catalog algebra file")
    s.add_argument("name", nargs="?")
    s.add_argument("--out", default=None)
    s.add_argument("--states-dir", default=None, help="also write the exact oracle states")
    s.add_argument("--list", action="store_true")
    s.add_argument("--table", action="store_true", help="write the multiplication table instead")
    s.set_defaults(func=cmd_catalog)

    s = sub.add_parser("classical", parents=[common], help="classical cancellation and idempotent measures")
    s.add_argument("table")
    s.set_defaults(func=cmd_classical)
    return p


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_IO if exc.code else EXIT_OK
    try:
        if args.starts < 1:
            raise CommandError(EXIT_IO, "--starts must be positive")
        return args.func(args)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except NotIdempotentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
