"""Batch front end: JSON tensor documents in, deterministic JSON reports out.

Exit codes: 0 success, 2 validation error (bad flags, malformed JSON, schema
violations, mixed exact/float data), 3 mathematical precondition failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product

import numpy as np

from . import tensors as tn
from .scalars_quat import EXACT, FLOAT, ModeError, Quaternion, QuatMatrix

SCHEMA_VERSION = 1
FIELDS = (EXACT, FLOAT)
KIND_ORDER = {
    "2form": 2,
    "metric": 2,
    "endo": 2,
    "basis_change": 2,
    "torsion": 3,
    "3tensor": 3,
    "4tensor": 4,
}
# symmetry every document of the kind must have; may be declared explicitly
KIND_SYMMETRY = {"2form": tn.ANTISYMMETRIC, "metric": tn.SYMMETRIC, "torsion": tn.SKEW01}
SYMMETRIES = (tn.SYMMETRIC, tn.ANTISYMMETRIC, tn.SKEW01)
QUAT_KIND = "quat_matrix"


class ValidationError(ValueError):
    """Input rejected before any mathematics runs (exit 2)."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(message)
        self.path = path


class PreconditionFailure(ArithmeticError):
    """A mathematical hypothesis of the requested computation fails (exit 3)."""

    def __init__(self, message: str, condition=None, detail=None):
        super().__init__(message)
        self.condition = condition
        self.detail = detail


# ---------------------------------------------------------------------------
# scalars


def parse_scalar(value, field: str, path: str = ""):
    if isinstance(value, bool):
        raise ValidationError("booleans are not scalars", path)
    if field == EXACT:
        if isinstance(value, float):
            raise ValidationError("float value in a rational document", path)
        if isinstance(value, int):
            return Fraction(value)
        if isinstance(value, str):
            try:
                return Fraction(value.strip())
            except (ValueError, ZeroDivisionError):
                raise ValidationError(f"bad rational {value!r}", path) from None
        raise ValidationError(f"bad rational {value!r}", path)
    if isinstance(value, str):
        raise ValidationError("string value in a float64 document", path)
    if isinstance(value, (int, float)):
        return float(value)
    raise ValidationError(f"bad float {value!r}", path)


def format_scalar(x, field: str):
    if field == EXACT:
        return str(Fraction(x))
    return float(x)


# ---------------------------------------------------------------------------
# tensor documents


def _orbit(idx: tuple, symmetry: str | None):
    """``(index, sign)`` over the symmetry orbit of ``idx``."""
    if symmetry is None:
        return [(idx, 1)]
    if symmetry == tn.SKEW01:
        return [(idx, 1), ((idx[1], idx[0]) + idx[2:], -1)]
    out = []
    for p in permutations(range(len(idx))):
        sign = tn._perm_sign(p) if symmetry == tn.ANTISYMMETRIC else 1
        out.append((tuple(idx[i] for i in p), sign))
    return out


def _canonical(idx: tuple, symmetry: str | None) -> bool:
    if symmetry is None:
        return True
    if symmetry == tn.SKEW01:
        return idx[0] < idx[1]
    return list(idx) == sorted(idx)


@dataclass
class TensorDocument:
    """A tensor on ``R^{4n}`` in the basis ``e_1..e_2n, f_1..f_2n``."""

    n: int
    field: str
    kind: str
    entries: np.ndarray
    symmetry: str | None = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        _check_header(self.n, self.field, self.kind, self.symmetry, "")
        arr = np.asarray(self.entries)
        dim = 4 * self.n
        if arr.shape != (dim,) * KIND_ORDER[self.kind]:
            raise ValidationError(f"{self.kind} needs shape {(dim,) * KIND_ORDER[self.kind]}, got {arr.shape}")
        try:
            arr = tn.normalize(arr, self.field)
        except (ModeError, TypeError) as exc:
            raise ValidationError(str(exc)) from None
        self.entries = arr
        sym = self.effective_symmetry
        if sym is not None and not tn.check_symmetry(arr, sym, tn.default_tol(arr)):
            raise ValidationError(f"entries are not {sym}", "entries")

    @property
    def effective_symmetry(self) -> str | None:
        return self.symmetry or KIND_SYMMETRY.get(self.kind)

    @classmethod
    def from_dict(cls, data, path: str = "") -> "TensorDocument":
        if not isinstance(data, dict):
            raise ValidationError("tensor document must be a JSON object", path)
        for key in ("schema_version", "n", "field", "kind", "entries"):
            if key not in data:
                raise ValidationError(f"missing key {key!r}", path)
        if data["schema_version"] != SCHEMA_VERSION:
            raise ValidationError(f"unsupported schema_version {data['schema_version']!r}", path)
        n, field, kind = data["n"], data["field"], data["kind"]
        symmetry = data.get("symmetry")
        _check_header(n, field, kind, symmetry, path)
        sym = symmetry or KIND_SYMMETRY.get(kind)
        order = KIND_ORDER[kind]
        dim = 4 * n
        arr = np.zeros((dim,) * order, dtype=float if field == FLOAT else object)
        if field == EXACT:
            arr[...] = Fraction(0)
        seen: dict = {}
        if not isinstance(data["entries"], list):
            raise ValidationError("entries must be a list", path + ".entries")
        for pos, item in enumerate(data["entries"]):
            ipath = f"{path}.entries[{pos}]"
            if not isinstance(item, list) or len(item) != 2 or not isinstance(item[0], list):
                raise ValidationError("entry must be [index list, value]", ipath)
            raw, value = item
            if len(raw) != order or not all(isinstance(i, int) and not isinstance(i, bool) for i in raw):
                raise ValidationError(f"index must be {order} integers", ipath)
            if not all(1 <= i <= dim for i in raw):
                raise ValidationError(f"index {raw} out of range 1..{dim}", ipath)
            idx = tuple(i - 1 for i in raw)
            x = parse_scalar(value, field, ipath)
            for j, sign in _orbit(idx, sym):
                want = x if sign == 1 else -x
                if j in seen and seen[j] != want:
                    raise ValidationError(f"entry {raw} conflicts with the declared symmetry", ipath)
                seen[j] = want
                arr[j] = want
        return cls(n, field, kind, arr, symmetry)

    def to_dict(self) -> dict:
        sym = self.effective_symmetry
        entries = []
        for idx in product(range(4 * self.n), repeat=KIND_ORDER[self.kind]):
            x = self.entries[idx]
            if x != 0 and _canonical(idx, sym):
                entries.append([[i + 1 for i in idx], format_scalar(x, self.field)])
        out = {
            "schema_version": self.schema_version,
            "n": self.n,
            "field": self.field,
            "kind": self.kind,
            "entries": entries,
        }
        if self.symmetry is not None:
            out["symmetry"] = self.symmetry
        return out

    def equals(self, other: "TensorDocument") -> bool:
        return (
            (self.n, self.field, self.kind, self.symmetry) == (other.n, other.field, other.kind, other.symmetry)
            and tn.equal(self.entries, other.entries)
        )


def _check_header(n, field, kind, symmetry, path):
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n!r}", path + ".n")
    if field not in FIELDS:
        raise ValidationError(f"field must be one of {FIELDS}", path + ".field")
    if kind not in KIND_ORDER:
        raise ValidationError(f"kind must be one of {tuple(KIND_ORDER)}", path + ".kind")
    if symmetry is not None:
        if symmetry not in SYMMETRIES:
            raise ValidationError(f"symmetry must be one of {SYMMETRIES}", path + ".symmetry")
        if symmetry == tn.SKEW01 and KIND_ORDER[kind] < 2:
            raise ValidationError("skew01 needs at least two slots", path + ".symmetry")
        implied = KIND_SYMMETRY.get(kind)
        if implied is not None and symmetry != implied:
            raise ValidationError(f"{kind} documents are {implied}", path + ".symmetry")


def document(n: int, kind: str, entries, symmetry: str | None = None) -> TensorDocument:
    field = FLOAT if np.asarray(entries).dtype.kind == "f" else EXACT
    return TensorDocument(n, field, kind, entries, symmetry)


def save(doc: TensorDocument) -> str:
    return dumps(doc.to_dict())


def load(text: str) -> TensorDocument:
    return TensorDocument.from_dict(_parse_json(text))


# ---------------------------------------------------------------------------
# quaternionic matrices


def quat_to_dict(q: QuatMatrix, field: str) -> dict:
    entries = []
    for r in range(q.rows):
        for c in range(q.cols):
            x = q[r, c]
            if not x.is_zero():
                entries.append([[r + 1, c + 1], [format_scalar(v, field) for v in x.coeffs]])
    return {
        "schema_version": SCHEMA_VERSION,
        "field": field,
        "kind": QUAT_KIND,
        "rows": q.rows,
        "cols": q.cols,
        "entries": entries,
    }


def quat_from_dict(data, path: str = "") -> QuatMatrix:
    if not isinstance(data, dict) or data.get("kind") != QUAT_KIND:
        raise ValidationError(f"expected a {QUAT_KIND} document", path)
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError("unsupported schema_version", path)
    field = data.get("field")
    if field not in FIELDS:
        raise ValidationError(f"field must be one of {FIELDS}", path + ".field")
    rows, cols = data.get("rows"), data.get("cols")
    if not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in (rows, cols)):
        raise ValidationError("rows and cols must be positive integers", path)
    zero = Quaternion(0.0) if field == FLOAT else Quaternion(Fraction(0))
    grid = [[zero] * cols for _ in range(rows)]
    for pos, item in enumerate(data.get("entries", [])):
        ipath = f"{path}.entries[{pos}]"
        if not isinstance(item, list) or len(item) != 2:
            raise ValidationError("entry must be [[row, col], [w, x, y, z]]", ipath)
        (idx, coeffs) = item
        if not isinstance(idx, list) or len(idx) != 2 or not all(isinstance(i, int) for i in idx):
            raise ValidationError("index must be [row, col]", ipath)
        r, c = idx
        if not (1 <= r <= rows and 1 <= c <= cols):
            raise ValidationError(f"index {idx} out of range", ipath)
        if not isinstance(coeffs, list) or len(coeffs) != 4:
            raise ValidationError("value must be [w, x, y, z]", ipath)
        grid[r - 1][c - 1] = Quaternion(*(parse_scalar(v, field, ipath) for v in coeffs))
    return QuatMatrix(grid)


# ---------------------------------------------------------------------------
# composite inputs


def _parse_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON: {exc}") from None


def read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}", path) from None
    return _parse_json(text)


def tensor_from(data, kind: str | tuple, path: str) -> TensorDocument:
    doc = TensorDocument.from_dict(data, path)
    kinds = (kind,) if isinstance(kind, str) else kind
    if doc.kind not in kinds:
        raise ValidationError(f"expected kind {' or '.join(kinds)}, got {doc.kind}", path + ".kind")
    return doc


def triple_from(data, path: str) -> list[TensorDocument]:
    """A list of three ``endo`` documents or an object with keys J1, J2, J3."""
    if isinstance(data, dict) and all(k in data for k in ("J1", "J2", "J3")):
        items = [(data[k], f"{path}.{k}") for k in ("J1", "J2", "J3")]
    elif isinstance(data, list) and len(data) == 3:
        items = [(d, f"{path}[{i}]") for i, d in enumerate(data)]
    else:
        raise ValidationError("triple must be three endo documents (list or J1/J2/J3)", path)
    return [tensor_from(d, "endo", p) for d, p in items]


def structure_from(data, path: str):
    if not isinstance(data, dict) or "omega" not in data or "triple" not in data:
        raise ValidationError("structure needs keys 'omega' and 'triple'", path)
    omega = tensor_from(data["omega"], "2form", path + ".omega")
    triple = triple_from(data["triple"], path + ".triple")
    return omega, triple


def same_field(docs, requested: str | None) -> str:
    fields = {d.field for d in docs}
    if requested is not None:
        fields.add(requested)
    if len(fields) > 1:
        raise ValidationError("rational and float64 inputs cannot be mixed", "field")
    ns = {d.n for d in docs if isinstance(d, TensorDocument)}
    if len(ns) > 1:
        raise ValidationError(f"inputs disagree on n: {sorted(ns)}", "n")
    return fields.pop() if fields else EXACT


def make_triple(docs: list[TensorDocument]):
    from .model_space import HypercomplexTriple

    try:
        return HypercomplexTriple(*(d.entries for d in docs))
    except ValueError as exc:
        raise PreconditionFailure(str(exc), condition="quaternionic relations") from None


# ---------------------------------------------------------------------------
# output


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, TensorDocument):
        return x.to_dict()
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=True)


# ---------------------------------------------------------------------------
# subcommands


def cmd_dims(args):
    from .spencer import dims_report

    _positive(args.n, "--n")
    return dims_report(args.n)


def cmd_spencer(args):
    from .lie_algebras import build_subalgebra
    from .spencer import cohomology_dims

    _positive(args.n, "--n")
    rep = cohomology_dims(build_subalgebra(args.algebra, args.n))
    out = rep.to_dict()
    out["consistent"] = rep.consistent
    return out


def cmd_classify(args):
    from .bases import BasisError, skew_hermitian_basis
    from .model_space import NotScalarError
    from .tensors import torsion
    from .torsion_lab import build_type_bases, classify

    t = tensor_from(read_json(args.torsion), "torsion", "torsion")
    docs = [t]
    structure = None
    if args.structure:
        omega, triple = structure_from(read_json(args.structure), "structure")
        docs += [omega] + triple
        structure = (omega, triple)
    field = same_field(docs, args.field)
    tol = _tolerance(args, field, 1e-9)
    arr = t.entries
    notes = []
    if structure is not None:
        omega, triple = structure
        try:
            change = skew_hermitian_basis(omega.entries, make_triple(triple))
        except NotScalarError as exc:
            raise PreconditionFailure(str(exc), exc.condition) from None
        except BasisError as exc:
            raise PreconditionFailure(str(exc), "skew-Hermitian basis") from None
        arr = np.asarray(change.torsion(arr))
        notes.append("torsion rewritten in a skew-Hermitian basis of the given structure")
    cache = build_type_bases(t.n, args.group)
    report = classify(torsion(t.n, arr), cache, tol)
    out = report.to_dict()
    out["notes"] = list(out["notes"]) + notes
    return out


def cmd_minimal_torsion(args):
    from .torsion_lab import (
        PreconditionError,
        minimal_hsH_torsion,
        minimal_qsH_torsion,
        sp1_normalization_residuals,
    )

    data = read_json(args.inputs)
    if not isinstance(data, dict) or "torsion" not in data or "nabla_omega" not in data:
        raise ValidationError("inputs need keys 'torsion' and 'nabla_omega'", "inputs")
    t = tensor_from(data["torsion"], "torsion", "inputs.torsion")
    nab = tensor_from(data["nabla_omega"], "3tensor", "inputs.nabla_omega")
    docs = [t, nab]
    omega = triple = None
    if "omega" in data or "triple" in data:
        omega_doc, triple_docs = structure_from(data, "inputs")
        docs += [omega_doc] + triple_docs
        omega, triple = omega_doc.entries, make_triple(triple_docs)
        _require_scalar(omega, triple)
    field = same_field(docs, args.field)
    _tolerance(args, field, None)
    fn = minimal_hsH_torsion if args.mode == "hsH" else minimal_qsH_torsion
    try:
        result = fn(t.entries, nab.entries, omega, triple)
    except PreconditionError as exc:
        raise PreconditionFailure(str(exc), "input hypotheses") from None
    out = {"mode": args.mode, "torsion": document(t.n, "torsion", result.entries)}
    if args.mode == "qsH":
        res = sp1_normalization_residuals(result, omega, triple)
        out["normalization_zero"] = {k: bool(tn.is_zero(v, 1e-9 if field == FLOAT else 0.0)) for k, v in res.items()}
    return out


def cmd_gram_schmidt(args):
    from .bases import BasisError, quat_gram_schmidt

    data = read_json(args.h)
    h = quat_from_dict(data, "h")
    field = data["field"]
    same_field([_FieldOnly(field)], args.field)
    _tolerance(args, field, None)
    if h.rows != h.cols:
        raise ValidationError("h must be square", "h")
    try:
        c = quat_gram_schmidt(h, field)
    except (BasisError, ValueError) as exc:
        raise PreconditionFailure(str(exc), "skew-Hermitian nondegenerate") from None
    d = c.conj_transpose() @ h @ c
    return {"basis": quat_to_dict(c, field), "product": quat_to_dict(d, field)}


def cmd_darboux(args):
    from .bases import darboux_certificate, darboux_matrix, darboux_product

    _positive(args.m, "--m")
    cert = darboux_certificate(2 * args.m)
    return {
        "m": args.m,
        "basis": quat_to_dict(darboux_matrix(args.m), EXACT),
        "product": quat_to_dict(darboux_product(args.m), EXACT),
        "certificate": {
            "n": cert.n,
            "unknowns": cert.unknowns,
            "equations": cert.equations,
            "rank": cert.rank,
            "augmented_rank": cert.augmented_rank,
            "solvable": cert.solvable,
        },
    }


def cmd_symspace(args):
    from . import symmetric_spaces as ss

    if args.params is None:
        plist = ss.DESK_PARAMS[args.family]
    else:
        try:
            plist = [tuple(int(p) for p in args.params.split(","))]
        except ValueError:
            raise ValidationError("--params must be comma-separated integers", "--params") from None
    pairs = []
    for params in plist:
        try:
            pair = ss.build_pair(args.family, params)
            cartan = ss.cartan_relations(pair)
            structure = ss.invariant_structure(pair)
        except (ss.CartanRelationError, ss.InvariantStructureError) as exc:
            raise PreconditionFailure(str(exc), "symmetric pair") from None
        except (ValueError, TypeError) as exc:
            raise ValidationError(str(exc), "--params") from None
        residual = ss.negative_control(pair)
        pairs.append({
            "params": list(params),
            "name": pair.name,
            "dims": dict(zip(("k", "l", "m"), pair.dims)),
            "cartan": cartan,
            "structure": structure.to_dict(),
            "negative_control_residual": residual,
            "negative_control_fails": residual != 0,
        })
    return {"family": args.family, "pairs": pairs}


def cmd_verify_structure(args):
    from .model_space import hermitian_conditions, metrics_from, signature, signature_float

    omega = tensor_from(read_json(args.omega), "2form", "omega")
    triple_docs = triple_from(read_json(args.triple), "triple")
    field = same_field([omega] + triple_docs, args.field)
    tol = _tolerance(args, field, None)
    triple = make_triple(triple_docs)
    _require_scalar(omega.entries, triple, tol)
    conds = hermitian_conditions(omega.entries, triple)
    sig = signature if field == EXACT else signature_float
    gs = metrics_from(omega.entries, triple)
    return {
        "n": omega.n,
        "field": field,
        "scalar": True,
        "conditions": {str(k): v for k, v in sorted(conds.items())},
        "metric_signatures": [list(sig(g.entries)) for g in gs],
    }


def cmd_grading(args):
    from .lie_algebras import grading_check

    _positive(args.N, "--N")
    try:
        return grading_check(args.N, args.depth).to_dict()
    except ValueError as exc:
        raise ValidationError(str(exc), "--N") from None


@dataclass
class _FieldOnly:
    field: str


def _positive(v: int, flag: str):
    if v < 1:
        raise ValidationError(f"{flag} must be positive", flag)


def _tolerance(args, field: str, default):
    if args.tolerance is None:
        return default
    if field != FLOAT:
        raise ValidationError("--tolerance applies only to float64 inputs", "--tolerance")
    if not args.tolerance > 0:
        raise ValidationError("--tolerance must be positive", "--tolerance")
    return args.tolerance


def _require_scalar(omega, triple, tol=None):
    from .model_space import is_scalar_2form

    check = is_scalar_2form(omega, triple, tol)
    if not check:
        raise PreconditionFailure(
            f"omega is not a scalar 2-form: {check.reason}",
            check.condition if check.condition is not None else check.reason,
            list(check.witness) if check.witness else None,
        )


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message, "argv")


def build_parser() -> argparse.ArgumentParser:
    from .symmetric_spaces import FAMILIES

    common = _Parser(add_help=False)
    common.add_argument("--field", choices=FIELDS, default=None, help="required field of all inputs")
    common.add_argument("--seed", type=int, default=0, help="seed, echoed in the report")
    common.add_argument("--tolerance", type=float, default=None, help="zero test threshold (float64 only)")

    p = _Parser(prog="sostar", description="SO*(2n) and SO*(2n)Sp(1) structure computations", parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    s = sub.add_parser("dims", parents=[common], help="representation dimensions and decomposition sums")
    s.add_argument("--n", type=int, required=True)
    s = sub.add_parser("spencer", parents=[common], help="prolongation and Spencer cohomology dimensions")
    s.add_argument("--algebra", required=True, choices=_ALGEBRAS)
    s.add_argument("--n", type=int, required=True)
    s = sub.add_parser("classify", parents=[common], help="intrinsic torsion types")
    s.add_argument("--group", required=True, choices=("so_star", "so_star_sp1"))
    s.add_argument("--torsion", required=True)
    s.add_argument("--structure", default=None)
    s = sub.add_parser("minimal-torsion", parents=[common], help="torsion of the minimal connection")
    s.add_argument("--mode", required=True, choices=("hsH", "qsH"))
    s.add_argument("--inputs", required=True)
    s = sub.add_parser("gram-schmidt", parents=[common], help="quaternionic skew-Hermitian Gram-Schmidt")
    s.add_argument("--h", required=True)
    s = sub.add_parser("darboux", parents=[common], help="quaternionic Darboux basis")
    s.add_argument("--m", type=int, required=True)
    s = sub.add_parser("symspace", parents=[common], help="symmetric-space certificates")
    s.add_argument("--family", required=True, choices=FAMILIES)
    s.add_argument("--params", default=None, help="comma-separated, e.g. 2 or 1,1")
    s = sub.add_parser("verify-structure", parents=[common], help="check a scalar 2-form")
    s.add_argument("--omega", required=True)
    s.add_argument("--triple", required=True)
    s = sub.add_parser("grading", parents=[common], help="|1|- and |2|-gradings of so*(2N)")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--depth", type=int, required=True, choices=(1, 2))
    return p


_ALGEBRAS = ("so_star", "sp1", "so_star_sp1", "gl_quat", "sl_quat", "sp_real", "s2e")

EXACT_ONLY = {"dims", "spencer", "darboux", "symspace", "grading"}

COMMANDS = {
    "dims": cmd_dims,
    "spencer": cmd_spencer,
    "classify": cmd_classify,
    "minimal-torsion": cmd_minimal_torsion,
    "gram-schmidt": cmd_gram_schmidt,
    "darboux": cmd_darboux,
    "symspace": cmd_symspace,
    "verify-structure": cmd_verify_structure,
    "grading": cmd_grading,
}


def run(argv=None) -> tuple[int, str]:
    """Exit code and JSON text for one command line."""
    try:
        args = build_parser().parse_args(argv)
        if args.command in EXACT_ONLY:
            if args.field == FLOAT:
                raise ValidationError(f"{args.command} is exact only", "--field")
            if args.tolerance is not None:
                raise ValidationError("--tolerance applies only to float64 inputs", "--tolerance")
        result = COMMANDS[args.command](args)
        if isinstance(result, dict):
            result.setdefault("seed", args.seed)
        return 0, dumps(result)
    except ValidationError as exc:
        return 2, dumps({"error": "validation", "message": str(exc), "where": exc.path})
    except ModeError as exc:
        return 2, dumps({"error": "validation", "message": str(exc), "where": "field"})
    except PreconditionFailure as exc:
        return 3, dumps({
            "error": "precondition",
            "message": str(exc),
            "condition": exc.condition,
            "detail": exc.detail,
        })


def main(argv=None) -> int:
    code, text = run(argv)
    sys.stdout.write(text + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
