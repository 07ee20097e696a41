"""Adapted, skew-Hermitian and quaternionic Darboux bases.

Real bases are stored as ``4n x 4n`` matrices whose columns are the new basis
vectors in old coordinates.  Quaternionic matrices act on the right
quaternionic space ``H^n`` where ``h(x, y) = x* A y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import linalg as la
from . import tensors as tn
from .model_space import (
    HypercomplexTriple,
    NotScalarError,
    _omega_matrix,
    is_scalar_2form,
    mat_inverse,
    metrics_from,
    quaternion_coordinates,
    standard_omega_matrix,
    standard_triple,
)
from .scalars_quat import FLOAT, I, J, K, ONE, Quaternion, QuatMatrix, right_mult_matrix

ADAPTED = "adapted"
SKEW_HERMITIAN = "skew-hermitian"
DARBOUX = "darboux"
KINDS = (ADAPTED, SKEW_HERMITIAN, DARBOUX)


class BasisError(ValueError):
    """A requested basis does not exist or a basis check failed."""


def _inverse(m: np.ndarray) -> np.ndarray:
    if m.dtype.kind == "f":
        return np.linalg.inv(m)
    return mat_inverse(m)


def _close(a, b, tol: float) -> bool:
    a, b = np.asarray(a), np.asarray(b)
    if a.dtype.kind == "f" or b.dtype.kind == "f":
        return bool(np.all(np.abs(a.astype(float) - b.astype(float)) <= tol))
    return tn.equal(a, b)


@dataclass(frozen=True)
class BasisChange:
    """Columns of ``matrix`` are the new basis vectors in old coordinates."""

    n: int
    matrix: np.ndarray
    kind: str
    tol: float = 0.0

    def __post_init__(self):
        m = tn.normalize(self.matrix)
        object.__setattr__(self, "matrix", m)
        if m.shape != (4 * self.n, 4 * self.n):
            raise ValueError(f"basis change must be {4 * self.n} x {4 * self.n}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if m.dtype.kind == "f":
            if abs(np.linalg.det(m)) <= 1e-12:
                raise BasisError("basis change is singular")
        else:
            _inverse(m)

    @property
    def inverse(self) -> np.ndarray:
        return _inverse(self.matrix)

    def endomorphism(self, a) -> np.ndarray:
        """``C^{-1} A C``."""
        return self.inverse @ np.asarray(tn.entries_of(a)) @ self.matrix

    def bilinear(self, b) -> np.ndarray:
        """``C^t B C``."""
        return self.matrix.T @ np.asarray(tn.entries_of(b)) @ self.matrix

    def triple(self, triple: HypercomplexTriple) -> HypercomplexTriple:
        return HypercomplexTriple(*(self.endomorphism(j) for j in triple))

    def torsion(self, t) -> np.ndarray:
        """Components of a vector-valued 2-form in the new basis."""
        c, cinv = self.matrix, self.inverse
        return tn.ein("pqr,px,qy,kr->xyk", np.asarray(tn.entries_of(t)), c, c, cinv)

    def check(self, omega, triple: HypercomplexTriple) -> bool:
        """Kind-specific invariants for the structure ``(omega, triple)``."""
        tol = self.tol
        mats = [self.endomorphism(j) for j in triple]
        if self.kind == DARBOUX:
            return _darboux_relations(mats, self.n, tol) and (
                omega is None or _close(self.bilinear(_omega_matrix(omega)), standard_omega_matrix(self.n), tol)
            )
        std = standard_triple(self.n)
        if not all(_close(a, b, tol) for a, b in zip(mats, std)):
            return False
        if self.kind == SKEW_HERMITIAN:
            return _close(self.bilinear(_omega_matrix(omega)), standard_omega_matrix(self.n), tol)
        return True


# ---------------------------------------------------------------------------
# adapted bases


def adapted_basis_from_triple(triple) -> BasisChange:
    """A basis in which the triple becomes the standard one.

    Greedy: take the first standard basis vector outside the quaternionic span
    built so far and add it together with its images under ``J1, J2, J3``.
    """
    if not isinstance(triple, HypercomplexTriple):
        triple = HypercomplexTriple(*triple)
    n = triple.n
    d = 4 * n
    mats = [np.asarray(m) for m in triple]
    is_float = any(m.dtype.kind == "f" for m in mats)
    cols = np.zeros((d, d), dtype=float if is_float else object)
    chosen: list[np.ndarray] = []
    for c in range(n):
        for idx in range(d):
            v = np.zeros(d, dtype=cols.dtype)
            v[idx] = 1
            quad = [v] + [m @ v for m in mats]
            if _rank(chosen + quad, is_float) == len(chosen) + 4:
                break
        else:
            raise BasisError("triple does not act freely")
        chosen += quad
        for slot, vec in zip(quaternion_coordinates(n)[c], quad):
            cols[:, slot] = vec
    return BasisChange(n, cols, ADAPTED, 1e-10 if is_float else 0.0)


def _rank(vectors, is_float: bool) -> int:
    if not vectors:
        return 0
    m = np.array(vectors)
    if is_float:
        return int(np.linalg.matrix_rank(m.astype(float), tol=1e-9))
    return la.rank(la.qmat(m))


# ---------------------------------------------------------------------------
# quaternionic Gram-Schmidt on the right space H^n


def _is_zero(q: Quaternion, tol: float) -> bool:
    return q.is_zero(tol)


def _scale_tol(h: QuatMatrix) -> float:
    return 1e-12 * max(1.0, h.max_abs()) if h.mode == FLOAT else 0.0


def check_skew_hermitian(h: QuatMatrix, tol: float = 0.0) -> None:
    if h.rows != h.cols:
        raise ValueError("h must be square")
    diff = h + h.conj_transpose()
    if diff.max_abs() > tol:
        raise ValueError("h is not skew-Hermitian (h* != -h)")


def rotate_to_j(a: Quaternion) -> Quaternion:
    """Unit ``q`` with ``conj(q) u q = j`` for ``u = a / |a|`` (``a`` imaginary, nonzero).

    Half-angle rotation ``p = 1 - j u`` (normalized) satisfies ``p u conj(p) = j``;
    ``q = conj(p)``.  For ``u = -j`` the fallback ``q = i`` is used.
    """
    if a.mode != FLOAT:
        a = Quaternion(*(float(c) for c in a.coeffs))
    norm = math.sqrt(a.norm2())
    if norm == 0:
        raise ZeroDivisionError("zero quaternion has no direction")
    u = a / norm
    p = Quaternion(1.0) - Quaternion(0.0, 0.0, 1.0) * u
    pn = math.sqrt(p.norm2())
    if pn < 1e-8:
        return Quaternion(0.0, 1.0)
    return (p / pn).conj()


def normalizing_scalar(a: Quaternion) -> Quaternion:
    """``q`` with ``conj(q) a q = j`` (float)."""
    q = rotate_to_j(a)
    return q / math.sqrt(math.sqrt(float(a.norm2())))


def _rational_sqrt(x: Fraction) -> Fraction | None:
    x = Fraction(x)
    if x < 0:
        return None
    a, b = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if a * a == x.numerator and b * b == x.denominator:
        return Fraction(a, b)
    return None


def exact_normalizing_scalar(a: Quaternion) -> Quaternion | None:
    """Rational ``q`` with ``conj(q) a q = j`` when the needed square roots are rational."""
    size = _rational_sqrt(a.norm2())
    if not size:
        return None
    u = a / size
    p = ONE - J * u
    if p.norm2() == 0:
        q, scale2 = I, size
    else:
        q, scale2 = p.conj(), p.norm2() * size
    root = _rational_sqrt(1 / Fraction(scale2))
    return None if root is None else q * root


def _anisotropic(h: QuatMatrix, tol: float) -> list:
    """A vector ``e`` with ``h(e, e) != 0``, as a list of quaternions."""
    n = h.rows
    best, best_val = None, tol
    for s in range(n):
        val = math.sqrt(float(h[s, s].norm2()))
        if val > best_val or (tol == 0 and val > 0 and best is None):
            best, best_val = s, val
            if tol == 0:
                break
    if best is not None:
        return [ONE if t == best else Quaternion(0) for t in range(n)]
    pair = None
    for s in range(n):
        for t in range(n):
            if s != t and not _is_zero(h[s, t], tol):
                if pair is None or h[s, t].norm2() > h[pair].norm2():
                    pair = (s, t)
    if pair is None:
        raise ValueError("h is degenerate")
    s, t = pair
    zero = Quaternion(0)
    candidates = [(K, J)] + [(ONE, p) for p in (ONE, I, J, K)]
    for a, b in candidates:
        e = [zero] * n
        e[s], e[t] = a, b
        if not _is_zero(_form(h, e, e), tol):
            return e
    raise ValueError("h is degenerate")


def _form(h: QuatMatrix, x, y) -> Quaternion:
    total = Quaternion(0)
    for s in range(h.rows):
        for t in range(h.cols):
            total = total + x[s].conj() * h[s, t] * y[t]
    return total


def _column_matrix(cols) -> QuatMatrix:
    n = len(cols)
    return QuatMatrix([[cols[c][r] for c in range(n)] for r in range(n)])


def _complete(e, tol: float):
    """Basis with first column ``e`` and the remaining standard vectors."""
    n = len(e)
    pivot = max(range(n), key=lambda s: e[s].norm2())
    if _is_zero(e[pivot], tol):
        raise ValueError("zero vector cannot start a basis")
    cols = [list(e)]
    for s in range(n):
        if s != pivot:
            cols.append([ONE if r == s else Quaternion(0) for r in range(n)])
    return cols


def quat_gram_schmidt(h: QuatMatrix, mode: str | None = None) -> QuatMatrix:
    """``C`` with ``C* h C = j Id`` (float) or diagonal imaginary (exact).

    Exact mode normalizes a diagonal entry to ``j`` only when the square roots
    involved are rational and otherwise leaves it imaginary.
    """
    mode = h.mode if mode is None else mode
    if mode == FLOAT:
        h = QuatMatrix([[Quaternion(*(float(c) for c in x.coeffs)) for x in row] for row in h.tolist()])
    tol = _scale_tol(h)
    check_skew_hermitian(h, max(tol, 0.0) * 10)
    n = h.rows
    total = QuatMatrix.identity(n, FLOAT if mode == FLOAT else None)
    current = h
    for step in range(n):
        sub = QuatMatrix([[current[step + r, step + c] for c in range(n - step)] for r in range(n - step)])
        e = _anisotropic(sub, tol)
        if mode == FLOAT:
            q = normalizing_scalar(_form(sub, e, e))
        else:
            q = exact_normalizing_scalar(_form(sub, e, e))
        if q is not None:
            e = [x * q for x in e]
        cols = _complete(e, tol)
        b = _column_matrix(cols)
        hb = b.conj_transpose() @ sub @ b
        a_inv = hb[0, 0].inverse()
        clear = [[ONE if r == c else Quaternion(0) for c in range(n - step)] for r in range(n - step)]
        for c in range(1, n - step):
            clear[0][c] = -(a_inv * hb[0, c])
        local = b @ QuatMatrix(clear)
        total = total @ _embed(local, n, step)
        current = total.conj_transpose() @ h @ total
    return total


def _embed(local: QuatMatrix, n: int, step: int) -> QuatMatrix:
    rows = []
    for r in range(n):
        row = []
        for c in range(n):
            if r >= step and c >= step:
                row.append(local[r - step, c - step])
            else:
                row.append(ONE if r == c else Quaternion(0))
        rows.append(row)
    return QuatMatrix(rows)


# ---------------------------------------------------------------------------
# skew-Hermitian bases of a real structure


def skew_hermitian_matrix(omega, triple: HypercomplexTriple) -> QuatMatrix:
    """Matrix ``A`` of ``h`` in an adapted basis, as a form on the right space.

    In an adapted basis ``h(x, y) = sum x_s A_st conj(y_t)`` on the left space;
    conjugating coordinates turns this into ``x* A y`` on the right space.
    """
    n = triple.n
    w = _omega_matrix(omega)
    parts = [w] + [np.asarray(g.entries) for g in metrics_from(omega, triple)]
    coords = quaternion_coordinates(n)
    rows = []
    for s in range(n):
        row = []
        for t in range(n):
            p, r = coords[s][0], coords[t][0]
            row.append(Quaternion(*(m[p, r] for m in parts)))
        rows.append(row)
    return QuatMatrix(rows)


def _right_action_matrix(c: QuatMatrix) -> np.ndarray:
    """Real matrix of ``x_s = sum_t x'_t conj(C_st)`` on left-space coordinates."""
    n = c.rows
    coords = quaternion_coordinates(n)
    is_float = c.mode == FLOAT
    out = np.zeros((4 * n, 4 * n), dtype=float if is_float else object)
    if not is_float:
        out[:] = Fraction(0)
    for s in range(n):
        for t in range(n):
            blk = right_mult_matrix(c[s, t].conj())
            for a in range(4):
                for b in range(4):
                    out[coords[s][a], coords[t][b]] = blk[a][b]
    return out


def skew_hermitian_basis(omega, triple: HypercomplexTriple) -> BasisChange:
    """Basis in which ``triple`` is standard and ``omega`` is ``omega_0``.

    Exact inputs succeed only when no square roots are needed.
    """
    check = is_scalar_2form(omega, triple)
    if not check:
        raise NotScalarError(f"omega is not a scalar 2-form: {check.reason}", check.condition, check.witness)
    adapted = adapted_basis_from_triple(triple)
    n = triple.n
    w1 = adapted.bilinear(_omega_matrix(omega))
    std = standard_triple(n)
    if w1.dtype.kind == "f":
        std = HypercomplexTriple(*(np.asarray(m, dtype=float) for m in std))
    a = skew_hermitian_matrix(w1, std)
    mode = a.mode
    c = quat_gram_schmidt(a, mode)
    if mode != FLOAT:
        d = c.conj_transpose() @ a @ c
        if any(d[s, s] != J for s in range(n)):
            raise BasisError("exact normalization needs square roots; use float64")
    real = _right_action_matrix(c)
    total = adapted.matrix @ real
    tol = 1e-9 if total.dtype.kind == "f" else 0.0
    change = BasisChange(n, total, SKEW_HERMITIAN, tol)
    if not change.check(omega, triple):
        raise BasisError("skew-Hermitian basis check failed")
    return change


# ---------------------------------------------------------------------------
# quaternionic Darboux bases


def darboux_matrix(m: int) -> QuatMatrix:
    """``[[-k/2 Id, i Id], [-j/2 Id, -Id]]`` of size ``2m``."""
    if m < 1:
        raise ValueError("m must be positive")
    half = Fraction(1, 2)
    blocks = {
        (0, 0): Quaternion(0, 0, 0, -half),
        (0, 1): I,
        (1, 0): Quaternion(0, 0, -half, 0),
        (1, 1): -ONE,
    }
    rows = []
    for r in range(2 * m):
        row = []
        for c in range(2 * m):
            row.append(blocks[(r // m, c // m)] if r % m == c % m else Quaternion(0))
        rows.append(row)
    return QuatMatrix(rows)


def _darboux_relations(mats, n: int, tol: float) -> bool:
    """``J_a e_{4b-3} = -e_{4b-3+a}`` on every block of four."""
    d = 4 * n
    for start in range(0, d, 4):
        v = np.zeros(d, dtype=np.int64)
        v[start] = 1
        for a, ja in enumerate(mats, start=1):
            want = np.zeros(d, dtype=np.int64)
            want[start + a] = -1
            if not _close(np.asarray(ja) @ v, want, tol):
                return False
    return True


@dataclass(frozen=True)
class DarbouxCertificate:
    """Linear system for a skew-Hermitian ``A`` whose real part is standard in Darboux order."""

    n: int
    unknowns: int
    equations: int
    rank: int
    augmented_rank: int

    @property
    def solvable(self) -> bool:
        return self.rank == self.augmented_rank


def darboux_certificate(n: int) -> DarbouxCertificate:
    """Exact solvability of ``Re(x* A y) = omega_std`` over skew-Hermitian ``A``.

    Basis order ``b_1, b_1 i, b_1 j, b_1 k, b_2, ...`` (right multiplication by
    ``-i, -j, -k`` gives the required ``J_a``); the first ``2n`` vectors pair
    with the last ``2n``.  Since all nondegenerate skew-Hermitian forms are
    equivalent, solvability is the existence of a quaternionic Darboux basis.
    """
    if n < 1:
        raise ValueError("n must be positive")
    units = (ONE, I, J, K)
    # unknowns: real coefficients of A_st (s <= t); A_ss imaginary; A_ts = -conj(A_st)
    params = []
    for s in range(n):
        for t in range(s, n):
            for comp in range(1 if s == t else 0, 4):
                params.append((s, t, comp))
    d = 4 * n
    target = np.zeros((d, d), dtype=np.int64)
    target[: 2 * n, 2 * n:] = np.eye(2 * n, dtype=np.int64)
    target[2 * n:, : 2 * n] = -np.eye(2 * n, dtype=np.int64)
    rows, rhs = [], []
    for x in range(d):
        for y in range(d):
            s, a = divmod(x, 4)
            t, b = divmod(y, 4)
            coeffs = []
            for ps, pt, comp in params:
                val = 0
                unit = units[comp]
                # Re(conj(u_a) A_st u_b) with A_st = unit (and A_ts = -conj(unit))
                if (s, t) == (ps, pt):
                    val += (units[a].conj() * unit * units[b]).w
                if (s, t) == (pt, ps) and ps != pt:
                    val += (units[a].conj() * (-unit.conj()) * units[b]).w
                coeffs.append(val)
            rows.append(coeffs)
            rhs.append(int(target[x, y]))
    a_mat = la.qmat(np.array(rows, dtype=object))
    aug = la.qmat(np.hstack([np.array(rows, dtype=object), np.array(rhs, dtype=object).reshape(-1, 1)]))
    return DarbouxCertificate(n, len(params), len(rows), la.rank(a_mat), la.rank(aug))


def darboux_parity_obstruction(n: int) -> bool:
    """Whether a quaternionic Darboux basis exists in quaternionic dimension ``n``.

    True exactly for even ``n``; the answer is computed from the exact linear
    system of :func:`darboux_certificate` and checked against the parity.
    """
    cert = darboux_certificate(n)
    if cert.solvable != (n % 2 == 0):
        raise ArithmeticError(f"parity certificate disagrees at n={n}")
    return cert.solvable


def darboux_basis(m: int) -> QuatMatrix:
    """Columns of a quaternionic Darboux basis of ``(H^{2m}, x* j y)``."""
    return darboux_matrix(m)


def quat_identity_j(n: int) -> QuatMatrix:
    return QuatMatrix.diag([J] * n)


def darboux_product(m: int) -> QuatMatrix:
    """``C* (j Id) C`` for the Darboux matrix."""
    c = darboux_matrix(m)
    return c.conj_transpose() @ quat_identity_j(2 * m) @ c

