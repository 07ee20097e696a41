"""Symmetric pairs ``k = l + m`` carrying an invariant torsion-free qs-H structure.

Each family is a real matrix model of ``k``; ``l`` is cut out by a block
structure and ``m`` is its Killing-orthogonal complement.  At the origin:

* ``I = ad(U)|_m`` for ``U`` spanning the center of ``l``,
* ``omega = B(I ., .)|_m`` with ``B`` the Killing form,
* ``Q`` is ``ad`` of the ``sp(1)`` factor of ``l`` or, when ``l`` has none,
  the trace-free commutant of ``ad([l, l])|_m``.

Invariance certificates are exact on the unnormalized span of ``Q``; square
roots only enter the normalized triple handed to the scalar-2-form check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from . import linalg as la
from .lie_algebras import UNITS, bracket, integral, quat_unit_matrix, realified, so_star_of_form
from .model_space import HypercomplexTriple, is_scalar_2form, signature
from .scalars_quat import J, QuatMatrix

FAMILIES = ("so_star", "su", "sl_quat")
DESK_PARAMS = {
    "so_star": ((2,), (3,)),
    "su": ((1, 0), (2, 0), (1, 1)),
    "sl_quat": ((1,), (2,)),
}


class CartanRelationError(ArithmeticError):
    """A bracket relation of a symmetric pair failed."""


class InvariantStructureError(ArithmeticError):
    """No invariant structure of the expected shape exists on ``m``."""


# ---------------------------------------------------------------------------
# matrix models


def _unit(d: int, r: int, c: int) -> np.ndarray:
    m = np.zeros((d, d), dtype=np.int64)
    m[r, c] = 1
    return m


def _complex_realified(re: np.ndarray, im: np.ndarray) -> np.ndarray:
    return np.block([[re, -im], [im, re]])


def su_basis(p: int, q: int) -> list[np.ndarray]:
    """``su(p, q)`` for the form ``diag(1_p, -1_q)``, realified as ``[[x, -y], [y, x]]``."""
    N = p + q
    eta = [1] * p + [-1] * q
    zero = np.zeros((N, N), dtype=np.int64)
    out = []
    for a in range(N - 1):
        out.append(_complex_realified(zero, _unit(N, a, a) - _unit(N, a + 1, a + 1)))
    for a in range(N):
        for b in range(a + 1, N):
            sym = _unit(N, a, b) + _unit(N, b, a)
            skew = _unit(N, a, b) - _unit(N, b, a)
            if eta[a] == eta[b]:
                out += [_complex_realified(skew, zero), _complex_realified(zero, sym)]
            else:
                out += [_complex_realified(sym, zero), _complex_realified(zero, skew)]
    return out


def sl_quat_basis(N: int) -> list[np.ndarray]:
    """``sl(N, H)``: quaternionic matrices with real trace zero, realified."""
    out = []
    for r, c in product(range(N), repeat=2):
        for u in UNITS:
            if r == c and u == UNITS[0]:
                continue
            out.append(realified(quat_unit_matrix(N, r, c, u)))
    for a in range(N - 1):
        out.append(realified(quat_unit_matrix(N, a, a, UNITS[0])) - realified(quat_unit_matrix(N, a + 1, a + 1, UNITS[0])))
    return [integral(x) for x in out]


def so_star_basis(N: int) -> list[np.ndarray]:
    """``so*(2N)`` preserving ``x* (j Id) y``, realified."""
    return [integral(x) for x in so_star_of_form(QuatMatrix.diag([J] * N))]


def family_model(family: str, params: tuple) -> tuple[str, list[np.ndarray], list[int], int, str]:
    """``(name, k basis, first-block indices, quaternionic dim of m, model note)``."""
    if family == "so_star":
        (n,) = params
        N = n + 1
        first = list(range(4 * (N - 1), 4 * N))
        note = "l = block-diagonal part for H^n + H (the last quaternionic line), so*(2n) + u(1)"
        return f"so*({2 * N})/so*({2 * n})u(1)", so_star_basis(N), first, n, note
    if family == "su":
        p, q = params
        N = 2 + p + q
        first = [0, 1, N, N + 1]
        note = "l = s(u(2) + u(p,q)) block-diagonal in C^2 + C^(p+q)"
        return f"su({2 + p},{q})/su(2)su({p},{q})u(1)", su_basis(2 + p, q), first, p + q, note
    if family == "sl_quat":
        (n,) = params
        N = n + 1
        first = [0, 1, 2, 3]
        note = "l = gl(1,H) (upper-left) + sl(n,H) (lower-right) inside sl(n+1,H); the center acts paracomplexly"
        return f"sl({N},H)/gl(1,H)sl({n},H)", sl_quat_basis(N), first, 2 * n, note
    raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")


# ---------------------------------------------------------------------------
# linear algebra on k


def _flat(mats):
    return la.qmat(np.array([np.asarray(m, dtype=object).ravel() for m in mats], dtype=object).T)


def _fracs(m) -> np.ndarray:
    return la.to_fractions(m)


def _combine(coeffs, mats) -> np.ndarray:
    out = np.zeros(mats[0].shape, dtype=object)
    for c, m in zip(coeffs, mats):
        if c != 0:
            out = out + Fraction(c) * m
    return out


class LieModel:
    """Structure of a real matrix Lie algebra in a fixed basis."""

    def __init__(self, basis: list[np.ndarray]):
        self.basis = [np.asarray(b) for b in basis]
        self.dim = len(basis)
        self._k = _flat(self.basis)
        if la.rank(self._k) != self.dim:
            raise ValueError("basis is not linearly independent")
        d = self.dim
        brs = [bracket(a, b) for a in self.basis for b in self.basis]
        c = la.solve(self._k, _flat(brs))
        # column i of _ad_stack is vec(ad(b_i)), row-major
        cols = [la.select_cols(c, range(i * d, (i + 1) * d)) for i in range(d)]
        self._ad_stack = la.hstack([_vec(m) for m in cols])
        self.ad = [_fracs(m) for m in cols]
        transposed = la.hstack([_vec(m.transpose()) for m in cols])
        self.killing = _fracs(self._ad_stack.transpose() * transposed)

    def coords(self, mats) -> np.ndarray:
        """Coordinates (columns) of matrices in the basis; raises if outside."""
        return _fracs(la.solve(self._k, _flat(mats)))

    def ad_matrix(self, coeffs):
        """``ad(X)`` as an exact matrix for ``X`` with the given coordinates."""
        vec = self._ad_stack * la.qmat(np.asarray(coeffs, dtype=object).reshape(-1, 1))
        d = self.dim
        return la.qmat(np.array(_fracs(vec)[:, 0], dtype=object).reshape(d, d))

    def ad_of(self, coeffs) -> np.ndarray:
        return _fracs(self.ad_matrix(coeffs))


def _vec(m):
    r, c = m.nrows(), m.ncols()
    return la.qmat(np.array(_fracs(m), dtype=object).reshape(r * c, 1))


def _kernel_cols(rows) -> np.ndarray:
    rows = np.asarray(rows, dtype=object)
    if rows.size == 0:
        raise ValueError("empty system")
    return _fracs(la.kernel(la.qmat(rows)))


def _off_block_rows(model: LieModel, first: list[int]) -> np.ndarray:
    d = model.basis[0].shape[0]
    rest = [i for i in range(d) if i not in first]
    rows = []
    for a in first:
        for b in rest:
            rows.append([m[a, b] for m in model.basis])
            rows.append([m[b, a] for m in model.basis])
    return np.array(rows, dtype=object)


def _only_first_rows(model: LieModel, first: list[int]) -> np.ndarray:
    d = model.basis[0].shape[0]
    rows = []
    for a in range(d):
        for b in range(d):
            if not (a in first and b in first):
                rows.append([m[a, b] for m in model.basis])
    return np.array(rows, dtype=object)


# ---------------------------------------------------------------------------
# the pair


@dataclass
class SymmetricPair:
    name: str
    family: str
    params: tuple
    model: LieModel = field(repr=False)
    l: np.ndarray = field(repr=False)  # columns: coordinates in k
    m: np.ndarray = field(repr=False)
    quaternionic_dim: int
    note: str
    first_block: list = field(repr=False, default_factory=list)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.model.dim, self.l.shape[1], self.m.shape[1]

    def _lm_inverse(self):
        if not hasattr(self, "_lm_inv"):
            self._lm_inv = la.qmat(np.hstack([self.l, self.m])).inv()
            self._m_q = la.qmat(self.m)
        return self._lm_inv

    def restricted(self, coeffs) -> np.ndarray:
        """Matrix of ``ad(X)|_m`` in the m-basis for ``X`` given by k-coordinates."""
        inv = self._lm_inverse()
        image = inv * (self.model.ad_matrix(coeffs) * self._m_q)
        k = self.l.shape[1]
        return _fracs(la.select_rows(image, range(k, image.nrows())))

    def split(self, vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        coeffs = _fracs(self._lm_inverse() * la.qmat(vectors))
        k = self.l.shape[1]
        return coeffs[:k, :], coeffs[k:, :]

    def killing_on_m(self) -> np.ndarray:
        return self.m.T @ self.model.killing @ self.m


def build_pair(family: str, params) -> SymmetricPair:
    params = tuple(params)
    name, basis, first, qdim, note = family_model(family, params)
    model = LieModel(basis)
    l_cols = _kernel_cols(_off_block_rows(model, first))
    m_cols = _kernel_cols(l_cols.T @ model.killing)
    pair = SymmetricPair(name, family, params, model, l_cols, m_cols, qdim, note, first)
    if m_cols.shape[1] != 4 * qdim or l_cols.shape[1] + m_cols.shape[1] != model.dim:
        raise CartanRelationError(f"{name}: dims {pair.dims} do not give dim m = {4 * qdim}")
    rel = cartan_relations(pair)
    if not all(rel.values()):
        raise CartanRelationError(f"{name}: Cartan relations fail: {rel}")
    return pair


def _bracket_coords(pair: SymmetricPair, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """k-coordinates of brackets of all columns of ``a`` with all columns of ``b``."""
    out = []
    for i in range(a.shape[1]):
        ad = pair.model.ad_of(a[:, i])
        out.append(ad @ b)
    return np.hstack(out)


def cartan_relations(pair: SymmetricPair) -> dict:
    ll = _bracket_coords(pair, pair.l, pair.l)
    lm = _bracket_coords(pair, pair.l, pair.m)
    mm = _bracket_coords(pair, pair.m, pair.m)
    _, ll_m = pair.split(ll)
    lm_l, _ = pair.split(lm)
    _, mm_m = pair.split(mm)
    bm = pair.killing_on_m()
    return {
        "[l,l] in l": not np.any(ll_m != 0),
        "[l,m] in m": not np.any(lm_l != 0),
        "[m,m] in l": not np.any(mm_m != 0),
        "killing nondegenerate on m": la.rank(la.qmat(bm)) == bm.shape[0],
    }


def canonical_torsion(pair: SymmetricPair) -> np.ndarray:
    """``T(X, Y) = -[X, Y]_m`` at the origin, as ``T[x, y, k]`` in the m-basis."""
    d = pair.m.shape[1]
    mm = _bracket_coords(pair, pair.m, pair.m)
    _, mm_m = pair.split(mm)
    out = np.empty((d, d, d), dtype=object)
    for x in range(d):
        for y in range(d):
            out[x, y, :] = -mm_m[:, x * d + y]
    return out


# ---------------------------------------------------------------------------
# invariant structure


def center_of_l(pair: SymmetricPair) -> np.ndarray:
    """k-coordinates (columns) of a basis of the center of ``l``."""
    rows = []
    for j in range(pair.l.shape[1]):
        adj = pair.model.ad_of(pair.l[:, j])
        rows.append(-(adj @ pair.l))  # [X, l_j] = -ad(l_j) X
    ker = _kernel_cols(np.vstack(rows))
    return pair.l @ ker


def _sp1_factor(pair: SymmetricPair) -> np.ndarray | None:
    rows = _only_first_rows(pair.model, pair.first_block)
    cols = _kernel_cols(np.vstack([rows, _off_block_rows(pair.model, pair.first_block)]))
    if cols.shape[1] != 3:
        return None
    return cols


def _commutant(mats: list[np.ndarray]) -> list[np.ndarray]:
    d = mats[0].shape[0]
    ident = np.eye(d, dtype=np.int64)
    rows = []
    for m in mats:
        m = integral(np.asarray(m, dtype=object)).astype(np.int64)
        rows.append(np.kron(ident, m.T) - np.kron(m, ident))
    ker = _fracs(la.kernel_int(np.vstack(rows)))
    return [ker[:, i].reshape(d, d) for i in range(ker.shape[1])]


def _trace_free(mats: list[np.ndarray]) -> list[np.ndarray]:
    d = mats[0].shape[0]
    rows = np.array([[sum(m[i, i] for i in range(d)) for m in mats]], dtype=object)
    ker = _kernel_cols(rows)
    return [_combine(ker[:, i], mats) for i in range(ker.shape[1])]


def _scalar_multiple_of_identity(m: np.ndarray):
    d = m.shape[0]
    c = m[0, 0]
    if np.all(m == np.eye(d, dtype=object) * c):
        return c
    return None


def _rational_sqrt(x: Fraction) -> Fraction | None:
    x = Fraction(x)
    if x < 0:
        return None
    a, b = math.isqrt(x.numerator), math.isqrt(x.denominator)
    return Fraction(a, b) if a * a == x.numerator and b * b == x.denominator else None


def _in_span(vec: np.ndarray, mats: list[np.ndarray]) -> bool:
    basis = la.qmat(np.array([np.asarray(m, dtype=object).ravel() for m in mats], dtype=object).T)
    v = la.qmat(np.asarray(vec, dtype=object).reshape(-1, 1))
    return la.rank(la.hstack([basis, v])) == la.rank(basis)


@dataclass
class InvariantStructure:
    pair_name: str
    U: np.ndarray = field(repr=False)
    I: np.ndarray = field(repr=False)
    I_square: Fraction
    kind: str
    omega: np.ndarray = field(repr=False)
    Q: list = field(repr=False)
    Q_source: str
    triple: tuple = field(repr=False)
    triple_scales: tuple
    certificate: dict

    @property
    def ok(self) -> bool:
        return all(v is True for v in self.certificate.values() if isinstance(v, bool))

    def to_dict(self) -> dict:
        return {
            "pair": self.pair_name,
            "I_square": str(self.I_square),
            "I_kind": self.kind,
            "Q_source": self.Q_source,
            "triple_scales": [str(s) for s in self.triple_scales],
            "certificate": self.certificate,
            "ok": self.ok,
        }


def omega_from(pair: SymmetricPair, u_coeffs) -> tuple[np.ndarray, np.ndarray]:
    """``(I, Omega)`` with ``I = ad(U)|_m`` and ``Omega[a, b] = B(I m_a, m_b)``."""
    i_mat = pair.restricted(u_coeffs)
    return i_mat, i_mat.T @ pair.killing_on_m()


def invariance_residual(pair: SymmetricPair, omega: np.ndarray) -> Fraction:
    """Largest entry of ``D^t Omega + Omega D`` over ``D = ad(X)|_m``, ``X`` in ``l``."""
    worst = Fraction(0)
    for j in range(pair.l.shape[1]):
        d = pair.restricted(pair.l[:, j])
        res = d.T @ omega + omega @ d
        worst = max([worst] + [abs(Fraction(x)) for x in res.flat])
    return worst


def _quaternionic_basis(q: list[np.ndarray]):
    a1 = q[0]
    # A in span(Q) anticommuting with A1
    rows = np.array([(a1 @ m + m @ a1).ravel() for m in q], dtype=object).T
    ker = _kernel_cols(rows)
    if ker.shape[1] == 0:
        raise InvariantStructureError("Q has no anticommuting pair")
    a2 = _combine(ker[:, 0], q)
    a3 = a1 @ a2
    mats = [a1, a2, a3]
    scales = []
    for a in mats:
        c = _scalar_multiple_of_identity(a @ a)
        if c is None or c >= 0:
            raise InvariantStructureError("Q does not square to negative scalars")
        scales.append(-c)
    return mats, scales


def _normalized_triple(mats, scales):
    roots = [_rational_sqrt(c) for c in scales]
    if all(r is not None for r in roots):
        j1, j2 = (np.asarray(m, dtype=object) / r for m, r in zip(mats[:2], roots[:2]))
        return HypercomplexTriple(j1, j2, j1 @ j2), "rational"
    fl = [np.asarray(m, dtype=float) / math.sqrt(float(c)) for m, c in zip(mats[:2], scales[:2])]
    return HypercomplexTriple(fl[0], fl[1], fl[0] @ fl[1]), "float64"


def invariant_structure(pair: SymmetricPair) -> InvariantStructure:
    center = center_of_l(pair)
    if center.shape[1] != 1:
        raise InvariantStructureError(f"center of l has dimension {center.shape[1]}, expected 1")
    u = center[:, 0]
    i_mat, omega = omega_from(pair, u)
    c = _scalar_multiple_of_identity(i_mat @ i_mat)
    if c is None or c == 0:
        raise InvariantStructureError("ad(U)^2 is not a nonzero multiple of the identity on m")
    kind = "complex" if c < 0 else "paracomplex"
    sp1 = _sp1_factor(pair)
    if sp1 is not None:
        q = [pair.restricted(sp1[:, a]) for a in range(3)]
        source = "ad of the sp(1) factor of l"
    else:
        ss = _bracket_coords(pair, pair.l, pair.l)
        _, pivots = la.rref(la.qmat(ss))
        ss_mats = [pair.restricted(ss[:, i]) for i in pivots]
        q = _trace_free(_commutant(ss_mats))
        source = "trace-free commutant of ad([l,l]) on m"
    if len(q) != 3:
        raise InvariantStructureError(f"quaternionic structure has dimension {len(q)}")
    mats, scales = _quaternionic_basis(q)
    cert = {
        "omega antisymmetric": not np.any(omega + omega.T != 0),
        "omega nondegenerate": la.rank(la.qmat(omega)) == omega.shape[0],
        "ad(l) preserves omega": invariance_residual(pair, omega) == 0,
        "ad(l) normalizes Q": _normalizes(pair, q),
        "omega scalar for Q": all(
            not np.any(a.T @ omega @ a - s * omega != 0) for a, s in zip(mats, scales)
        ),
        "I in Q" if sp1 is None else "I commutes with Q": (
            _in_span(i_mat, q) if sp1 is None else all(not np.any(i_mat @ a - a @ i_mat != 0) for a in q)
        ),
    }
    triple, mode = _normalized_triple(mats, scales)
    check = is_scalar_2form(omega if mode == "rational" else omega.astype(float), triple)
    cert["scalar 2-form check"] = bool(check)
    cert["triple field"] = mode
    cert["metric signature"] = list(signature(_metric(omega, triple, mode)))
    return InvariantStructure(pair.name, u, i_mat, c, kind, omega, q, source, tuple(mats), tuple(scales), cert)


def _metric(omega, triple, mode):
    w = omega if mode == "rational" else omega.astype(float)
    g = w @ triple.J1
    if mode != "rational":
        g = np.round(g, 9)
        return np.array([[Fraction(x).limit_denominator(10**6) for x in row] for row in g], dtype=object)
    return g


def _normalizes(pair: SymmetricPair, q: list[np.ndarray]) -> bool:
    for j in range(pair.l.shape[1]):
        d = pair.restricted(pair.l[:, j])
        for a in q:
            if not _in_span(d @ a - a @ d, q):
                return False
    return True


def negative_control(pair: SymmetricPair) -> Fraction:
    """Invariance residual of ``B(ad(U + X) ., .)`` for a non-central ``X`` in ``l``."""
    center = center_of_l(pair)
    u = center[:, 0]
    for j in range(pair.l.shape[1]):
        x = pair.l[:, j]
        if _in_span(x, [u]):
            continue
        _, omega = omega_from(pair, u + x)
        res = invariance_residual(pair, omega)
        if res != 0:
            return res
    return Fraction(0)


def desk_pairs():
    for family, plist in DESK_PARAMS.items():
        for params in plist:
            yield family, params
