"""Matrix Lie algebras inside gl(4n, R), stabilizers of tensors, and gradings.

Every algebra here is a list of exact 4n x 4n generator matrices.  Spans,
intersections and brackets are all decided by exact rank computations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd, lcm
from itertools import combinations, combinations_with_replacement
from typing import Iterable, Sequence

import numpy as np
from flint import fmpq_mat

from . import linalg as la
from . import tensors as tn
from .model_space import HypercomplexTriple, standard_omega_matrix, standard_triple
from .scalars_quat import I, J, K, ONE, QuatMatrix, Quaternion, realify
from .tensors import CO, CONTRA, ModelTensor

ALGEBRAS = ("so_star", "sp1", "so_star_sp1", "gl_quat", "sl_quat", "sp_real", "s2e")


def expected_dim(name: str, n: int) -> int:
    return {
        "so_star": n * (2 * n - 1),
        "sp1": 3,
        "so_star_sp1": n * (2 * n - 1) + 3,
        "gl_quat": 4 * n * n,
        "sl_quat": 4 * n * n - 1,
        "sp_real": 2 * n * (4 * n + 1),
        "s2e": n * (2 * n + 1),
    }[name]


def flat(mats: Sequence[np.ndarray]) -> fmpq_mat:
    """Matrix whose columns are the row-major flattenings of ``mats``."""
    arr = np.array([np.asarray(m).ravel() for m in mats], dtype=object)
    if arr.size == 0:
        d = 0
        return fmpq_mat(d, 0)
    return la.qmat(arr.T)


def unflat(col: Sequence, d: int) -> np.ndarray:
    out = np.empty(d * d, dtype=object)
    for i, x in enumerate(col):
        out[i] = Fraction(int(x.p), int(x.q)) if hasattr(x, "p") else Fraction(x)
    return out.reshape(d, d)


def columns_to_mats(m: fmpq_mat, d: int) -> list[np.ndarray]:
    fr = la.to_fractions(m)
    return [fr[:, k].reshape(d, d) for k in range(m.ncols())]


def bracket(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def integral(m: np.ndarray) -> np.ndarray:
    """Positive rational multiple of ``m`` with coprime integer entries."""
    m = np.asarray(m)
    if m.dtype.kind in "iu":
        return m.astype(np.int64)
    if m.dtype.kind == "f":
        raise TypeError("integral() needs exact entries")
    den = 1
    for x in m.flat:
        den = lcm(den, Fraction(x).denominator)
    out = np.array([int(Fraction(x) * den) for x in m.flat], dtype=object).reshape(m.shape)
    g = 0
    for x in out.flat:
        g = gcd(g, int(x))
    if g > 1:
        out = out // g
    return la._maybe_int64(out)


@dataclass
class SubalgebraBasis:
    """Generators of a subspace of gl(d) together with a closure flag."""

    n: int
    name: str
    generators: list[np.ndarray] = field(repr=False)
    closed: bool | None = None

    @property
    def dim(self) -> int:
        return len(self.generators)

    @property
    def d(self) -> int:
        return self.generators[0].shape[0] if self.generators else 4 * self.n

    def span(self) -> la.Subspace:
        if not self.generators:
            return la.Subspace.zero(self.d * self.d)
        return la.Subspace.span_cols(flat(self.generators))

    def contains(self, mats: Sequence[np.ndarray]) -> bool:
        if not mats:
            return True
        return self.span().contains_int(np.array([np.asarray(m).ravel() for m in mats]))

    def integral_generators(self) -> list[np.ndarray]:
        """Generators rescaled to integer matrices (same span)."""
        return [integral(g) for g in self.generators]

    def check_closure(self) -> bool:
        """Exact certificate that brackets of generators stay in the span."""
        gens = self.integral_generators()
        brs = [bracket(a, b) for a, b in combinations(gens, 2)]
        self.closed = self.contains(brs)
        return self.closed

    def check_independent(self) -> bool:
        return not self.generators or la.rank(flat(self.generators)) == self.dim


def _from_kernel(ker: fmpq_mat, d: int, n: int, name: str) -> SubalgebraBasis:
    return SubalgebraBasis(n, name, columns_to_mats(ker, d))


# ---------------------------------------------------------------------------
# defining equations (linear in the d*d entries of A, row-major)


def _commutator_rows(mats: Iterable[np.ndarray], d: int) -> np.ndarray:
    """Rows of ``A -> [A, M]`` for each M, on vec(A)."""
    rows = []
    ident = np.eye(d, dtype=np.int64)
    for m in mats:
        m = np.asarray(m)
        # vec(A M - M A) = (I kron M^t - M kron I) vec(A) in row-major
        rows.append(np.kron(ident, m.T) - np.kron(m, ident))
    return np.vstack(rows)


def _sp_rows(w: np.ndarray) -> np.ndarray:
    """Rows of ``A -> A^t W + W A`` (so that omega(A., .) + omega(., A.) = 0)."""
    d = w.shape[0]
    ident = np.eye(d, dtype=np.int64)
    # vec(A^t W): entry (i, j) = sum_k A[k, i] W[k, j]
    rows = np.zeros((d * d, d * d), dtype=object)
    for i in range(d):
        for j in range(d):
            for k in range(d):
                rows[i * d + j, k * d + i] += w[k, j]
    return rows + np.kron(w, ident)


def _int_rows(rows: np.ndarray) -> np.ndarray:
    """Clear denominators row by row."""
    rows = np.asarray(rows)
    if rows.dtype.kind in "iu":
        return rows.astype(np.int64)
    out = np.empty(rows.shape, dtype=object)
    for r in range(rows.shape[0]):
        den = 1
        for x in rows[r]:
            den = np.lcm(den, Fraction(x).denominator)
        out[r] = [int(Fraction(x) * int(den)) for x in rows[r]]
    return la._maybe_int64(out)


def _solve(rows: np.ndarray, d: int, n: int, name: str) -> SubalgebraBasis:
    ker = la.kernel_int(_int_rows(rows))
    return _from_kernel(ker, d, n, name)


def _triple_ints(triple: HypercomplexTriple) -> list[np.ndarray]:
    return [_as_int(m) for m in triple]


def _as_int(m) -> np.ndarray:
    m = np.asarray(m)
    if m.dtype.kind in "iu":
        return m.astype(np.int64)
    if m.dtype == object and all(Fraction(x).denominator == 1 for x in m.flat):
        return np.array([[int(x) for x in row] for row in m], dtype=np.int64)
    return m


def build_subalgebra(name: str, n: int, triple: HypercomplexTriple | None = None, omega=None) -> SubalgebraBasis:
    """Exact basis of the named subalgebra of gl(4n, R).

    ``so_star`` = commutant of the triple intersected with sp(omega);
    ``s2e`` is the complementary part of the commutant (endomorphisms that
    are omega-symmetric), a module rather than a subalgebra, needed for the
    normalization spaces of minimal connections.
    """
    if name not in ALGEBRAS:
        raise ValueError(f"unknown algebra {name!r}; choose from {ALGEBRAS}")
    if triple is None and omega is None:
        return _build_standard(name, n)
    return _build(name, n, triple, omega)


@lru_cache(maxsize=None)
def _build_standard(name: str, n: int) -> SubalgebraBasis:
    return _build(name, n, None, None)


def _build(name, n, triple, omega) -> SubalgebraBasis:
    triple = triple or standard_triple(n)
    w = standard_omega_matrix(n) if omega is None else _as_int(tn.entries_of(omega))
    d = 4 * n
    js = _triple_ints(triple)
    if name == "sp1":
        alg = SubalgebraBasis(n, name, [tn.as_exact(j) for j in js])
    elif name == "gl_quat":
        alg = _solve(_commutator_rows(js, d), d, n, name)
    elif name == "sl_quat":
        trace_row = np.eye(d, dtype=np.int64).reshape(1, -1)
        alg = _solve(np.vstack([_commutator_rows(js, d), trace_row]), d, n, name)
    elif name == "sp_real":
        alg = _solve(_sp_rows(w), d, n, name)
    elif name == "so_star":
        alg = _solve(np.vstack([_commutator_rows(js, d), _sp_rows(w)]), d, n, name)
    elif name == "s2e":
        # omega(A., .) = omega(., A.): A^t W - W A = 0
        sym = _sp_rows(w) - 2 * np.kron(w, np.eye(d, dtype=np.int64))
        alg = _solve(np.vstack([_commutator_rows(js, d), sym]), d, n, name)
    else:  # so_star_sp1
        so = _build(name="so_star", n=n, triple=triple, omega=omega)
        alg = SubalgebraBasis(n, name, so.generators + [tn.as_exact(j) for j in js])
    if name != "s2e":
        alg.check_closure()
    if alg.dim != expected_dim(name, n):
        raise ArithmeticError(f"{name}: dimension {alg.dim} != {expected_dim(name, n)}")
    return alg


# ---------------------------------------------------------------------------
# stabilizers


def action_rows(tensor, rows: np.ndarray | None = None, variance: Sequence[str] | None = None) -> np.ndarray:
    """Matrix of ``A -> A . tensor`` on vec(A) (row-major), restricted to index ``rows``.

    The derivation action is ``(A.T)(..., X_s, ...) = -T(..., A X_s, ...)`` on
    covariant slots and ``+A`` applied to contravariant slots.
    """
    t = tn.entries_of(tensor)
    if variance is None:
        variance = tensor.variance if isinstance(tensor, ModelTensor) else (CO,) * t.ndim
    d = t.shape[0]
    r = t.ndim
    if rows is None:
        rows = np.array(list(np.ndindex(*t.shape)), dtype=np.int64).reshape(-1, r)
    nrow = rows.shape[0]
    kind = t.dtype.kind
    out = np.zeros((nrow, d, d), dtype=t.dtype if kind in "fiu" else object)
    ridx = np.arange(nrow)
    for s in range(r):
        for m in range(d):
            idx = rows.copy()
            idx[:, s] = m
            vals = t[tuple(idx.T)]
            if variance[s] == CO:
                # -T(.., A e_{i_s}, ..) = -sum_m A[m, i_s] T(.., e_m, ..)
                np.add.at(out, (ridx, m, rows[:, s]), -vals)
            else:
                # +sum_m A[i_s, m] T(.., m, ..)
                np.add.at(out, (ridx, rows[:, s], m), vals)
    return out.reshape(nrow, d * d)


def _sym_rows(t: np.ndarray) -> np.ndarray | None:
    if t.ndim >= 2 and tn.check_symmetry(t, tn.SYMMETRIC):
        d = t.shape[0]
        return np.array(list(combinations_with_replacement(range(d), t.ndim)), dtype=np.int64)
    return None


def stabilizer(tensors, within: SubalgebraBasis | None = None, n: int | None = None) -> SubalgebraBasis:
    """Infinitesimal stabilizer of one or several tensors, inside ``within``
    (or all of gl(V) when ``within`` is None)."""
    if isinstance(tensors, ModelTensor) or isinstance(tensors, np.ndarray):
        tensors = [tensors]
    blocks = []
    for t in tensors:
        arr = tn.entries_of(t)
        variance = t.variance if isinstance(t, ModelTensor) else (CO,) * arr.ndim
        # the action is linear in the tensor, so an integral multiple will do
        scaled = integral(arr)
        blocks.append(action_rows(scaled, _sym_rows(scaled), variance))
    eqs = np.vstack(blocks)
    d = int(round(eqs.shape[1] ** 0.5))
    n = n if n is not None else d // 4
    if within is None:
        ker = la.kernel_int(eqs)
        alg = _from_kernel(ker, d, n, "stabilizer")
    else:
        gens = flat(within.generators)
        eq = la.qmat(eqs) * gens
        ker = la.kernel(eq)
        mats = columns_to_mats(gens * ker, d)
        alg = SubalgebraBasis(n, "stabilizer", mats)
    alg.check_closure()
    return alg


def endo_tensor(n: int, m) -> ModelTensor:
    """An endomorphism as a (contra, co) tensor ``M[k, l]``."""
    return ModelTensor(n, (CONTRA, CO), m)


def normalizer_of_span(mats: Sequence[np.ndarray], within: SubalgebraBasis | None = None) -> SubalgebraBasis:
    """``{A : [A, M_a] in span(M)}`` for the given matrices."""
    d = mats[0].shape[0]
    k = len(mats)
    comm = _commutator_rows(mats, d)  # (k d^2) x d^2
    # unknowns (vec A, c_{ab}); equation [A, M_a] - sum_b c_ab M_b = 0
    extra = np.zeros((k * d * d, k * k), dtype=object)
    for a in range(k):
        for b in range(k):
            extra[a * d * d:(a + 1) * d * d, a * k + b] = -np.asarray(mats[b]).ravel()
    eqs = _int_rows(np.hstack([comm.astype(object), extra]))
    ker = la.kernel_int(eqs)
    a_part = la.select_rows(ker, range(d * d))
    sub = la.Subspace.span_cols(a_part)
    n = d // 4
    alg = SubalgebraBasis(n, "normalizer", columns_to_mats(sub.basis(), d))
    if within is not None:
        inter = sub.intersect(within.span())
        alg = SubalgebraBasis(n, "normalizer", columns_to_mats(inter.basis(), d))
    alg.check_closure()
    return alg


def intersect(a: SubalgebraBasis, b: SubalgebraBasis, name: str = "intersection") -> SubalgebraBasis:
    inter = a.span().intersect(b.span())
    return SubalgebraBasis(a.n, name, columns_to_mats(inter.basis(), a.d))


# ---------------------------------------------------------------------------
# invariant quartics


def _monomials(d: int, deg: int) -> list[tuple[int, ...]]:
    return list(combinations_with_replacement(range(d), deg))


def quartic_invariants_dim(algebra: SubalgebraBasis) -> int:
    """Dimension of the algebra-invariant part of S^4 V*.

    A symmetric 4-tensor is identified with the quartic ``P(x) = T(x,x,x,x)``;
    the derivation action becomes ``(A.P)(x) = -dP_x(A x)``.
    """
    d = algebra.d
    mons = _monomials(d, 4)
    index = {m: i for i, m in enumerate(mons)}
    blocks = []
    for g in algebra.integral_generators():
        blk = np.zeros((len(mons), len(mons)), dtype=np.int64)
        nz = [[(j, int(g[i, j])) for j in range(d) if g[i, j] != 0] for i in range(d)]
        for c, mon in enumerate(mons):
            # -sum_i d/dx_i (x^mon) * (G x)_i
            for pos in set(mon):
                mult = mon.count(pos)
                rest = list(mon)
                rest.remove(pos)
                for j, coef in nz[pos]:
                    blk[index[tuple(sorted(rest + [j]))], c] -= mult * coef
        blocks.append(blk)
    eqs = np.vstack(blocks)
    return la.kernel_int(eqs).ncols()


# ---------------------------------------------------------------------------
# gradings of so*(2N) in quaternionic matrix form


UNITS = (ONE, I, J, K)


def quat_unit_matrix(N: int, r: int, c: int, u: Quaternion) -> QuatMatrix:
    return QuatMatrix([[u if (i, j) == (r, c) else 0 for j in range(N)] for i in range(N)])


def realified(q: QuatMatrix) -> np.ndarray:
    return tn.as_exact(np.array(realify(q), dtype=object))


def so_star_of_form(F: QuatMatrix) -> list[np.ndarray]:
    """Real basis of ``{X : X* F + F X = 0}`` in the 4N x 4N realification."""
    N = F.rows
    rf = realified(F)
    params = [realified(quat_unit_matrix(N, r, c, u)) for r in range(N) for c in range(N) for u in UNITS]
    cols = [(x.T @ rf + rf @ x).ravel() for x in params]
    eq = _int_rows(np.array(cols, dtype=object).T)
    ker = la.kernel_int(eq)
    fr = la.to_fractions(ker)
    out = []
    for k in range(ker.ncols()):
        out.append(sum((fr[i, k] * params[i] for i in range(len(params)) if fr[i, k] != 0), np.zeros_like(params[0])))
    return out


@dataclass
class GradingReport:
    depth: int
    N: int
    layer_dims: dict
    total: int
    brackets_ok: bool
    cartan_dim: int
    cartan_abelian: bool
    cartan_self_centralizing: bool

    @property
    def ok(self) -> bool:
        return self.brackets_ok and self.cartan_abelian and self.cartan_self_centralizing

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "N": self.N,
            "layer_dims": {str(k): v for k, v in sorted(self.layer_dims.items())},
            "total": self.total,
            "brackets_ok": self.brackets_ok,
            "cartan_dim": self.cartan_dim,
            "cartan_abelian": self.cartan_abelian,
            "cartan_self_centralizing": self.cartan_self_centralizing,
            "ok": self.ok,
        }


def grading_form(N: int, depth: int) -> tuple[QuatMatrix, list[Fraction]]:
    """The form ``F`` and the diagonal grading element for the requested depth."""
    if depth == 1:
        if N % 2:
            raise ValueError("a |1|-grading needs so*(4m): N = 2m even")
        m = N // 2
        rows = [[0] * N for _ in range(N)]
        for i in range(m):
            rows[i][m + i] = 1
            rows[m + i][i] = -1
        return QuatMatrix(rows), [Fraction(1, 2)] * m + [Fraction(-1, 2)] * m
    if depth == 2:
        if N % 2 == 0:
            raise ValueError("a |2|-grading needs so*(4m+2): N = 2m+1 odd")
        m = N // 2
        rows = [[Quaternion(0)] * N for _ in range(N)]
        for i in range(m):
            rows[i][m + 1 + i] = ONE
            rows[m + 1 + i][i] = -ONE
        rows[m][m] = J
        return QuatMatrix(rows), [Fraction(1)] * m + [Fraction(0)] + [Fraction(-1)] * m
    raise ValueError("depth must be 1 or 2")


def grading_check(N: int, depth: int) -> GradingReport:
    """Layers of so*(2N) under the grading element; certify [g_i, g_j] in g_{i+j}."""
    F, weights = grading_form(N, depth)
    rf = realified(F)
    basis = so_star_of_form(F)
    # ad(E) acts on the (r, c) block by w_r - w_c; E lies in the algebra, so
    # the eigencomponents of each generator do too
    layers: dict[int, list[np.ndarray]] = {}
    for x in basis:
        parts: dict[int, np.ndarray] = {}
        for r in range(N):
            for c in range(N):
                k = int(weights[r] - weights[c])
                blk = parts.setdefault(k, np.zeros_like(x))
                blk[4 * r:4 * r + 4, 4 * c:4 * c + 4] = x[4 * r:4 * r + 4, 4 * c:4 * c + 4]
        for k, blk in parts.items():
            if not tn.is_zero(blk):
                layers.setdefault(k, []).append(blk)
    spans = {}
    for k, mats in layers.items():
        sub = la.Subspace.span_cols(flat(mats))
        spans[k] = sub
    dims = {k: s.dim for k, s in spans.items()}
    total_span = la.Subspace.span_cols(flat(basis))
    # each layer lies in the algebra, and together they give all of it
    layer_ok = all(s <= total_span for s in spans.values()) and sum(dims.values()) == total_span.dim
    brackets_ok = layer_ok
    for i, j in combinations_with_replacement(sorted(spans), 2):
        bi = [integral(m) for m in columns_to_mats(spans[i].basis(), 4 * N)]
        bj = [integral(m) for m in columns_to_mats(spans[j].basis(), 4 * N)]
        brs = np.array([bracket(a, b).ravel() for a in bi for b in bj])
        target = spans.get(i + j, la.Subspace.zero((4 * N) ** 2))
        if not target.contains_int(brs):
            brackets_ok = False
    cartan = _diagonal_cartan(N, depth, rf)
    comm = [bracket(a, b) for a, b in combinations(cartan, 2)]
    abelian = all(tn.is_zero(c) for c in comm)
    cent = _centralizer_dim(cartan, basis)
    return GradingReport(depth, N, dims, total_span.dim, brackets_ok, len(cartan), abelian, cent == len(cartan))


def _diagonal_cartan(N: int, depth: int, rf: np.ndarray) -> list[np.ndarray]:
    """Diagonal elements of the algebra with entries in span(1, i) (middle
    entry in span(j) for the |2|-grading)."""
    params = []
    for r in range(N):
        units = (J,) if depth == 2 and r == N // 2 else (ONE, I)
        for u in units:
            params.append(realified(quat_unit_matrix(N, r, r, u)))
    cols = [(x.T @ rf + rf @ x).ravel() for x in params]
    ker = la.kernel_int(_int_rows(np.array(cols, dtype=object).T))
    fr = la.to_fractions(ker)
    return [sum((fr[i, k] * params[i] for i in range(len(params))), np.zeros_like(params[0])) for k in range(ker.ncols())]


def _centralizer_dim(subset: Sequence[np.ndarray], basis: Sequence[np.ndarray]) -> int:
    cols = []
    for b in basis:
        cols.append(np.concatenate([bracket(h, b).ravel() for h in subset]))
    eq = _int_rows(np.array(cols, dtype=object).T)
    return la.kernel_int(eq).ncols()
