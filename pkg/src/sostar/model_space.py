"""The model space ``V = R^{4n}`` and its standard SO*(2n)Sp(1)-invariant tensors.

Ordered basis ``e_1..e_2n, f_1..f_2n``.  A vector with coordinates
``(u_1..u_2n, v_1..v_2n)`` is read as ``n`` quaternions

    q_c = u_c + u_{c+n} i + v_c j + v_{c+n} k,      c = 1..n,

and the standard triple acts by left multiplication with ``i, j, k``.  This
gives ``J1 e_c = e_{c+n}``, ``J2 e_c = f_c`` and ``J3 e_c = f_{c+n}``.

Matrices act on column vectors.  A bilinear form ``b`` is stored as the
matrix ``B[i, j] = b(e_i, e_j)``, so ``b(X, Y) = X^t B Y``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import tensors as tn
from .scalars_quat import I, J, K, left_mult_matrix
from .tensors import CO, CONTRA, ModelTensor, ein, sc


class DegenerateFormError(ValueError):
    """A form required to be non-degenerate is degenerate."""


class NotScalarError(ValueError):
    """The 2-form is not a scalar 2-form for the given triple."""

    def __init__(self, message: str, condition: int | None = None, witness=None):
        super().__init__(message)
        self.condition = condition
        self.witness = witness


def _det_nonzero(m: np.ndarray) -> bool:
    from .linalg import qmat, rank

    if m.dtype.kind == "f":
        return np.linalg.matrix_rank(m) == m.shape[0]
    return rank(qmat(m)) == m.shape[0]


def mat_inverse(m: np.ndarray) -> np.ndarray:
    """Exact inverse for exact input, numpy inverse for float input."""
    if m.dtype.kind == "f":
        return np.linalg.inv(m)
    from .linalg import qmat, to_fractions

    q = qmat(m)
    if q.rank() != q.nrows():
        raise DegenerateFormError("matrix is singular")
    return to_fractions(q.inv())


# ---------------------------------------------------------------------------
# hypercomplex triples


@dataclass(frozen=True)
class HypercomplexTriple:
    """Three endomorphisms with ``J1^2 = J2^2 = J3^2 = J1 J2 J3 = -Id``."""

    J1: np.ndarray
    J2: np.ndarray
    J3: np.ndarray

    def __post_init__(self):
        mats = [tn.normalize(m) for m in (self.J1, self.J2, self.J3)]
        for name, m in zip(("J1", "J2", "J3"), mats):
            object.__setattr__(self, name, m)
        shape = mats[0].shape
        if len(shape) != 2 or shape[0] != shape[1] or shape[0] % 4:
            raise ValueError("triple must consist of square 4n x 4n matrices")
        tol = 1e-9 * max(1.0, float(np.abs(mats[0]).max())) ** 2 if mats[0].dtype.kind == "f" else 0.0
        if not is_quaternionic(*mats, tol=tol):
            raise ValueError("matrices do not satisfy the quaternionic relations")

    @property
    def n(self) -> int:
        return self.J1.shape[0] // 4

    @property
    def mats(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.J1, self.J2, self.J3)

    def __iter__(self):
        return iter(self.mats)

    def combination(self, mu: Sequence) -> np.ndarray:
        """``mu_1 J1 + mu_2 J2 + mu_3 J3``."""
        return sum(sc(m, a) for m, a in zip(mu, self.mats))


def is_quaternionic(j1, j2, j3, tol: float = 0.0) -> bool:
    d = j1.shape[0]
    minus = -np.eye(d, dtype=np.int64)
    return all(tn.equal(a @ a, minus, tol) for a in (j1, j2, j3)) and tn.equal(
        j1 @ j2 @ j3, minus, tol
    )


def quaternion_coordinates(n: int) -> list[tuple[int, int, int, int]]:
    """Basis indices of the (1, i, j, k) coefficients of the c-th quaternion."""
    return [(c, c + n, 2 * n + c, 3 * n + c) for c in range(n)]


def _left_mult(n: int, q) -> np.ndarray:
    out = np.zeros((4 * n, 4 * n), dtype=np.int64)
    blk = np.array(left_mult_matrix(q), dtype=object).astype(np.int64)
    for idx in quaternion_coordinates(n):
        out[np.ix_(idx, idx)] = blk
    return out


def standard_triple(n: int) -> HypercomplexTriple:
    """The standard admissible basis ``H_0`` (left multiplication by i, j, k)."""
    if n < 1:
        raise ValueError("n must be positive")
    return HypercomplexTriple(_left_mult(n, I), _left_mult(n, J), _left_mult(n, K))


def standard_omega_matrix(n: int) -> np.ndarray:
    d = 2 * n
    s0 = np.zeros((2 * d, 2 * d), dtype=np.int64)
    s0[:d, d:] = np.eye(d, dtype=np.int64)
    s0[d:, :d] = -np.eye(d, dtype=np.int64)
    return s0


def standard_omega(n: int) -> ModelTensor:
    """``omega_0`` with ``omega_0(e_r, f_r) = 1``; its matrix is ``S_0``."""
    return ModelTensor(n, (CO, CO), standard_omega_matrix(n), tn.ANTISYMMETRIC)


def two_form(n: int, matrix) -> ModelTensor:
    return ModelTensor(n, (CO, CO), matrix, tn.ANTISYMMETRIC)


def _omega_matrix(omega) -> np.ndarray:
    return tn.entries_of(omega)


# ---------------------------------------------------------------------------
# metrics and signatures


def metrics_from(omega, triple: HypercomplexTriple) -> tuple[ModelTensor, ModelTensor, ModelTensor]:
    """``g_a(X, Y) = omega(X, J_a Y)`` for a = 1, 2, 3."""
    w = _omega_matrix(omega)
    if not _det_nonzero(w):
        raise DegenerateFormError("omega is degenerate")
    n = triple.n
    out = []
    for ja in triple:
        g = ModelTensor(n, (CO, CO), w @ ja)
        if not tn.check_symmetry(g.entries, tn.SYMMETRIC, _tol(g.entries)):
            raise NotScalarError("omega(., J_a .) is not symmetric", condition=5)
        out.append(g.like(g.entries, tn.SYMMETRIC))
    return tuple(out)


def _tol(a) -> float:
    return 1e-10 if np.asarray(a).dtype.kind == "f" else 0.0


def metric_for_J(omega, triple: HypercomplexTriple, mu: Sequence) -> ModelTensor:
    """``sum_a mu_a g_a``; equals ``omega(., J .)`` for ``J = sum mu_a J_a``."""
    if all(m == 0 for m in mu):
        raise ValueError("mu must be nonzero")
    gs = metrics_from(omega, triple)
    total = sum(sc(m, g.entries) for m, g in zip(mu, gs))
    return ModelTensor(triple.n, (CO, CO), total, tn.SYMMETRIC)


def signature(sym: np.ndarray) -> tuple[int, int]:
    """``(p, q)`` of a symmetric matrix by exact symmetric elimination.

    Congruence ``S -> E S E^t`` diagonalizes ``S``; a zero pivot with a
    nonzero entry further along its row is repaired by adding that row and
    column, which creates a nonzero diagonal entry.
    """
    a = [[Fraction(x) for x in row] for row in tn.as_exact(tn.entries_of(sym))]
    d = len(a)
    pos = neg = 0
    active = list(range(d))
    while active:
        piv = next((i for i in active if a[i][i] != 0), None)
        if piv is None:
            pair = next(((i, j) for i in active for j in active if a[i][j] != 0), None)
            if pair is None:
                break  # remaining block is zero
            i, j = pair
            # row/col i += row/col j gives a[i][i] = 2 a[i][j]
            for k in range(d):
                a[i][k] += a[j][k]
            for k in range(d):
                a[k][i] += a[k][j]
            piv = i
        p = a[piv][piv]
        if p > 0:
            pos += 1
        else:
            neg += 1
        active.remove(piv)
        for r in active:
            f = a[r][piv] / p
            if f:
                for c in range(d):
                    a[r][c] -= f * a[piv][c]
        for r in active:
            a[r][piv] = a[piv][r] = Fraction(0)
    return pos, neg


def signature_float(sym: np.ndarray, tol: float = 1e-10) -> tuple[int, int]:
    ev = np.linalg.eigvalsh(np.asarray(sym, dtype=float))
    return int(np.sum(ev > tol)), int(np.sum(ev < -tol))


# ---------------------------------------------------------------------------
# scalar 2-forms


@dataclass(frozen=True)
class ScalarCheck:
    ok: bool
    condition: int | None = None
    reason: str = ""
    witness: tuple | None = None

    def __bool__(self):
        return self.ok


def is_scalar_2form(omega, triple: HypercomplexTriple, tol: float | None = None) -> ScalarCheck:
    """Test ``omega(J_a X, J_a Y) = omega(X, Y)`` for a = 1, 2, 3, plus non-degeneracy.

    On failure ``condition`` is 5 (invariance under the unit sphere of
    the quaternionic structure, checked on the admissible basis) and ``witness``
    is ``(a, i, j)`` with ``omega(J_a e_i, J_a e_j) != omega(e_i, e_j)``.
    """
    w = _omega_matrix(omega)
    tol = _tol(w) if tol is None else tol
    if not tn.check_symmetry(w, tn.ANTISYMMETRIC, tol):
        return ScalarCheck(False, None, "not antisymmetric")
    if not _det_nonzero(w):
        return ScalarCheck(False, None, "degenerate")
    for a, ja in enumerate(triple, start=1):
        diff = ja.T @ w @ ja - w
        bad = _first_nonzero(diff, tol)
        if bad is not None:
            return ScalarCheck(False, 5, f"omega(J{a} ., J{a} .) != omega", (a,) + bad)
    return ScalarCheck(True)


def _first_nonzero(m: np.ndarray, tol: float):
    for idx, x in np.ndenumerate(m):
        if (abs(x) > tol) if m.dtype.kind == "f" else x != 0:
            return tuple(int(i) for i in idx)
    return None


def hermitian_conditions(omega, triple: HypercomplexTriple) -> dict[int, bool]:
    """Conditions (5)-(8) of the scalar-form characterization, evaluated.

    (5) and (6) are checked on the six sample unit elements used elsewhere,
    which determine a quadratic condition on the sphere.
    """
    w = _omega_matrix(omega)
    tol = _tol(w)
    samples = [triple.combination(mu) for mu in UNIT_SAMPLES]
    inv = lambda j: tn.equal(j.T @ w @ j, w, tol)
    skew = lambda j: tn.equal(j.T @ w + w @ j, np.zeros_like(w), tol)
    return {
        5: all(inv(j) for j in samples),
        6: all(skew(j) for j in samples),
        7: all(inv(j) for j in triple),
        8: all(skew(j) for j in triple),
    }


# Unit vectors whose outer products span all symmetric 3x3 matrices; a
# quadratic identity in mu that holds on them holds on the whole sphere.
UNIT_SAMPLES = (
    (1, 0, 0),
    (0, 1, 0),
    (0, 0, 1),
    (Fraction(3, 5), Fraction(4, 5), 0),
    (0, Fraction(3, 5), Fraction(4, 5)),
    (Fraction(4, 5), 0, Fraction(3, 5)),
)


# ---------------------------------------------------------------------------
# the skew-Hermitian form and the fundamental 4-tensor


@dataclass(frozen=True)
class SkewHermitianForm:
    omega: ModelTensor
    g1: ModelTensor
    g2: ModelTensor
    g3: ModelTensor
    triple: HypercomplexTriple

    @property
    def n(self) -> int:
        return self.triple.n

    @property
    def metrics(self):
        return (self.g1, self.g2, self.g3)

    def __call__(self, x, y):
        """``h(x, y)`` as ``(real part, (J1, J2, J3) coefficients)``."""
        x = np.asarray(x)
        y = np.asarray(y)
        real = x @ self.omega.entries @ y
        return real, tuple(x @ g.entries @ y for g in self.metrics)

    def as_tensor(self) -> ModelTensor:
        """``h`` as an End(V)-valued bilinear form, ``H[x, y, k, l]``.

        ``h(X, Y) = omega(X, Y) Id + sum_a g_a(X, Y) J_a`` with the matrix index
        pair ``(k, l)`` of the endomorphism as (contra, co) slots.
        """
        d = 4 * self.n
        ident = np.eye(d, dtype=np.int64)
        total = ein("xy,kl->xykl", self.omega.entries, ident)
        for g, ja in zip(self.metrics, self.triple):
            total = total + ein("xy,kl->xykl", g.entries, ja)
        return ModelTensor(self.n, (CO, CO, CONTRA, CO), total)


def skew_hermitian_form(omega, triple: HypercomplexTriple) -> SkewHermitianForm:
    check = is_scalar_2form(omega, triple)
    if not check:
        raise NotScalarError(f"omega is not a scalar 2-form: {check.reason}", check.condition, check.witness)
    if not isinstance(omega, ModelTensor):
        omega = two_form(triple.n, omega)
    g1, g2, g3 = metrics_from(omega, triple)
    return SkewHermitianForm(omega, g1, g2, g3, triple)


def fundamental_4tensor(omega, triple: HypercomplexTriple) -> ModelTensor:
    """``Phi = g1 . g1 + g2 . g2 + g3 . g3`` (symmetric products).

    Evaluated through ``Phi(X,Y,Z,W) = 1/3 sum_a (g_a(X,Y) g_a(Z,W) +
    g_a(X,Z) g_a(Y,W) + g_a(X,W) g_a(Y,Z))``.
    """
    check = is_scalar_2form(omega, triple)
    if not check:
        raise NotScalarError(f"omega is not a scalar 2-form: {check.reason}", check.condition, check.witness)
    total = None
    for g in metrics_from(omega, triple):
        ge = g.entries
        part = ein("xy,zw->xyzw", ge, ge) + ein("xz,yw->xyzw", ge, ge) + ein("xw,yz->xyzw", ge, ge)
        total = part if total is None else total + part
    return ModelTensor(triple.n, (CO,) * 4, sc(Fraction(1, 3), total))


# ---------------------------------------------------------------------------
# symplectic transpose, lowering and raising


def symplectic_transpose(a, omega) -> np.ndarray:
    """``A^T`` defined by ``omega(A^T x, y) = -omega(x, A y)``.

    In matrices ``A^T = -W^{-1} A^t W`` with ``W`` the matrix of ``omega``;
    for ``W = S_0`` this is ``S_0 A^t S_0``.
    """
    w = _omega_matrix(omega)
    winv = mat_inverse(w)
    a = tn.entries_of(a)
    return -(winv @ a.T @ w)


def lower(phi, omega):
    """``l(phi)(X, Y, Z) = omega(phi(X, Y), Z)``; works on batches (leading axes)."""
    w = _omega_matrix(omega)
    arr = tn.entries_of(phi)
    out = ein("...xyk,kz->...xyz", arr, w)
    if isinstance(phi, ModelTensor):
        return ModelTensor(phi.n, (CO, CO, CO), out)
    return out


def raise_(theta, omega):
    """Inverse of :func:`lower`: the vector W with ``omega(W, Z) = theta(X, Y, Z)``."""
    w = _omega_matrix(omega)
    winv = mat_inverse(w)
    arr = tn.entries_of(theta)
    out = ein("...xyz,zk->...xyk", arr, winv)
    if isinstance(theta, ModelTensor):
        return ModelTensor(theta.n, (CO, CO, CONTRA), out)
    return out


def random_rational(rng: np.random.Generator, shape, lo: int = -5, hi: int = 5, den: int = 4) -> np.ndarray:
    """Random rationals ``a / b`` with ``a`` in ``[lo, hi]`` and ``b`` in ``[1, den]``."""
    nums = rng.integers(lo, hi + 1, size=shape)
    dens = rng.integers(1, den + 1, size=shape)
    out = np.empty(shape, dtype=object)
    for idx in np.ndindex(*shape):
        out[idx] = Fraction(int(nums[idx]), int(dens[idx]))
    return out


def basis_vector(n: int, index: int) -> np.ndarray:
    v = np.zeros(4 * n, dtype=np.int64)
    v[index] = 1
    return v


def e(n: int, r: int) -> np.ndarray:
    """``e_r`` (1-based)."""
    return basis_vector(n, r - 1)


def f(n: int, r: int) -> np.ndarray:
    """``f_r`` (1-based)."""
    return basis_vector(n, 2 * n + r - 1)
