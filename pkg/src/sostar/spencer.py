"""Spencer differential, first prolongation and the representation dimensions.

Torsion tensors ``T[x, y, k]`` (k-th component of ``T(e_x, e_y)``) are
antisymmetric in ``x, y``; the coordinate vector of ``T`` lists ``T[i, j, k]``
for ``i < j`` (row-major) and every ``k``.  Linear maps between tensor spaces
are assembled by applying the formula code to a whole batch of basis tensors
at once, see :func:`operator_matrix`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, lcm
from typing import Callable, Sequence

import numpy as np
from flint import fmpq_mat

from . import linalg as la
from .lie_algebras import SubalgebraBasis, build_subalgebra
from .tensors import ModelTensor, RatArray, torsion


# ---------------------------------------------------------------------------
# coordinates on the torsion space


@lru_cache(maxsize=None)
def pairs(d: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(d, 1)


def torsion_dim(n: int) -> int:
    """``dim Lambda^2 V* (x) V = 8 n^2 (4n - 1)``."""
    d = 4 * n
    return d * (d - 1) // 2 * d


def to_vec(t) -> np.ndarray:
    """Coordinates of a torsion tensor (or a batch along leading axes)."""
    arr = t.entries if isinstance(t, ModelTensor) else t
    if isinstance(arr, RatArray):
        return RatArray(to_vec(arr.num), arr.den)
    arr = np.asarray(arr)
    d = arr.shape[-1]
    iu, ju = pairs(d)
    return arr[..., iu, ju, :].reshape(arr.shape[:-3] + (-1,))


def from_vec(v, n: int) -> np.ndarray:
    """Inverse of :func:`to_vec`; a batch of vectors gives a batch of tensors."""
    v = np.asarray(v)
    d = 4 * n
    iu, ju = pairs(d)
    lead = v.shape[:-1]
    blocks = v.reshape(lead + (len(iu), d))
    out = np.zeros(lead + (d, d, d), dtype=v.dtype)
    if v.dtype == object:
        out[...] = Fraction(0)
    out[..., iu, ju, :] = blocks
    out[..., ju, iu, :] = -blocks
    return out


def vec_to_tensor(v, n: int) -> ModelTensor:
    return torsion(n, from_vec(np.asarray(v, dtype=object), n))


@lru_cache(maxsize=None)
def basis_batch(n: int) -> np.ndarray:
    """All basis tensors ``E_ijk - E_jik`` (``i < j``) as one int64 batch."""
    eye = np.eye(torsion_dim(n), dtype=np.int64)
    return from_vec(eye, n)


def fmpq_columns(vecs: np.ndarray) -> fmpq_mat:
    """Exact matrix whose columns are the rows of an exact numpy batch."""
    if isinstance(vecs, RatArray):
        return la.from_int_array(np.ascontiguousarray(vecs.num.T).astype(np.int64), vecs.den) \
            if vecs.num.dtype != object else la.qmat(vecs.to_fractions().T)
    vecs = np.asarray(vecs)
    if vecs.dtype.kind in "iu":
        return la.from_int_array(np.ascontiguousarray(vecs.T))
    return la.qmat(vecs.T)


@dataclass
class IntOperator:
    """A rational matrix stored as ``num / den`` with ``num`` an int64 array."""

    num: np.ndarray
    den: int = 1

    @property
    def shape(self):
        return self.num.shape

    def to_fmpq(self) -> fmpq_mat:
        return la.from_int_array(self.num, self.den)

    def rank(self) -> int:
        return la.rank(self.to_fmpq())

    def image(self) -> la.Subspace:
        return la.Subspace.span_cols(self.to_fmpq())

    def kernel(self) -> la.Subspace:
        return la.Subspace.span_cols(la.kernel_int(self.num))

    def shift(self, c) -> "IntOperator":
        """``self + c Id``."""
        c = Fraction(c)
        den = lcm(self.den, c.denominator)
        num = self.num * (den // self.den)
        num = num + np.eye(num.shape[0], dtype=np.int64) * (c.numerator * (den // c.denominator))
        return IntOperator(num, den)

    def __matmul__(self, other: "IntOperator") -> "IntOperator":
        a = self.num.astype(object) if _big(self.num, other.num) else self.num
        b = other.num.astype(object) if a.dtype == object else other.num
        return IntOperator(_reduce_int(a @ b), self.den * other.den).normalized()

    def normalized(self) -> "IntOperator":
        from math import gcd

        g = self.den
        for x in np.unique(np.abs(self.num)):
            g = gcd(g, int(x))
            if g == 1:
                break
        if g > 1:
            return IntOperator(_reduce_int(self.num // g), self.den // g)
        return self

    def is_zero(self) -> bool:
        return not np.any(self.num)


def _big(a: np.ndarray, b: np.ndarray) -> bool:
    ma = int(np.abs(a).max()) if a.size else 0
    mb = int(np.abs(b).max()) if b.size else 0
    return ma * mb * max(a.shape[-1], 1) >= 1 << 62


def _reduce_int(a: np.ndarray) -> np.ndarray:
    if a.dtype == object and (a.size == 0 or int(np.abs(a).max()) < 1 << 62):
        return a.astype(np.int64)
    return a


def operator_matrix(func: Callable, n: int, domain: np.ndarray | None = None, vec: Callable = to_vec) -> IntOperator:
    """Matrix of a linear map given by formula code.

    ``func`` receives a batch of exact tensors (``RatArray`` with a leading
    batch axis) and returns the batch of images; ``vec`` turns images into
    coordinate rows.  ``domain`` defaults to the torsion basis.
    """
    batch = basis_batch(n) if domain is None else domain
    out = func(RatArray(batch))
    if not isinstance(out, RatArray):
        out = RatArray.from_fractions(out) if np.asarray(out).dtype == object else RatArray(np.asarray(out))
    rows = vec(out)
    num = np.ascontiguousarray(rows.num.T)
    if num.dtype == object:
        num = _reduce_int(num)
        if num.dtype == object:
            raise OverflowError("operator entries exceed int64")
    return IntOperator(num, rows.den).normalized()


# ---------------------------------------------------------------------------
# the Spencer differential


def spencer_delta(alpha, algebra: SubalgebraBasis | None = None, check: bool = True):
    """``delta(alpha)(x, y) = alpha(x) y - alpha(y) x``.

    ``alpha`` is the list of the ``4n`` matrices ``alpha(e_i)`` (or an array of
    shape ``(..., 4n, 4n, 4n)`` holding them).  With ``algebra`` given each
    ``alpha(e_i)`` must lie in it.
    """
    arr = alpha if isinstance(alpha, RatArray) else np.asarray(
        [np.asarray(m) for m in alpha] if isinstance(alpha, (list, tuple)) else alpha
    )
    if check and algebra is not None:
        mats = arr.to_fractions() if isinstance(arr, RatArray) else arr
        flat_mats = np.asarray(mats).reshape((-1,) + mats.shape[-2:])
        if not algebra.contains(list(flat_mats)):
            raise ValueError(f"alpha(e_i) does not lie in {algebra.name}")
    # A[x, y, k] = alpha(e_x)[k, y]
    a = arr.swapaxes(-1, -2)
    out = a - a.swapaxes(-3, -2)
    if isinstance(out, RatArray) or out.ndim > 3:
        return out
    n = out.shape[0] // 4
    return torsion(n, out)


def domain_batch(algebra: SubalgebraBasis) -> np.ndarray:
    """Integral basis of ``V* (x) g``: ``e_x^* (x) g_m`` as ``alpha`` arrays."""
    gens = algebra.integral_generators()
    d = algebra.d
    out = np.zeros((d * len(gens), d, d, d), dtype=np.int64)
    for x in range(d):
        for m, g in enumerate(gens):
            out[x * len(gens) + m, x] = g
    return out


def delta_matrix(algebra: SubalgebraBasis) -> IntOperator:
    """Columns: coordinates of ``delta(e_x^* (x) g_m)``."""
    n = algebra.n
    return operator_matrix(lambda b: spencer_delta(b, check=False), n, domain_batch(algebra))


@lru_cache(maxsize=None)
def image_of_delta(name: str, n: int) -> la.Subspace:
    return delta_matrix(build_subalgebra(name, n)).image()


@dataclass(frozen=True)
class SpencerReport:
    n: int
    algebra: str
    domain_dim: int
    image_dim: int
    kernel_dim: int
    cohomology_dim: int
    expected_cohomology_dim: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def consistent(self) -> bool:
        ok = self.domain_dim == self.image_dim + self.kernel_dim
        ok = ok and self.cohomology_dim == torsion_dim(self.n) - self.image_dim
        if self.expected_cohomology_dim is not None:
            ok = ok and self.cohomology_dim == self.expected_cohomology_dim
        return ok


def prolongation_dim(algebra: SubalgebraBasis) -> SpencerReport:
    mat = delta_matrix(algebra)
    r = mat.rank()
    dom = mat.shape[1]
    total = torsion_dim(algebra.n)
    return SpencerReport(algebra.n, algebra.name, dom, r, dom - r, total - r, expected_cohomology(algebra.name, algebra.n))


def cohomology_dims(algebra: SubalgebraBasis) -> SpencerReport:
    return prolongation_dim(algebra)


# ---------------------------------------------------------------------------
# representation dimensions

MODULES = ("E", "Lambda2E", "S2E", "S2_0E", "K", "Lambda3E", "S3_0E")
TABLE_MODULES = ("E", "Lambda2E", "S2_0E", "K", "Lambda3E", "S3_0E")
REAL_TYPE = frozenset({"Lambda2E", "S2E", "S2_0E"})
PARTNERS = ("Hh", "S3Hh", "none")


def rep_dim(module: str, n: int) -> int:
    """Complex dimension of an SO*(2n)-module from its closed form."""
    if n < 1:
        raise ValueError("n must be positive")
    forms = {
        "E": Fraction(2 * n),
        "Lambda2E": Fraction(n * (2 * n - 1)),
        "S2E": Fraction(n * (2 * n + 1)),
        "S2_0E": Fraction(2 * n * n + n - 1),
        "K": Fraction(8, 3) * (n ** 3 - n),
        "Lambda3E": Fraction(2 * n, 3) * (2 * n - 1) * (n - 1),
        "S3_0E": Fraction(2 * n, 3) * (2 * n - 1) * (n + 2),
    }
    if module not in forms:
        raise ValueError(f"unknown module {module!r}")
    value = forms[module]
    assert value.denominator == 1
    return int(value)


def real_form_dim(module: str, partner: str, n: int) -> int:
    """Real dimension of ``[W Hh]``, ``[W S^3 Hh]`` or, for real-type ``W``, ``[W]``."""
    dim = rep_dim(module, n)
    if partner == "Hh":
        return 2 * dim
    if partner == "S3Hh":
        return 4 * dim
    if partner == "none":
        if module not in REAL_TYPE:
            raise ValueError(f"{module} is of quaternionic type and has no real form on its own")
        return dim
    raise ValueError(f"unknown partner {partner!r}")


def quaternionic_module_dim(module: str, n: int) -> int:
    """Real dimension of ``[W]`` for a quaternionic-type ``W`` seen as an SO*(2n)-module."""
    return 2 * rep_dim(module, n)


# Each decomposition is a list of (multiplicity, module, partner).
TORSION_DECOMPOSITION = [
    (1, "Lambda3E", "S3Hh"), (1, "K", "S3Hh"), (1, "E", "S3Hh"),
    (1, "Lambda3E", "Hh"), (2, "K", "Hh"), (3, "E", "Hh"), (1, "S3_0E", "Hh"),
]
LAMBDA3_DECOMPOSITION = [(1, "Lambda3E", "S3Hh"), (1, "K", "Hh"), (1, "E", "Hh")]
DELTA_SO_STAR = [(1, "Lambda3E", "Hh"), (1, "K", "Hh"), (1, "E", "Hh")]
DELTA_SP1 = [(1, "E", "S3Hh"), (1, "E", "Hh")]
H_SO_STAR_SP1 = [(1, "K", "S3Hh"), (1, "Lambda3E", "S3Hh"), (1, "K", "Hh"), (1, "E", "Hh"), (1, "S3_0E", "Hh")]
# intrinsic torsion of SO*(2n)-structures as SO*(2n)-modules
H_SO_STAR = [(2, "Lambda3E"), (3, "K"), (4, "E"), (1, "S3_0E")]
LAMBDA2_DECOMPOSITION = [(3, "Lambda2E", "none"), (1, "S2_0E", "none"), (1, None, "trivial")]


def decomposition_dim(parts: Sequence, n: int) -> int:
    total = 0
    for part in parts:
        if len(part) == 2:
            mult, module = part
            total += mult * quaternionic_module_dim(module, n)
            continue
        mult, module, partner = part
        total += mult * (1 if partner == "trivial" else real_form_dim(module, partner, n))
    return total


def expected_cohomology(name: str, n: int) -> int | None:
    if name == "so_star":
        return decomposition_dim(H_SO_STAR, n)
    if name == "so_star_sp1":
        return decomposition_dim(H_SO_STAR_SP1, n)
    return None


# values printed in the low-dimensional table, keyed by n
TABLE_VALUES = {
    2: {"E": 4, "Lambda2E": 6, "S2_0E": 9, "K": 16, "Lambda3E": 4, "S3_0E": 16},
    3: {"E": 6, "Lambda2E": 15, "S2_0E": 20, "K": 64, "Lambda3E": 20, "S3_0E": 50},
    4: {"E": 8, "Lambda2E": 28, "S2_0E": 35, "K": 160, "Lambda3E": 56, "S3_0E": 112},
}


def dims_report(n: int) -> dict:
    """Module dimensions and the decomposition sums for ``dims --n N``."""
    table = {m: rep_dim(m, n) for m in TABLE_MODULES}
    d = 4 * n
    sums = {
        "torsion": {"expected": torsion_dim(n), "sum": decomposition_dim(TORSION_DECOMPOSITION, n)},
        "lambda3": {"expected": comb(d, 3), "sum": decomposition_dim(LAMBDA3_DECOMPOSITION, n)},
        "lambda2": {"expected": comb(d, 2), "sum": decomposition_dim(LAMBDA2_DECOMPOSITION, n)},
        "delta_so_star": {"expected": d * rep_dim("Lambda2E", n), "sum": decomposition_dim(DELTA_SO_STAR, n)},
        "delta_sp1": {"expected": 3 * d, "sum": decomposition_dim(DELTA_SP1, n)},
        "cohomology_so_star": {
            "expected": torsion_dim(n) - d * rep_dim("Lambda2E", n),
            "sum": decomposition_dim(H_SO_STAR, n),
        },
        "cohomology_so_star_sp1": {
            "expected": torsion_dim(n) - d * (rep_dim("Lambda2E", n) + 3),
            "sum": decomposition_dim(H_SO_STAR_SP1, n),
        },
    }
    return {
        "n": n,
        "complex_dims": table,
        "real_dims": {
            "[K S3Hh]": real_form_dim("K", "S3Hh", n),
            "[Lambda3E S3Hh]": real_form_dim("Lambda3E", "S3Hh", n),
            "[E S3Hh]": real_form_dim("E", "S3Hh", n),
            "[K Hh]": real_form_dim("K", "Hh", n),
            "[E Hh]": real_form_dim("E", "Hh", n),
            "[Lambda3E Hh]": real_form_dim("Lambda3E", "Hh", n),
            "[S3_0E Hh]": real_form_dim("S3_0E", "Hh", n),
            "[S2E]": real_form_dim("S2E", "none", n),
        },
        "sums": sums,
        "consistent": all(v["expected"] == v["sum"] for v in sums.values()),
    }
