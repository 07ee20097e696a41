"""Exact rational linear algebra on top of FLINT matrices.

Every rank, kernel and solve in the package goes through this module.  The
heavy lifting (fraction-free elimination) is done by ``python-flint``; the
wrappers here fix the conventions: vectors are columns, subspaces are kept as
the nonzero rows of their reduced row echelon form, which makes bases
canonical and comparisons deterministic.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, isqrt
from typing import Iterable, Sequence

import numpy as np

from flint import fmpq, fmpq_mat, fmpz, fmpz_mat, nmod_mat


class InconsistentSystemError(ArithmeticError):
    """A linear system that was required to be solvable is not."""


def _as_fmpq(x) -> fmpq:
    if isinstance(x, fmpq):
        return x
    if isinstance(x, Fraction):
        return fmpq(x.numerator, x.denominator)
    if isinstance(x, (int, np.integer)):
        return fmpq(int(x))
    raise TypeError(f"not an exact scalar: {x!r}")


def qmat(data, ncols: int | None = None) -> fmpq_mat:
    """Build an ``fmpq_mat`` from nested sequences or a 2-d numpy array."""
    if isinstance(data, fmpq_mat):
        return data
    arr = np.asarray(data, dtype=object)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if ncols is None else arr.reshape(-1, ncols)
    r, c = arr.shape
    if arr.size == 0:
        return fmpq_mat(r, c)
    if all(isinstance(x, (int, np.integer)) for x in arr.flat):
        return fmpq_mat(fmpz_mat(r, c, [int(x) for x in arr.flat]))
    return fmpq_mat(r, c, [_as_fmpq(x) for x in arr.flat])


def from_int_array(arr: np.ndarray, den: int = 1) -> fmpq_mat:
    """Exact matrix ``arr / den`` from an integer numpy array."""
    arr = np.asarray(arr)
    if arr.dtype.kind not in "iu":
        raise TypeError("integer array expected")
    r, c = arr.shape
    m = fmpq_mat(fmpz_mat(r, c, arr.ravel().tolist()))
    return m if den == 1 else m * fmpq(1, den)


def to_fractions(m: fmpq_mat) -> np.ndarray:
    """Object array of ``Fraction`` with the entries of ``m``."""
    rows = [[Fraction(int(x.p), int(x.q)) for x in row] for row in m.tolist()]
    out = np.empty((m.nrows(), m.ncols()), dtype=object)
    for i, row in enumerate(rows):
        out[i, :] = row
    return out


def integerize(arr: np.ndarray) -> tuple[np.ndarray, int]:
    """Write an exact array as ``ints / den`` with ``den`` minimal."""
    arr = np.asarray(arr)
    if arr.dtype.kind in "iu":
        return arr.astype(np.int64), 1
    den = 1
    for x in arr.flat:
        if isinstance(x, Fraction):
            den = np.lcm(den, x.denominator)
        elif not isinstance(x, (int, np.integer)):
            raise TypeError(f"not an exact scalar: {x!r}")
    den = int(den)
    ints = np.empty(arr.shape, dtype=object)
    for idx, x in np.ndenumerate(arr):
        v = Fraction(x) * den
        ints[idx] = v.numerator
    out = ints.astype(np.int64)
    if not np.array_equal(out.astype(object), ints):
        raise OverflowError("entries exceed int64 after clearing denominators")
    return out, den


def hstack(blocks: Sequence[fmpq_mat]) -> fmpq_mat:
    blocks = [b for b in blocks if b.ncols()] or list(blocks)[:1]
    nrows = blocks[0].nrows()
    if any(b.nrows() != nrows for b in blocks):
        raise ValueError("row counts differ")
    return vstack([b.transpose() for b in blocks]).transpose()


def vstack(blocks: Sequence[fmpq_mat]) -> fmpq_mat:
    blocks = [b for b in blocks]
    ncols = blocks[0].ncols()
    if any(b.ncols() != ncols for b in blocks):
        raise ValueError("column counts differ")
    entries = []
    nrows = 0
    for b in blocks:
        nrows += b.nrows()
        entries.extend(x for row in b.tolist() for x in row)
    return fmpq_mat(nrows, ncols, entries)


def select_rows(m: fmpq_mat, rows: Iterable[int]) -> fmpq_mat:
    rows = list(rows)
    data = m.tolist()
    return fmpq_mat(len(rows), m.ncols(), [x for i in rows for x in data[i]])


def select_cols(m: fmpq_mat, cols: Iterable[int]) -> fmpq_mat:
    return select_rows(m.transpose(), cols).transpose()


def is_zero(m: fmpq_mat) -> bool:
    return all(x == 0 for x in m.entries())


def _find_primes(count: int) -> list[int]:
    out = []
    candidate = fmpz(2) ** 62
    while len(out) < count:
        candidate -= 1
        if candidate.is_prime():
            out.append(int(candidate))
    return out


_PRIMES = _find_primes(8)


def _rational_reconstruct(a: int, m: int) -> Fraction | None:
    """Smallest-height rational congruent to ``a`` modulo ``m``, if any."""
    bound = isqrt(m // 2)
    r0, r1 = m, a % m
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > bound or gcd(r1, abs(s1)) != 1:
        return None
    return Fraction(r1, s1)


def _pivots_of(rows: list[list[int]]) -> list[int]:
    pivots = []
    for row in rows:
        for j, x in enumerate(row):
            if x:
                pivots.append(j)
                break
    return pivots


def _numerators(m: fmpq_mat) -> np.ndarray:
    z, _ = m.numer_denom()
    arr = np.array([int(x) for x in z.entries()], dtype=object).reshape(z.nrows(), z.ncols())
    return _maybe_int64(arr)


def _maybe_int64(arr: np.ndarray) -> np.ndarray:
    if arr.dtype == object and (arr.size == 0 or max(abs(int(arr.max())), abs(int(arr.min()))) < 1 << 62):
        return arr.astype(np.int64)
    return arr


def _residues(z: np.ndarray, p: int) -> list[int]:
    if z.dtype == object:
        return [int(x) % p for x in z.ravel()]
    # int64 % p for p < 2^62 stays exact
    return (z % np.int64(p)).ravel().tolist()


def _certify(z: np.ndarray, pivots: list[int], cand: list[Fraction | int], rk: int) -> bool:
    """Exact check of ``z == z[:, pivots] @ R`` for the candidate rref ``R``."""
    ncols = z.shape[1]
    den = 1
    for q in cand:
        if isinstance(q, Fraction):
            den = den * q.denominator // gcd(den, q.denominator)
    rnum = np.array([int(q * den) for q in cand], dtype=object).reshape(rk, ncols)
    zp = z[:, pivots]
    bound = (
        max(1, int(np.abs(zp).max()) if zp.size else 1)
        * max(1, int(np.abs(rnum).max()))
        * max(rk, 1)
    )
    if z.dtype != object and bound < 1 << 62 and den * max(1, int(np.abs(z).max())) < 1 << 62:
        return np.array_equal(zp @ rnum.astype(np.int64), z * np.int64(den))
    zf = fmpz_mat(zp.shape[0], rk, [int(x) for x in zp.ravel()])
    rf = fmpz_mat(rk, ncols, [int(x) for x in rnum.ravel()])
    zz = fmpz_mat(z.shape[0], ncols, [int(x) * den for x in z.ravel()])
    return zf * rf == zz


def rref_int(z: np.ndarray) -> tuple[list[Fraction], list[int]] | None:
    """Certified rref of an integer matrix through word-size primes.

    For each prime the modular rref is lifted by CRT and rational
    reconstruction.  A candidate ``R`` is accepted only if ``z == z[:, P] R``
    holds exactly (``P`` = pivot columns).  That identity puts row(z) inside
    row(R); the modular rank bounds the rational rank from below, so the two
    row spaces coincide and ``R`` is the rref.  Returns the flattened nonzero
    rows and the pivots, or ``None`` when the primes run out.
    """
    nrows, ncols = z.shape
    if not np.any(z):
        return [], []
    best: tuple[int, list[int]] | None = None
    residues: list[int] = []
    modulus = 1
    for p in _PRIMES:
        red, rk = nmod_mat(nrows, ncols, _residues(z, p), p).rref()
        vals = [int(x) for x in red.entries()][: rk * ncols]
        pivots = _pivots_of([vals[i * ncols:(i + 1) * ncols] for i in range(rk)])
        # unlucky primes drop rank or push pivots to the right
        key = (-rk, pivots)
        if best is not None and key > best:
            continue
        if best is None or key < best:
            best, residues, modulus = key, vals, p
        else:
            inv = pow(modulus, -1, p)
            residues = [r + modulus * (((v - r) * inv) % p) for r, v in zip(residues, vals)]
            modulus *= p
        small = isqrt(modulus) >> 8
        lifted: list[Fraction | int] = []
        for r in residues:
            if r <= small:
                lifted.append(r)
            elif modulus - r <= small:
                lifted.append(r - modulus)
            else:
                q = _rational_reconstruct(r, modulus)
                if q is None:
                    break
                lifted.append(q)
        else:
            if _certify(z, best[1], lifted, -best[0]):
                return lifted, best[1]
    return None


def _compressed_kernel(z: np.ndarray, tries: int = 3) -> fmpq_mat | None:
    """Kernel of a tall integer matrix through a random row compression.

    ``ker(z)`` is contained in ``ker(R z)`` for any ``R``; when every kernel
    vector of ``R z`` is checked to satisfy ``z k = 0`` exactly, the two
    kernels are equal.  A failed check just means an unlucky ``R``.
    """
    rng = np.random.default_rng(0x5eed)
    nrows, ncols = z.shape
    zmax = int(np.abs(z).max())
    for _ in range(tries):
        r = rng.integers(-8, 9, size=(ncols + 8, nrows))
        if zmax * 8 * nrows >= 1 << 52:
            return None
        # every partial sum stays below 2^53, so the BLAS product is exact
        rz = np.rint(r.astype(np.float64) @ z.astype(np.float64)).astype(np.int64)
        found = rref_int(rz)
        if found is None:
            return None
        vals, pivots = found
        red = fmpq_mat(len(pivots), ncols, [_as_fmpq(x) for x in vals])
        ker = _kernel_from_rref(red, pivots, ncols)
        if ker.ncols() == 0:
            return ker
        kz, _ = ker.numer_denom()
        kint = np.array([int(x) for x in kz.entries()], dtype=object).reshape(ncols, ker.ncols())
        kint = _maybe_int64(kint)
        if kint.dtype != object and zmax * int(np.abs(kint).max()) * ncols < 1 << 62:
            ok = not np.any(z @ kint)
        else:
            ok = not np.any(z.astype(object) @ kint.astype(object))
        if ok:
            return ker
    return None


def rref(m: fmpq_mat) -> tuple[fmpq_mat, list[int]]:
    """Reduced row echelon form (nonzero rows only) and the pivot columns."""
    if m.nrows() == 0 or m.ncols() == 0:
        return fmpq_mat(0, m.ncols()), []
    found = rref_int(_numerators(m))
    if found is not None:
        vals, pivots = found
        return fmpq_mat(len(pivots), m.ncols(), [_as_fmpq(x) for x in vals]), pivots
    r, rk = m.rref()
    data = r.tolist()[:rk]
    pivots = _pivots_of(data)
    return fmpq_mat(rk, m.ncols(), [x for row in data for x in row]), pivots


def kernel_int(z: np.ndarray) -> fmpq_mat:
    """Kernel basis (columns) of an integer numpy matrix.

    Duplicate rows are dropped first; equation systems produced by
    symmetric tensors repeat each row many times.
    """
    z = np.asarray(z)
    if z.dtype.kind in "iu":
        z = z.astype(np.int64)
        z = z[np.any(z != 0, axis=1)]
        if z.shape[0]:
            z = np.unique(z, axis=0)
    ncols = z.shape[1]
    if z.shape[0] == 0:
        return identity(ncols)
    if z.shape[0] > 2 * ncols + 16 and z.dtype != object:
        ker = _compressed_kernel(z)
        if ker is not None:
            return ker
    found = rref_int(z)
    if found is None:
        m = fmpq_mat(fmpz_mat(z.shape[0], ncols, [int(x) for x in z.ravel()]))
        return kernel(m)
    vals, pivots = found
    r = fmpq_mat(len(pivots), ncols, [_as_fmpq(x) for x in vals])
    return _kernel_from_rref(r, pivots, ncols)


def rank(m: fmpq_mat) -> int:
    """Exact rank, certified through :func:`rref`."""
    return len(rref(m)[1])


def kernel(m: fmpq_mat) -> fmpq_mat:
    """Columns spanning ``{x : m x = 0}``, one per free column of the rref."""
    r, pivots = rref(m)
    return _kernel_from_rref(r, pivots, m.ncols())


def _kernel_from_rref(r: fmpq_mat, pivots: list[int], ncols: int) -> fmpq_mat:
    pset = set(pivots)
    free = [j for j in range(ncols) if j not in pset]
    data = r.tolist()
    out = [[fmpq(0)] * len(free) for _ in range(ncols)]
    for k, f in enumerate(free):
        out[f][k] = fmpq(1)
        for i, p in enumerate(pivots):
            out[p][k] = -data[i][f]
    return fmpq_mat(ncols, len(free), [x for row in out for x in row])


class Subspace:
    """A linear subspace of Q^d stored through its canonical rref row basis."""

    __slots__ = ("ambient", "rows", "pivots", "_int_form")

    def __init__(self, rows: fmpq_mat, pivots: list[int], ambient: int):
        self.ambient = ambient
        self.rows = rows
        self.pivots = pivots
        self._int_form = None

    def _integer_rows(self) -> tuple[int, np.ndarray]:
        """``(D, D * rows)`` with integer entries."""
        if self._int_form is None:
            z, den = self.rows.numer_denom()
            arr = np.array([int(x) for x in z.entries()], dtype=object).reshape(self.dim, self.ambient)
            # numer_denom scales the whole matrix by a common denominator
            self._int_form = (int(den), _maybe_int64(arr))
        return self._int_form

    def contains_int(self, vectors: np.ndarray) -> bool:
        """Membership test for the rows of an integer (or Fraction) numpy array."""
        vectors = np.asarray(vectors)
        if vectors.size == 0:
            return True
        if self.dim == 0:
            return not np.any(vectors != 0)
        den, r = self._integer_rows()
        # v lies in the span iff v = v[pivots] @ rows
        lhs = vectors * den
        coeff = vectors[:, self.pivots]
        if lhs.dtype != object and r.dtype != object:
            bound = int(np.abs(coeff).max()) * max(1, int(np.abs(r).max())) * self.dim
            if bound < 1 << 62 and int(np.abs(vectors).max()) * den < 1 << 62:
                return np.array_equal(coeff @ r, lhs)
        return not np.any(coeff.astype(object) @ r.astype(object) - lhs.astype(object) != 0)

    @classmethod
    def span_rows(cls, m: fmpq_mat) -> "Subspace":
        r, piv = rref(m)
        return cls(r, piv, m.ncols())

    @classmethod
    def span_cols(cls, m: fmpq_mat) -> "Subspace":
        return cls.span_rows(m.transpose())

    @classmethod
    def zero(cls, ambient: int) -> "Subspace":
        return cls(fmpq_mat(0, ambient), [], ambient)

    @classmethod
    def full(cls, ambient: int) -> "Subspace":
        return cls.span_rows(fmpq_mat(ambient, ambient, [int(i == j) for i in range(ambient) for j in range(ambient)]))

    @classmethod
    def kernel_of(cls, m: fmpq_mat) -> "Subspace":
        return cls.span_cols(kernel(m))

    @property
    def dim(self) -> int:
        return self.rows.nrows()

    def basis(self) -> fmpq_mat:
        """Basis vectors as columns."""
        return self.rows.transpose()

    def __add__(self, other: "Subspace") -> "Subspace":
        self._check(other)
        if self.dim == 0:
            return other
        if other.dim == 0:
            return self
        return Subspace.span_rows(vstack([self.rows, other.rows]))

    def intersect(self, other: "Subspace") -> "Subspace":
        self._check(other)
        if self.dim == 0 or other.dim == 0:
            return Subspace.zero(self.ambient)
        # a^T U = b^T W  <=>  [U; -W]^T (a, b) = 0
        stacked = vstack([self.rows, -other.rows]).transpose()
        ker = kernel(stacked)
        if ker.ncols() == 0:
            return Subspace.zero(self.ambient)
        coeffs = select_rows(ker, range(self.dim))
        return Subspace.span_rows((self.rows.transpose() * coeffs).transpose())

    def contains(self, vectors: fmpq_mat) -> bool:
        """True if every column of ``vectors`` lies in the subspace."""
        if vectors.ncols() == 0:
            return True
        if self.dim == 0:
            return is_zero(vectors)
        return rank(vstack([self.rows, vectors.transpose()])) == self.dim

    def __le__(self, other: "Subspace") -> bool:
        return other.contains(self.basis())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        return self.ambient == other.ambient and self.dim == other.dim and self.rows == other.rows

    def __hash__(self):  # pragma: no cover - subspaces are not used as keys
        raise TypeError("Subspace is unhashable")

    def image(self, op: fmpq_mat) -> "Subspace":
        if self.dim == 0:
            return Subspace.zero(op.nrows())
        return Subspace.span_cols(op * self.basis())

    def coordinates(self, vectors: fmpq_mat) -> fmpq_mat:
        """Coefficients of ``vectors`` in the rref basis (exact, checked)."""
        coeffs = select_rows(vectors, self.pivots)
        if self.basis() * coeffs != vectors:
            raise InconsistentSystemError("vector not in subspace")
        return coeffs

    def _check(self, other: "Subspace") -> None:
        if self.ambient != other.ambient:
            raise ValueError("subspaces live in different spaces")

    def __repr__(self) -> str:
        return f"Subspace(dim={self.dim}, ambient={self.ambient})"


class DirectSum:
    """Exact decomposition of vectors along independent blocks.

    ``blocks`` are column-basis matrices.  Construction certifies that their
    union is linearly independent; ``split`` then returns, for each block, the
    component of a vector in that block.  Vectors outside the sum raise
    :class:`InconsistentSystemError`.
    """

    def __init__(self, blocks: Sequence[fmpq_mat]):
        self.blocks = list(blocks)
        self.sizes = [b.ncols() for b in self.blocks]
        self.ambient = self.blocks[0].nrows()
        nonempty = [b for b in self.blocks if b.ncols()]
        self.total = sum(self.sizes)
        self._left_inverse = None
        if self.total == 0:
            self._stack = fmpq_mat(self.ambient, 0)
            return
        self._stack = hstack(nonempty)
        rk = rank(self._stack)
        if rk != self.total:
            raise ValueError(f"blocks are not independent: rank {rk} < {self.total}")

    @property
    def spans_ambient(self) -> bool:
        return self.total == self.ambient

    def coefficients(self, vectors: fmpq_mat) -> fmpq_mat:
        if self.total == 0:
            if not is_zero(vectors):
                raise InconsistentSystemError("vector not in the (zero) sum")
            return fmpq_mat(0, vectors.ncols())
        if self._left_inverse is None:
            # rows where the stacked basis is invertible, found once
            _, rows = rref(self._stack.transpose())
            self._pivot_rows = rows
            self._left_inverse = select_rows(self._stack, rows).inv()
        coeffs = self._left_inverse * select_rows(vectors, self._pivot_rows)
        if self._stack * coeffs != vectors:
            raise InconsistentSystemError("vector not in the sum")
        return coeffs

    def split(self, vectors: fmpq_mat) -> list[fmpq_mat]:
        coeffs = self.coefficients(vectors)
        out = []
        start = 0
        for b, size in zip(self.blocks, self.sizes):
            if size == 0:
                out.append(fmpq_mat(self.ambient, vectors.ncols()))
                continue
            out.append(b * select_rows(coeffs, range(start, start + size)))
            start += size
        return out


def solve(a: fmpq_mat, b: fmpq_mat) -> fmpq_mat:
    """The unique ``x`` with ``a x = b``; ``a`` must have independent columns."""
    k = a.ncols()
    if b.ncols() == 0:
        return fmpq_mat(k, 0)
    r, piv = rref(hstack([a, b]))
    if piv[:k] != list(range(k)):
        raise ValueError("columns of the system matrix are dependent")
    if len(piv) > k:
        raise InconsistentSystemError("right-hand side outside the column space")
    data = r.tolist()
    return fmpq_mat(k, b.ncols(), [x for row in data[:k] for x in row[k:]])


def identity(d: int) -> fmpq_mat:
    return fmpq_mat(d, d, [int(i == j) for i in range(d) for j in range(d)])
