"""Quaternions over the rationals (or binary64) and small quaternionic matrices.

Scalars are ``fractions.Fraction`` in exact mode and ``float`` in float mode.
Plain ``int`` is accepted everywhere and adopts the mode of whatever it is
combined with.  Combining a ``Fraction`` with a ``float`` raises
:class:`ModeError`, so a computation never silently drops to floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

EXACT = "rational"
FLOAT = "float64"


class ModeError(TypeError):
    """Exact and floating-point scalars were combined."""


def scalar_mode(x) -> str | None:
    """``"rational"``, ``"float64"`` or ``None`` for mode-neutral integers."""
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, int):
        return None
    if isinstance(x, Rational):
        return EXACT
    if isinstance(x, float):
        return FLOAT
    raise TypeError(f"unsupported scalar {x!r}")


def common_mode(values: Iterable) -> str | None:
    mode = None
    for v in values:
        m = scalar_mode(v)
        if m is None:
            continue
        if mode is None:
            mode = m
        elif m != mode:
            raise ModeError("rational and float64 scalars cannot be mixed")
    return mode


def coerce(x, mode: str | None):
    """Put ``x`` into canonical form for ``mode``."""
    if mode == FLOAT:
        return float(x)
    if isinstance(x, float):
        raise ModeError("float64 scalar in a rational computation")
    if mode is None:
        return int(x)
    return Fraction(x)


@dataclass(frozen=True)
class Quaternion:
    """``w + x i + y j + z k``.  Gaussian rationals are the case ``y = z = 0``."""

    w: object = 0
    x: object = 0
    y: object = 0
    z: object = 0

    def __post_init__(self):
        mode = common_mode((self.w, self.x, self.y, self.z))
        for name in "wxyz":
            object.__setattr__(self, name, coerce(getattr(self, name), mode))
        object.__setattr__(self, "_mode", mode)

    @property
    def mode(self) -> str | None:
        return self._mode

    @property
    def coeffs(self) -> tuple:
        return (self.w, self.x, self.y, self.z)

    @classmethod
    def of(cls, value) -> "Quaternion":
        if isinstance(value, Quaternion):
            return value
        return cls(value)

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm2(self):
        """``q q̄``, a nonnegative scalar."""
        return self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z

    def real(self):
        return self.w

    def imag(self) -> "Quaternion":
        return Quaternion(0 * self.w, self.x, self.y, self.z)

    def is_zero(self, tol: float = 0.0) -> bool:
        if self.mode == FLOAT:
            return math.sqrt(self.norm2()) <= tol
        return self.norm2() == 0

    def inverse(self) -> "Quaternion":
        n = self.norm2()
        if self.mode != FLOAT:
            n = Fraction(n)
        if n == 0:
            raise ZeroDivisionError("quaternion inverse of zero")
        c = self.conj()
        return Quaternion(c.w / n, c.x / n, c.y / n, c.z / n)

    def __add__(self, other):
        o = Quaternion.of(other)
        _same_mode(self, o)
        return Quaternion(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)

    __radd__ = __add__

    def __neg__(self):
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __sub__(self, other):
        return self + (-Quaternion.of(other))

    def __rsub__(self, other):
        return Quaternion.of(other) - self

    def __mul__(self, other):
        return quat_mul(self, Quaternion.of(other))

    def __rmul__(self, other):
        return quat_mul(Quaternion.of(other), self)

    def __truediv__(self, other):
        if isinstance(other, Quaternion):
            return self * other.inverse()
        if self.mode != FLOAT and not isinstance(other, float):
            other = Fraction(other)
        return Quaternion(self.w / other, self.x / other, self.y / other, self.z / other)

    def __eq__(self, other):
        if not isinstance(other, Quaternion):
            try:
                other = Quaternion.of(other)
            except TypeError:
                return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"Quaternion({self.w!s}, {self.x!s}, {self.y!s}, {self.z!s})"


def _same_mode(p: Quaternion, q: Quaternion) -> None:
    if None not in (p.mode, q.mode) and p.mode != q.mode:
        raise ModeError("rational and float64 quaternions cannot be combined")


ONE = Quaternion(1)
I = Quaternion(0, 1)
J = Quaternion(0, 0, 1)
K = Quaternion(0, 0, 0, 1)


def quat_mul(p: Quaternion, q: Quaternion) -> Quaternion:
    """Hamilton product ``p q``."""
    _same_mode(p, q)
    a1, b1, c1, d1 = p.coeffs
    a2, b2, c2, d2 = q.coeffs
    return Quaternion(
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    )


class QuatMatrix:
    """Dense matrix of quaternions, immutable."""

    __slots__ = ("rows", "cols", "_data")

    def __init__(self, data: Sequence[Sequence]):
        rows = [tuple(Quaternion.of(x) for x in row) for row in data]
        if not rows or not rows[0]:
            raise ValueError("quaternionic matrices need positive shape")
        if any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("ragged rows")
        _matrix_mode(rows)
        self.rows = len(rows)
        self.cols = len(rows[0])
        self._data = tuple(rows)

    @classmethod
    def identity(cls, n: int, mode: str | None = None) -> "QuatMatrix":
        one = 1.0 if mode == FLOAT else 1
        return cls([[one if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def diag(cls, entries: Sequence) -> "QuatMatrix":
        n = len(entries)
        return cls([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def mode(self) -> str | None:
        return _matrix_mode(self._data)

    def __getitem__(self, idx):
        i, j = idx
        return self._data[i][j]

    def tolist(self) -> list[list[Quaternion]]:
        return [list(r) for r in self._data]

    def conj_transpose(self) -> "QuatMatrix":
        return conj_transpose(self)

    @property
    def H(self) -> "QuatMatrix":
        return conj_transpose(self)

    def __matmul__(self, other: "QuatMatrix") -> "QuatMatrix":
        return quat_matmul(self, other)

    def __add__(self, other: "QuatMatrix") -> "QuatMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return QuatMatrix(
            [[self[i, j] + other[i, j] for j in range(self.cols)] for i in range(self.rows)]
        )

    def __neg__(self):
        return QuatMatrix([[-x for x in r] for r in self._data])

    def __sub__(self, other):
        return self + (-other)

    def scale_left(self, q) -> "QuatMatrix":
        q = Quaternion.of(q)
        return QuatMatrix([[q * x for x in r] for r in self._data])

    def scale_right(self, q) -> "QuatMatrix":
        q = Quaternion.of(q)
        return QuatMatrix([[x * q for x in r] for r in self._data])

    def max_abs(self) -> float:
        return max(math.sqrt(float(x.norm2())) for r in self._data for x in r)

    def __eq__(self, other):
        if not isinstance(other, QuatMatrix):
            return NotImplemented
        return self._data == other._data

    def __hash__(self):
        return hash(self._data)

    def __repr__(self):
        return f"QuatMatrix({self.tolist()!r})"


def _matrix_mode(rows) -> str | None:
    modes = {q.mode for r in rows for q in r} - {None}
    if len(modes) > 1:
        raise ModeError("rational and float64 entries cannot be mixed")
    return modes.pop() if modes else None


def conj_transpose(a: QuatMatrix) -> QuatMatrix:
    """``a*``: conjugate every entry, then transpose."""
    return QuatMatrix([[a[i, j].conj() for i in range(a.rows)] for j in range(a.cols)])


def quat_matmul(a: QuatMatrix, b: QuatMatrix) -> QuatMatrix:
    """Matrix product; entries multiply in the order ``a[i,k] * b[k,j]``."""
    if a.cols != b.rows:
        raise ValueError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    out = []
    for i in range(a.rows):
        row = []
        for j in range(b.cols):
            acc = Quaternion(0)
            for k in range(a.cols):
                acc = acc + a[i, k] * b[k, j]
            row.append(acc)
        out.append(row)
    return QuatMatrix(out)


def left_mult_matrix(q: Quaternion) -> list[list]:
    """Real 4x4 matrix of ``x -> q x`` on coefficient vectors (w, x, y, z)."""
    w, x, y, z = q.coeffs
    return [
        [w, -x, -y, -z],
        [x, w, -z, y],
        [y, z, w, -x],
        [z, -y, x, w],
    ]


def right_mult_matrix(q: Quaternion) -> list[list]:
    """Real 4x4 matrix of ``x -> x q``."""
    w, x, y, z = q.coeffs
    return [
        [w, -x, -y, -z],
        [x, w, z, -y],
        [y, -z, w, x],
        [z, y, -x, w],
    ]


def realify(a: QuatMatrix) -> list[list]:
    """Real ``4r x 4c`` matrix of left multiplication by ``a`` on column vectors.

    The column vector ``x`` in ``H^c`` is flattened as ``(x_1.w, x_1.x, x_1.y,
    x_1.z, x_2.w, ...)``.  Conjugate transpose becomes ordinary transpose.
    """
    out = [[0] * (4 * a.cols) for _ in range(4 * a.rows)]
    for i in range(a.rows):
        for j in range(a.cols):
            blk = left_mult_matrix(a[i, j])
            for r in range(4):
                for c in range(4):
                    out[4 * i + r][4 * j + c] = blk[r][c]
    return out
