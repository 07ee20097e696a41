"""Dense tensors on the model space and the arithmetic they share.

Three entry representations flow through the same formula code:

* ``float64`` arrays (float mode),
* object arrays of ``Fraction`` (exact mode, single tensors),
* :class:`RatArray`, an integer array over a common denominator, used when a
  formula is applied to a whole batch of basis tensors to assemble an exact
  operator matrix.

Formula code only touches entries through :func:`ein`, :func:`sc`, ``+``,
``-`` and axis permutations, so it never needs to know which one it has.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Sequence

import numpy as np

from .scalars_quat import EXACT, FLOAT, ModeError

_INT64_SAFE = 1 << 62


def _maxabs(a: np.ndarray) -> int:
    if a.size == 0:
        return 0
    return int(max(abs(int(a.max())), abs(int(a.min()))))


class RatArray:
    """``num / den`` with ``num`` an int64 (or Python-int object) array."""

    __array_priority__ = 1000
    __slots__ = ("num", "den")

    def __init__(self, num, den: int = 1):
        num = np.asarray(num)
        if num.dtype.kind not in "iuO":
            raise TypeError("RatArray needs integer numerators")
        if den <= 0:
            if den == 0:
                raise ZeroDivisionError("zero denominator")
            num, den = -num, -den
        self.num = num
        self.den = int(den)

    @classmethod
    def from_fractions(cls, arr) -> "RatArray":
        arr = np.asarray(arr, dtype=object)
        den = 1
        for x in arr.flat:
            den = math.lcm(den, Fraction(x).denominator)
        num = np.empty(arr.shape, dtype=object)
        for idx, x in np.ndenumerate(arr):
            num[idx] = int(Fraction(x) * den)
        return cls(_shrink(num), den)

    @property
    def shape(self):
        return self.num.shape

    @property
    def ndim(self):
        return self.num.ndim

    def to_fractions(self) -> np.ndarray:
        out = np.empty(self.shape, dtype=object)
        for idx, x in np.ndenumerate(self.num):
            out[idx] = Fraction(int(x), self.den)
        return out

    def _aligned(self, other: "RatArray"):
        den = math.lcm(self.den, other.den)
        fa, fb = den // self.den, den // other.den
        a, b = self.num, other.num
        bound = _maxabs(a) * fa + _maxabs(b) * fb
        if bound >= _INT64_SAFE:
            a, b = a.astype(object), b.astype(object)
        return a * fa, b * fb, den

    def __add__(self, other):
        other = _as_rat(other)
        a, b, den = self._aligned(other)
        return RatArray(a + b, den)

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_rat(other)
        a, b, den = self._aligned(other)
        return RatArray(a - b, den)

    def __rsub__(self, other):
        return _as_rat(other) - self

    def __neg__(self):
        return RatArray(-self.num, self.den)

    def scale(self, c) -> "RatArray":
        c = Fraction(c)
        num = self.num
        if _maxabs(num) * abs(c.numerator) >= _INT64_SAFE:
            num = num.astype(object)
        return RatArray(num * c.numerator, self.den * c.denominator)

    def transpose(self, *axes):
        return RatArray(self.num.transpose(*axes), self.den)

    def swapaxes(self, a, b):
        return RatArray(self.num.swapaxes(a, b), self.den)

    def reshape(self, *shape):
        return RatArray(self.num.reshape(*shape), self.den)

    def __getitem__(self, idx):
        return RatArray(self.num[idx], self.den)

    def is_zero(self) -> bool:
        return not np.any(self.num)

    def __repr__(self):
        return f"RatArray(shape={self.shape}, den={self.den})"


def _shrink(num: np.ndarray) -> np.ndarray:
    if num.dtype == object and (num.size == 0 or _maxabs(num) < _INT64_SAFE):
        return num.astype(np.int64)
    return num


def _as_rat(x) -> RatArray:
    if isinstance(x, RatArray):
        return x
    x = np.asarray(x)
    if x.dtype.kind in "iu":
        return RatArray(x.astype(np.int64))
    if x.dtype == object:
        return RatArray.from_fractions(x)
    raise ModeError("float64 data combined with exact data")


def array_mode(a) -> str | None:
    """Mode of an entry array; ``None`` for plain integer arrays."""
    if isinstance(a, RatArray):
        return EXACT
    a = np.asarray(a)
    if a.dtype.kind == "f":
        return FLOAT
    if a.dtype.kind in "iub":
        return None
    if a.dtype == object:
        mode = None
        for x in a.flat:
            if isinstance(x, float):
                raise ModeError("float entry inside an exact tensor")
            if not isinstance(x, (int, Fraction, np.integer)):
                raise TypeError(f"unsupported entry {x!r}")
            mode = EXACT
        return mode
    raise TypeError(f"unsupported dtype {a.dtype}")


def ein(spec: str, *ops):
    """``np.einsum`` over any of the entry representations."""
    modes = {array_mode(o) for o in ops} - {None}
    if modes == {EXACT, FLOAT}:
        raise ModeError("cannot contract exact with float64 data")
    if not any(isinstance(o, RatArray) for o in ops):
        if FLOAT in modes:
            return np.einsum(spec, *[np.asarray(o, dtype=float) for o in ops])
        if EXACT in modes:
            return np.einsum(spec, *[np.asarray(o, dtype=object) for o in ops])
        return np.einsum(spec, *ops)
    rats = [_as_rat(o) for o in ops]
    lhs, out = spec.split("->")
    terms = lhs.split(",")
    sizes = {}
    for t, r in zip(terms, rats):
        head, _, tail = t.partition("...")
        if _:
            sizes.update(zip(head, r.shape[: len(head)]))
            sizes.update(zip(tail, r.shape[r.ndim - len(tail):]))
        else:
            sizes.update(zip(t, r.shape))
    out = out.replace("...", "")
    terms = [t.replace("...", "") for t in terms]
    contracted = math.prod(sizes[c] for c in set("".join(terms)) - set(out))
    bound = contracted
    for r in rats:
        bound *= max(_maxabs(r.num), 1)
    nums = [r.num for r in rats]
    if bound >= _INT64_SAFE or any(x.dtype == object for x in nums):
        nums = [x.astype(object) for x in nums]
    den = math.prod(r.den for r in rats)
    res = np.einsum(spec, *nums)
    return RatArray(_shrink(np.asarray(res)), den)


def sc(c, a):
    """Multiply ``a`` by a rational constant without changing its mode."""
    if isinstance(a, RatArray):
        return a.scale(c)
    a = np.asarray(a)
    if a.dtype.kind == "f":
        return float(c) * a
    if a.dtype.kind in "iu" and Fraction(c).denominator == 1:
        return int(c) * a
    return np.asarray(a, dtype=object) * Fraction(c)


def as_exact(a) -> np.ndarray:
    """Object array of ``Fraction`` with the entries of ``a``."""
    if isinstance(a, RatArray):
        return a.to_fractions()
    a = np.asarray(a)
    if a.dtype.kind == "f":
        raise ModeError("float64 data where exact data was required")
    out = np.empty(a.shape, dtype=object)
    for idx, x in np.ndenumerate(a):
        out[idx] = Fraction(int(x)) if isinstance(x, (int, np.integer)) else Fraction(x)
    return out


def normalize(a, mode: str | None = None) -> np.ndarray:
    """Canonical entry array: float64 in float mode, ``Fraction`` otherwise."""
    m = array_mode(a) if mode is None else mode
    if m == FLOAT:
        if array_mode(a) == EXACT:
            raise ModeError("exact data where float64 was requested")
        return np.asarray(a, dtype=float)
    return as_exact(a)


def is_zero(a, tol: float = 0.0) -> bool:
    if isinstance(a, RatArray):
        return a.is_zero()
    a = np.asarray(a)
    if a.dtype.kind == "f":
        return bool(np.all(np.abs(a) <= tol))
    return not any(x != 0 for x in a.flat)


def equal(a, b, tol: float = 0.0) -> bool:
    return is_zero(_sub(a, b), tol)


def _sub(a, b):
    if isinstance(a, RatArray) or isinstance(b, RatArray):
        return _as_rat(a) - _as_rat(b)
    return np.asarray(a) - np.asarray(b)


# ---------------------------------------------------------------------------
# tensors on V

CO = "co"
CONTRA = "contra"

SYMMETRIC = "symmetric"
ANTISYMMETRIC = "antisymmetric"
SKEW01 = "skew01"  # antisymmetric in the first two slots (vector-valued 2-forms)


@dataclass(frozen=True)
class ModelTensor:
    """Entries of a tensor on ``V = R^{4n}`` in the basis ``e_1..e_2n, f_1..f_2n``.

    ``variance`` lists ``"co"``/``"contra"`` per slot.  ``symmetry`` is an
    optional declared flag checked entrywise on construction.
    """

    n: int
    variance: tuple
    entries: np.ndarray = field(repr=False)
    symmetry: str | None = None

    def __post_init__(self):
        ent = normalize(self.entries)
        object.__setattr__(self, "entries", ent)
        object.__setattr__(self, "variance", tuple(self.variance))
        dim = 4 * self.n
        if ent.ndim != len(self.variance) or any(s != dim for s in ent.shape):
            raise ValueError(f"entries of shape {ent.shape} do not fit order {len(self.variance)} on R^{dim}")
        if any(v not in (CO, CONTRA) for v in self.variance):
            raise ValueError(f"bad variance {self.variance}")
        if self.symmetry is not None and not check_symmetry(ent, self.symmetry, default_tol(ent)):
            raise ValueError(f"declared {self.symmetry} symmetry does not hold")

    @property
    def order(self) -> int:
        return len(self.variance)

    @property
    def mode(self) -> str:
        return FLOAT if self.entries.dtype.kind == "f" else EXACT

    def __getitem__(self, idx):
        return self.entries[idx]

    def like(self, entries, symmetry: str | None = "keep") -> "ModelTensor":
        sym = self.symmetry if symmetry == "keep" else symmetry
        return ModelTensor(self.n, self.variance, entries, sym)

    def equals(self, other: "ModelTensor", tol: float = 0.0) -> bool:
        return self.variance == other.variance and equal(self.entries, other.entries, tol)


def default_tol(a) -> float:
    """Zero for exact data, ``1e-10`` relative to the largest entry for float64."""
    a = np.asarray(a)
    if a.dtype.kind != "f":
        return 0.0
    return 1e-10 * max(1.0, float(np.abs(a).max()) if a.size else 1.0)


def check_symmetry(a: np.ndarray, kind: str, tol: float = 0.0) -> bool:
    if kind == SYMMETRIC:
        perms = list(permutations(range(a.ndim)))
        return all(equal(a, a.transpose(p), tol) for p in perms)
    if kind == ANTISYMMETRIC:
        for p in permutations(range(a.ndim)):
            sign = _perm_sign(p)
            if not equal(a, _signed(a.transpose(p), sign), tol):
                return False
        return True
    if kind == SKEW01:
        return equal(a, _signed(a.swapaxes(0, 1), -1), tol)
    raise ValueError(f"unknown symmetry flag {kind!r}")


def _signed(a, sign):
    return a if sign == 1 else -a


def _perm_sign(p: Sequence[int]) -> int:
    sign = 1
    p = list(p)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def torsion(n: int, entries) -> ModelTensor:
    """Vector-valued 2-form ``T[x, y, k]`` = k-th component of ``T(e_x, e_y)``."""
    return ModelTensor(n, (CO, CO, CONTRA), entries, SKEW01)


def entries_of(t) -> np.ndarray:
    return t.entries if isinstance(t, ModelTensor) else t
