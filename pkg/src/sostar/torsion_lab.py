"""Projections, traces and the intrinsic-torsion types of SO*(2n)(Sp(1))-structures.

Torsion tensors are ``T[x, y, k]``; elements ``A`` of ``V* (x) gl(V)`` use the
same layout, ``A[x, y, k]`` = k-th component of ``A(e_x) e_y``.  Every formula
below works on single tensors and on batches (leading axes), in exact or
float mode, so the same code gives both values and exact operator matrices.
"""

from __future__ import annotations

import math

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from flint import fmpq_mat

from . import linalg as la
from . import spencer as sp
from .lie_algebras import build_subalgebra
from .model_space import (
    UNIT_SAMPLES,
    HypercomplexTriple,
    _omega_matrix,
    mat_inverse,
    standard_omega,
    standard_triple,
)
from .tensors import ModelTensor, RatArray, ein, sc, torsion

GROUPS = ("so_star", "so_star_sp1")
TYPE_NAMES = ("X1", "X2", "X3", "X4", "X5", "X6", "X7")
GROUP_TYPES = {
    "so_star_sp1": ("X1", "X2", "X3", "X4", "X5"),
    "so_star": TYPE_NAMES,
}
# (module, partner) of each type
TYPE_MODULES = {
    "X1": ("K", "S3Hh"),
    "X2": ("Lambda3E", "S3Hh"),
    "X3": ("K", "Hh"),
    "X4": ("E", "Hh"),
    "X5": ("S3_0E", "Hh"),
    "X6": ("E", "S3Hh"),
    "X7": ("E", "Hh"),
}
# sample complex structures for the J-independence check of Tr4
TR4_SAMPLES = ((1, 0, 0), (Fraction(3, 5), Fraction(4, 5), 0))


class TraceDependenceError(ValueError):
    """Tr4 depends on the chosen complex structure: input outside the analyzed family."""


class OutsideComplementError(ValueError):
    """A tensor expected in the normalization complement is not in it."""


def type_dim(name: str, n: int) -> int:
    module, partner = TYPE_MODULES[name]
    return sp.real_form_dim(module, partner, n)


# ---------------------------------------------------------------------------
# entry plumbing


def _entries(t):
    return t.entries if isinstance(t, ModelTensor) else t


def _like(t, out):
    if isinstance(t, ModelTensor):
        return ModelTensor(t.n, t.variance, out)
    return out


def _compact(m):
    """Small matrices in the cheapest exact form: int64 when integral."""
    if isinstance(m, ModelTensor):
        m = m.entries
    if isinstance(m, RatArray):
        return m
    m = np.asarray(m)
    if m.dtype.kind in "iuf":
        return m
    r = RatArray.from_fractions(m)
    return r.num if r.den == 1 else r


def _w(omega):
    return _compact(_omega_matrix(omega))


def _winv(omega):
    w = _omega_matrix(omega)
    return _compact(mat_inverse(np.asarray(w) if not isinstance(w, RatArray) else w.to_fractions()))


def _mats(triple: HypercomplexTriple):
    return tuple(_compact(j) for j in triple.mats)


def on_first(t, a):
    """``phi(A X, Y)``."""
    return ein("...pyk,px->...xyk", t, a)


def on_second(t, a):
    """``phi(X, A Y)``."""
    return ein("...xpk,py->...xyk", t, a)


def on_value(t, a):
    """``A phi(X, Y)``."""
    return ein("...xyl,kl->...xyk", t, a)


def rho(a, phi):
    """Derivation action ``A phi(X,Y) - phi(AX,Y) - phi(X,AY)``."""
    t = _entries(phi)
    return _like(phi, on_value(t, a) - on_first(t, a) - on_second(t, a))


# ---------------------------------------------------------------------------
# projections


def proj_Ja(phi, ja):
    """``1/4 (phi(X,Y) + J(phi(JX,Y) + phi(X,JY)) - phi(JX,JY))``."""
    t = _entries(phi)
    out = t + on_value(on_first(t, ja) + on_second(t, ja), ja) - on_first(on_second(t, ja), ja)
    return _like(phi, sc(Fraction(1, 4), out))


def proj_H(phi, triple: HypercomplexTriple):
    """``pi_H = 2/3 (pi_J1 + pi_J2 + pi_J3)``."""
    t = _entries(phi)
    total = None
    for ja in _mats(triple):
        part = proj_Ja(t, ja)
        total = part if total is None else total + part
    return _like(phi, sc(Fraction(2, 3), total))


def alt_project(phi, omega):
    """Projection onto raised 3-forms along ``delta(V* (x) sp(4n, R))``.

    ``Alt_phi(X, Y) = 1/3 (phi_X Y - phi_X^T Y + phi_Y^T X)``, computed through
    the lowered tensor ``L(X, Y, Z) = omega(phi(X, Y), Z)``:
    ``omega(Alt_phi(X, Y), Z) = 1/3 (L(X,Y,Z) + L(Y,Z,X) + L(Z,X,Y))``.
    """
    w, winv = _w(omega), _winv(omega)
    t = _entries(phi)
    low = ein("...xyk,kz->...xyz", t, w)
    cyc = low + low.transpose(*_axes(low, (1, 2, 0))) + low.transpose(*_axes(low, (2, 0, 1)))
    out = ein("...xyz,zk->...xyk", cyc, winv)
    return _like(phi, sc(Fraction(1, 3), out))


def _axes(arr, perm):
    """Axis permutation acting on the last three axes, keeping batch axes."""
    lead = arr.ndim - 3
    return tuple(range(lead)) + tuple(lead + p for p in perm)


def antisymmetrize3(theta):
    """Full antisymmetrization ``1/6 sum sign(s) theta o s`` of a 3-tensor."""
    t = _entries(theta)
    total = None
    for perm, sign in (((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1), ((1, 0, 2), -1), ((0, 2, 1), -1), ((2, 1, 0), -1)):
        part = t.transpose(*_axes(t, perm))
        part = part if sign == 1 else -part
        total = part if total is None else total + part
    return sc(Fraction(1, 6), total)


def raise_last(theta, omega):
    return ein("...xyz,zk->...xyk", _entries(theta), _winv(omega))


def lower_last(phi, omega):
    return ein("...xyk,kz->...xyz", _entries(phi), _w(omega))


# ---------------------------------------------------------------------------
# traces


def trace1(a):
    """``Tr1(A)(X) = Tr(A(., X))``."""
    return ein("...kxk->...x", _entries(a))


def trace2(a):
    """``Tr2(A)(X) = Tr(A(X, .))``."""
    return ein("...xkk->...x", _entries(a))


def trace3(a, omega):
    """``Tr3(A)(X) = Tr(Y -> (A_Y)^T X)`` with ``^T`` the symplectic transpose."""
    return -ein("...yab,ya,bx->...x", _entries(a), _winv(omega), _w(omega))


def trace4(a, jmat):
    """``Tr4(A)(X) = Tr(J A(J X, .))`` for the complex structure ``jmat``."""
    return ein("...plm,lm,px->...x", _entries(a), jmat, jmat)


def unit_structure(triple: HypercomplexTriple, mu) -> np.ndarray:
    """``sum mu_a J_a`` for a unit vector ``mu``."""
    mu = tuple(mu)
    norm = sum(Fraction(m) * Fraction(m) for m in mu) if not any(isinstance(m, float) for m in mu) else sum(m * m for m in mu)
    if norm != 1 and not (isinstance(norm, float) and abs(norm - 1) < 1e-12):
        raise ValueError("mu must be a unit vector")
    return triple.combination(mu)


@dataclass(frozen=True)
class Traces:
    tr1: np.ndarray
    tr2: np.ndarray
    tr3: np.ndarray
    tr4: np.ndarray

    def as_tuple(self):
        return (self.tr1, self.tr2, self.tr3, self.tr4)


def traces(phi, omega, triple: HypercomplexTriple, check: bool = True, tol: float = 1e-9) -> Traces:
    """``(Tr1, Tr2, Tr3, Tr4)``; Tr4 is evaluated on two sample structures."""
    t = _entries(phi)
    samples = [trace4(t, unit_structure(triple, mu)) for mu in TR4_SAMPLES]
    if check:
        diff = samples[0] - samples[1]
        if not _negligible(diff, tol):
            raise TraceDependenceError("Tr4 differs between sample complex structures")
    return Traces(trace1(t), trace2(t), trace3(t, omega), samples[0])


def _negligible(arr, tol: float) -> bool:
    arr = np.asarray(arr)
    if arr.dtype.kind == "f":
        return bool(np.all(np.abs(arr) <= tol))
    return not any(x != 0 for x in arr.flat)


# ---------------------------------------------------------------------------
# the components (A)-(D)


def flat(z, omega):
    """``Z^T = omega(Z, .)`` as a covector."""
    return ein("...x,xy->...y", z, _w(omega))


def sharp(zeta, omega):
    """The vector ``Z`` with ``Z^T = zeta``."""
    return ein("...y,yx->...x", zeta, _winv(omega))


def _metrics(omega, triple):
    w = _w(omega)
    return [ein("xp,py->xy", w, ja) for ja in _mats(triple)]


def component_tensors(kind: str, data, omega, triple: HypercomplexTriple):
    """Element of ``V* (x) gl(V)`` spanned by one of the four components.

    ``A``: ``zeta (x) id``; ``B``: ``pi_A(omega (x) Z)``; ``C``: ``pi_S(omega (x) Z)``;
    ``D``: ``sum_a (zeta o J_a) (x) J_a``.  ``data`` is a covector for A, D and
    a vector for B, C (batches allowed).
    """
    w = _w(omega)
    d = w.shape[0]
    ident = np.eye(d, dtype=np.int64)
    if kind == "A":
        return ein("...x,yk->...xyk", data, ident)
    if kind == "D":
        return _d_component(data, triple)
    if kind not in ("B", "C"):
        raise ValueError(f"unknown component {kind!r}")
    sign = -1 if kind == "B" else 1
    # omega(X, Y) Z -/+ omega(Z, Y) X - sum g_a(X, Y) J_a Z -/+ sum g_a(Z, Y) J_a X
    out = ein("xy,...k->...xyk", w, data)
    zw = ein("...p,py->...y", data, w)
    second = ein("...y,xk->...xyk", zw, ident)
    out = out + second if sign == 1 else out - second
    for g, ja in zip(_metrics(omega, triple), _mats(triple)):
        jz = ein("kp,...p->...k", ja, data)
        out = out - ein("xy,...k->...xyk", g, jz)
        zg = ein("...p,py->...y", data, g)
        last = ein("...y,kx->...xyk", zg, ja)
        out = out - last if sign == 1 else out + last
    return sc(Fraction(1, 8), out)


def mixture(zeta1, z2, z3, zeta4, omega, triple):
    """``zeta1 (x) id + pi_A(omega (x) Z2) + pi_S(omega (x) Z3) + sum zeta4 o J_a (x) J_a``."""
    parts = [
        component_tensors("A", zeta1, omega, triple),
        component_tensors("B", z2, omega, triple),
        component_tensors("C", z3, omega, triple),
        component_tensors("D", zeta4, omega, triple),
    ]
    return parts[0] + parts[1] + parts[2] + parts[3]


def delta_of(a):
    """Spencer alternation of ``A`` in the ``A[x, y, k]`` layout."""
    a = _entries(a)
    return a - a.swapaxes(-3, -2)


def trace_matrix(n: int, omega=None, triple=None, kinds=("A", "B", "C", "D"), after_delta: bool = False):
    """Coefficients of the traces on the components, computed from the tensors.

    Column ``c`` is read off from component ``c`` evaluated on every basis
    covector ``zeta`` (vectors ``Z`` with ``Z^T = zeta`` for B, C); each trace
    must be an exact multiple of ``zeta``, which is checked.  Rows are
    ``Tr1..Tr4`` (or ``Tr1, Tr3, Tr4`` of ``delta(A)`` when ``after_delta``).
    """
    omega = standard_omega(n) if omega is None else omega
    triple = standard_triple(n) if triple is None else triple
    d = 4 * n
    basis = np.eye(d, dtype=np.int64)
    cols = []
    for kind in kinds:
        data = basis if kind in ("A", "D") else sharp(basis, omega)
        a = component_tensors(kind, data, omega, triple)
        if after_delta:
            a = delta_of(a)
        trs = [trace1(a), trace3(a, omega), trace4(a, triple.mats[0])] if after_delta else [
            trace1(a), trace2(a), trace3(a, omega), trace4(a, triple.mats[0])
        ]
        col = []
        for tr in trs:
            tr = _as_fraction_array(tr)
            c = tr[0, 0]
            if any(tr[i, j] != (c if i == j else 0) for i in range(d) for j in range(d)):
                raise ArithmeticError(f"trace of component {kind} is not a multiple of its parameter")
            col.append(c)
        cols.append(col)
    return [[cols[j][i] for j in range(len(cols))] for i in range(len(cols[0]))]


def _as_fraction_array(a):
    if isinstance(a, RatArray):
        return a.to_fractions()
    a = np.asarray(a)
    if a.dtype.kind in "iu":
        return a.astype(object)
    return a


def exact_det(rows) -> Fraction:
    m = la.qmat(rows)
    det = m.det()
    return Fraction(int(det.p), int(det.q))


def kernel_locus(zeta, omega, triple):
    """Mixture on the locus ``zeta1 = -zeta4 = -1/4 Z2^T = 1/4 Z3^T = zeta``."""
    z3 = sharp(sc(4, zeta), omega)
    z2 = sharp(sc(-4, zeta), omega)
    return mixture(zeta, z2, z3, -np.asarray(zeta) if not isinstance(zeta, RatArray) else -zeta, omega, triple)


def mixture_delta_operator(n: int, omega=None, triple=None) -> sp.IntOperator:
    """``(zeta1, Z2, Z3, zeta4) -> delta(mixture)`` on ``(R^{4n})^4``."""
    omega = standard_omega(n) if omega is None else omega
    triple = standard_triple(n) if triple is None else triple
    d = 4 * n
    dom = np.eye(4 * d, dtype=np.int64)

    def op(batch):
        b = batch
        parts = [b[:, i * d:(i + 1) * d] for i in range(4)]
        return delta_of(mixture(parts[0], parts[1], parts[2], parts[3], omega, triple))

    return sp.operator_matrix(op, n, dom)


# ---------------------------------------------------------------------------
# sp(1) Casimir


def casimir(phi, triple: HypercomplexTriple):
    """``C = rho(J1)^2 + rho(J2)^2 + rho(J3)^2`` (eigenvalues -15 and -3 on torsion)."""
    t = _entries(phi)
    total = None
    for ja in _mats(triple):
        part = rho(ja, rho(ja, t))
        total = part if total is None else total + part
    return _like(phi, total)


def casimir_split(phi, triple: HypercomplexTriple, tol: float = 1e-9):
    """``(spin 3/2 part, spin 1/2 part)`` through ``(C+3)/(-12)`` and ``(C+15)/12``."""
    t = _entries(phi)
    c = casimir(t, triple)
    high = sc(Fraction(-1, 12), c + sc(3, t))
    low = sc(Fraction(1, 12), c + sc(15, t))
    residual = casimir(c + sc(15, t), triple) + sc(3, c + sc(15, t))
    if not _negligible(_as_fraction_array(residual) if not isinstance(residual, np.ndarray) or residual.dtype.kind != "f" else residual, tol):
        raise ValueError("input has components outside the -15 and -3 eigenspaces")
    return _like(phi, high), _like(phi, low)


# ---------------------------------------------------------------------------
# so*(2n) Casimir (used to separate isotypic pieces of equal Sp(1)-spin)


@lru_cache(maxsize=None)
def _so_star_dual_pairs(n: int):
    alg = build_subalgebra("so_star", n)
    gens = alg.integral_generators()
    k = len(gens)
    gram = la.qmat([[int(np.trace(a @ b)) for b in gens] for a in gens])
    inv = gram.inv()
    dual = []
    for i in range(k):
        acc = np.zeros(gens[0].shape, dtype=object)
        for j in range(k):
            c = inv[i, j]
            if c != 0:
                acc = acc + gens[j].astype(object) * Fraction(int(c.p), int(c.q))
        dual.append(acc)
    return gens, dual


def so_star_casimir(phi, n: int):
    """``sum_i rho(X_i) rho(X^i)`` with the trace form of ``V``; ``(2n-1)/4`` on ``E``."""
    gens, dual = _so_star_dual_pairs(n)
    t = _entries(phi)
    total = None
    for g, h in zip(gens, dual):
        part = rho(g, rho(RatArray.from_fractions(h) if isinstance(t, RatArray) else h, t))
        total = part if total is None else total + part
    return _like(phi, total)


def so_star_casimir_value(module: str, n: int) -> Fraction:
    values = {
        "E": Fraction(2 * n - 1, 4),
        "Lambda3E": Fraction(6 * n - 9, 4),
        "K": Fraction(6 * n - 3, 4),
        "S3_0E": Fraction(6 * n + 3, 4),
    }
    return values[module]


# ---------------------------------------------------------------------------
# the X4 and X7 generators and the compatibility maps


def alt_omega_zeta(zeta, omega):
    """Raised complete antisymmetrization of ``2 omega (x) zeta``."""
    theta = ein("xy,...z->...xyz", sc(2, _w(omega)), zeta)
    return raise_last(antisymmetrize3(theta), omega)


def delta_sp1_part(zeta, triple):
    """``delta(sum_a (zeta o J_a) (x) J_a)``."""
    return delta_of(_d_component(zeta, triple))


def _d_component(zeta, triple):
    total = None
    for ja in _mats(triple):
        part = ein("...p,px,ky->...xyk", zeta, ja, ja)
        total = part if total is None else total + part
    return total


def pi3(phi, omega):
    """The map onto the ``[K Hh]`` type inside the 3-forms: ``Alt_phi``."""
    return alt_project(phi, omega)


def alt_covector_omega(xi, omega):
    """Raised complete antisymmetrization of ``xi (x) omega``."""
    theta = ein("...x,yz->...xyz", xi, _w(omega))
    return raise_last(antisymmetrize3(theta), omega)


def pi4(zeta1, z2, omega):
    """``Alt_{(2 zeta1 + 1/2 Z2^T) (x) omega}`` as a raised 3-form."""
    xi = sc(2, zeta1) + sc(Fraction(1, 2), flat(z2, omega))
    return alt_covector_omega(xi, omega)


def pi7(zeta1, z2, omega, triple):
    """``delta(sum_a (1/3 zeta1 - 1/6 Z2^T) o J_a (x) J_a)``."""
    xi = sc(Fraction(1, 3), zeta1) - sc(Fraction(1, 6), flat(z2, omega))
    return delta_of(_d_component(xi, triple))


# ---------------------------------------------------------------------------
# exact subspaces of the torsion space (standard structure)


def _restrict_kernel(space: la.Subspace, op: sp.IntOperator) -> la.Subspace:
    """``space`` intersected with ``ker(op)``."""
    if space.dim == 0:
        return space
    basis = space.basis()
    coeffs = la.kernel(op.to_fmpq() * basis)
    if coeffs.ncols() == 0:
        return la.Subspace.zero(space.ambient)
    return la.Subspace.span_cols(basis * coeffs)


def _span_of_batch(batch) -> la.Subspace:
    """Span of a batch of torsion tensors (leading axis)."""
    return la.Subspace.span_cols(sp.fmpq_columns(sp.to_vec(batch)))


def _stack_rows(outs) -> sp.IntOperator:
    """One operator from several batches of covector-valued images."""
    den = math.lcm(*(int(o.den) for o in outs))
    blocks = [(o.num * (den // int(o.den))).T for o in outs]
    return sp.IntOperator(np.ascontiguousarray(np.concatenate(blocks, axis=0)), den)


class Workspace:
    """Operators and invariant subspaces of ``Lambda^2 V* (x) V`` for the standard structure."""

    def __init__(self, n: int):
        self.n = n
        self.omega = standard_omega(n)
        self.triple = standard_triple(n)
        self.dim = sp.torsion_dim(n)
        self._cache: dict = {}

    def _get(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def op(self, name: str) -> sp.IntOperator:
        w, t, n = self.omega, self.triple, self.n
        funcs = {
            "proj_H": lambda b: proj_H(b, t),
            "casimir": lambda b: casimir(b, t),
            "alt": lambda b: alt_project(b, w),
            "so_casimir": lambda b: so_star_casimir(b, n),
        }
        return self._get(("op", name), lambda: sp.operator_matrix(funcs[name], n))

    def trace_op(self, which: str) -> sp.IntOperator:
        w, t = self.omega, self.triple

        def build():
            b = RatArray(sp.basis_batch(self.n))
            if which == "tr1":
                return _stack_rows([trace1(b)])
            if which == "sp1_conditions":
                outs = [sc(2, trace1(b)) + trace3(b, w)]
                outs += [trace1(b) - trace4(b, unit_structure(t, mu)) for mu in UNIT_SAMPLES]
                return _stack_rows(outs)
            raise KeyError(which)

        return self._get(("trace", which), build)

    def space(self, name: str) -> la.Subspace:
        return self._get(("space", name), lambda: self._build_space(name))

    def _build_space(self, name: str) -> la.Subspace:
        n, w, t = self.n, self.omega, self.triple
        if name == "im_proj_H":
            return self.op("proj_H").image()
        if name == "spin32":
            return self.op("casimir").shift(15).kernel()
        if name == "spin12":
            return self.op("casimir").shift(3).kernel()
        if name == "lambda3":
            return self.op("alt").image()
        if name == "ker_alt":
            return self.op("alt").kernel()
        if name == "delta_s2e":
            return sp.image_of_delta("s2e", n)
        if name == "delta_sp1":
            return sp.image_of_delta("sp1", n)
        if name == "image_so_star":
            return sp.image_of_delta("so_star", n)
        if name == "image_so_star_sp1":
            return sp.image_of_delta("so_star_sp1", n)
        if name == "complement_so_star":
            return self.space("im_proj_H") + self.space("delta_s2e")
        if name == "complement_so_star_sp1":
            return _restrict_kernel(self.space("complement_so_star"), self.trace_op("sp1_conditions"))
        eye = np.eye(4 * n, dtype=np.int64)
        if name == "raw_X2":
            return self.space("spin32").intersect(self.space("lambda3"))
        if name == "raw_X3":
            base = self.space("lambda3").intersect(self.space("spin12"))
            return _restrict_kernel(base, self.trace_op("tr1"))
        if name == "raw_X4":
            return _span_of_batch(alt_omega_zeta(eye, w))
        if name == "raw_X7":
            return _span_of_batch(delta_sp1_part(eye, t))
        if name == "raw_X6":
            return self.space("spin32").intersect(self.space("delta_sp1"))
        if name == "raw_X1":
            base = self.space("spin32").intersect(self.space("ker_alt"))
            return _restrict_kernel(base, self.op("so_casimir").shift(-so_star_casimir_value("K", n)))
        if name == "raw_X5":
            base = self.space("spin12").intersect(self.space("ker_alt"))
            return _restrict_kernel(base, self.op("so_casimir").shift(-so_star_casimir_value("S3_0E", n)))
        raise KeyError(name)


_WORKSPACES: dict[int, Workspace] = {}
_CACHES: dict[tuple[int, str], "TypeBasisCache"] = {}
_LOCK = __import__("threading").RLock()


def workspace(n: int) -> Workspace:
    with _LOCK:
        if n not in _WORKSPACES:
            _WORKSPACES[n] = Workspace(n)
        return _WORKSPACES[n]


class TypeDimensionError(ArithmeticError):
    """A constructed type subspace has the wrong dimension."""


@dataclass
class TypeBasisCache:
    """Exact bases of the types inside the normalization complement ``D``."""

    n: int
    group: str
    image: la.Subspace
    complement: la.Subspace
    types: dict
    raw: dict
    certificates: dict = field(default_factory=dict)
    notes: tuple = (
        "X1 and X5 are singled out inside their Sp(1)-isotypic pieces by the so*(2n) Casimir",
        "types are realized inside D by projecting along im(delta)",
    )
    _split: la.DirectSum | None = field(default=None, repr=False)
    _frame: la.DirectSum | None = field(default=None, repr=False)

    @property
    def names(self) -> tuple:
        return GROUP_TYPES[self.group]

    def type_dims(self) -> dict:
        return {k: v.ncols() for k, v in self.types.items()}

    def split_complement(self, vectors: fmpq_mat) -> tuple[fmpq_mat, fmpq_mat]:
        """``(D-part, im(delta)-part)`` of columns."""
        if self._split is None:
            self._split = la.DirectSum([self.complement.basis(), self.image.basis()])
        d_part, i_part = self._split.split(vectors)
        return d_part, i_part

    def type_components(self, vectors: fmpq_mat) -> dict:
        """Components of vectors of ``D`` along each type."""
        if self._frame is None:
            self._frame = la.DirectSum([self.types[k] for k in self.names])
        parts = self._frame.split(vectors)
        return dict(zip(self.names, parts))


def build_type_bases(n: int, group: str = "so_star_sp1") -> TypeBasisCache:
    """Type bases of the standard structure; built once per ``(n, group)``."""
    if group not in GROUPS:
        raise ValueError(f"unknown group {group!r}")
    with _LOCK:
        key = (n, group)
        if key not in _CACHES:
            _CACHES[key] = _build_cache(n, group)
        return _CACHES[key]


def _build_cache(n: int, group: str) -> TypeBasisCache:
    ws = workspace(n)
    image = ws.space("image_" + group)
    comp = ws.space("complement_" + group)
    certs = {
        "image_dim": image.dim,
        "complement_dim": comp.dim,
        "complement_spans": (image + comp).dim == ws.dim and image.dim + comp.dim == ws.dim,
    }
    if not certs["complement_spans"]:
        raise TypeDimensionError("D and im(delta) are not complementary")
    raw = {}
    for name in GROUP_TYPES[group]:
        sub = ws.space("raw_" + name)
        want = type_dim(name, n)
        if sub.dim != want:
            raise TypeDimensionError(f"{name}: dimension {sub.dim}, expected {want}")
        raw[name] = sub.basis()
    split = la.DirectSum([comp.basis(), image.basis()])
    types = {}
    for name, basis in raw.items():
        d_part, _ = split.split(basis)
        types[name] = la.Subspace.span_cols(d_part).basis()
        if types[name].ncols() != basis.ncols():
            raise TypeDimensionError(f"{name} meets im(delta)")
    frame = la.DirectSum([types[k] for k in GROUP_TYPES[group]])
    certs["types_independent"] = True
    certs["types_span_complement"] = frame.total == comp.dim
    if not certs["types_span_complement"]:
        raise TypeDimensionError(f"types span {frame.total} of {comp.dim}")
    certs["type_dims"] = {k: v.ncols() for k, v in types.items()}
    cache = TypeBasisCache(n, group, image, comp, types, raw, certs)
    cache._split = split
    cache._frame = frame
    return cache


# ---------------------------------------------------------------------------
# classification


def _torsion_entries(t):
    arr = _entries(t)
    if isinstance(arr, RatArray):
        arr = arr.to_fractions()
    arr = np.asarray(arr)
    if arr.ndim != 3 or len(set(arr.shape)) != 1:
        raise ValueError("torsion tensors have shape (4n, 4n, 4n)")
    return arr


def _is_float(arr) -> bool:
    return np.asarray(arr).dtype.kind == "f"


def _column(arr) -> fmpq_mat:
    vec = sp.to_vec(arr)
    return la.qmat(np.asarray(vec, dtype=object).reshape(-1, 1))


def _check_skew(arr, tol: float = 0.0):
    diff = arr + arr.swapaxes(0, 1)
    if not _negligible(diff, tol):
        raise ValueError("torsion must be antisymmetric in its two arguments")


def intrinsic_representative(t, cache: TypeBasisCache):
    """The ``D``-component of ``t`` in ``D (+) im(delta)``."""
    arr = _torsion_entries(t)
    if 4 * cache.n != arr.shape[0]:
        raise ValueError("torsion and cache have different n")
    if _is_float(arr):
        _check_skew(arr, 1e-12)
        d_part, _ = _float_split(cache, arr)
        return torsion(cache.n, sp.from_vec(d_part, cache.n))
    _check_skew(arr)
    d_part, _ = cache.split_complement(_column(arr))
    return torsion(cache.n, sp.from_vec(la.to_fractions(d_part)[:, 0], cache.n))


def _float_split(cache: TypeBasisCache, arr):
    blocks = [cache.complement.basis(), cache.image.basis()]
    mats = [np.asarray(la.to_fractions(b), dtype=float) for b in blocks]
    full = np.hstack(mats)
    vec = sp.to_vec(arr).astype(float)
    coeffs = np.linalg.solve(full, vec)
    k = mats[0].shape[1]
    return mats[0] @ coeffs[:k], mats[1] @ coeffs[k:]


def _float_components(cache: TypeBasisCache, vec):
    mats = [np.asarray(la.to_fractions(cache.types[k]), dtype=float) for k in cache.names]
    full = np.hstack(mats)
    coeffs, *_ = np.linalg.lstsq(full, vec, rcond=None)
    out = {}
    start = 0
    for name, m in zip(cache.names, mats):
        out[name] = m @ coeffs[start:start + m.shape[1]]
        start += m.shape[1]
    return out


@dataclass
class TorsionReport:
    n: int
    group: str
    mode: str
    components: dict
    present: dict
    norms: dict
    label: str
    notes: tuple = ()

    @property
    def types(self) -> tuple:
        return tuple(k for k, v in self.present.items() if v)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "group": self.group,
            "field": self.mode,
            "type": self.label,
            "present": dict(self.present),
            "norms": {k: str(v) if isinstance(v, Fraction) else float(v) for k, v in self.norms.items()},
            "notes": list(self.notes),
        }


def type_label(present: Sequence[str]) -> str:
    if not present:
        return "torsion-free"
    return "X" + "".join(p[1:] for p in present)


def classify(t, cache: TypeBasisCache, tol: float = 1e-9) -> TorsionReport:
    """Components of the intrinsic torsion of ``t`` along the types of ``cache``."""
    arr = _torsion_entries(t)
    n = cache.n
    if _is_float(arr):
        _check_skew(arr, 1e-12)
        d_part, _ = _float_split(cache, arr)
        comps = _float_components(cache, d_part)
        scale = max(1.0, float(np.linalg.norm(sp.to_vec(arr))))
        norms = {k: float(np.linalg.norm(v)) for k, v in comps.items()}
        present = {k: norms[k] > tol * scale for k in cache.names}
        tensors = {k: torsion(n, sp.from_vec(v, n)) for k, v in comps.items()}
        mode = "float64"
    else:
        _check_skew(arr)
        d_part, _ = cache.split_complement(_column(arr))
        comps = cache.type_components(d_part)
        tensors = {}
        norms = {}
        present = {}
        for k in cache.names:
            vec = la.to_fractions(comps[k])[:, 0]
            tensors[k] = torsion(n, sp.from_vec(vec, n))
            norms[k] = sum((x * x for x in vec), Fraction(0))
            present[k] = norms[k] != 0
        mode = "rational"
    label = type_label([k for k in cache.names if present[k]])
    return TorsionReport(n, cache.group, mode, tensors, present, norms, label, cache.notes)


def reassemble(report: TorsionReport):
    """Sum of the components of a report (the intrinsic representative)."""
    total = None
    for comp in report.components.values():
        total = comp.entries if total is None else total + comp.entries
    return torsion(report.n, total)


def tr4_average(a, triple):
    """``1/3 sum_a Tr4`` over ``J1, J2, J3``: the Sp(1)-equivariant part of Tr4."""
    total = None
    for ja in _mats(triple):
        part = trace4(a, ja)
        total = part if total is None else total + part
    return sc(Fraction(1, 3), total)


def e_parameters(t, omega=None, triple=None):
    """``(zeta1, Z2^T)`` of the ``2[E Hh]`` block of an element of ``D(so*(2n))``.

    Recovered from ``Tr1``, ``Tr3`` and the averaged ``Tr4`` through the
    (A),(B) columns of the transition matrix; the third equation is checked.
    """
    arr = _torsion_entries(t)
    n = arr.shape[0] // 4
    omega = standard_omega(n) if omega is None else omega
    triple = standard_triple(n) if triple is None else triple
    tr1 = np.asarray(trace1(arr), dtype=object)
    tr3 = np.asarray(trace3(arr, omega), dtype=object)
    tr4 = np.asarray(tr4_average(arr, triple), dtype=object)
    # Tr1 = (1-4n) z1 - (2n-3)/4 Z ; Tr3 = -2 z1 + (2n+1)/2 Z ; Tr4 = z1 - (2n+1)/4 Z
    a11, a12 = Fraction(1 - 4 * n), Fraction(-(2 * n - 3), 4)
    a21, a22 = Fraction(-2), Fraction(2 * n + 1, 2)
    det = a11 * a22 - a12 * a21
    z1 = (a22 * tr1 - a12 * tr3) / det
    zt = (-a21 * tr1 + a11 * tr3) / det
    residual = tr4 - (z1 - Fraction(2 * n + 1, 4) * zt)
    if any(x != 0 for x in residual.flat):
        raise OutsideComplementError("trace system inconsistent: input not in D(so*(2n))")
    return z1, zt


def e_components_by_traces(t, cache: TypeBasisCache):
    """X4 and X7 components through pi4 and pi7 (so* group)."""
    if cache.group != "so_star":
        raise ValueError("the trace route resolves the two [E Hh] copies of the so* group")
    n = cache.n
    omega, triple = standard_omega(n), standard_triple(n)
    rep = intrinsic_representative(t, cache)
    z1, zt = e_parameters(rep, omega, triple)
    z2 = sharp(zt, omega)
    out = {}
    for name, val in (("X4", pi4(z1, z2, omega)), ("X7", pi7(z1, z2, omega, triple))):
        d_part, _ = cache.split_complement(_column(np.asarray(val, dtype=object)))
        out[name] = torsion(n, sp.from_vec(la.to_fractions(d_part)[:, 0], n))
    return out


# ---------------------------------------------------------------------------
# minimal connections


class PreconditionError(ValueError):
    """Inputs of a minimal-connection constructor violate its hypotheses."""


def _require_fixed_by_proj_H(t, triple, what: str, tol: float):
    arr = _torsion_entries(t)
    if not _negligible(np.asarray(proj_H(arr, triple)) - arr, tol):
        raise PreconditionError(f"{what} is not fixed by pi_H")
    return arr


def _check_nabla_omega(nabla, triple, tol: float):
    arr = np.asarray(_entries(nabla))
    if arr.ndim != 3:
        raise PreconditionError("nabla omega has three slots")
    if not _negligible(arr + arr.swapaxes(1, 2), tol):
        raise PreconditionError("nabla omega is not a 2-form in its last two slots")
    for ja in _mats(triple):
        moved = ein("xpq,py,qz->xyz", arr, ja, ja)
        if not _negligible(np.asarray(moved) - arr, tol):
            raise PreconditionError("nabla omega is not H-Hermitian in its last two slots")
    return arr


def connection_difference(nabla_omega, omega):
    """``A`` with ``omega(A(X, Y), Z) = 1/2 (nabla_X omega)(Y, Z)``."""
    return sc(Fraction(1, 2), raise_last(nabla_omega, omega))


def _tol_for(*arrs) -> float:
    return 1e-10 if any(_is_float(np.asarray(_entries(a))) for a in arrs) else 0.0


def minimal_hsH_torsion(t_h, nabla_omega, omega=None, triple=None):
    """Torsion ``T^H + delta(A)`` of the minimal connection of an hs-H structure."""
    n = np.asarray(_entries(nabla_omega)).shape[0] // 4
    omega = standard_omega(n) if omega is None else omega
    triple = standard_triple(n) if triple is None else triple
    tol = _tol_for(t_h, nabla_omega)
    arr = _require_fixed_by_proj_H(t_h, triple, "T^H", tol)
    nab = _check_nabla_omega(nabla_omega, triple, tol)
    out = arr + np.asarray(delta_of(connection_difference(nab, omega)))
    return torsion(n, out)


def qsH_correction(nabla_omega, omega, triple):
    """``A + pi_S(omega (x) Z3) + sum zeta4 o J_a (x) J_a`` with ``Z3, zeta4`` from ``Tr2(A)``."""
    n = np.asarray(_entries(nabla_omega)).shape[0] // 4
    a = connection_difference(nabla_omega, omega)
    tr2 = trace2(a)
    z3 = sharp(sc(Fraction(1, n + 1), tr2), omega)
    zeta4 = sc(Fraction(-1, 4 * (n + 1)), tr2)
    return (
        np.asarray(a)
        + np.asarray(component_tensors("C", z3, omega, triple))
        + np.asarray(component_tensors("D", zeta4, omega, triple))
    )


def minimal_qsH_torsion(t_q, nabla_omega, omega=None, triple=None):
    """Torsion of the minimal connection of a qs-H structure."""
    n = np.asarray(_entries(nabla_omega)).shape[0] // 4
    omega = standard_omega(n) if omega is None else omega
    triple = standard_triple(n) if triple is None else triple
    tol = _tol_for(t_q, nabla_omega)
    arr = _require_fixed_by_proj_H(t_q, triple, "T^Q", tol)
    for mu in TR4_SAMPLES:
        if not _negligible(np.asarray(trace4(arr, unit_structure(triple, mu))), tol):
            raise PreconditionError("T^Q has nonzero Tr4")
    nab = _check_nabla_omega(nabla_omega, triple, tol)
    out = arr + np.asarray(delta_of(qsH_correction(nab, omega, triple)))
    return torsion(n, out)


def sp1_normalization_residuals(t, omega=None, triple=None) -> dict:
    """``2 Tr1 + Tr3`` and ``Tr1 - Tr4`` (on the unit samples) of a torsion tensor."""
    arr = _torsion_entries(t)
    n = arr.shape[0] // 4
    omega = standard_omega(n) if omega is None else omega
    triple = standard_triple(n) if triple is None else triple
    tr1 = np.asarray(trace1(arr))
    out = {"2Tr1+Tr3": 2 * tr1 + np.asarray(trace3(arr, omega))}
    for mu in UNIT_SAMPLES:
        out["Tr1-Tr4[" + ",".join(str(Fraction(m)) for m in mu) + "]"] = tr1 - np.asarray(trace4(arr, unit_structure(triple, mu)))
    return out
