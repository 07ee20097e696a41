import math
from fractions import Fraction

import numpy as np
import pytest

from oracles import coords, qconj, qmul
from sostar import linalg as la
from sostar.bases import (
    ADAPTED,
    BasisChange,
    BasisError,
    adapted_basis_from_triple,
    darboux_certificate,
    darboux_matrix,
    darboux_parity_obstruction,
    darboux_product,
    quat_gram_schmidt,
    rotate_to_j,
    skew_hermitian_basis,
)
from sostar.model_space import (
    HypercomplexTriple,
    mat_inverse,
    random_rational,
    skew_hermitian_form,
    standard_omega,
    standard_omega_matrix,
    standard_triple,
)
from sostar.scalars_quat import FLOAT, I, J, ONE, QuatMatrix, Quaternion


def _random_invertible(rng, d):
    while True:
        g = random_rational(rng, (d, d))
        if la.rank(la.qmat(g)) == d:
            return g


def _as_tuple(q):
    return tuple(q.coeffs)


def _qclose(a, b, tol):
    return all(abs(float(x) - float(y)) <= tol for x, y in zip(a.coeffs, b.coeffs))


# adapted bases


def test_standard_triple_gives_identity():
    n = 2
    change = adapted_basis_from_triple(standard_triple(n))
    assert change.kind == ADAPTED
    assert np.array_equal(change.matrix, np.eye(4 * n, dtype=object))


def test_conjugated_triple_is_standardized(rng):
    n = 2
    g = _random_invertible(rng, 4 * n)
    ginv = mat_inverse(g)
    std = standard_triple(n)
    conj = HypercomplexTriple(*(g @ np.asarray(m) @ ginv for m in std))
    change = adapted_basis_from_triple(conj)
    c, cinv = change.matrix, mat_inverse(change.matrix)
    for m, s in zip(conj, std):
        assert np.array_equal(cinv @ np.asarray(m) @ c, np.asarray(s))


def test_flipped_j3_is_rejected():
    j1, j2, j3 = standard_triple(2)
    with pytest.raises(ValueError):
        HypercomplexTriple(j1, j2, -np.asarray(j3))


def test_singular_basis_change_is_rejected():
    with pytest.raises((BasisError, ZeroDivisionError, ValueError)):
        BasisChange(1, np.zeros((4, 4), dtype=object), ADAPTED)


def test_adapted_round_trip_reproduces_triple(rng):
    n = 2
    g = _random_invertible(rng, 4 * n)
    ginv = mat_inverse(g)
    conj = HypercomplexTriple(*(g @ np.asarray(m) @ ginv for m in standard_triple(n)))
    change = adapted_basis_from_triple(conj)
    c, cinv = change.matrix, mat_inverse(change.matrix)
    for m, s in zip(conj, standard_triple(n)):
        assert np.array_equal(c @ np.asarray(s) @ cinv, np.asarray(m))


def test_skew_hermitian_basis_float_round_trip(rng):
    n = 2
    g = _random_invertible(rng, 4 * n)
    ginv = mat_inverse(g)
    conj = HypercomplexTriple(*(np.asarray(g @ np.asarray(m) @ ginv, dtype=float) for m in standard_triple(n)))
    omega = np.asarray(ginv.T @ standard_omega_matrix(n) @ ginv, dtype=float)
    change = skew_hermitian_basis(omega, conj)
    assert change.check(omega, conj)
    assert np.allclose(change.bilinear(omega).astype(float), standard_omega_matrix(n).astype(float), atol=1e-9)


def test_skew_hermitian_basis_exact_when_rational():
    n = 2
    omega = standard_omega_matrix(n)
    change = skew_hermitian_basis(omega, standard_triple(n))
    assert np.array_equal(change.bilinear(omega), omega)


# Gram-Schmidt


def test_rotation_of_i_to_j():
    q = rotate_to_j(Quaternion(0.0, 1.0))
    expected = (Quaternion(1.0) - Quaternion(0.0, 0.0, 0.0, 1.0)) / math.sqrt(2)
    assert _qclose(q, expected, 1e-12)
    # independent expansion of ((1 - k)/sqrt 2)^- i ((1 - k)/sqrt 2)
    p = (1, 0, 0, -1)
    prod = qmul(qmul(qconj(p), (0, 1, 0, 0)), p)
    assert tuple(Fraction(x, 2) for x in prod) == (0, 0, 1, 0)
    assert _qclose(q.conj() * Quaternion(0.0, 1.0) * q, Quaternion(0.0, 0.0, 1.0), 1e-12)


def test_rotation_fallback_for_minus_j():
    q = rotate_to_j(Quaternion(0.0, 0.0, -1.0))
    assert _qclose(q.conj() * Quaternion(0.0, 0.0, -1.0) * q, Quaternion(0.0, 0.0, 1.0), 1e-12)


def test_gram_schmidt_j_is_fixed():
    c = quat_gram_schmidt(QuatMatrix([[J]]))
    assert c == QuatMatrix([[ONE]])


def test_gram_schmidt_diag_float():
    h = QuatMatrix([[J, Quaternion(0)], [Quaternion(0), I * 2]])
    c = quat_gram_schmidt(h, FLOAT)
    out = c.conj_transpose() @ QuatMatrix([[Quaternion(*(float(x) for x in q.coeffs)) for q in row] for row in h.tolist()]) @ c
    target = QuatMatrix.identity(2, FLOAT).scale_left(Quaternion(0.0, 0.0, 1.0))
    assert (out - target).max_abs() <= 1e-10


def _random_skew_hermitian(rng, n):
    rows = [[None] * n for _ in range(n)]
    for s in range(n):
        rows[s][s] = Quaternion(0.0, *rng.normal(size=3))
        for t in range(s + 1, n):
            q = Quaternion(*rng.normal(size=4))
            rows[s][t] = q
            rows[t][s] = -q.conj()
    return QuatMatrix(rows)


def test_gram_schmidt_random_float(rng):
    target = Quaternion(0.0, 0.0, 1.0)
    for trial in range(100):
        n = 1 + trial % 4
        h = _random_skew_hermitian(rng, n)
        c = quat_gram_schmidt(h, FLOAT)
        out = c.conj_transpose() @ h @ c
        ident = QuatMatrix.identity(n, FLOAT).scale_left(target)
        assert (out - ident).max_abs() <= 1e-10


def test_gram_schmidt_exact_diagonal(rng):
    for n in (1, 2, 3):
        for _ in range(5):
            rows = [[None] * n for _ in range(n)]
            for s in range(n):
                rows[s][s] = Quaternion(0, *(Fraction(int(v)) for v in rng.integers(-3, 4, size=3)))
                for t in range(s + 1, n):
                    q = Quaternion(*(Fraction(int(v)) for v in rng.integers(-3, 4, size=4)))
                    rows[s][t] = q
                    rows[t][s] = -q.conj()
            h = QuatMatrix(rows)
            try:
                c = quat_gram_schmidt(h)
            except ValueError:
                continue  # degenerate draw
            out = c.conj_transpose() @ h @ c
            for s in range(n):
                assert out[s, s].w == 0 and out[s, s].norm2() != 0
                for t in range(n):
                    if s != t:
                        assert out[s, t] == Quaternion(0)


def test_gram_schmidt_needs_off_diagonal_step():
    # zero diagonal: the anisotropic vector mixes the two basis vectors
    h = QuatMatrix([[Quaternion(0), ONE], [-ONE, Quaternion(0)]])
    c = quat_gram_schmidt(h, FLOAT)
    out = c.conj_transpose() @ h @ c
    assert (out - QuatMatrix.identity(2, FLOAT).scale_left(Quaternion(0.0, 0.0, 1.0))).max_abs() <= 1e-10


def test_gram_schmidt_rejects_bad_input():
    with pytest.raises(ValueError):
        quat_gram_schmidt(QuatMatrix([[ONE]]))
    with pytest.raises(ValueError):
        quat_gram_schmidt(QuatMatrix([[Quaternion(0)]]))


# Darboux bases


def test_darboux_displayed_product_m1():
    assert darboux_product(1) == QuatMatrix([[Quaternion(0), ONE], [-ONE, Quaternion(0)]])
    c = darboux_matrix(1)
    star = c.conj_transpose()
    half = Fraction(1, 2)
    assert star == QuatMatrix([[Quaternion(0, 0, 0, half), Quaternion(0, 0, half, 0)], [-I, -ONE]])


def test_darboux_product_m2():
    zero = Quaternion(0)
    expected = QuatMatrix(
        [
            [zero, zero, ONE, zero],
            [zero, zero, zero, ONE],
            [-ONE, zero, zero, zero],
            [zero, -ONE, zero, zero],
        ]
    )
    assert darboux_product(2) == expected


def test_darboux_matrix_invertible():
    c = darboux_matrix(1)
    # inverse from C* (j Id) C = S: C^{-1} = S^{-1} C* j
    s_inv = QuatMatrix([[Quaternion(0), -ONE], [ONE, Quaternion(0)]])
    inv = s_inv @ c.conj_transpose() @ QuatMatrix.diag([J, J])
    assert inv @ c == QuatMatrix.identity(2)
    assert c @ inv == QuatMatrix.identity(2)


@pytest.mark.parametrize("n,expected", [(1, False), (2, True), (3, False), (4, True), (5, False)])
def test_darboux_parity(n, expected):
    assert darboux_parity_obstruction(n) is expected
    assert darboux_certificate(n).solvable is expected


def test_darboux_matrix_rejects_zero():
    with pytest.raises(ValueError):
        darboux_matrix(0)


# the form in a skew-Hermitian basis


def test_left_space_form_is_x_j_ybar():
    n = 2
    h = skew_hermitian_form(standard_omega(n), standard_triple(n))
    d = 4 * n
    for x in range(d):
        for y in range(d):
            vx = np.zeros(d, dtype=np.int64)
            vy = np.zeros(d, dtype=np.int64)
            vx[x] = vy[y] = 1
            total = (0, 0, 0, 0)
            for s in range(n):
                qx = tuple(int(vx[i]) for i in coords(n, s))
                qy = tuple(int(vy[i]) for i in coords(n, s))
                p = qmul(qmul(qx, (0, 0, 1, 0)), qconj(qy))
                total = tuple(a + b for a, b in zip(total, p))
            real, imag = h(vx, vy)
            assert (real, *imag) == total
