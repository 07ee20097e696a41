from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import left_mult, naive_delta, omega0, signature_by_pivots
from sostar import linalg as la
from sostar import tensors as tn
from sostar.lie_algebras import action_rows, build_subalgebra, quartic_invariants_dim
from sostar.model_space import (
    HypercomplexTriple,
    NotScalarError,
    e,
    f,
    fundamental_4tensor,
    hermitian_conditions,
    is_scalar_2form,
    lower,
    metric_for_J,
    metrics_from,
    raise_,
    random_rational,
    signature,
    skew_hermitian_form,
    standard_omega,
    standard_omega_matrix,
    standard_triple,
    symplectic_transpose,
    two_form,
)
from sostar.spencer import spencer_delta

small = st.fractions(min_value=-3, max_value=3, max_denominator=4)


def test_triple_matches_left_multiplication():
    for n in (1, 2, 3):
        t = standard_triple(n)
        for unit, m in zip("ijk", t):
            assert (np.asarray(m, dtype=object) == np.array(left_mult(n, unit), dtype=object)).all()


def test_j1_sends_e1_to_e2_for_n1():
    j1 = standard_triple(1).J1
    assert list(j1[:, 0]) == [0, 1, 0, 0]


def test_triple_relations():
    for n in (1, 2, 3, 4):
        j1, j2, j3 = standard_triple(n)
        assert (j1 @ j2 == j3).all()
        assert (j2 @ j2 == -np.eye(4 * n, dtype=object)).all()


def test_wrong_sign_triple_rejected():
    j1, j2, j3 = standard_triple(2)
    with pytest.raises(ValueError):
        HypercomplexTriple(j1, j2, -j3)


def test_omega_values():
    w = standard_omega(2).entries
    assert w[0, 4] == 1  # omega(e1, f1)
    assert w[0, 1] == 0  # omega(e1, e2)
    assert w[4, 0] == -1  # omega(f1, e1)
    assert (standard_omega_matrix(3) == np.array(omega0(3))).all()


def test_metric_values_n1():
    g1, g2, _ = metrics_from(standard_omega(1), standard_triple(1))
    assert g2.entries[0, 0] == 1
    assert g1.entries[0, 0] == 0


def test_metric_signature_n2():
    _, g2, _ = metrics_from(standard_omega(2), standard_triple(2))
    assert signature(g2.entries) == (4, 4)


def test_metric_for_basis_direction():
    w, t = standard_omega(2), standard_triple(2)
    assert metric_for_J(w, t, (0, 1, 0)).equals(metrics_from(w, t)[1])


@given(small, small, small)
def test_metric_block_n1(m1, m2, m3):
    if m1 == m2 == m3 == 0:
        return
    g = metric_for_J(standard_omega(1), standard_triple(1), (m1, m2, m3)).entries
    want = [[m2, m3, 0, -m1], [m3, -m2, m1, 0], [0, m1, m2, m3], [-m1, 0, m3, -m2]]
    assert (g == np.array(want, dtype=object)).all()


def test_signature_for_pythagorean_direction():
    for n in (2, 3):
        mu = (Fraction(3, 5), Fraction(4, 5), 0)
        g = metric_for_J(standard_omega(n), standard_triple(n), mu).entries
        assert signature(g) == (2 * n, 2 * n)
        assert signature_by_pivots(g.tolist()) == (2 * n, 2 * n)


@given(st.tuples(small, small, small).filter(lambda m: any(m)))
def test_signature_split_random_directions(mu):
    for n in (2, 3):
        g = metric_for_J(standard_omega(n), standard_triple(n), mu).entries
        assert signature(g) == (2 * n, 2 * n)


def test_metrics_not_norden():
    for n in (1, 2, 3, 4):
        w, t = standard_omega(n), standard_triple(n)
        gs = metrics_from(w, t)
        for a, g in enumerate(gs):
            ge = g.entries
            assert tn.check_symmetry(ge, tn.SYMMETRIC)
            for b, jb in enumerate(t):
                moved = jb.T @ ge @ jb
                if a == b:
                    assert (moved == ge).all()
                else:
                    assert not (moved == ge).all()


def test_skew_hermitian_form_values():
    h = skew_hermitian_form(standard_omega(1), standard_triple(1))
    real, _ = h(e(1, 1), f(1, 1))
    assert real == 1
    real, imag = h(e(1, 1), e(1, 1))
    assert real == 0
    assert imag == (0, 1, 0)


def test_skew_hermitian_real_part_vanishes_on_diagonal(rng):
    h = skew_hermitian_form(standard_omega(2), standard_triple(2))
    for _ in range(10):
        x = random_rational(rng, (8,))
        assert h(x, x)[0] == 0


def test_skew_hermitian_tensor_components():
    w, t = standard_omega(2), standard_triple(2)
    h = skew_hermitian_form(w, t)
    big = h.as_tensor().entries
    gs = metrics_from(w, t)
    # trace against J_a recovers -8 g_a, against Id gives 8 omega
    assert (np.einsum("xykk->xy", big) == 8 * w.entries).all()
    for g, ja in zip(gs, t):
        assert (np.einsum("xykl,lk->xy", big, ja) == -8 * g.entries).all()


def test_phi_value_and_symmetry():
    phi = fundamental_4tensor(standard_omega(2), standard_triple(2)).entries
    assert phi[0, 0, 0, 0] == 1
    for p in permutations(range(4)):
        assert (phi.transpose(p) == phi).all()


def _naive_phi_value(gs, x, y, z, w):
    total = Fraction(0)
    for g in gs:
        total += (x @ g @ y) * (z @ g @ w) + (x @ g @ z) * (y @ g @ w) + (x @ g @ w) * (y @ g @ z)
    return total / 3


def test_phi_identity_on_random_vectors(rng):
    n = 2
    j = [np.array(left_mult(n, u), dtype=object) for u in "ijk"]
    w0 = np.array(omega0(n), dtype=object)
    gs = [w0 @ ja for ja in j]
    phi = fundamental_4tensor(standard_omega(n), standard_triple(n)).entries
    for _ in range(5):
        x, y, z, w = (random_rational(rng, (8,)) for _ in range(4))
        lhs = np.einsum("abcd,a,b,c,d->", phi, x, y, z, w)
        assert lhs == _naive_phi_value(gs, x, y, z, w)


def test_scalar_form_predicate():
    n = 2
    w, t = standard_omega(n), standard_triple(n)
    assert is_scalar_2form(w, t)
    g2 = metrics_from(w, t)[1].entries
    res = is_scalar_2form(g2, t)
    assert not res and res.reason == "not antisymmetric"
    bad = standard_omega_matrix(n).astype(object)
    bad[0, 1] += Fraction(1, 10)
    bad[1, 0] -= Fraction(1, 10)
    res = is_scalar_2form(bad, t)
    assert not res
    assert res.condition == 5
    a, i, k = res.witness
    ja = t.mats[a - 1]
    assert (ja.T @ bad @ ja)[i, k] != bad[i, k]


def test_non_scalar_raises_with_condition():
    bad = standard_omega_matrix(2).astype(object)
    bad[0, 1], bad[1, 0] = 1, -1
    with pytest.raises(NotScalarError) as exc:
        skew_hermitian_form(bad, standard_triple(2))
    assert exc.value.condition == 5


def test_hermitian_conditions_all_hold():
    assert all(hermitian_conditions(standard_omega(2), standard_triple(2)).values())


def test_symplectic_transpose():
    n = 2
    w = standard_omega(n)
    s0 = standard_omega_matrix(n)
    assert (symplectic_transpose(s0, w) == s0).all()
    for ja in standard_triple(n):
        assert (symplectic_transpose(ja, w) == ja).all()


@given(st.integers(0, 2**31))
def test_symplectic_transpose_is_linear_adjoint(seed):
    rng = np.random.default_rng(seed)
    w = standard_omega(2)
    a, b = random_rational(rng, (8, 8)), random_rational(rng, (8, 8))
    at = symplectic_transpose(a, w)
    assert (symplectic_transpose(a + b, w) == at + symplectic_transpose(b, w)).all()
    x, y = random_rational(rng, (8,)), random_rational(rng, (8,))
    we = w.entries
    assert (at @ x) @ we @ y == -(x @ we @ (a @ y))


def test_lower_raise():
    n = 2
    w = standard_omega(n)
    zero = np.zeros((8, 8, 8), dtype=np.int64)
    assert tn.is_zero(lower(zero, w))


@given(st.integers(0, 2**31))
def test_raise_inverts_lower(seed):
    rng = np.random.default_rng(seed)
    w = standard_omega(2)
    phi = random_rational(rng, (8, 8, 8))
    assert (raise_(lower(phi, w), w) == phi).all()


def test_lowered_delta_value():
    n = 2
    j1 = np.array(left_mult(n, "i"), dtype=object)
    alpha = [j1 if x == 0 else np.zeros((8, 8), dtype=object) for x in range(8)]
    low = lower(spencer_delta(alpha).entries, standard_omega(n))
    naive = np.array(naive_delta([m.tolist() for m in alpha]), dtype=object)
    assert (spencer_delta(alpha).entries == naive).all()
    assert low[0, 1, 5] == 0  # omega(J1 e2, f2) = omega(e4, f2)


def test_quartic_invariant_is_unique():
    for n in (2, 3):
        assert quartic_invariants_dim(build_subalgebra("so_star_sp1", n)) == 1


def _pure_type_elements(n):
    """Symmetric rho invariant under J1, J2, J3 (quaternionic-Hermitian metrics)."""
    t = standard_triple(n)
    j1, j2, j3 = t
    d = 4 * n
    eqs = []
    for ja in (j1, j2, j3):
        for x in range(d):
            for y in range(d):
                row = np.zeros((d, d), dtype=np.int64)
                for p in range(d):
                    for q in range(d):
                        row[p, q] += ja[p, x] * ja[q, y]
                row[x, y] -= 1
                eqs.append(row.ravel())
    for x in range(d):
        for y in range(x + 1, d):
            row = np.zeros((d, d), dtype=np.int64)
            row[x, y], row[y, x] = 1, -1
            eqs.append(row.ravel())
    ker = la.to_fractions(la.kernel_int(np.array(eqs)))
    return [ker[:, c].reshape(d, d) for c in range(ker.shape[1])]


def test_action_on_phi_for_pure_elements(rng):
    n = 2
    w, t = standard_omega(n), standard_triple(n)
    we = w.entries
    winv = -we
    gs = [g.entries for g in metrics_from(w, t)]
    phi = fundamental_4tensor(w, t)
    rhos = _pure_type_elements(n)
    assert len(rhos) == n * (2 * n - 1)
    for _ in range(3):
        c = random_rational(rng, (len(rhos),))
        rho = sum((ci * r for ci, r in zip(c, rhos)), np.zeros((8, 8), dtype=object))
        if not any(rho.flat):
            continue
        # omega(A x, y) = rho(x, J2 y); this pairing is antisymmetric, so A lies
        # in the complement of sp(omega)
        a = winv.T @ (rho @ t.J2).T
        low = a.T @ we
        assert (low == -low.T).all()
        act = lambda tensor: (action_rows(tensor.astype(object)) @ a.ravel()).reshape(tensor.shape)
        assert not any(act(gs[0]).flat) and not any(act(gs[2]).flat)
        assert (act(gs[1]) == 2 * rho).all()
        sym = np.zeros((8,) * 4, dtype=object)
        for (p, q, r, s) in ((0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2)):
            sym = sym + np.einsum(f"{'xyzw'[p]}{'xyzw'[q]},{'xyzw'[r]}{'xyzw'[s]}->xyzw", rho, gs[1])
            sym = sym + np.einsum(f"{'xyzw'[p]}{'xyzw'[q]},{'xyzw'[r]}{'xyzw'[s]}->xyzw", gs[1], rho)
        want = 4 * sym / 6
        got = act(phi.entries)
        assert (got == want).all()
        assert any(got.flat)


def test_two_form_rejects_symmetric():
    with pytest.raises(ValueError):
        two_form(1, np.eye(4, dtype=np.int64))
