from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import TABLE_DIMS, left_mult, naive_delta, so_star_dim, torsion_dim
from sostar.lie_algebras import build_subalgebra
from sostar.spencer import (
    LAMBDA3_DECOMPOSITION,
    TABLE_MODULES,
    TORSION_DECOMPOSITION,
    cohomology_dims,
    decomposition_dim,
    dims_report,
    prolongation_dim,
    real_form_dim,
    rep_dim,
    spencer_delta,
)

small = st.integers(min_value=-2, max_value=2)


def test_delta_of_zero():
    d = 8
    out = spencer_delta([np.zeros((d, d), dtype=np.int64)] * d)
    assert not np.asarray(out.entries).any()


def test_delta_of_e1_tensor_j1():
    n, d = 2, 8
    j1 = np.array(left_mult(n, "i"), dtype=np.int64)
    alpha = [j1 if x == 0 else np.zeros((d, d), dtype=np.int64) for x in range(d)]
    t = np.asarray(spencer_delta(alpha, build_subalgebra("sp1", n)).entries)
    # T[x, y, k] is the k-th component of delta(alpha)(e_x, e_y); e4 is index 3
    assert [int(v) for v in t[0, 1]] == [0, 0, 0, 1, 0, 0, 0, 0]
    expected = naive_delta([[[int(v) for v in row] for row in m] for m in alpha])
    assert t.tolist() == expected


def test_delta_rejects_alpha_outside_algebra():
    d = 8
    alpha = [np.eye(d, dtype=np.int64)] + [np.zeros((d, d), dtype=np.int64)] * (d - 1)
    with pytest.raises(ValueError):
        spencer_delta(alpha, build_subalgebra("so_star", 2))


@given(st.lists(small, min_size=8 * 6, max_size=8 * 6))
def test_delta_antisymmetric_and_matches_naive(coeffs):
    alg = build_subalgebra("so_star", 2)
    gens = alg.integral_generators()
    alpha = [sum(c * g for c, g in zip(coeffs[6 * x:6 * x + 6], gens)) for x in range(8)]
    t = np.asarray(spencer_delta(alpha, alg).entries)
    assert np.array_equal(t, -t.swapaxes(0, 1))
    assert t.tolist() == naive_delta([[[int(v) for v in row] for row in m] for m in alpha])


def test_reports_n2():
    so = prolongation_dim(build_subalgebra("so_star", 2))
    assert (so.kernel_dim, so.image_dim, so.cohomology_dim) == (0, 48, 176)
    assert 176 == 2 * 8 + 3 * 32 + 4 * 8 + 32
    both = cohomology_dims(build_subalgebra("so_star_sp1", 2))
    assert (both.kernel_dim, both.image_dim, both.cohomology_dim) == (0, 72, 152)
    assert 152 == 64 + 16 + 32 + 8 + 32
    sp = prolongation_dim(build_subalgebra("sp_real", 2))
    assert sp.kernel_dim == comb(8 + 2, 3)
    for rep in (so, both, sp):
        assert rep.consistent


def test_report_so_star_n3():
    rep = cohomology_dims(build_subalgebra("so_star", 3))
    assert torsion_dim(3) == 792
    assert rep.kernel_dim == 0
    assert rep.image_dim == 12 * 15
    assert rep.cohomology_dim == 612 == 2 * (2 * 20) + 3 * (2 * 64) + 4 * (2 * 6) + 2 * 50
    assert rep.consistent


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("name", ["so_star", "so_star_sp1", "gl_quat"])
def test_delta_injective(name, n):
    alg = build_subalgebra(name, n)
    rep = prolongation_dim(alg)
    assert rep.kernel_dim == 0
    assert rep.image_dim == rep.domain_dim == 4 * n * alg.dim


@pytest.mark.parametrize("n", [2, 3, 4])
def test_rep_dims_match_table(n):
    for module in TABLE_MODULES:
        assert rep_dim(module, n) == TABLE_DIMS[n][module]


def test_named_rep_dims():
    assert rep_dim("K", 4) == 160
    assert rep_dim("Lambda3E", 3) == 20
    assert rep_dim("S3_0E", 2) == 16
    with pytest.raises(ValueError):
        rep_dim("S4E", 2)


def test_real_form_dims():
    assert real_form_dim("E", "Hh", 2) == 8
    assert real_form_dim("K", "S3Hh", 2) == 64
    assert real_form_dim("S2E", "none", 2) == 10
    assert 3 * real_form_dim("Lambda2E", "none", 2) + real_form_dim("S2E", "none", 2) == 28 == comb(8, 2)
    with pytest.raises(ValueError):
        real_form_dim("E", "none", 2)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_decomposition_sums(n):
    assert decomposition_dim(TORSION_DECOMPOSITION, n) == 8 * n * n * (4 * n - 1) == torsion_dim(n)
    assert decomposition_dim(LAMBDA3_DECOMPOSITION, n) == comb(4 * n, 3)
    report = dims_report(n)
    for entry in report["sums"].values():
        assert entry["expected"] == entry["sum"]
    assert so_star_dim(n) == rep_dim("Lambda2E", n)
