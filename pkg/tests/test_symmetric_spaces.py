import numpy as np
import pytest

from oracles import PAIR_DIMS
from sostar.lie_algebras import SubalgebraBasis, intersect, normalizer_of_span, stabilizer
from sostar.symmetric_spaces import (
    DESK_PARAMS,
    build_pair,
    canonical_torsion,
    cartan_relations,
    invariant_structure,
    negative_control,
)
from sostar.torsion_lab import build_type_bases, classify

PAIRS = [(f, p) for f, plist in DESK_PARAMS.items() for p in plist]


@pytest.fixture(scope="module")
def pairs():
    return {key: build_pair(*key) for key in PAIRS}


@pytest.mark.parametrize("key", PAIRS, ids=lambda k: f"{k[0]}{k[1]}")
def test_dims_and_cartan_relations(pairs, key):
    pair = pairs[key]
    assert pair.dims == PAIR_DIMS[key]
    assert pair.dims[2] == 4 * pair.quaternionic_dim
    assert all(cartan_relations(pair).values())


@pytest.mark.parametrize("key", PAIRS, ids=lambda k: f"{k[0]}{k[1]}")
def test_invariant_structure_certificate(pairs, key):
    inv = invariant_structure(pairs[key])
    assert inv.ok, inv.certificate
    assert inv.certificate["scalar 2-form check"]


@pytest.mark.parametrize("key", PAIRS, ids=lambda k: f"{k[0]}{k[1]}")
def test_negative_control(pairs, key):
    assert negative_control(pairs[key]) != 0


@pytest.mark.parametrize("key", PAIRS, ids=lambda k: f"{k[0]}{k[1]}")
def test_canonical_torsion_vanishes(pairs, key):
    t = canonical_torsion(pairs[key])
    assert not any(x != 0 for x in t.flat)


def test_zero_torsion_classified_torsion_free(pairs):
    cache = build_type_bases(2, "so_star_sp1")
    for key, pair in pairs.items():
        if pair.quaternionic_dim == 2:
            assert classify(canonical_torsion(pair), cache).label == "torsion-free"


@pytest.mark.parametrize("key", PAIRS, ids=lambda k: f"{k[0]}{k[1]}")
def test_isotropy_preserves_structure(pairs, key):
    pair = pairs[key]
    inv = invariant_structure(pair)
    d = pair.dims[2]
    stab = stabilizer(np.asarray(inv.omega, dtype=object), n=d // 4)
    norm = normalizer_of_span([np.asarray(q, dtype=object) for q in inv.Q])
    both = intersect(stab, norm)
    iso = SubalgebraBasis(d // 4, "isotropy", [pair.restricted(pair.l[:, j]) for j in range(pair.l.shape[1])])
    assert iso.span() <= both.span()


def test_unknown_family():
    with pytest.raises(ValueError):
        build_pair("so", (2,))
