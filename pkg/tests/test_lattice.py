import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import annulus, planted_config, random_config
from percolab import oracle
from percolab.lattice import (AnnulusSpec, BondConfig, BoxSpec, RectSpec, Vertex,
                              bond_endpoints, dual_crossing_exists, enumerate_bonds,
                              sample_config)


def test_bond_counts_small():
    assert enumerate_bonds(BoxSpec(0)) == []
    bonds = enumerate_bonds(BoxSpec(1))
    assert len(bonds) == 12
    assert sum(u.y == w.y for u, w in bonds) == 6
    assert len(enumerate_bonds(BoxSpec(2))) == 40


@given(st.integers(min_value=1, max_value=12))
@settings(max_examples=12, deadline=None)
def test_bond_count_formula(n):
    bonds = enumerate_bonds(BoxSpec(n))
    assert len(bonds) == 4 * n * (2 * n + 1)
    assert len(set(bonds)) == len(bonds)


def test_canonical_order_is_row_major_h_then_v():
    box = BoxSpec(2)
    expected = []
    for y in range(-2, 3):
        for x in range(-2, 3):
            if x < 2:
                expected.append((Vertex(x, y), Vertex(x + 1, y)))
            if y < 2:
                expected.append((Vertex(x, y), Vertex(x, y + 1)))
    assert enumerate_bonds(box) == expected


@given(st.integers(1, 7), st.integers(1, 7))
@settings(max_examples=30, deadline=None)
def test_bond_index_inverts_enumeration(w, h):
    rect = RectSpec(w, h, -3, 2)
    g = rect.grid
    for i, (u, v) in enumerate(enumerate_bonds(rect)):
        assert g.bond_index(u, v) == i
        assert g.bond_index(v, u) == i
    a, b = bond_endpoints(g)
    assert a.size == g.nbonds


def test_box_boundary_size():
    assert BoxSpec(0).boundary() == [Vertex(0, 0)]
    for n in (1, 2, 5):
        assert len(BoxSpec(n).boundary()) == 8 * n
        assert BoxSpec(n).nvertices == (2 * n + 1) ** 2


def test_annulus_vertex_set():
    ann = AnnulusSpec(Vertex(1, -1), 2, 4)
    verts = ann.vertices()
    assert len(verts) == 9 ** 2 - 5 ** 2
    assert all(2 < v.norm(ann.center) <= 4 for v in verts)
    with pytest.raises(ValueError):
        AnnulusSpec(Vertex(0, 0), 3, 3)


def test_sample_config_extremes_and_purity():
    box = BoxSpec(4)
    assert sample_config(box, 1.0, 99).states.all()
    assert not sample_config(box, 0.0, 99).states.any()
    a = sample_config(box, 0.5, 12345)
    b = sample_config(box, 0.5, 12345)
    assert np.array_equal(a.states, b.states) and a == b
    assert not np.array_equal(a.states, sample_config(box, 0.5, 12346).states)
    with pytest.raises(ValueError):
        sample_config(box, 1.2, 0)


def test_states_are_immutable():
    cfg = sample_config(BoxSpec(2), 0.5, 3)
    with pytest.raises(ValueError):
        cfg.states[0] = True
    flipped = cfg.with_bond(Vertex(0, 0), Vertex(1, 0), True)
    assert flipped.is_open(Vertex(0, 0), Vertex(1, 0))
    assert cfg.states.shape == flipped.states.shape


def test_open_fraction_n64():
    box = BoxSpec(64)
    fr = np.array([sample_config(box, 0.5, s).states.mean() for s in range(1000)])
    nb = box.grid.nbonds
    se = np.sqrt(0.25 / (nb * fr.size))
    assert abs(fr.mean() - 0.5) < 3 * se


def test_dual_crossing_trivial():
    box = BoxSpec(4)
    ann = AnnulusSpec(Vertex(0, 0), 1, 4)
    assert not dual_crossing_exists(BondConfig.all_open(box), ann)
    assert dual_crossing_exists(BondConfig.all_closed(box), ann)
    with pytest.raises(ValueError):
        dual_crossing_exists(BondConfig.all_open(box), AnnulusSpec(Vertex(1, 0), 1, 4))


@given(st.integers(0, 2 ** 32), st.integers(2, 5), st.booleans())
@settings(max_examples=150, deadline=None)
def test_duality_against_exhaustive_search(seed, m, planted):
    if planted:
        cfg, ann = planted_config(6, seed, 0.3), annulus(4, 6)
    else:
        cfg, ann = random_config(BoxSpec(6), seed, 0.5), annulus(m, 6)
    found = oracle.search_circuits(cfg, ann).count > 0
    assert dual_crossing_exists(cfg, ann) == (not found)
    assert found or not planted
