from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import annulus, planted_config, random_config
from percolab import oracle
from percolab.circuit import (Circuit, annulus_interior_count, box_indices, decompose_cluster_size,
                              good_boxes, good_boxes_of_cluster, interior_connected_count,
                              outermost_open_circuit, region_H, winding_numbers)
from percolab.cluster import label_clusters
from percolab.lattice import (AnnulusSpec, BondConfig, BoxSpec, Vertex, dual_crossing_exists,
                              enumerate_bonds)


def inside(cycle, v: Vertex) -> bool:
    """Even-odd ray casting with the ray raised by a quarter unit; v not on the cycle."""
    k = len(cycle)
    hits = 0
    for i in range(k):
        a, b = cycle[i], cycle[(i + 1) % k]
        if a.x == b.x and a.x > v.x and min(a.y, b.y) == v.y:
            hits += 1
    return hits % 2 == 1


def bfs_interior_count(config, circuit, zone=None):
    """Interior vertices reached from the circuit through bonds inside int + circuit."""
    on = set(circuit.cycle)
    box = config.box
    t = circuit.annulus.outer
    c = circuit.annulus.center
    cand = [Vertex(x, y) for x in range(c.x - t, c.x + t + 1) for y in range(c.y - t, c.y + t + 1)]
    interior = {v for v in cand if v not in on and inside(circuit.cycle, v)}
    allowed = interior | on
    nbrs = {v: [] for v in allowed}
    for i, (u, w) in enumerate(enumerate_bonds(box)):
        if config.states[i] and u in allowed and w in allowed:
            nbrs[u].append(w)
            nbrs[w].append(u)
    seen = set(on)
    q = deque(on)
    while q:
        u = q.popleft()
        for w in nbrs[u]:
            if w not in seen:
                seen.add(w)
                q.append(w)
    reached = seen & interior
    if zone is not None:
        reached = {v for v in reached if v.norm(c) > zone}
    return len(reached), interior


def test_all_open_a23():
    box = BoxSpec(3)
    ann = AnnulusSpec(Vertex(0, 0), 2, 3)
    cfg = BondConfig.all_open(box)
    circ = outermost_open_circuit(cfg, ann)
    assert set(circ.cycle) == set(box.boundary())
    assert len(circ.interior()) == 25
    assert set(circ.interior()) == {Vertex(x, y) for x in range(-2, 3) for y in range(-2, 3)}
    assert interior_connected_count(cfg, circ) == 25
    circ.validate(cfg)
    assert outermost_open_circuit(BondConfig.all_closed(box), ann) is None


def test_interior_closed_gives_zero():
    box = BoxSpec(3)
    ann = AnnulusSpec(Vertex(0, 0), 2, 3)
    cfg = BondConfig.all_open(box)
    circ = outermost_open_circuit(cfg, ann)
    # close every bond with an endpoint strictly inside
    idx = [i for i, (u, w) in enumerate(enumerate_bonds(box)) if u.norm() < 3 or w.norm() < 3]
    shut = cfg.with_states(np.array(idx), False)
    assert outermost_open_circuit(shut, ann) == circ
    assert interior_connected_count(shut, circ) == 0
    assert annulus_interior_count(shut, circ, 3) == 0


@given(st.integers(0, 2 ** 32), st.sampled_from([3, 4, 5, 6]))
@settings(max_examples=120, deadline=None)
def test_outermost_matches_exhaustive_oracle(seed, t):
    cfg = planted_config(t, seed, 0.3) if seed % 2 else random_config(BoxSpec(t), seed, 0.7)
    ann = annulus(t - 2, t)
    circ = outermost_open_circuit(cfg, ann)
    search = oracle.search_circuits(cfg, ann)
    assert (circ is None) == (search.count == 0) == dual_crossing_exists(cfg, ann)
    if circ is not None:
        circ.validate(cfg)
        assert circ == search.outermost


def test_outermost_contains_every_other_circuit():
    for s in range(40):
        cfg = planted_config(5, s, 0.35)
        ann = annulus(2, 5)
        circ = outermost_open_circuit(cfg, ann)
        inner_sets = [set(c.interior()) | set(c.cycle) for c in oracle.all_open_circuits(cfg, ann)]
        mine = set(circ.interior()) | set(circ.cycle)
        assert all(s2 <= mine for s2 in inner_sets)


@given(st.integers(0, 2 ** 32), st.sampled_from([6, 9, 12]))
@settings(max_examples=40, deadline=None)
def test_interior_counts_match_bfs(seed, t):
    cfg = planted_config(t, seed, 0.5)
    circ = outermost_open_circuit(cfg, annulus(t - 2, t))
    x, interior = bfs_interior_count(cfg, circ)
    assert set(circ.interior()) == interior
    assert interior_connected_count(cfg, circ) == x
    z, _ = bfs_interior_count(cfg, circ, zone=t // 3)
    assert annulus_interior_count(cfg, circ, t) == z <= x


def test_winding_numbers_on_square():
    verts = [Vertex(x, -2) for x in range(-2, 2)] + [Vertex(2, y) for y in range(-2, 2)] + \
            [Vertex(x, 2) for x in range(2, -2, -1)] + [Vertex(-2, y) for y in range(2, -2, -1)]
    circ = Circuit.from_cycle(verts, AnnulusSpec(Vertex(0, 0), 1, 2))
    assert circ.winding_around_center() == 1
    # doubled grid over Lambda_3: cell [Q, P] is the point (-3 + P/2, -3 + Q/2)
    w = winding_numbers(circ.cycle, Vertex(0, 0), 3)
    assert w[6, 6] == 1
    assert w[3, 3] == 1 and w[9, 2 * 3 + 3] == 1
    assert w[0, 0] == 0 and w[1, 1] == 0 and w[6, 12] == 0 and w[12, 6] == 0
    rev = winding_numbers(circ.cycle[::-1], Vertex(0, 0), 3)
    assert rev[6, 6] == -1


@given(st.integers(0, 2 ** 32))
@settings(max_examples=40, deadline=None)
def test_x_gamma_is_interior_measurable(seed):
    t = 6
    cfg = planted_config(t, seed, 0.5)
    circ = outermost_open_circuit(cfg, annulus(t - 2, t))
    x = interior_connected_count(cfg, circ)
    allowed = set(circ.interior()) | set(circ.cycle)
    outside = [i for i, (u, w) in enumerate(enumerate_bonds(cfg.box))
               if not (u in allowed and w in allowed)]
    flipped = cfg.with_states(np.array(outside), ~cfg.states[outside])
    assert interior_connected_count(flipped, circ) == x


def test_good_boxes_trivial():
    box = BoxSpec(18)
    assert len(good_boxes(BondConfig.all_open(box), 3)) == len(box_indices(box, 3)) == 25
    assert good_boxes(BondConfig.all_closed(box), 3) == {}
    with pytest.raises(ValueError):
        good_boxes(BondConfig.all_open(box), 4)
    with pytest.raises(ValueError):
        good_boxes(BondConfig.all_open(box), 12)


def test_good_boxes_of_cluster_trivial_and_containment():
    box = BoxSpec(12)
    cfg = BondConfig.all_open(box)
    lab = label_clusters(cfg)
    assert len(good_boxes_of_cluster(cfg, lab, 0, 3)) == len(box_indices(box, 3))
    # keep only the circuit around box (0, 0) and an isolated cluster inside it
    keep = set()
    ring = AnnulusSpec(Vertex(0, 0), 2, 3)
    verts = BoxSpec(3).boundary()
    for u, w in enumerate_bonds(box):
        if u in verts and w in verts:
            keep.add((u, w))
    keep.add((Vertex(0, 0), Vertex(1, 0)))
    states = [pair in keep for pair in enumerate_bonds(box)]
    cfg = BondConfig.from_states(box, states)
    lab = label_clusters(cfg)
    boxes = good_boxes(cfg, 3)
    assert [gb.annulus for gb in boxes] == [ring]
    inner = lab.cluster_of(Vertex(0, 0))
    assert good_boxes_of_cluster(cfg, lab, inner, 3) == {}
    outer = lab.cluster_of(Vertex(3, 3))
    assert list(good_boxes_of_cluster(cfg, lab, outer, 3)) == list(boxes)
    with pytest.raises(KeyError):
        good_boxes_of_cluster(cfg, lab, lab.n_clusters, 3)


def test_good_boxes_of_cluster_vertex_by_vertex():
    box = BoxSpec(12)
    for s in range(60):
        cfg = random_config(box, s, 0.7)
        lab = label_clusters(cfg)
        boxes = good_boxes(cfg, 6)
        for c in range(lab.n_clusters):
            members = set(lab.members(c)) if lab.sizes[c] >= 20 else None
            if members is None:
                continue
            got = set(good_boxes_of_cluster(cfg, lab, c, 6, boxes))
            want = {gb for gb, circ in boxes.items() if all(v in members for v in circ.cycle)}
            assert got == want


def test_region_h_trivial_and_partition():
    box = BoxSpec(9)
    assert region_H(BondConfig.all_closed(box), 3).all()
    H = region_H(BondConfig.all_open(box), 3)
    assert H.sum() == 19 ** 2 - 25 * len(box_indices(box, 3))
    for s in range(40):
        cfg = random_config(BoxSpec(18), s, 0.7)
        boxes = good_boxes(cfg, 6)
        H = region_H(cfg, 6, boxes)
        assert H.sum() + sum(len(c.interior()) for c in boxes.values()) == 37 ** 2


def test_decomposition_trivial_cases():
    box = BoxSpec(12)
    cfg = BondConfig.all_open(box)
    lab = label_clusters(cfg)
    d = decompose_cluster_size(cfg, lab, 0, 3)
    assert d.total == 25 ** 2
    # a straight open row: diameter 24 > 6, no good boxes, everything lies in H
    states = [u.y == 0 and w.y == 0 for u, w in enumerate_bonds(box)]
    cfg = BondConfig.from_states(box, states)
    lab = label_clusters(cfg)
    c = lab.cluster_of(Vertex(0, 0))
    d = decompose_cluster_size(cfg, lab, c, 3)
    assert d.circuit_parts == {} and d.h_part == 25
    with pytest.raises(ValueError):
        decompose_cluster_size(cfg, lab, lab.cluster_of(Vertex(0, 1)), 3)


@given(st.integers(0, 2 ** 32), st.sampled_from([0.5, 0.65, 0.8]))
@settings(max_examples=30, deadline=None)
def test_decomposition_identity_random(seed, p):
    cfg = random_config(BoxSpec(18), seed, p)
    lab = label_clusters(cfg)
    boxes = good_boxes(cfg, 3)
    for c in np.flatnonzero(lab.diameters > 6):
        d = decompose_cluster_size(cfg, lab, int(c), 3, boxes)
        assert d.total == lab.sizes[c]


def test_good_box_probability_translation_invariant():
    box = BoxSpec(36)
    idx = box_indices(box, 6)
    assert len(idx) == 25
    reps = 1500
    counts = np.zeros(len(idx))
    for s in range(reps):
        g = good_boxes(random_config(box, s, 0.85), 6)
        counts += [gb in g for gb in idx]
    freq = counts / reps
    pooled = freq.mean()
    se = np.sqrt(pooled * (1 - pooled) / reps)
    # two-lane annuli essentially never close at p = 1/2 (see the regression below),
    # so the invariance check runs where boxes are common
    assert pooled > 0.2
    assert np.all(np.abs(freq - pooled) < 3 * se)


def test_good_box_probability_p_half_regression():
    # pilot: no good box among 25 boxes x 10^4 configurations at n=36, t=6
    box = BoxSpec(36)
    found = sum(len(good_boxes(random_config(box, s, 0.5), 6)) for s in range(10 ** 4))
    assert found == 0
