"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from percolab.lattice import AnnulusSpec, BondConfig, BoxSpec, Vertex, sample_config


def ring_cells(r: int):
    """Unit cells (lower-left corners) between the squares of half-sides r and r+1,
    in counter-clockwise order, with a flag marking the four corner cells."""
    cells = []
    for x in range(-r, r):
        cells.append(((x, -r - 1), False))
    cells.append(((r, -r - 1), True))
    for y in range(-r, r):
        cells.append(((r, y), False))
    cells.append(((r, r), True))
    for x in range(r - 1, -r - 1, -1):
        cells.append(((x, r), False))
    cells.append(((-r - 1, r), True))
    for y in range(r - 1, -r - 1, -1):
        cells.append(((-r - 1, y), False))
    cells.append(((-r - 1, -r - 1), True))
    return cells


def planted_circuit_edges(r: int, rng: np.random.Generator):
    """Boundary edges of [-r, r]^2 plus a random set of ring cells; a simple loop
    through vertices of norm r or r+1. Corner cells join only with both neighbours."""
    cells = ring_cells(r)
    k = len(cells)
    pick = rng.random(k) < 0.5
    for i, (_, corner) in enumerate(cells):
        if corner:
            pick[i] = pick[i - 1] and pick[(i + 1) % k]
    filled = {(x, y) for x in range(-r, r) for y in range(-r, r)}
    filled |= {c for (c, _), on in zip(cells, pick) if on}
    edges = set()
    for (x, y) in filled:
        for a, b, nb in (((x, y), (x + 1, y), (x, y - 1)), ((x, y + 1), (x + 1, y + 1), (x, y + 1)),
                         ((x, y), (x, y + 1), (x - 1, y)), ((x + 1, y), (x + 1, y + 1), (x + 1, y))):
            if nb not in filled:
                edges.add((Vertex(*a), Vertex(*b)))
    return edges


def planted_config(t: int, seed: int, p: float = 0.5) -> BondConfig:
    """Lambda_t with a random circuit in A_{t-2, t} forced open, other bonds iid."""
    box = BoxSpec(t)
    cfg = sample_config(box, p, seed)
    rng = np.random.default_rng(seed)
    g = box.grid
    idx = [g.bond_index(a, b) for a, b in planted_circuit_edges(t - 1, rng)]
    return cfg.with_states(np.array(idx), True)


def random_config(box, seed: int, p: float = 0.5) -> BondConfig:
    return sample_config(box, p, seed)


def annulus(m: int, t: int, cx: int = 0, cy: int = 0) -> AnnulusSpec:
    return AnnulusSpec(Vertex(cx, cy), m, t)
