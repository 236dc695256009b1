"""Open circuits in annuli, good boxes, interior contributions and region H."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import rng
from ._accel import njit, pick
from ._dual import INNER, OUTER, classify_faces
from .cluster import ClusterLabeling, _find
from .lattice import AnnulusSpec, BondConfig, BoxSpec, Vertex, check_annulus_inside


def signed_area2(cycle) -> int:
    """Twice the signed area of a closed lattice polygon (positive if counter-clockwise)."""
    s = 0
    k = len(cycle)
    for i in range(k):
        a, b = cycle[i], cycle[(i + 1) % k]
        s += a.x * b.y - b.x * a.y
    return s


@dataclass(frozen=True)
class Circuit:
    """A closed loop of nearest-neighbour vertices inside an annulus.

    Stored canonically: counter-clockwise, starting at the vertex that is
    smallest in row-major order. Two circuits with the same edges compare equal.
    """

    cycle: tuple[Vertex, ...]
    annulus: AnnulusSpec

    @classmethod
    def from_cycle(cls, vertices, annulus: AnnulusSpec) -> "Circuit":
        cyc = list(vertices)
        if len(cyc) > 1 and cyc[0] == cyc[-1]:
            cyc = cyc[:-1]
        if signed_area2(cyc) < 0:
            cyc.reverse()
        start = min(range(len(cyc)), key=lambda i: (cyc[i].y, cyc[i].x))
        return cls(tuple(cyc[start:] + cyc[:start]), annulus)

    def __len__(self) -> int:
        return len(self.cycle)

    def edges(self) -> frozenset[tuple[Vertex, Vertex]]:
        k = len(self.cycle)
        return frozenset(tuple(sorted((self.cycle[i], self.cycle[(i + 1) % k]))) for i in range(k))

    @cached_property
    def geometry(self) -> "CircuitGeometry":
        return CircuitGeometry(self)

    def interior(self) -> list[Vertex]:
        return self.geometry.interior_vertices()

    def winding_around_center(self) -> int:
        g = self.geometry
        t = g.t
        return int(g.winding[2 * t, 2 * t])

    def validate(self, config: BondConfig | None = None) -> None:
        """Raise ValueError unless every stated circuit invariant holds."""
        k = len(self.cycle)
        if k < 4 or len(set(self.cycle)) != k:
            raise ValueError("circuit must be a simple cycle of length >= 4")
        for i in range(k):
            a, b = self.cycle[i], self.cycle[(i + 1) % k]
            if abs(a.x - b.x) + abs(a.y - b.y) != 1:
                raise ValueError(f"{a} and {b} are not nearest neighbours")
            if not self.annulus.contains(a):
                raise ValueError(f"{a} is not in {self.annulus}")
            if config is not None and not config.is_open(a, b):
                raise ValueError(f"bond {a}-{b} is closed")
        if self.winding_around_center() != 1:
            raise ValueError("circuit does not wind once around the annulus center")


def winding_numbers(cycle, center: Vertex, t: int) -> np.ndarray:
    """Winding numbers of ``cycle`` on the doubled grid over Lambda_t(center).

    Cell ``[Q, P]`` is the point ``center - (t, t) + (P, Q) / 2``, so vertices,
    bond midpoints and plaquette centres are all represented. Values at points
    on the cycle itself are meaningless. Integer arithmetic throughout: a
    rightward ray from each point, nudged up by a quarter unit, counts signed
    crossings of the cycle's vertical edges.
    """
    side = 4 * t + 1
    crossings = np.zeros((side, side + 1), np.int64)
    k = len(cycle)
    ox, oy = center.x - t, center.y - t
    for i in range(k):
        a, b = cycle[i], cycle[(i + 1) % k]
        if a.x != b.x:
            continue
        sign = 1 if b.y > a.y else -1
        col = 2 * (a.x - ox)
        low = 2 * (min(a.y, b.y) - oy)
        crossings[low, col] += sign
        crossings[low + 1, col] += sign
    # winding[Q, P] = sum of crossings[Q, X] over X > P
    tail = np.cumsum(crossings[:, ::-1], axis=1)[:, ::-1]
    return tail[:, 1:]


class CircuitGeometry:
    """Interior masks and interior bond list of a circuit, in local coordinates.

    Local vertex index of ``(x, y)`` is ``(y - cy + t) * (2t+1) + (x - cx + t)``
    over the window Lambda_t(center), t the annulus outer radius.
    """

    def __init__(self, circuit: Circuit):
        ann = circuit.annulus
        self.circuit = circuit
        self.center = ann.center
        self.t = t = ann.outer
        self.side = side = 2 * t + 1
        cx, cy = self.center.x, self.center.y
        self.winding = winding_numbers(circuit.cycle, self.center, t)

        on = np.zeros((4 * t + 1, 4 * t + 1), bool)
        k = len(circuit.cycle)
        for i in range(k):
            a, b = circuit.cycle[i], circuit.cycle[(i + 1) % k]
            pa = (2 * (a.y - cy + t), 2 * (a.x - cx + t))
            on[pa] = True
            on[a.y + b.y - 2 * cy + 2 * t, a.x + b.x - 2 * cx + 2 * t] = True
        inside = (self.winding != 0) & ~on
        self.on_doubled = on
        self.inside_doubled = inside

        self.circuit_mask = on[::2, ::2].copy()
        self.interior_mask = inside[::2, ::2].copy()
        self.circuit_idx = np.array(sorted((v.y - cy + t) * side + (v.x - cx + t)
                                           for v in circuit.cycle), np.int64)
        ys, xs = np.mgrid[-t:t + 1, -t:t + 1]
        self.norm = np.maximum(np.abs(xs), np.abs(ys))

        # bonds whose midpoint is strictly inside: the interior bonds
        hr, hc = np.nonzero(inside[::2, 1::2])      # (x,y)-(x+1,y) at local col hc, row hr
        vr, vc = np.nonzero(inside[1::2, ::2])      # (x,y)-(x,y+1)
        a = np.concatenate([hr * side + hc, vr * side + vc])
        b = np.concatenate([hr * side + hc + 1, (vr + 1) * side + vc])
        order = np.lexsort((b, a))
        self.bond_a = a[order].astype(np.int64)
        self.bond_b = b[order].astype(np.int64)

    def interior_vertices(self) -> list[Vertex]:
        t, cx, cy = self.t, self.center.x, self.center.y
        rows, cols = np.nonzero(self.interior_mask)
        return [Vertex(int(c) - t + cx, int(r) - t + cy) for r, c in zip(rows, cols)]

    def interior_size(self) -> int:
        return int(self.interior_mask.sum())

    def global_vertices(self, local_idx):
        t, side = self.t, self.side
        r, c = np.divmod(np.asarray(local_idx), side)
        return c - t + self.center.x, r - t + self.center.y

    def interior_bond_indices(self, config: BondConfig) -> np.ndarray:
        """Canonical indices in ``config`` of the interior bonds (same order as bond_a)."""
        g = config.grid
        ax, ay = self.global_vertices(self.bond_a)
        bx, by = self.global_vertices(self.bond_b)
        col, row = ax - g.x0, ay - g.y0
        horiz = by == ay
        return np.where(horiz, g.h_index(col, row), g.v_index(col, row))

    def zone_mask(self, inner_radius: int) -> np.ndarray:
        """Interior vertices with norm > inner_radius (the A_{r,t} part)."""
        return self.interior_mask & (self.norm > inner_radius)


@njit
def interior_counts_numba(nloc, circuit_idx, interior, zone, bond_a, bond_b, open_):
    parent = np.arange(nloc)
    root0 = circuit_idx[0]
    for i in range(1, circuit_idx.shape[0]):
        ra = _find(parent, root0)
        rb = _find(parent, circuit_idx[i])
        if ra != rb:
            parent[rb] = ra
    for e in range(bond_a.shape[0]):
        if open_[e]:
            ra = _find(parent, bond_a[e])
            rb = _find(parent, bond_b[e])
            if ra != rb:
                parent[rb] = ra
    r0 = _find(parent, root0)
    x = 0
    z = 0
    for v in range(nloc):
        if interior[v] and _find(parent, v) == r0:
            x += 1
            if zone[v]:
                z += 1
    return x, z


def interior_counts_numpy(nloc, circuit_idx, interior, zone, bond_a, bond_b, open_):
    star = np.full(circuit_idx.size - 1, circuit_idx[0])
    a = np.concatenate([bond_a[open_], star])
    b = np.concatenate([bond_b[open_], circuit_idx[1:]])
    g = coo_matrix((np.ones(a.size, np.int8), (a, b)), shape=(nloc, nloc))
    _, labels = connected_components(g, directed=False)
    hit = interior & (labels == labels[circuit_idx[0]])
    return int(hit.sum()), int((hit & zone).sum())


@njit
def resample_counts_numba(nloc, circuit_idx, interior, zone, bond_a, bond_b, seeds, threshold):
    nb = bond_a.shape[0]
    open_ = np.empty(nb, np.bool_)
    xs = np.empty(seeds.shape[0], np.int64)
    zs = np.empty(seeds.shape[0], np.int64)
    for r in range(seeds.shape[0]):
        rng.fill_open_numba(seeds[r], threshold, open_)
        x, z = interior_counts_numba(nloc, circuit_idx, interior, zone, bond_a, bond_b, open_)
        xs[r] = x
        zs[r] = z
    return xs, zs


def resample_counts_numpy(nloc, circuit_idx, interior, zone, bond_a, bond_b, seeds, threshold):
    open_ = np.empty(bond_a.size, np.bool_)
    xs = np.empty(seeds.size, np.int64)
    zs = np.empty(seeds.size, np.int64)
    for r, s in enumerate(seeds):
        rng.fill_open_numpy(s, threshold, open_)
        xs[r], zs[r] = interior_counts_numpy(nloc, circuit_idx, interior, zone, bond_a, bond_b, open_)
    return xs, zs


def _counts(config: BondConfig, circuit: Circuit, zone_radius: int) -> tuple[int, int]:
    geo = circuit.geometry
    check_annulus_inside(config, circuit.annulus)
    open_ = config.states[geo.interior_bond_indices(config)]
    fn = pick(interior_counts_numba, interior_counts_numpy)
    x, z = fn(geo.side ** 2, geo.circuit_idx, geo.interior_mask.ravel(),
              geo.zone_mask(zone_radius).ravel(), geo.bond_a, geo.bond_b, open_)
    return int(x), int(z)


def interior_connected_count(config: BondConfig, circuit: Circuit) -> int:
    """X_gamma: interior vertices joined to the circuit by open interior bonds."""
    return _counts(config, circuit, 0)[0]


def annulus_interior_count(config: BondConfig, circuit: Circuit, t: int) -> int:
    """Z: as X_gamma, restricted to interior vertices of A_{t/3, t}(center)."""
    if t % 3 or circuit.annulus.outer != t:
        raise ValueError("annulus_interior_count needs t in 3N equal to the circuit's outer radius")
    c = circuit.annulus.center
    if any(not 2 * t // 3 < v.norm(c) <= t for v in circuit.cycle):
        raise ValueError("circuit must lie in A_{2t/3, t}")
    return _counts(config, circuit, t // 3)[1]


def trace_circuit(face: np.ndarray, annulus: AnnulusSpec) -> Circuit:
    """The open circuit separating INNER from OUTER faces, as a Circuit."""
    t = annulus.outer
    cx, cy = annulus.center.x, annulus.center.y
    inner = face == INNER
    outer = face == OUTER
    succ: dict[tuple[int, int], tuple[int, int]] = {}
    # horizontal bonds (x,y)-(x+1,y): face above at row y+t+1, below at row y+t
    above_in = inner[1:, 1:-1]
    below_in = inner[:-1, 1:-1]
    above_out = outer[1:, 1:-1]
    below_out = outer[:-1, 1:-1]
    for r, c in zip(*np.nonzero(above_in & below_out)):
        x, y = c - t, r - t
        succ[(x, y)] = (x + 1, y)
    for r, c in zip(*np.nonzero(below_in & above_out)):
        x, y = c - t, r - t
        succ[(x + 1, y)] = (x, y)
    # vertical bonds (x,y)-(x,y+1): face left at col x+t, right at col x+t+1
    left_in = inner[1:-1, :-1]
    right_in = inner[1:-1, 1:]
    left_out = outer[1:-1, :-1]
    right_out = outer[1:-1, 1:]
    for r, c in zip(*np.nonzero(left_in & right_out)):
        x, y = c - t, r - t
        succ[(x, y)] = (x, y + 1)
    for r, c in zip(*np.nonzero(right_in & left_out)):
        x, y = c - t, r - t
        succ[(x, y + 1)] = (x, y)
    start = min(succ, key=lambda v: (v[1], v[0]))
    cycle = [start]
    v = succ[start]
    while v != start:
        cycle.append(v)
        v = succ[v]
    if len(cycle) != len(succ):
        raise RuntimeError("face boundary is not a single simple loop")
    return Circuit.from_cycle([Vertex(int(x) + cx, int(y) + cy) for x, y in cycle], annulus)


def outermost_open_circuit(config: BondConfig, annulus: AnnulusSpec) -> Circuit | None:
    """The open circuit in the annulus with the largest interior, or None."""
    check_annulus_inside(config, annulus)
    face = classify_faces(config, annulus)
    t = annulus.outer
    if face[t, t] == OUTER:
        return None
    return trace_circuit(face, annulus)


@dataclass(frozen=True, order=True)
class GoodBoxIndex:
    i: int
    j: int
    t: int

    @property
    def center(self) -> Vertex:
        return Vertex(2 * self.t * self.i, 2 * self.t * self.j)

    @property
    def annulus(self) -> AnnulusSpec:
        return AnnulusSpec(self.center, 2 * self.t // 3, self.t)


def check_scale(box, t: int) -> None:
    if not isinstance(box, BoxSpec):
        raise ValueError("good boxes are defined for square boxes only")
    if t < 3 or t % 3:
        raise ValueError(f"t must be a positive multiple of 3, got {t}")
    if 2 * t > box.n:
        raise ValueError(f"need 2t <= n, got t={t}, n={box.n}")


def box_indices(box: BoxSpec, t: int) -> list[GoodBoxIndex]:
    """Every (i, j) with Lambda_t(2ti, 2tj) inside the box, sorted."""
    check_scale(box, t)
    c, n, w = box.center, box.n, 2 * t
    # |2ti - cx| + t <= n, ceil division for the lower end
    irange = range(-((n - t - c.x) // w), (c.x + n - t) // w + 1)
    jrange = range(-((n - t - c.y) // w), (c.y + n - t) // w + 1)
    return [GoodBoxIndex(i, j, t) for i in irange for j in jrange]


def good_boxes(config: BondConfig, t: int) -> dict[GoodBoxIndex, Circuit]:
    """Good boxes at scale t, each mapped to its outermost circuit gamma_{i,j}."""
    out = {}
    for gb in box_indices(config.box, t):
        circ = outermost_open_circuit(config, gb.annulus)
        if circ is not None:
            out[gb] = circ
    return out


def good_boxes_of_cluster(config: BondConfig, labeling: ClusterLabeling, cluster: int, t: int,
                          boxes: dict[GoodBoxIndex, Circuit] | None = None
                          ) -> dict[GoodBoxIndex, Circuit]:
    """G_t of a cluster: good boxes whose circuit lies entirely in the cluster."""
    labeling.check(cluster)
    boxes = good_boxes(config, t) if boxes is None else boxes
    g = labeling.grid
    out = {}
    for gb, circ in boxes.items():
        xs = np.array([v.x for v in circ.cycle]) - g.x0
        ys = np.array([v.y for v in circ.cycle]) - g.y0
        if np.all(labeling.labels[ys, xs] == cluster):
            out[gb] = circ
    return out


def region_H(config: BondConfig, t: int,
             boxes: dict[GoodBoxIndex, Circuit] | None = None) -> np.ndarray:
    """Boolean mask over the box: vertices outside every good-box circuit interior."""
    boxes = good_boxes(config, t) if boxes is None else boxes
    g = config.grid
    mask = np.ones((g.height, g.width), bool)
    for circ in boxes.values():
        geo = circ.geometry
        c = circ.annulus.center
        r0 = c.y - geo.t - g.y0
        c0 = c.x - geo.t - g.x0
        window = mask[r0:r0 + geo.side, c0:c0 + geo.side]
        if not window[geo.interior_mask].all():
            raise RuntimeError("good-box interiors overlap")
        window[geo.interior_mask] = False
    return mask


@dataclass(frozen=True)
class Decomposition:
    h_part: int
    circuit_parts: dict[GoodBoxIndex, int]

    @property
    def total(self) -> int:
        return self.h_part + sum(self.circuit_parts.values())


def decompose_cluster_size(config: BondConfig, labeling: ClusterLabeling, cluster: int, t: int,
                           boxes: dict[GoodBoxIndex, Circuit] | None = None) -> Decomposition:
    """Split |D| into |D cap H| plus X_gamma over the cluster's good boxes."""
    labeling.check(cluster)
    diam = int(labeling.diameters[cluster])
    if diam <= 2 * t:
        raise ValueError(f"cluster {cluster} has diameter {diam} <= 2t = {2 * t}; "
                         "it could sit inside a circuit interior")
    boxes = good_boxes(config, t) if boxes is None else boxes
    H = region_H(config, t, boxes)
    h_part = int((labeling.labels[H] == cluster).sum())
    mine = good_boxes_of_cluster(config, labeling, cluster, t, boxes)
    parts = {gb: interior_connected_count(config, circ) for gb, circ in mine.items()}
    return Decomposition(h_part, parts)
