"""Brute-force references for tiny instances.

Nothing here shares code with the fast paths beyond the data types and the
canonical bond order: labeling is a plain breadth-first search and circuits
come from an exhaustive depth-first enumeration of simple cycles, with
surrounding decided by ray-crossing parity.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from ._accel import njit
from .circuit import Circuit
from .cluster import ClusterLabeling
from .lattice import AnnulusSpec, BondConfig, BoxSpec, RectSpec, Vertex, enumerate_bonds

MAX_ENUM_BONDS = 24
MAX_CIRCUIT_RADIUS = 6
MAX_CYCLES = 2_000_000


class InstanceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class ExactResult:
    """Exact expectation ``total / 2**bonds`` of a statistic at p = 1/2."""

    total: Fraction
    bonds: int
    statistic: str = ""

    @property
    def value(self) -> Fraction:
        return Fraction(self.total) / (1 << self.bonds)

    def __float__(self) -> float:
        return float(self.value)


def all_configs(box):
    """Every configuration of ``box``; bit i of the running index is bond i."""
    nb = box.grid.nbonds
    if nb > MAX_ENUM_BONDS:
        raise InstanceTooLarge(f"{nb} bonds exceeds the enumeration cutoff of {MAX_ENUM_BONDS}")
    shifts = np.arange(nb, dtype=np.int64)
    for code in range(1 << nb):
        states = ((code >> shifts) & 1).astype(bool)
        yield BondConfig(box, 0.5, states, None)


def enumerate_statistic(box, statistic: Callable[[BondConfig], object],
                        statistic_id: str = "") -> ExactResult:
    """Sum ``statistic`` over all 2**bonds configurations (exact, p = 1/2)."""
    if isinstance(box, int):
        box = BoxSpec(box)
    total = Fraction(0)
    for cfg in all_configs(box):
        total += Fraction(statistic(cfg))
    return ExactResult(total, box.grid.nbonds, statistic_id)


def exact_distribution(box, statistic: Callable[[BondConfig], object]) -> dict:
    """Law of a statistic over all configurations, as value -> exact probability."""
    counts: dict = {}
    nb = box.grid.nbonds
    for cfg in all_configs(box):
        v = statistic(cfg)
        counts[v] = counts.get(v, 0) + 1
    return {v: Fraction(c, 1 << nb) for v, c in sorted(counts.items())}


def reference_label(config: BondConfig) -> ClusterLabeling:
    """Breadth-first-search labeling, numbered by first vertex in row-major order."""
    g = config.grid
    W, H = g.width, g.height
    nbrs: list[list[int]] = [[] for _ in range(W * H)]
    for idx, (u, w) in enumerate(enumerate_bonds(config.box)):
        if config.states[idx]:
            iu, iw = g.index(u), g.index(w)
            nbrs[iu].append(iw)
            nbrs[iw].append(iu)
    labels = np.full(W * H, -1, np.int64)
    k = 0
    for s in range(W * H):
        if labels[s] >= 0:
            continue
        labels[s] = k
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for w in nbrs[v]:
                if labels[w] < 0:
                    labels[w] = k
                    queue.append(w)
        k += 1
    cols = np.arange(W * H) % W + g.x0
    rows = np.arange(W * H) // W + g.y0
    sizes = np.bincount(labels, minlength=k)
    xmin = np.full(k, cols.max())
    xmax = np.full(k, cols.min())
    ymin = np.full(k, rows.max())
    ymax = np.full(k, rows.min())
    np.minimum.at(xmin, labels, cols)
    np.maximum.at(xmax, labels, cols)
    np.minimum.at(ymin, labels, rows)
    np.maximum.at(ymax, labels, rows)
    return ClusterLabeling(config.box, labels.reshape(H, W), sizes, xmin, xmax, ymin, ymax)


def same_partition(a: np.ndarray, b: np.ndarray) -> bool:
    """Whether two label arrays describe the same partition, up to renaming."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    pairs = set(zip(a.tolist(), b.tolist()))
    return len(pairs) == len(set(a.tolist())) == len(set(b.tolist()))


def surrounds(cycle, center: Vertex) -> bool:
    """Ray parity: a rightward ray from the center at height +1/4 crosses the
    cycle an odd number of times."""
    k = len(cycle)
    hits = 0
    for i in range(k):
        a, b = cycle[i], cycle[(i + 1) % k]
        if a.x == b.x and a.x > center.x and min(a.y, b.y) == center.y:
            hits += 1
    return hits % 2 == 1


@njit
def _can_reach(src, dst, xi, xs, ys, indptr, indices, cx, cy, on, seen, queue):
    """Whether ``dst`` is reachable from ``src`` avoiding path vertices and the
    blocked crossing bonds; prunes dead-end branches of the enumeration."""
    seen[0] += 1
    mark = seen[0]
    head = 0
    tail = 1
    queue[0] = src
    seen[src + 1] = mark
    while head < tail:
        u = queue[head]
        head += 1
        for j in range(indptr[u], indptr[u + 1]):
            w = indices[j]
            if xs[u] == xs[w] and min(ys[u], ys[w]) == cy and xs[u] > cx and xs[u] <= xi:
                continue
            if w == dst:
                return True
            if on[w] or seen[w + 1] == mark:
                continue
            seen[w + 1] = mark
            queue[tail] = w
            tail += 1
    return False


@njit
def _surrounding_cycles(xs, ys, indptr, indices, cx, cy, cut_a, cut_b, limit, store, offsets):
    """Depth-first enumeration of every simple cycle crossing the ray
    {(x, cy + 1/4): x > cx} an odd number of times.

    A cycle is generated once, from the crossing bond ``i`` of smallest x it
    uses: as a simple path from ``cut_b[i]`` to ``cut_a[i]`` that avoids the
    crossing bonds at x <= x_i. Returns (count, twice the largest |area|,
    number of cycles attaining it, node list of the first such cycle's
    length); ``count`` is -1 past ``limit`` and -2 when ``store`` overflows.
    Cycles go to ``store``/``offsets`` while there is room (offsets[0] = 0);
    an empty ``store`` disables collection.
    """
    nn = xs.shape[0]
    on = np.zeros(nn, np.bool_)
    path = np.empty(nn, np.int64)
    ptr = np.empty(nn, np.int64)
    parity = np.zeros(nn, np.int64)
    area = np.zeros(nn, np.int64)
    best_path = np.empty(nn, np.int64)
    seen = np.zeros(nn + 1, np.int64)
    queue = np.empty(nn, np.int64)
    best_len = 0
    best = -1
    nbest = 0
    count = 0
    keep = store.shape[0] > 0
    used = 0 if keep else -1
    for i in range(cut_a.shape[0]):
        a = cut_a[i]
        b = cut_b[i]
        xi = xs[a]
        path[0] = b
        on[b] = True
        ptr[0] = indptr[b]
        parity[0] = 0
        area[0] = 0
        depth = 1
        while depth > 0:
            u = path[depth - 1]
            if ptr[depth - 1] == indptr[u + 1]:
                on[u] = False
                depth -= 1
                continue
            w = indices[ptr[depth - 1]]
            ptr[depth - 1] += 1
            cross = xs[u] == xs[w] and min(ys[u], ys[w]) == cy and xs[u] > cx
            if cross and xs[u] <= xi:
                continue
            step = xs[u] * ys[w] - xs[w] * ys[u]
            if w == a:
                if (parity[depth - 1] + cross) % 2 == 0:
                    count += 1
                    if count > limit:
                        return -1, best, nbest, best_path[:best_len]
                    ar = abs(area[depth - 1] + step + xs[a] * ys[b] - xs[b] * ys[a])
                    if ar > best:
                        best = ar
                        nbest = 1
                        best_path[:depth] = path[:depth]
                        best_path[depth] = a
                        best_len = depth + 1
                    elif ar == best:
                        nbest += 1
                    if used >= 0:
                        if used + depth + 1 <= store.shape[0] and count < offsets.shape[0]:
                            store[used:used + depth] = path[:depth]
                            store[used + depth] = a
                            used += depth + 1
                            offsets[count] = used
                        else:
                            used = -1
                continue
            if on[w]:
                continue
            if not _can_reach(w, a, xi, xs, ys, indptr, indices, cx, cy, on, seen, queue):
                continue
            on[w] = True
            path[depth] = w
            ptr[depth] = indptr[w]
            parity[depth] = parity[depth - 1] + cross
            area[depth] = area[depth - 1] + step
            depth += 1
    if keep and used < 0:
        return -2, best, nbest, best_path[:best_len]
    return count, best, nbest, best_path[:best_len]


@dataclass(frozen=True)
class CircuitSearch:
    """Outcome of the exhaustive search: circuit count and the largest-area circuit."""

    count: int
    outermost: Circuit | None
    circuits: tuple[Circuit, ...] | None = None


def _open_annulus_graph(config: BondConfig, annulus: AnnulusSpec):
    if annulus.outer > MAX_CIRCUIT_RADIUS:
        raise InstanceTooLarge(f"annulus outer radius {annulus.outer} > {MAX_CIRCUIT_RADIUS}")
    c = annulus.center
    verts = annulus.vertices()
    ids = {v: i for i, v in enumerate(verts)}
    nbrs: list[list[int]] = [[] for _ in verts]
    cuts = []
    for idx, (u, w) in enumerate(enumerate_bonds(config.box)):
        if config.states[idx] and u in ids and w in ids:
            nbrs[ids[u]].append(ids[w])
            nbrs[ids[w]].append(ids[u])
            if u.x == w.x and u.x > c.x and u.y == c.y:
                cuts.append((u.x, ids[u], ids[w]))
    cuts.sort()
    indptr = np.zeros(len(verts) + 1, np.int64)
    indptr[1:] = np.cumsum([len(x) for x in nbrs])
    indices = np.array([w for x in nbrs for w in x], np.int64)
    xs = np.array([v.x for v in verts], np.int64)
    ys = np.array([v.y for v in verts], np.int64)
    cut_a = np.array([a for _, a, _ in cuts], np.int64)
    cut_b = np.array([b for _, _, b in cuts], np.int64)
    return verts, xs, ys, indptr, indices, cut_a, cut_b


def search_circuits(config: BondConfig, annulus: AnnulusSpec, collect: bool = False,
                    max_cycles: int = MAX_CYCLES) -> CircuitSearch:
    """Exhaustively enumerate the open circuits around the annulus hole."""
    verts, xs, ys, indptr, indices, cut_a, cut_b = _open_annulus_graph(config, annulus)
    c = annulus.center
    cap = 1 << 16 if collect else 0
    while True:
        store = np.empty(cap, np.int64)
        offsets = np.zeros(cap // 4 + 1 if collect else 1, np.int64)
        count, best, nbest, best_path = _surrounding_cycles(
            xs, ys, indptr, indices, c.x, c.y, cut_a, cut_b, max_cycles, store, offsets)
        if count == -1:
            raise InstanceTooLarge(f"more than {max_cycles} open circuits")
        if count == -2:
            cap *= 4
            continue
        break
    if count == 0:
        return CircuitSearch(0, None, () if collect else None)
    if nbest != 1:
        raise RuntimeError("no unique circuit of maximal area")
    best_circ = Circuit.from_cycle([verts[i] for i in best_path], annulus)
    circuits = None
    if collect:
        circuits = tuple(Circuit.from_cycle([verts[i] for i in store[offsets[j]:offsets[j + 1]]],
                                            annulus) for j in range(count))
    return CircuitSearch(int(count), best_circ, circuits)


def all_open_circuits(config: BondConfig, annulus: AnnulusSpec,
                      max_cycles: int = MAX_CYCLES) -> list[Circuit]:
    """Every open circuit inside the annulus that surrounds its hole."""
    return list(search_circuits(config, annulus, True, max_cycles).circuits)


def shoelace2(cycle) -> int:
    k = len(cycle)
    return abs(sum(cycle[i].x * cycle[(i + 1) % k].y - cycle[(i + 1) % k].x * cycle[i].y
                   for i in range(k)))


def outermost(circuits: list[Circuit]) -> Circuit | None:
    """The circuit of largest enclosed area (the outermost one when it exists)."""
    if not circuits:
        return None
    areas = [shoelace2(c.cycle) for c in circuits]
    best = max(areas)
    winners = [c for c, a in zip(circuits, areas) if a == best]
    if len(winners) != 1:
        raise RuntimeError("no unique circuit of maximal area")
    return winners[0]


# exact statistics for the CLI and the acceptance suite, built on reference_label only

def _pi(cfg: BondConfig) -> int:
    lab = reference_label(cfg)
    n = cfg.box.n
    c = lab.cluster_of(cfg.box.center)
    ring = [lab.cluster_of(v) for v in cfg.box.boundary()]
    return int(n >= 1 and c in ring)


def _span(cfg: BondConfig) -> int:
    lab = reference_label(cfg)
    g = cfg.grid
    left = set(lab.labels[:, 0].tolist())
    right = set(lab.labels[:, g.width - 1].tolist())
    return int(bool(left & right))


def _span_size(cfg: BondConfig) -> int:
    lab = reference_label(cfg)
    g = cfg.grid
    both = set(lab.labels[:, 0].tolist()) & set(lab.labels[:, g.width - 1].tolist())
    return int(np.isin(lab.labels, list(both)).sum()) if both else 0


def _c1(cfg: BondConfig) -> int:
    return int(reference_label(cfg).sizes.max())


def _allconn(cfg: BondConfig) -> int:
    return int(reference_label(cfg).sizes.size == 1)


def _gap0(cfg: BondConfig) -> int:
    s = sorted(reference_label(cfg).sizes.tolist(), reverse=True) + [0]
    return int(s[0] == s[1])


STATISTICS: dict[str, Callable[[BondConfig], int]] = {
    "pi": _pi,
    "span": _span,
    "span_size": _span_size,
    "c1": _c1,
    "allconn": _allconn,
    "gap0": _gap0,
}


def exact(stat: str, n: int | None = None, rect: tuple[int, int] | None = None) -> ExactResult:
    """Exact value of a registered statistic on Lambda_n or a width x height rectangle."""
    if stat not in STATISTICS:
        raise KeyError(f"unknown statistic {stat!r}; choose from {sorted(STATISTICS)}")
    box = BoxSpec(n) if rect is None else RectSpec(*rect)
    if stat == "pi" and not isinstance(box, BoxSpec):
        raise ValueError("pi is defined on boxes only")
    return enumerate_statistic(box, STATISTICS[stat], stat)
