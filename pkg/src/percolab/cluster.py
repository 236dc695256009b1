"""Open clusters and the statistics read off them.

Cluster identifiers are canonical: clusters are numbered 0, 1, ... in the
row-major order of their first vertex, so identifier order is also the
tie-break order "smallest canonical vertex first".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ._accel import njit, pick
from .lattice import BondConfig, BoxSpec, Grid, Vertex, bond_endpoints


@njit
def _find(parent, v):
    while parent[v] != v:
        parent[v] = parent[parent[v]]
        v = parent[v]
    return v


@njit
def union_find_into(states, W, H, parent, rank_size, labels):
    """Label vertices of a W x H grid into ``labels``; returns the cluster count.

    Union by size with path halving. ``parent`` and ``rank_size`` are scratch.
    """
    N = W * H
    for v in range(N):
        parent[v] = v
        rank_size[v] = 1
    b = 0
    for r in range(H):
        for c in range(W):
            v = r * W + c
            if c < W - 1:
                if states[b]:
                    ra = _find(parent, v)
                    rb = _find(parent, v + 1)
                    if ra != rb:
                        if rank_size[ra] < rank_size[rb]:
                            ra, rb = rb, ra
                        parent[rb] = ra
                        rank_size[ra] += rank_size[rb]
                b += 1
            if r < H - 1:
                if states[b]:
                    ra = _find(parent, v)
                    rb = _find(parent, v + W)
                    if ra != rb:
                        if rank_size[ra] < rank_size[rb]:
                            ra, rb = rb, ra
                        parent[rb] = ra
                        rank_size[ra] += rank_size[rb]
                b += 1
    # canonical renumbering; rank_size is reused as root -> label map
    for v in range(N):
        rank_size[v] = -1
    k = 0
    for v in range(N):
        root = _find(parent, v)
        if rank_size[root] < 0:
            rank_size[root] = k
            k += 1
        labels[v] = rank_size[root]
    return k


@njit
def cluster_extents(labels, W, k, sizes, xmin, xmax, ymin, ymax):
    for i in range(k):
        sizes[i] = 0
        xmin[i] = W
        xmax[i] = -1
        ymin[i] = 1 << 30
        ymax[i] = -1
    for v in range(labels.shape[0]):
        lab = labels[v]
        c = v % W
        r = v // W
        sizes[lab] += 1
        if c < xmin[lab]:
            xmin[lab] = c
        if c > xmax[lab]:
            xmax[lab] = c
        if r < ymin[lab]:
            ymin[lab] = r
        if r > ymax[lab]:
            ymax[lab] = r


@njit
def label_numba(states, W, H):
    N = W * H
    parent = np.empty(N, np.int64)
    scratch = np.empty(N, np.int64)
    labels = np.empty(N, np.int64)
    k = union_find_into(states, W, H, parent, scratch, labels)
    sizes = np.empty(k, np.int64)
    xmin = np.empty(k, np.int64)
    xmax = np.empty(k, np.int64)
    ymin = np.empty(k, np.int64)
    ymax = np.empty(k, np.int64)
    cluster_extents(labels, W, k, sizes, xmin, xmax, ymin, ymax)
    return labels, sizes, xmin, xmax, ymin, ymax


def canonical_relabel(raw: np.ndarray) -> tuple[np.ndarray, int]:
    """Renumber arbitrary component ids by first occurrence."""
    _, first, inverse = np.unique(raw, return_index=True, return_inverse=True)
    rank = np.empty(first.size, np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inverse.ravel()], first.size


def label_numpy(states, W, H):
    grid = Grid(0, 0, W, H)
    a, b = bond_endpoints(grid)
    open_ = np.asarray(states, bool)
    g = coo_matrix((np.ones(int(open_.sum()), np.int8), (a[open_], b[open_])), shape=(W * H, W * H))
    _, raw = connected_components(g, directed=False)
    labels, k = canonical_relabel(raw)
    cols = np.arange(W * H) % W
    rows = np.arange(W * H) // W
    sizes = np.bincount(labels, minlength=k).astype(np.int64)
    xmin = np.full(k, W, np.int64)
    xmax = np.full(k, -1, np.int64)
    ymin = np.full(k, 1 << 30, np.int64)
    ymax = np.full(k, -1, np.int64)
    np.minimum.at(xmin, labels, cols)
    np.maximum.at(xmax, labels, cols)
    np.minimum.at(ymin, labels, rows)
    np.maximum.at(ymax, labels, rows)
    return labels, sizes, xmin, xmax, ymin, ymax


@dataclass(frozen=True, eq=False)
class ClusterLabeling:
    """Partition of the vertices of a configuration's region into open clusters.

    ``labels`` has shape (height, width) indexed ``[y - y0, x - x0]``;
    ``xmin``/``xmax`` are absolute first coordinates.
    """

    box: object
    labels: np.ndarray
    sizes: np.ndarray
    xmin: np.ndarray
    xmax: np.ndarray
    ymin: np.ndarray
    ymax: np.ndarray

    @property
    def grid(self) -> Grid:
        return self.box.grid

    @property
    def n_clusters(self) -> int:
        return int(self.sizes.size)

    @property
    def diameters(self) -> np.ndarray:
        return self.xmax - self.xmin

    def cluster_of(self, v: Vertex) -> int:
        g = self.grid
        return int(self.labels[v.y - g.y0, v.x - g.x0])

    def mask(self, cluster: int) -> np.ndarray:
        return self.labels == cluster

    def members(self, cluster: int) -> list[Vertex]:
        g = self.grid
        rows, cols = np.nonzero(self.labels == cluster)
        return [Vertex(g.x0 + int(c), g.y0 + int(r)) for r, c in zip(rows, cols)]

    def check(self, cluster: int) -> None:
        if not 0 <= cluster < self.n_clusters:
            raise KeyError(f"unknown cluster {cluster}")


def label_clusters(config: BondConfig) -> ClusterLabeling:
    g = config.grid
    labels, sizes, xmin, xmax, ymin, ymax = pick(label_numba, label_numpy)(
        config.states, g.width, g.height)
    arrays = [np.asarray(labels).reshape(g.height, g.width), sizes, xmin + g.x0, xmax + g.x0,
              ymin + g.y0, ymax + g.y0]
    for arr in arrays:
        arr.flags.writeable = False
    return ClusterLabeling(config.box, *arrays)


def ranked_clusters(labeling: ClusterLabeling) -> np.ndarray:
    """Cluster ids by decreasing size, ties by smallest canonical vertex."""
    return np.argsort(-labeling.sizes, kind="stable")


def top_k_sizes(labeling: ClusterLabeling, k: int) -> tuple[int, ...]:
    if k < 1:
        raise ValueError("k must be >= 1")
    order = ranked_clusters(labeling)[:k]
    out = [int(s) for s in labeling.sizes[order]]
    return tuple(out + [0] * (k - len(out)))


def gaps(labeling: ClusterLabeling, k: int) -> tuple[int, ...]:
    """``|C^(i)| - |C^(i+1)|`` for i = 1..k-1."""
    if k < 2:
        raise ValueError("k must be >= 2")
    sizes = top_k_sizes(labeling, k)
    return tuple(sizes[i] - sizes[i + 1] for i in range(k - 1))


def crossing_cluster_ids(labeling: ClusterLabeling) -> np.ndarray:
    """Clusters touching both the left and the right side of the region."""
    g = labeling.grid
    return np.flatnonzero((labeling.xmin == g.x0) & (labeling.xmax == g.x0 + g.width - 1))


def spanning_cluster(config: BondConfig, labeling: ClusterLabeling | None = None) -> np.ndarray:
    """Boolean (height, width) mask of SC_n; all False when SC_n is empty.

    SC_n is the union of every left-right crossing cluster, so it may contain
    several clusters; :func:`crossing_cluster_ids` gives them individually.
    """
    labeling = label_clusters(config) if labeling is None else labeling
    return np.isin(labeling.labels, crossing_cluster_ids(labeling))


def origin_to_boundary(config: BondConfig, labeling: ClusterLabeling | None = None) -> bool:
    """Whether the box center is joined to the inner boundary of the box."""
    box = config.box
    if not isinstance(box, BoxSpec) or box.n < 1:
        raise ValueError("origin_to_boundary needs a BoxSpec with n >= 1")
    labeling = label_clusters(config) if labeling is None else labeling
    g = labeling.grid
    lab = labeling.cluster_of(box.center)
    return bool(labeling.xmin[lab] == g.x0 or labeling.xmax[lab] == g.x0 + g.width - 1
                or labeling.ymin[lab] == g.y0 or labeling.ymax[lab] == g.y0 + g.height - 1)


def large_diameter_clusters(labeling: ClusterLabeling, alpha: float) -> set[int]:
    """Ids of clusters with left-right diameter at least ``alpha * n``."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    n = labeling.box.n
    return set(np.flatnonzero(labeling.diameters >= alpha * n).tolist())
