"""Boxes, annuli, canonical bond order and configuration sampling.

Canonical bond order (used for seeding, so it is part of the data format):
vertices are visited row-major, rows by increasing ``y`` and within a row by
increasing ``x``; each vertex contributes first its bond to ``(x+1, y)`` and
then its bond to ``(x, y+1)``, whenever that neighbour lies in the region.
Only bonds with both endpoints in the region exist (free boundary).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import rng
from ._accel import pick


@dataclass(frozen=True, order=True)
class Vertex:
    x: int
    y: int

    def norm(self, center: "Vertex | None" = None) -> int:
        cx, cy = (0, 0) if center is None else (center.x, center.y)
        return max(abs(self.x - cx), abs(self.y - cy))


ORIGIN = Vertex(0, 0)


@dataclass(frozen=True)
class Grid:
    """Rectangular block of vertices ``[x0, x0+width) x [y0, y0+height)``."""

    x0: int
    y0: int
    width: int
    height: int

    @property
    def nvertices(self) -> int:
        return self.width * self.height

    @property
    def nbonds(self) -> int:
        return 2 * self.width * self.height - self.width - self.height

    def contains(self, v: Vertex) -> bool:
        return self.x0 <= v.x < self.x0 + self.width and self.y0 <= v.y < self.y0 + self.height

    def index(self, v: Vertex) -> int:
        return (v.y - self.y0) * self.width + (v.x - self.x0)

    def vertex(self, i: int) -> Vertex:
        r, c = divmod(int(i), self.width)
        return Vertex(self.x0 + c, self.y0 + r)

    def h_index(self, col, row):
        """Canonical index of the bond from column ``col`` to ``col+1`` in ``row``."""
        w = self.width
        col = np.asarray(col)
        row = np.asarray(row)
        return np.where(row < self.height - 1, row * (2 * w - 1) + 2 * col,
                        (self.height - 1) * (2 * w - 1) + col)

    def v_index(self, col, row):
        """Canonical index of the bond from ``row`` to ``row+1`` in column ``col``."""
        w = self.width
        col = np.asarray(col)
        row = np.asarray(row)
        return row * (2 * w - 1) + 2 * col + (col < w - 1)

    def bond_index(self, u: Vertex, w: Vertex) -> int:
        if u > w:
            u, w = w, u
        if not (self.contains(u) and self.contains(w)):
            raise ValueError(f"bond {u}-{w} is not inside {self}")
        dx, dy = w.x - u.x, w.y - u.y
        if u.y == w.y and dx == 1:
            return int(self.h_index(u.x - self.x0, u.y - self.y0))
        if u.x == w.x and dy == 1:
            return int(self.v_index(u.x - self.x0, u.y - self.y0))
        raise ValueError(f"{u} and {w} are not nearest neighbours")


@lru_cache(maxsize=64)
def bond_endpoints(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Flat vertex indices ``(a, b)`` of every bond, in canonical order."""
    w, h = grid.width, grid.height
    a = np.empty(grid.nbonds, dtype=np.int64)
    b = np.empty(grid.nbonds, dtype=np.int64)
    rows, cols = np.divmod(np.arange(w * h), w)
    hsel = cols < w - 1
    vsel = rows < h - 1
    hidx = grid.h_index(cols[hsel], rows[hsel])
    vidx = grid.v_index(cols[vsel], rows[vsel])
    a[hidx] = np.flatnonzero(hsel)
    b[hidx] = np.flatnonzero(hsel) + 1
    a[vidx] = np.flatnonzero(vsel)
    b[vidx] = np.flatnonzero(vsel) + w
    a.flags.writeable = False
    b.flags.writeable = False
    return a, b


@dataclass(frozen=True)
class BoxSpec:
    """The box Lambda_n(center) = center + [-n, n]^2."""

    n: int
    center: Vertex = ORIGIN

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"box half-side must be >= 0, got {self.n}")

    @property
    def grid(self) -> Grid:
        return Grid(self.center.x - self.n, self.center.y - self.n, 2 * self.n + 1, 2 * self.n + 1)

    @property
    def nvertices(self) -> int:
        return (2 * self.n + 1) ** 2

    def contains(self, v: Vertex) -> bool:
        return v.norm(self.center) <= self.n

    def boundary(self) -> list[Vertex]:
        """The inner boundary Lambda_n minus Lambda_{n-1}; ``{center}`` for n = 0."""
        c, n = self.center, self.n
        if n == 0:
            return [c]
        return [Vertex(x, y)
                for y in range(c.y - n, c.y + n + 1)
                for x in range(c.x - n, c.x + n + 1)
                if max(abs(x - c.x), abs(y - c.y)) == n]

    def contains_box(self, center: Vertex, radius: int) -> bool:
        return max(abs(center.x - self.center.x), abs(center.y - self.center.y)) + radius <= self.n


@dataclass(frozen=True)
class RectSpec:
    """Rectangle of ``width`` x ``height`` vertices with lower-left corner (x0, y0)."""

    width: int
    height: int
    x0: int = 0
    y0: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("rectangle needs at least one row and one column")

    @property
    def grid(self) -> Grid:
        return Grid(self.x0, self.y0, self.width, self.height)

    @property
    def nvertices(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class AnnulusSpec:
    """A_{inner,outer}(center) = Lambda_outer(center) minus Lambda_inner(center)."""

    center: Vertex
    inner: int
    outer: int

    def __post_init__(self):
        if not 0 <= self.inner < self.outer:
            raise ValueError(f"annulus needs 0 <= inner < outer, got {self.inner}, {self.outer}")

    def contains(self, v: Vertex) -> bool:
        return self.inner < v.norm(self.center) <= self.outer

    def vertices(self) -> list[Vertex]:
        c, t = self.center, self.outer
        return [Vertex(x, y)
                for y in range(c.y - t, c.y + t + 1)
                for x in range(c.x - t, c.x + t + 1)
                if self.contains(Vertex(x, y))]


@lru_cache(maxsize=64)
def _bond_pairs(box) -> tuple:
    grid = box.grid
    a, b = bond_endpoints(grid)
    return tuple((grid.vertex(i), grid.vertex(j)) for i, j in zip(a.tolist(), b.tolist()))


def enumerate_bonds(box) -> list[tuple[Vertex, Vertex]]:
    """Every bond of ``box`` (a BoxSpec or RectSpec) as vertex pairs, canonical order."""
    return list(_bond_pairs(box))


@dataclass(frozen=True, eq=False)
class BondConfig:
    """One bond configuration. ``states[i]`` is True iff canonical bond ``i`` is open."""

    box: BoxSpec | RectSpec
    p: float
    states: np.ndarray = field(repr=False)
    seed: int | None = None

    def __post_init__(self):
        states = np.ascontiguousarray(self.states, dtype=np.bool_)
        if states.shape != (self.box.grid.nbonds,):
            raise ValueError(f"expected {self.box.grid.nbonds} bond states, got {states.shape}")
        if states.flags.writeable:
            states = states.copy()
            states.flags.writeable = False
        object.__setattr__(self, "states", states)

    @classmethod
    def from_states(cls, box, states, p: float = 0.5) -> "BondConfig":
        return cls(box, p, np.asarray(states, dtype=np.bool_), None)

    @classmethod
    def all_open(cls, box) -> "BondConfig":
        return cls(box, 1.0, np.ones(box.grid.nbonds, np.bool_), None)

    @classmethod
    def all_closed(cls, box) -> "BondConfig":
        return cls(box, 0.0, np.zeros(box.grid.nbonds, np.bool_), None)

    @property
    def grid(self) -> Grid:
        return self.box.grid

    def is_open(self, u: Vertex, w: Vertex) -> bool:
        return bool(self.states[self.grid.bond_index(u, w)])

    def with_bond(self, u: Vertex, w: Vertex, is_open: bool) -> "BondConfig":
        states = self.states.copy()
        states[self.grid.bond_index(u, w)] = is_open
        return BondConfig(self.box, self.p, states, None)

    def with_states(self, index, values) -> "BondConfig":
        states = self.states.copy()
        states[index] = values
        return BondConfig(self.box, self.p, states, None)

    def bond_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Open flags as ``h[row, col]`` (shape H x W-1) and ``v[row, col]`` (H-1 x W)."""
        g = self.grid
        rows, cols = np.mgrid[0:g.height, 0:g.width - 1]
        h = self.states[g.h_index(cols, rows)] if g.width > 1 else np.zeros((g.height, 0), bool)
        rows, cols = np.mgrid[0:g.height - 1, 0:g.width]
        v = self.states[g.v_index(cols, rows)] if g.height > 1 else np.zeros((0, g.width), bool)
        return h, v

    def __eq__(self, other):
        if not isinstance(other, BondConfig):
            return NotImplemented
        return (self.box == other.box and self.p == other.p and self.seed == other.seed
                and np.array_equal(self.states, other.states))

    __hash__ = None


def sample_config(box, p: float, seed: int) -> BondConfig:
    """Each bond open independently with probability ``p``; a pure function of its inputs."""
    thr = rng.open_threshold(p)
    seed = int(seed) & rng.MASK64
    states = np.empty(box.grid.nbonds, dtype=np.bool_)
    pick(rng.fill_open_numba, rng.fill_open_numpy)(np.uint64(seed), thr, states)
    return BondConfig(box, float(p), states, seed)


def check_annulus_inside(config: BondConfig, annulus: AnnulusSpec) -> None:
    g = config.grid
    c, t = annulus.center, annulus.outer
    if not (g.contains(Vertex(c.x - t, c.y - t)) and g.contains(Vertex(c.x + t, c.y + t))):
        raise ValueError(f"{annulus} does not fit inside {config.box}")


def dual_crossing_exists(config: BondConfig, annulus: AnnulusSpec) -> bool:
    """True iff closed dual bonds inside the annulus join its hole to its outside.

    By planar duality this happens exactly when no open circuit inside the
    annulus surrounds the hole.
    """
    from ._dual import HOLE_IS_OUTER, classify_faces

    check_annulus_inside(config, annulus)
    faces = classify_faces(config, annulus)
    return bool(faces[annulus.outer, annulus.outer] == HOLE_IS_OUTER)
