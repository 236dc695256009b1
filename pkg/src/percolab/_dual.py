"""Face classification for an annulus, the engine behind duality and circuits.

Faces are unit plaquettes named by their lower-left corner ``(fx, fy)`` in
coordinates relative to the annulus center, for ``fx, fy`` in ``[-t-1, t]``;
array cell ``[fy+t+1, fx+t+1]``. Plaquettes with a corner in the hole are
merged into the hole face, plaquettes with a corner outside ``Lambda_t`` into
the outer face: the bonds between them are not annulus bonds and are always
crossable. An annulus bond (both endpoints with norm in ``(m, t]``) can be
crossed by the dual walk iff it is closed.

Result codes: ``OUTER`` marks faces joined to the outside by closed dual bonds;
``INNER`` marks the face-connected component of the hole inside the rest. The
hole cell is ``[t, t]``; it is ``OUTER`` exactly when a closed dual crossing
exists. Otherwise the bonds between ``INNER`` and ``OUTER`` faces are all
open and form the outermost open circuit.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ._accel import njit, pick

UNSEEN = 0
OUTER = 1
INNER = 2
HOLE_IS_OUTER = OUTER


@njit
def _bond_kind(states, W, H, x0, y0, cx, cy, m, t, ax, ay, horiz):
    """0: not an annulus bond, 1: open annulus bond, 2: closed annulus bond."""
    if horiz:
        bx = ax + 1
        by = ay
    else:
        bx = ax
        by = ay + 1
    na = max(abs(ax), abs(ay))
    nb = max(abs(bx), abs(by))
    if na <= m or na > t or nb <= m or nb > t:
        return 0
    col = cx + ax - x0
    row = cy + ay - y0
    if horiz:
        if row < H - 1:
            idx = row * (2 * W - 1) + 2 * col
        else:
            idx = (H - 1) * (2 * W - 1) + col
    else:
        idx = row * (2 * W - 1) + 2 * col
        if col < W - 1:
            idx += 1
    if states[idx]:
        return 1
    return 2


@njit
def faces_numba(states, W, H, x0, y0, cx, cy, m, t):
    S = 2 * t + 2
    face = np.zeros((S, S), np.int8)
    queue = np.empty(S * S, np.int64)
    for phase in range(2):
        if phase == 0:
            start = 0
            mark = OUTER
        else:
            if face[t, t] == OUTER:
                return face
            start = t * S + t
            mark = INNER
        face[start // S, start % S] = mark
        queue[0] = start
        head = 0
        tail = 1
        while head < tail:
            q = queue[head]
            head += 1
            i = q // S
            j = q % S
            fx = j - t - 1
            fy = i - t - 1
            for d in range(4):
                if d == 0:
                    ni, nj, ax, ay, horiz = i + 1, j, fx, fy + 1, True
                elif d == 1:
                    ni, nj, ax, ay, horiz = i - 1, j, fx, fy, True
                elif d == 2:
                    ni, nj, ax, ay, horiz = i, j + 1, fx + 1, fy, False
                else:
                    ni, nj, ax, ay, horiz = i, j - 1, fx, fy, False
                if ni < 0 or ni >= S or nj < 0 or nj >= S or face[ni, nj] != UNSEEN:
                    continue
                if phase == 0 and _bond_kind(states, W, H, x0, y0, cx, cy, m, t,
                                             ax, ay, horiz) == 1:
                    continue
                face[ni, nj] = mark
                queue[tail] = ni * S + nj
                tail += 1
    return face


def _kinds_numpy(states, W, H, x0, y0, cx, cy, m, t, ax, ay, horiz):
    bx = ax + (1 if horiz else 0)
    by = ay + (0 if horiz else 1)
    na = np.maximum(np.abs(ax), np.abs(ay))
    nb = np.maximum(np.abs(bx), np.abs(by))
    inside = (na > m) & (na <= t) & (nb > m) & (nb <= t)
    col = cx + ax - x0
    row = cy + ay - y0
    if horiz:
        idx = np.where(row < H - 1, row * (2 * W - 1) + 2 * col, (H - 1) * (2 * W - 1) + col)
    else:
        idx = row * (2 * W - 1) + 2 * col + (col < W - 1)
    kind = np.zeros(ax.shape, np.int8)
    sel = np.flatnonzero(inside.ravel())
    kind.ravel()[sel] = np.where(states[idx.ravel()[sel]], 1, 2)
    return kind


def _component_of(S, a, b, start):
    g = coo_matrix((np.ones(a.size, np.int8), (a, b)), shape=(S * S, S * S))
    _, labels = connected_components(g, directed=False)
    return labels == labels[start]


def faces_numpy(states, W, H, x0, y0, cx, cy, m, t):
    S = 2 * t + 2
    i, j = np.mgrid[0:S, 0:S]
    fx = j - t - 1
    fy = i - t - 1
    # (i, j) -- (i+1, j) across the horizontal bond on top of face (i, j)
    up = _kinds_numpy(states, W, H, x0, y0, cx, cy, m, t, fx[:-1], fy[:-1] + 1, True)
    # (i, j) -- (i, j+1) across the vertical bond on the right of face (i, j)
    right = _kinds_numpy(states, W, H, x0, y0, cx, cy, m, t, fx[:, :-1] + 1, fy[:, :-1], False)
    ids = np.arange(S * S).reshape(S, S)
    ua, ub = ids[:-1].ravel(), ids[1:].ravel()
    ra, rb = ids[:, :-1].ravel(), ids[:, 1:].ravel()
    cu = up.ravel() != 1
    cr = right.ravel() != 1
    outer = _component_of(S, np.concatenate([ua[cu], ra[cr]]), np.concatenate([ub[cu], rb[cr]]), 0)
    face = np.where(outer, OUTER, UNSEEN).astype(np.int8).reshape(S, S)
    hole = t * S + t
    if outer[hole]:
        return face
    free = ~outer
    ku = free[ua] & free[ub]
    kr = free[ra] & free[rb]
    inner = _component_of(S, np.concatenate([ua[ku], ra[kr]]), np.concatenate([ub[ku], rb[kr]]), hole)
    face[inner.reshape(S, S)] = INNER
    return face


def classify_faces(config, annulus) -> np.ndarray:
    g = config.grid
    c = annulus.center
    return pick(faces_numba, faces_numpy)(
        config.states, g.width, g.height, g.x0, g.y0, c.x, c.y, annulus.inner, annulus.outer)


@njit
def circuit_anchor(face, t):
    """Flat index (local, in the (2t+1)^2 box) of one vertex on the outermost
    circuit, or -1 when there is none."""
    if face[t, t] != INNER:
        return -1
    # walk down from the hole face; the first inner->outer step crosses the circuit
    i = t
    while face[i - 1, t] == INNER:
        i -= 1
    # bottom edge of face (i, t) runs from local (-1, i-t-1) to (0, i-t-1)
    y = i - t - 1
    return (y + t) * (2 * t + 1) + (-1 + t)


def circuit_anchor_numpy(face, t):
    if face[t, t] != INNER:
        return -1
    col = face[:t + 1, t]
    i = t
    while col[i - 1] == INNER:
        i -= 1
    y = i - t - 1
    return (y + t) * (2 * t + 1) + (-1 + t)
