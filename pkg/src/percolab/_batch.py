"""Replicate-level kernels: one call handles a whole chunk of seeds.

Each kernel has a numba loop version and a numpy/scipy version built from the
single-configuration primitives; the two agree exactly replicate by replicate.
Seeds are uint64 arrays; ``threshold`` is :func:`rng.open_threshold` of p.
"""

from __future__ import annotations

import numpy as np

from . import rng
from ._accel import njit
from ._dual import INNER, OUTER, circuit_anchor, circuit_anchor_numpy, faces_numba, faces_numpy
from .cluster import cluster_extents, label_numpy, union_find_into

_S11 = np.uint64(11)
_S32 = np.uint64(32)


@njit
def _hidx(W, H, c, r):
    if r < H - 1:
        return r * (2 * W - 1) + 2 * c
    return (H - 1) * (2 * W - 1) + c


@njit
def _vidx(W, c, r):
    idx = r * (2 * W - 1) + 2 * c
    if c < W - 1:
        idx += 1
    return idx


# ---------------------------------------------------------------- summaries

@njit
def summarize_numba(W, H, seeds, threshold, k, cx, cy, iv_lo, iv_hi, vd_vmin, vd_dmax):
    R = seeds.shape[0]
    N = W * H
    states = np.empty(2 * W * H - W - H, np.bool_)
    parent = np.empty(N, np.int64)
    scratch = np.empty(N, np.int64)
    labels = np.empty(N, np.int64)
    sizes = np.empty(N, np.int64)
    xmin = np.empty(N, np.int64)
    xmax = np.empty(N, np.int64)
    ymin = np.empty(N, np.int64)
    ymax = np.empty(N, np.int64)
    taken = np.zeros(N, np.bool_)
    top_sizes = np.zeros((R, k), np.int64)
    top_diam = np.full((R, k), -1, np.int64)
    span = np.zeros(R, np.int64)
    ncross = np.zeros(R, np.int64)
    origin = np.zeros(R, np.bool_)
    iv_hit = np.zeros((R, iv_lo.shape[0]), np.bool_)
    vd_hit = np.zeros((R, vd_vmin.shape[0]), np.bool_)
    for r in range(R):
        rng.fill_open_numba(seeds[r], threshold, states)
        kc = union_find_into(states, W, H, parent, scratch, labels)
        cluster_extents(labels, W, kc, sizes, xmin, xmax, ymin, ymax)
        for i in range(k):
            best = -1
            for c in range(kc):
                if not taken[c] and (best < 0 or sizes[c] > sizes[best]):
                    best = c
            if best < 0:
                break
            taken[best] = True
            top_sizes[r, i] = sizes[best]
            top_diam[r, i] = xmax[best] - xmin[best]
        for c in range(kc):
            taken[c] = False
            d = xmax[c] - xmin[c]
            if d == W - 1:
                span[r] += sizes[c]
                ncross[r] += 1
            for q in range(iv_lo.shape[0]):
                if iv_lo[q] < sizes[c] and sizes[c] < iv_hi[q]:
                    iv_hit[r, q] = True
            for q in range(vd_vmin.shape[0]):
                if sizes[c] >= vd_vmin[q] and d <= vd_dmax[q]:
                    vd_hit[r, q] = True
        if cx >= 0:
            lab = labels[cy * W + cx]
            origin[r] = (N == 1 or xmin[lab] == 0 or xmax[lab] == W - 1
                         or ymin[lab] == 0 or ymax[lab] == H - 1)
    return top_sizes, top_diam, span, ncross, origin, iv_hit, vd_hit


def summarize_numpy(W, H, seeds, threshold, k, cx, cy, iv_lo, iv_hi, vd_vmin, vd_dmax):
    R = seeds.shape[0]
    states = np.empty(2 * W * H - W - H, np.bool_)
    top_sizes = np.zeros((R, k), np.int64)
    top_diam = np.full((R, k), -1, np.int64)
    span = np.zeros(R, np.int64)
    ncross = np.zeros(R, np.int64)
    origin = np.zeros(R, np.bool_)
    iv_hit = np.zeros((R, iv_lo.shape[0]), np.bool_)
    vd_hit = np.zeros((R, vd_vmin.shape[0]), np.bool_)
    for r in range(R):
        rng.fill_open_numpy(seeds[r], threshold, states)
        labels, sizes, xmin, xmax, ymin, ymax = label_numpy(states, W, H)
        diam = xmax - xmin
        order = np.argsort(-sizes, kind="stable")[:k]
        top_sizes[r, :order.size] = sizes[order]
        top_diam[r, :order.size] = diam[order]
        cross = diam == W - 1
        span[r] = sizes[cross].sum()
        ncross[r] = cross.sum()
        s = sizes[:, None]
        iv_hit[r] = ((iv_lo[None, :] < s) & (s < iv_hi[None, :])).any(axis=0)
        vd_hit[r] = ((s >= vd_vmin[None, :]) & (diam[:, None] <= vd_dmax[None, :])).any(axis=0)
        if cx >= 0:
            lab = labels[cy * W + cx]
            origin[r] = (W * H == 1 or xmin[lab] == 0 or xmax[lab] == W - 1
                         or ymin[lab] == 0 or ymax[lab] == H - 1)
    return top_sizes, top_diam, span, ncross, origin, iv_hit, vd_hit


# ---------------------------------------------------------------- one arm

@njit
def one_arm_numba(n, seeds, threshold):
    """Whether the box center reaches the box boundary, exploring lazily.

    Only bonds touched by the search are drawn, straight from the counter-based
    stream, so the answer equals the full-configuration one for the same seed.
    """
    W = 2 * n + 1
    R = seeds.shape[0]
    out = np.zeros(R, np.bool_)
    if n == 0:
        out[:] = True
        return out
    thr = np.uint64(threshold)
    stamp = np.zeros(W * W, np.int64)
    stack = np.empty(W * W, np.int64)
    for r in range(R):
        key = seeds[r]
        mark = r + 1
        start = n * W + n
        stamp[start] = mark
        stack[0] = start
        top = 1
        hit = False
        while top > 0 and not hit:
            top -= 1
            v = stack[top]
            row = v // W
            col = v % W
            for d in range(4):
                if d == 0:
                    if col == W - 1:
                        continue
                    w = v + 1
                    b = _hidx(W, W, col, row)
                elif d == 1:
                    if col == 0:
                        continue
                    w = v - 1
                    b = _hidx(W, W, col - 1, row)
                elif d == 2:
                    if row == W - 1:
                        continue
                    w = v + W
                    b = _vidx(W, col, row)
                else:
                    if row == 0:
                        continue
                    w = v - W
                    b = _vidx(W, col, row - 1)
                if stamp[w] == mark:
                    continue
                if (rng.philox_word(key, b) >> _S11) >= thr:
                    continue
                wr = w // W
                wc = w % W
                if wr == 0 or wc == 0 or wr == W - 1 or wc == W - 1:
                    hit = True
                    break
                stamp[w] = mark
                stack[top] = w
                top += 1
        out[r] = hit
    return out


def one_arm_numpy(n, seeds, threshold):
    W = 2 * n + 1
    out = np.zeros(seeds.shape[0], np.bool_)
    if n == 0:
        out[:] = True
        return out
    states = np.empty(2 * W * W - 2 * W, np.bool_)
    for r in range(seeds.shape[0]):
        rng.fill_open_numpy(seeds[r], threshold, states)
        labels, sizes, xmin, xmax, ymin, ymax = label_numpy(states, W, W)
        lab = labels[n * W + n]
        out[r] = xmin[lab] == 0 or xmax[lab] == W - 1 or ymin[lab] == 0 or ymax[lab] == W - 1
    return out


# ---------------------------------------------------------------- crossing

@njit
def crossing_numba(W, H, seeds, threshold):
    N = W * H
    states = np.empty(2 * W * H - W - H, np.bool_)
    parent = np.empty(N, np.int64)
    scratch = np.empty(N, np.int64)
    labels = np.empty(N, np.int64)
    left = np.zeros(N, np.bool_)
    out = np.zeros(seeds.shape[0], np.bool_)
    for r in range(seeds.shape[0]):
        rng.fill_open_numba(seeds[r], threshold, states)
        union_find_into(states, W, H, parent, scratch, labels)
        for row in range(H):
            left[labels[row * W]] = True
        for row in range(H):
            if left[labels[row * W + W - 1]]:
                out[r] = True
                break
        for row in range(H):
            left[labels[row * W]] = False
    return out


def crossing_numpy(W, H, seeds, threshold):
    states = np.empty(2 * W * H - W - H, np.bool_)
    out = np.zeros(seeds.shape[0], np.bool_)
    for r in range(seeds.shape[0]):
        rng.fill_open_numpy(seeds[r], threshold, states)
        labels = label_numpy(states, W, H)[0].reshape(H, W)
        out[r] = np.intersect1d(labels[:, 0], labels[:, -1]).size > 0
    return out


# ---------------------------------------------------------------- good boxes

@njit
def goodbox_scan_numba(W, seeds, threshold, t, centers, dmin):
    """Per replicate: min |G_t| over clusters with diameter >= dmin (-1 if none),
    the number of good boxes, and the number of such clusters.

    ``centers`` holds box centers as local (col, row). A circuit is open, so it
    lies in a cluster iff one of its vertices does; the anchor vertex is used.
    """
    N = W * W
    m = 2 * t // 3
    side = 2 * t + 1
    R = seeds.shape[0]
    states = np.empty(2 * W * W - 2 * W, np.bool_)
    parent = np.empty(N, np.int64)
    scratch = np.empty(N, np.int64)
    labels = np.empty(N, np.int64)
    sizes = np.empty(N, np.int64)
    xmin = np.empty(N, np.int64)
    xmax = np.empty(N, np.int64)
    ymin = np.empty(N, np.int64)
    ymax = np.empty(N, np.int64)
    gcount = np.zeros(N, np.int64)
    min_g = np.full(R, -1, np.int64)
    n_good = np.zeros(R, np.int64)
    n_large = np.zeros(R, np.int64)
    for r in range(R):
        rng.fill_open_numba(seeds[r], threshold, states)
        kc = union_find_into(states, W, W, parent, scratch, labels)
        cluster_extents(labels, W, kc, sizes, xmin, xmax, ymin, ymax)
        for c in range(kc):
            gcount[c] = 0
        for b in range(centers.shape[0]):
            bx = centers[b, 0]
            by = centers[b, 1]
            face = faces_numba(states, W, W, 0, 0, bx, by, m, t)
            a = circuit_anchor(face, t)
            if a < 0:
                continue
            n_good[r] += 1
            col = bx - t + a % side
            row = by - t + a // side
            gcount[labels[row * W + col]] += 1
        best = -1
        for c in range(kc):
            if xmax[c] - xmin[c] >= dmin:
                n_large[r] += 1
                if best < 0 or gcount[c] < best:
                    best = gcount[c]
        min_g[r] = best
    return min_g, n_good, n_large


def goodbox_scan_numpy(W, seeds, threshold, t, centers, dmin):
    m = 2 * t // 3
    side = 2 * t + 1
    R = seeds.shape[0]
    states = np.empty(2 * W * W - 2 * W, np.bool_)
    min_g = np.full(R, -1, np.int64)
    n_good = np.zeros(R, np.int64)
    n_large = np.zeros(R, np.int64)
    for r in range(R):
        rng.fill_open_numpy(seeds[r], threshold, states)
        labels, sizes, xmin, xmax, ymin, ymax = label_numpy(states, W, W)
        gcount = np.zeros(sizes.size, np.int64)
        for bx, by in centers:
            face = faces_numpy(states, W, W, 0, 0, bx, by, m, t)
            a = circuit_anchor_numpy(face, t)
            if a < 0:
                continue
            n_good[r] += 1
            gcount[labels[(by - t + a // side) * W + bx - t + a % side]] += 1
        large = (xmax - xmin) >= dmin
        n_large[r] = large.sum()
        if n_large[r]:
            min_g[r] = gcount[large].min()
    return min_g, n_good, n_large


# ---------------------------------------------------------------- conditioned circuits

@njit
def mark_circuit_bonds_numba(face, t, out):
    """Flag the bonds of Lambda_t (local, W = 2t+1) separating INNER from OUTER faces."""
    W = 2 * t + 1
    out[:] = False
    for r in range(W):
        for c in range(W):
            if c < W - 1:
                up = face[r + 1, c + 1]
                dn = face[r, c + 1]
                if (up == INNER and dn == OUTER) or (up == OUTER and dn == INNER):
                    out[_hidx(W, W, c, r)] = True
            if r < W - 1:
                lf = face[r + 1, c]
                rt = face[r + 1, c + 1]
                if (lf == INNER and rt == OUTER) or (lf == OUTER and rt == INNER):
                    out[_vidx(W, c, r)] = True


def mark_circuit_bonds_numpy(face, t, out):
    W = 2 * t + 1
    inner = face == INNER
    outer = face == OUTER
    sep_h = (inner[1:, 1:-1] & outer[:-1, 1:-1]) | (outer[1:, 1:-1] & inner[:-1, 1:-1])
    sep_v = (inner[1:-1, :-1] & outer[1:-1, 1:]) | (outer[1:-1, :-1] & inner[1:-1, 1:])
    out[:] = False
    rows, cols = np.nonzero(sep_h)
    out[np.where(rows < W - 1, rows * (2 * W - 1) + 2 * cols, (W - 1) * (2 * W - 1) + cols)] = True
    rows, cols = np.nonzero(sep_v)
    out[rows * (2 * W - 1) + 2 * cols + (cols < W - 1)] = True


@njit
def circuit_chain_numba(t, m, abonds, threshold, key, steps, states):
    """Heat-bath dynamics on the annulus bonds, restricted to configurations
    with an open circuit around the hole. Updates ``states`` in place.

    Step s draws stream words 2s (which bond) and 2s+1 (its new state). A
    closing move is checked only if the bond lies on the tracked circuit:
    otherwise that circuit survives. Returns the number of rejected moves.
    """
    W = 2 * t + 1
    thr = np.uint64(threshold)
    nA = np.uint64(abonds.shape[0])
    on_circ = np.zeros(states.shape[0], np.bool_)
    face = faces_numba(states, W, W, 0, 0, t, t, m, t)
    if face[t, t] != INNER:
        return -1
    mark_circuit_bonds_numba(face, t, on_circ)
    rejected = 0
    for s in range(steps):
        w1 = rng.philox_word(key, 2 * s)
        w2 = rng.philox_word(key, 2 * s + 1)
        e = abonds[np.int64(((w1 >> _S32) * nA) >> _S32)]
        if (w2 >> _S11) < thr:
            states[e] = True
        elif states[e]:
            states[e] = False
            if on_circ[e]:
                face = faces_numba(states, W, W, 0, 0, t, t, m, t)
                if face[t, t] == INNER:
                    mark_circuit_bonds_numba(face, t, on_circ)
                else:
                    states[e] = True
                    rejected += 1
    return rejected


def circuit_chain_numpy(t, m, abonds, threshold, key, steps, states):
    W = 2 * t + 1
    on_circ = np.zeros(states.shape[0], np.bool_)
    face = faces_numpy(states, W, W, 0, 0, t, t, m, t)
    if face[t, t] != INNER:
        return -1
    mark_circuit_bonds_numpy(face, t, on_circ)
    words = np.random.Philox(key=int(key)).random_raw(2 * steps) if steps else np.empty(0, np.uint64)
    picks = ((words[0::2] >> _S32) * np.uint64(abonds.size)) >> _S32
    opens = (words[1::2] >> _S11) < np.uint64(threshold)
    rejected = 0
    for j, want in zip(picks.tolist(), opens.tolist()):
        e = abonds[j]
        if want:
            states[e] = True
        elif states[e]:
            states[e] = False
            if on_circ[e]:
                face = faces_numpy(states, W, W, 0, 0, t, t, m, t)
                if face[t, t] == INNER:
                    mark_circuit_bonds_numpy(face, t, on_circ)
                else:
                    states[e] = True
                    rejected += 1
    return rejected
