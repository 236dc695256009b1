"""Counter-based random bits and replicate seed derivation.

Bond ``b`` of a configuration with seed ``s`` gets the ``b``-th 64-bit word of
the Philox4x64-10 stream keyed by ``(s, 0)``, which is exactly the stream of
``numpy.random.Philox(key=s)``: word ``b`` is lane ``b % 4`` of the block
computed at counter ``(b // 4 + 1, 0, 0, 0)``. The bond is open iff
``(word >> 11) * 2**-53 < p``, i.e. ``Generator(Philox(key=s)).random() < p``.

Because the stream is counter based, any single bond can be drawn without
generating the ones before it; the one-arm kernel relies on this.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

from ._accel import njit

GENERATOR_ID = "philox4x64-10:numpy-stream:key=(seed,0):u53<p"
SEED_MIX_ID = "splitmix64(splitmix64(master^sha256(exp_id)[:8]le)+golden*index)"

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

_PHILOX_M0 = np.uint64(0xD2E7470EE14C6C93)
_PHILOX_M1 = np.uint64(0xCA5A826395121157)
_PHILOX_W0 = np.uint64(0x9E3779B97F4A7C15)
_PHILOX_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)


@njit
def _mulhilo(a, b):
    a_lo = a & _LO32
    a_hi = a >> _S32
    b_lo = b & _LO32
    b_hi = b >> _S32
    ll = a_lo * b_lo
    hl = a_hi * b_lo
    lh = a_lo * b_hi
    hh = a_hi * b_hi
    cross = (ll >> _S32) + (hl & _LO32) + lh
    hi = hh + (hl >> _S32) + (cross >> _S32)
    lo = (cross << _S32) | (ll & _LO32)
    return hi, lo


@njit
def philox_block(block, key):
    """The four words of stream block ``block`` (0-based) for ``key``."""
    c0 = np.uint64(block) + np.uint64(1)
    c1 = np.uint64(0)
    c2 = np.uint64(0)
    c3 = np.uint64(0)
    k0 = np.uint64(key)
    k1 = np.uint64(0)
    for r in range(10):
        if r > 0:
            k0 = k0 + _PHILOX_W0
            k1 = k1 + _PHILOX_W1
        hi0, lo0 = _mulhilo(_PHILOX_M0, c0)
        hi1, lo1 = _mulhilo(_PHILOX_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@njit
def philox_word(key, index):
    c0, c1, c2, c3 = philox_block(index // 4, key)
    lane = index % 4
    if lane == 0:
        return c0
    if lane == 1:
        return c1
    if lane == 2:
        return c2
    return c3


def open_threshold(p: float) -> int:
    """Integer T with ``(word >> 11) < T`` iff ``(word >> 11) * 2**-53 < p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return int(math.ceil(p * 2.0**53))


@njit
def fill_open_numba(key, threshold, out):
    n = out.shape[0]
    thr = np.uint64(threshold)
    nblocks = (n + 3) // 4
    for blk in range(nblocks):
        c0, c1, c2, c3 = philox_block(blk, key)
        base = 4 * blk
        out[base] = (c0 >> _S11) < thr
        if base + 1 < n:
            out[base + 1] = (c1 >> _S11) < thr
        if base + 2 < n:
            out[base + 2] = (c2 >> _S11) < thr
        if base + 3 < n:
            out[base + 3] = (c3 >> _S11) < thr


def fill_open_numpy(key, threshold, out):
    if out.shape[0] == 0:
        return
    words = np.random.Philox(key=int(key)).random_raw(out.shape[0])
    out[:] = (words >> np.uint64(11)) < np.uint64(threshold)


def open_bits(key: int, count: int, p: float) -> np.ndarray:
    """``count`` Bernoulli(p) draws from the stream keyed by ``key``."""
    from ._accel import pick

    out = np.empty(count, dtype=np.bool_)
    pick(fill_open_numba, fill_open_numpy)(np.uint64(key), open_threshold(p), out)
    return out


def splitmix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def experiment_key(experiment_id: str) -> int:
    digest = hashlib.sha256(experiment_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_seed(master: int, experiment_id: str, index: int) -> int:
    base = splitmix64((master & MASK64) ^ experiment_key(experiment_id))
    return splitmix64(base + _GOLDEN * index)


def replicate_seeds(master: int, experiment_id: str, count: int, start: int = 0) -> np.ndarray:
    """Seeds for replicates ``start .. start+count-1`` as a uint64 array.

    Equal element-wise to :func:`derive_seed`; vectorised with wrapping uint64
    arithmetic.
    """
    base = np.uint64(splitmix64((master & MASK64) ^ experiment_key(experiment_id)))
    idx = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = base + np.uint64(_GOLDEN) * idx
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return z
