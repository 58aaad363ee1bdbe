"""numpy implementations of the hot loops.

Each function has the same signature and returns the same values as its
counterpart in the compiled ``_ckernels`` module.
"""
from __future__ import annotations

import numpy as np


def _two_sum(a, b):
    s = a + b
    bp = s - a
    return s, (a - (s - bp)) + (b - bp)


def evolve_tridiagonal(back, stay, fwd, mass, t):
    cur = np.array(mass, dtype=np.float64, copy=True)
    up = fwd[:-1]
    down = back[1:]
    for _ in range(int(t)):
        s = stay * cur
        c = np.zeros_like(s)
        term = np.zeros_like(s)
        term[1:] = up * cur[:-1]
        s, e = _two_sum(s, term)
        c += e
        term = np.zeros_like(s)
        term[:-1] = down * cur[1:]
        s, e = _two_sum(s, term)
        c += e
        cur = s + c
    return cur


def propagate_support(state, qa, qb, outcome, level_ends, keep_a, keep_b):
    # Gates inside one level act on disjoint qubits, so a level is one
    # vectorized update; level_ends may also split a flat sequence.
    sizes = np.empty(len(level_ends) + 1, dtype=np.int64)
    sizes[0] = int(state.sum())
    start = 0
    for lev, end in enumerate(level_ends):
        a = qa[start:end]
        b = qb[start:end]
        o = outcome[start:end]
        if _disjoint(a, b):
            active = (state[a] | state[b]).astype(bool)
            state[a[active]] = keep_a[o[active]]
            state[b[active]] = keep_b[o[active]]
        else:
            for g in range(len(a)):
                if state[a[g]] | state[b[g]]:
                    state[a[g]] = keep_a[o[g]]
                    state[b[g]] = keep_b[o[g]]
        sizes[lev + 1] = int(state.sum())
        start = end
    return sizes


def _disjoint(a, b):
    q = np.concatenate([a, b])
    return len(np.unique(q)) == len(q)


def greedy_levels(qa, qb, n):
    level = np.empty(len(qa), dtype=np.int32)
    stamp = [-1] * int(n)
    cur = 0
    for g, (a, b) in enumerate(zip(qa.tolist(), qb.tolist())):
        if stamp[a] == cur or stamp[b] == cur:
            cur += 1
        stamp[a] = stamp[b] = cur
        level[g] = cur
    return level


def apply_gates(xt, zt, r, qa, qb, cid, new_table, flip_table):
    # qubit-major layout: xt[q, row]
    for a, b, c in zip(qa.tolist(), qb.tolist(), cid.tolist()):
        v = xt[a] | (zt[a] << 1) | (xt[b] << 2) | (zt[b] << 3)
        nv = new_table[c][v]
        r ^= flip_table[c][v]
        xt[a] = nv & 1
        zt[a] = (nv >> 1) & 1
        xt[b] = (nv >> 2) & 1
        zt[b] = (nv >> 3) & 1


def gf2_rank(rows):
    ints = []
    for row in np.asarray(rows, dtype=np.uint64):
        v = 0
        for w, word in enumerate(row.tolist()):
            v |= int(word) << (64 * w)
        ints.append(v)
    pivots = {}
    rank = 0
    for v in ints:
        while v:
            h = v.bit_length() - 1
            p = pivots.get(h)
            if p is None:
                pivots[h] = v
                rank += 1
                break
            v ^= p
    return rank


_CHUNK_BITS = 16


def weight_spectrum(gx, gz, n, outside):
    gx = np.asarray(gx, dtype=np.uint64)
    gz = np.asarray(gz, dtype=np.uint64)
    k = len(gx)
    low = min(k, _CHUNK_BITS)
    xs = np.zeros(1, dtype=np.uint64)
    zs = np.zeros(1, dtype=np.uint64)
    for i in range(low):
        xs = np.concatenate([xs, xs ^ gx[i]])
        zs = np.concatenate([zs, zs ^ gz[i]])
    counts = np.zeros(n + 1, dtype=np.int64)
    outside = np.uint64(outside)
    hx = np.uint64(0)
    hz = np.uint64(0)
    for j in range(1 << (k - low)):
        if j:
            flip = (j & -j).bit_length() - 1 + low
            hx ^= gx[flip]
            hz ^= gz[flip]
        s = (xs ^ hx) | (zs ^ hz)
        s = s[(s & outside) == 0]
        counts += np.bincount(np.bitwise_count(s), minlength=n + 1)[: n + 1]
    return counts


_M64 = (1 << 64) - 1
_M32 = (1 << 32) - 1


class _SplitMix:
    """splitmix64 stream with Lemire bounded draws (matches the compiled one)."""

    __slots__ = ("state",)

    def __init__(self, seed):
        self.state = int(seed) & _M64

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _M64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
        return z ^ (z >> 31)

    def bounded(self, r):
        m = (self.next() >> 32) * r
        low = m & _M32
        if low < r:
            thresh = ((1 << 32) - r) % r
            while low < thresh:
                m = (self.next() >> 32) * r
                low = m & _M32
        return m >> 32


def matching_growth(n, depth, seeds, init, keep_a, keep_b):
    trials = len(seeds)
    sizes = np.empty((trials, depth + 1), dtype=np.int64)
    final = np.empty((trials, n), dtype=np.uint8)
    ka = [int(v) for v in keep_a]
    kb = [int(v) for v in keep_b]
    half = n // 2
    for tr in range(trials):
        rng = _SplitMix(int(seeds[tr]))
        state = [int(v) for v in init]
        perm = list(range(n))
        sizes[tr, 0] = sum(state)
        for lev in range(depth):
            for i in range(n - 1, 0, -1):
                j = rng.bounded(i + 1)
                perm[i], perm[j] = perm[j], perm[i]
            for k in range(half):
                a = perm[2 * k]
                b = perm[2 * k + 1]
                if state[a] | state[b]:
                    o = rng.bounded(15)
                    state[a] = ka[o]
                    state[b] = kb[o]
            sizes[tr, lev + 1] = sum(state)
        final[tr] = state
    return sizes, final
