# cython: language_level=3
"""Compiled inner loops. Signatures mirror ``_pykernels`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint8_t, int32_t, int64_t, uint32_t, uint64_t

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil
    int __builtin_ctzll(unsigned long long) nogil


cdef inline double _two_sum_err(double a, double b, double s) nogil:
    cdef double bp = s - a
    return (a - (s - bp)) + (b - bp)


def evolve_tridiagonal(double[::1] back, double[::1] stay, double[::1] fwd,
                       double[::1] mass, long t):
    cdef Py_ssize_t n = mass.shape[0], k
    cdef long step
    cdef double s, c, term, e
    cur_arr = np.array(mass, dtype=np.float64, copy=True)
    nxt_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] cur = cur_arr
    cdef double[::1] nxt = nxt_arr
    cdef double[::1] tmp
    with nogil:
        for step in range(t):
            for k in range(n):
                s = stay[k] * cur[k]
                c = 0.0
                if k > 0:
                    term = fwd[k - 1] * cur[k - 1]
                    e = s + term
                    c += _two_sum_err(s, term, e)
                    s = e
                if k + 1 < n:
                    term = back[k + 1] * cur[k + 1]
                    e = s + term
                    c += _two_sum_err(s, term, e)
                    s = e
                nxt[k] = s + c
            tmp = cur
            cur = nxt
            nxt = tmp
    return np.asarray(cur).copy()


def propagate_support(uint8_t[::1] state, int32_t[::1] qa, int32_t[::1] qb,
                      uint8_t[::1] outcome, int64_t[::1] level_ends,
                      const uint8_t[::1] keep_a, const uint8_t[::1] keep_b):
    cdef Py_ssize_t g = 0, lev, a, b, nlev = level_ends.shape[0]
    cdef int64_t size = 0, end
    cdef uint8_t o, ka, kb
    sizes_arr = np.empty(nlev + 1, dtype=np.int64)
    cdef int64_t[::1] sizes = sizes_arr
    for a in range(state.shape[0]):
        size += state[a]
    sizes[0] = size
    with nogil:
        for lev in range(nlev):
            end = level_ends[lev]
            while g < end:
                a = qa[g]
                b = qb[g]
                if state[a] | state[b]:
                    o = outcome[g]
                    ka = keep_a[o]
                    kb = keep_b[o]
                    size += (<int64_t>ka) - state[a] + (<int64_t>kb) - state[b]
                    state[a] = ka
                    state[b] = kb
                g += 1
            sizes[lev + 1] = size
    return sizes_arr


def greedy_levels(int32_t[::1] qa, int32_t[::1] qb, Py_ssize_t n):
    cdef Py_ssize_t g, ngates = qa.shape[0]
    cdef int32_t cur = 0, a, b
    level_arr = np.empty(ngates, dtype=np.int32)
    stamp_arr = np.full(n, -1, dtype=np.int32)
    cdef int32_t[::1] level = level_arr
    cdef int32_t[::1] stamp = stamp_arr
    with nogil:
        for g in range(ngates):
            a = qa[g]
            b = qb[g]
            if stamp[a] == cur or stamp[b] == cur:
                cur += 1
            stamp[a] = cur
            stamp[b] = cur
            level[g] = cur
    return level_arr


def apply_gates(uint8_t[:, ::1] xt, uint8_t[:, ::1] zt, uint8_t[::1] r,
                int32_t[::1] qa, int32_t[::1] qb, int32_t[::1] cid,
                const uint8_t[:, ::1] new_table, const uint8_t[:, ::1] flip_table):
    # qubit-major layout: xt[q, row]
    cdef Py_ssize_t g, row, nrows = xt.shape[1], ngates = qa.shape[0]
    cdef int32_t a, b, c
    cdef uint8_t v, nv
    cdef uint8_t* xa
    cdef uint8_t* za
    cdef uint8_t* xb
    cdef uint8_t* zb
    with nogil:
        for g in range(ngates):
            a = qa[g]
            b = qb[g]
            c = cid[g]
            xa = &xt[a, 0]
            za = &zt[a, 0]
            xb = &xt[b, 0]
            zb = &zt[b, 0]
            for row in range(nrows):
                v = xa[row] | (za[row] << 1) | (xb[row] << 2) | (zb[row] << 3)
                if v == 0:
                    continue
                nv = new_table[c, v]
                r[row] ^= flip_table[c, v]
                xa[row] = nv & 1
                za[row] = (nv >> 1) & 1
                xb[row] = (nv >> 2) & 1
                zb[row] = (nv >> 3) & 1


def gf2_rank(uint64_t[:, ::1] rows_in):
    cdef Py_ssize_t nrows = rows_in.shape[0], nwords = rows_in.shape[1]
    cdef Py_ssize_t rank = 0, w, bit, i, j, piv
    cdef uint64_t mask, t
    work = np.array(rows_in, copy=True)
    cdef uint64_t[:, ::1] m = work
    with nogil:
        for w in range(nwords):
            for bit in range(64):
                if rank == nrows:
                    break
                mask = (<uint64_t>1) << bit
                piv = -1
                for i in range(rank, nrows):
                    if m[i, w] & mask:
                        piv = i
                        break
                if piv < 0:
                    continue
                if piv != rank:
                    for j in range(nwords):
                        t = m[piv, j]
                        m[piv, j] = m[rank, j]
                        m[rank, j] = t
                for i in range(rank + 1, nrows):
                    if m[i, w] & mask:
                        for j in range(w, nwords):
                            m[i, j] ^= m[rank, j]
                rank += 1
    return rank


def weight_spectrum(uint64_t[::1] gx, uint64_t[::1] gz, Py_ssize_t n,
                    uint64_t outside):
    cdef Py_ssize_t k = gx.shape[0]
    cdef uint64_t count, i, x = 0, zz = 0, s
    cdef int flip
    counts_arr = np.zeros(n + 1, dtype=np.int64)
    cdef int64_t[::1] counts = counts_arr
    counts[0] = 1
    count = (<uint64_t>1) << k
    with nogil:
        for i in range(1, count):
            flip = __builtin_ctzll(i)
            x ^= gx[flip]
            zz ^= gz[flip]
            s = x | zz
            if s & outside:
                continue
            counts[__builtin_popcountll(s)] += 1
    return counts_arr


cdef inline uint64_t _sm_next(uint64_t* state) nogil:
    cdef uint64_t z
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline uint32_t _bounded(uint64_t* state, uint32_t r) nogil:
    cdef uint32_t x = <uint32_t>(_sm_next(state) >> 32)
    cdef uint64_t m = <uint64_t>x * r
    cdef uint32_t low = <uint32_t>m
    cdef uint32_t thresh
    if low < r:
        thresh = (<uint32_t>(-r)) % r
        while low < thresh:
            x = <uint32_t>(_sm_next(state) >> 32)
            m = <uint64_t>x * r
            low = <uint32_t>m
    return <uint32_t>(m >> 32)


def matching_growth(Py_ssize_t n, Py_ssize_t depth, uint64_t[::1] seeds,
                    const uint8_t[::1] init, const uint8_t[::1] keep_a, const uint8_t[::1] keep_b):
    cdef Py_ssize_t trials = seeds.shape[0], tr, lev, i, j, k
    cdef Py_ssize_t half = n // 2
    cdef int32_t tmp, a, b
    cdef int64_t count
    cdef uint64_t st
    cdef uint32_t o
    sizes_arr = np.empty((trials, depth + 1), dtype=np.int64)
    final_arr = np.empty((trials, n), dtype=np.uint8)
    perm_arr = np.empty(n, dtype=np.int32)
    cdef int64_t[:, ::1] sizes = sizes_arr
    cdef uint8_t[:, ::1] final = final_arr
    cdef int32_t[::1] perm = perm_arr
    cdef uint8_t[::1] state
    with nogil:
        for tr in range(trials):
            st = seeds[tr]
            state = final[tr]
            count = 0
            for i in range(n):
                state[i] = init[i]
                count += init[i]
                perm[i] = <int32_t>i
            sizes[tr, 0] = count
            for lev in range(depth):
                for i in range(n - 1, 0, -1):
                    j = _bounded(&st, <uint32_t>(i + 1))
                    tmp = perm[i]
                    perm[i] = perm[j]
                    perm[j] = tmp
                for k in range(half):
                    a = perm[2 * k]
                    b = perm[2 * k + 1]
                    if state[a] | state[b]:
                        count -= state[a] + state[b]
                        o = _bounded(&st, 15)
                        state[a] = keep_a[o]
                        state[b] = keep_b[o]
                        count += state[a] + state[b]
                sizes[tr, lev + 1] = count
    return sizes_arr, final_arr
