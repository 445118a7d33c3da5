# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backtracking kernel. Same contract as ``_kernel_py`` for m <= 64."""

from libc.stdint cimport uint64_t
from libc.stdlib cimport malloc, free

cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil

MAX_CIRCUITS = 64


cdef inline bint _path_exists(int a, int b, int max_len, uint64_t last_mask,
                              uint64_t used, const uint64_t* adj) nogil:
    cdef uint64_t one = 1
    cdef uint64_t allowed = ~(used | (one << a) | (one << b))
    cdef uint64_t frontier = one << a
    cdef uint64_t f, low, nxt
    cdef int hop
    for hop in range(max_len):
        f = frontier & last_mask
        while f:
            low = f & (~f + 1)
            if (adj[__builtin_ctzll(low)] >> b) & 1:
                return True
            f ^= low
        if hop == max_len - 1:
            break
        nxt = 0
        f = frontier
        while f:
            low = f & (~f + 1)
            nxt |= adj[__builtin_ctzll(low)]
            f ^= low
        frontier = nxt & allowed
        if frontier == 0:
            return False
    return False


cdef inline bint _edges_ok(int lo, int hi, const int* es, const int* et, const int* el,
                           const uint64_t* em, const int* assign, uint64_t used,
                           const uint64_t* adj) nogil:
    cdef int i
    for i in range(lo, hi):
        if not _path_exists(assign[es[i]], assign[et[i]], el[i], em[i], used, adj):
            return False
    return True


def enumerate_assignments(role_masks, edges, adj, int m, bint injective=True, limit=None):
    cdef int n = len(role_masks)
    cdef int ne = len(edges)
    if m > MAX_CIRCUITS:
        raise ValueError(f"compiled kernel handles at most {MAX_CIRCUITS} circuits, got {m}")
    if n == 0:
        return [()], False

    cdef long long cap = -1 if limit is None else limit
    cdef uint64_t* c_adj = <uint64_t*> malloc(max(m, 1) * sizeof(uint64_t))
    cdef uint64_t* masks = <uint64_t*> malloc(n * sizeof(uint64_t))
    cdef uint64_t* remaining = <uint64_t*> malloc(n * sizeof(uint64_t))
    cdef uint64_t* used_at = <uint64_t*> malloc((n + 1) * sizeof(uint64_t))
    cdef int* assign = <int*> malloc(n * sizeof(int))
    cdef int* es = <int*> malloc(max(ne, 1) * sizeof(int))
    cdef int* et = <int*> malloc(max(ne, 1) * sizeof(int))
    cdef int* el = <int*> malloc(max(ne, 1) * sizeof(int))
    cdef uint64_t* em = <uint64_t*> malloc(max(ne, 1) * sizeof(uint64_t))
    cdef int* start = <int*> malloc((n + 1) * sizeof(int))
    cdef int i, d, k, s, t, depth
    cdef bint recheck = False
    cdef uint64_t low, used
    out = []
    truncated = False
    try:
        for i in range(m):
            c_adj[i] = <uint64_t> adj[i]
        for i in range(n):
            masks[i] = <uint64_t> role_masks[i]
        # edges grouped by the deeper of their two roles
        k = 0
        for d in range(n):
            start[d] = k
            for (s, t, L, lm) in edges:
                if max(s, t) == d:
                    es[k] = s
                    et[k] = t
                    el[k] = L
                    em[k] = <uint64_t> lm
                    if L > 1:
                        recheck = True
                    k += 1
        start[n] = k

        used_at[0] = 0
        depth = 0
        remaining[0] = masks[0]
        while depth >= 0:
            if remaining[depth] == 0:
                depth -= 1
                continue
            low = remaining[depth] & (~remaining[depth] + 1)
            remaining[depth] ^= low
            assign[depth] = __builtin_ctzll(low)
            used = used_at[depth] | low
            if not _edges_ok(start[depth], start[depth + 1], es, et, el, em, assign, used, c_adj):
                continue
            if depth + 1 < n:
                depth += 1
                used_at[depth] = used
                remaining[depth] = masks[depth] & ~used if injective else masks[depth]
                continue
            if recheck and not _edges_ok(0, start[n], es, et, el, em, assign, used, c_adj):
                continue
            if cap >= 0 and len(out) >= cap:
                truncated = True
                break
            out.append(tuple([assign[i] for i in range(n)]))
    finally:
        free(c_adj); free(masks); free(remaining); free(used_at); free(assign)
        free(es); free(et); free(el); free(em); free(start)
    return out, truncated
