# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: transportation simplex and jittered circle-map orbits.

Mirrors ``_fallback.py`` step for step.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fmod, pow, sqrt, fabs

cnp.import_array()


def emd(a, b, C, long max_iter=0):
    cdef double[:, ::1] Cv = np.ascontiguousarray(C, dtype=np.float64)
    cdef Py_ssize_t m = Cv.shape[0], n = Cv.shape[1]
    cdef Py_ssize_t N = m + n, nb = m + n - 1
    cdef double[::1] ai = np.array(a, dtype=np.float64)
    cdef double[::1] bj = np.array(b, dtype=np.float64)
    cdef long[::1] bi = np.empty(nb, dtype=np.int64)
    cdef long[::1] bc = np.empty(nb, dtype=np.int64)
    cdef double[::1] flow = np.empty(nb, dtype=np.float64)
    cdef long[::1] deg = np.empty(N + 1, dtype=np.int64)
    cdef long[::1] adj = np.empty(2 * nb, dtype=np.int64)
    cdef long[::1] fill = np.empty(N, dtype=np.int64)
    cdef long[::1] parent = np.empty(N, dtype=np.int64)
    cdef long[::1] pedge = np.empty(N, dtype=np.int64)
    cdef long[::1] depth = np.empty(N, dtype=np.int64)
    cdef long[::1] queue = np.empty(N, dtype=np.int64)
    cdef char[::1] seen = np.empty(N, dtype=np.int8)
    cdef double[::1] pot = np.empty(N, dtype=np.float64)
    cdef long[::1] minus = np.empty(N, dtype=np.int64)
    cdef long[::1] plus = np.empty(N, dtype=np.int64)
    cdef long[::1] path_i = np.empty(N, dtype=np.int64)
    cdef long[::1] path_j = np.empty(N, dtype=np.int64)
    cdef Py_ssize_t i = 0, j = 0, k, u, w, r, c, head, tail, t
    cdef Py_ssize_t total = m * n, block, scanned, stop, pos, start = 0
    cdef Py_ssize_t ei, ej, npi, npj, nminus, nplus, L, leave
    cdef long it = 0
    cdef double q, best, rc, theta, cmax = 1.0, eps
    cdef Py_ssize_t e = 0

    for r in range(m):
        for c in range(n):
            if fabs(Cv[r, c]) > cmax:
                cmax = fabs(Cv[r, c])
    eps = 1e-10 * cmax
    block = <Py_ssize_t>sqrt(<double>total)
    if block < 64:
        block = 64
    if max_iter <= 0:
        max_iter = 1000 * N + 10000

    # northwest corner start: a staircase, hence a spanning tree
    while True:
        q = ai[i] if ai[i] < bj[j] else bj[j]
        bi[e] = i
        bc[e] = j
        flow[e] = q
        e += 1
        ai[i] -= q
        bj[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif ai[i] <= bj[j]:
            i += 1
        else:
            j += 1

    while True:
        for u in range(N + 1):
            deg[u] = 0
        for k in range(nb):
            deg[bi[k] + 1] += 1
            deg[m + bc[k] + 1] += 1
        for u in range(N):
            deg[u + 1] += deg[u]
            fill[u] = deg[u]
        for k in range(nb):
            adj[fill[bi[k]]] = k
            fill[bi[k]] += 1
            adj[fill[m + bc[k]]] = k
            fill[m + bc[k]] += 1
        for u in range(N):
            seen[u] = 0
        seen[0] = 1
        parent[0] = -1
        pedge[0] = -1
        depth[0] = 0
        pot[0] = 0.0
        queue[0] = 0
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            for t in range(deg[u], deg[u + 1]):
                k = adj[t]
                r = bi[k]
                c = m + bc[k]
                w = c if u == r else r
                if seen[w]:
                    continue
                seen[w] = 1
                parent[w] = u
                pedge[w] = k
                depth[w] = depth[u] + 1
                pot[w] = Cv[bi[k], bc[k]] - pot[u]
                queue[tail] = w
                tail += 1

        best = -eps
        ei = -1
        ej = -1
        scanned = 0
        pos = start
        while scanned < total:
            stop = block if block < total - scanned else total - scanned
            for t in range(stop):
                r = pos // n
                c = pos - r * n
                rc = Cv[r, c] - pot[r] - pot[m + c]
                if rc < best:
                    best = rc
                    ei = r
                    ej = c
                pos += 1
                if pos == total:
                    pos = 0
            scanned += stop
            if ei >= 0:
                break
        if ei < 0:
            break
        start = pos
        it += 1
        if it > max_iter:
            raise RuntimeError("transportation simplex iteration cap reached")

        u = ei
        w = m + ej
        npi = 0
        npj = 0
        while depth[u] > depth[w]:
            path_i[npi] = pedge[u]
            npi += 1
            u = parent[u]
        while depth[w] > depth[u]:
            path_j[npj] = pedge[w]
            npj += 1
            w = parent[w]
        while u != w:
            path_i[npi] = pedge[u]
            npi += 1
            u = parent[u]
            path_j[npj] = pedge[w]
            npj += 1
            w = parent[w]
        L = npi + npj
        nminus = 0
        nplus = 0
        for t in range(npj):
            if t % 2 == 0:
                minus[nminus] = path_j[t]
                nminus += 1
            else:
                plus[nplus] = path_j[t]
                nplus += 1
        for t in range(npi):
            if (L - t) % 2 == 1:
                minus[nminus] = path_i[t]
                nminus += 1
            else:
                plus[nplus] = path_i[t]
                nplus += 1
        leave = minus[0]
        theta = flow[leave]
        for t in range(1, nminus):
            if flow[minus[t]] < theta:
                theta = flow[minus[t]]
                leave = minus[t]
        for t in range(nminus):
            flow[minus[t]] -= theta
        for t in range(nplus):
            flow[plus[t]] += theta
        bi[leave] = ei
        bc[leave] = ej
        flow[leave] = theta

    rows = np.asarray(bi).copy()
    cols = np.asarray(bc).copy()
    fl = np.asarray(flow).copy()
    cost = float(np.sum(fl * np.asarray(Cv)[rows, cols]))
    return rows, cols, fl, cost, it


def base_orbit(int kind, double param, double y0, noise):
    cdef double[::1] nz = np.ascontiguousarray(noise, dtype=np.float64)
    cdef Py_ssize_t n = nz.shape[0], i
    out_arr = np.empty(n + 1, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double y = fmod(y0, 1.0)
    if y < 0:
        y += 1.0
    out[0] = y
    if kind == 0:
        for i in range(n):
            y = fmod(param * y + nz[i], 1.0)
            out[i + 1] = y
    elif kind == 1:
        for i in range(n):
            if y <= 0.5:
                y = (1.0 + pow(2.0 * y, param)) * y
            else:
                y = 2.0 * y - 1.0
            y = fmod(y + nz[i], 1.0)
            out[i + 1] = y
    else:
        raise ValueError(f"unknown orbit kind {kind}")
    return out_arr
