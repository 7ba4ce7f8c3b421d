"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Same algorithms, same results; used when the extension is not built or when
``FIBERLIFT_PURE=1`` is set.
"""
import math

import numpy as np


def _northwest(a, b, m, n):
    ai = list(a)
    bj = list(b)
    bi, bjs, flow = [], [], []
    i = j = 0
    while True:
        q = min(ai[i], bj[j])
        bi.append(i)
        bjs.append(j)
        flow.append(q)
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
    return bi, bjs, flow


def emd(a, b, C, max_iter=0):
    """Transportation simplex on the dense bipartite graph.

    Returns ``(rows, cols, flows, cost, iterations)`` for the basic cells of an
    optimal plan.  Spanning-tree basis, block pricing on reduced costs.
    """
    C = np.ascontiguousarray(C, dtype=float)
    m, n = C.shape
    Cl = C.tolist()
    bi, bjs, flow = _northwest([float(x) for x in a], [float(x) for x in b], m, n)
    nb = len(bi)
    N = m + n
    cmax = max(1.0, float(np.abs(C).max()) if C.size else 1.0)
    eps = 1e-10 * cmax
    block = max(64, int(math.sqrt(m * n)))
    total = m * n
    if max_iter <= 0:
        max_iter = 1000 * N + 10000
    start = 0
    it = 0
    while True:
        adj = [[] for _ in range(N)]
        for k in range(nb):
            adj[bi[k]].append(k)
            adj[m + bjs[k]].append(k)
        parent = [-1] * N
        pedge = [-1] * N
        depth = [0] * N
        pot = [0.0] * N
        seen = [False] * N
        seen[0] = True
        queue = [0]
        for u in queue:
            for k in adj[u]:
                r, c = bi[k], m + bjs[k]
                w = c if u == r else r
                if seen[w]:
                    continue
                seen[w] = True
                parent[w] = u
                pedge[w] = k
                depth[w] = depth[u] + 1
                pot[w] = Cl[bi[k]][bjs[k]] - pot[u]
                queue.append(w)
        # pricing
        best = -eps
        ei = ej = -1
        scanned = 0
        pos = start
        while scanned < total:
            stop = min(block, total - scanned)
            for _ in range(stop):
                r, c = divmod(pos, n)
                rc = Cl[r][c] - pot[r] - pot[m + c]
                if rc < best:
                    best = rc
                    ei, ej = r, c
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
        # cycle through the tree between row ei and column ej
        u, w = ei, m + ej
        path_i, path_j = [], []
        while depth[u] > depth[w]:
            path_i.append(pedge[u])
            u = parent[u]
        while depth[w] > depth[u]:
            path_j.append(pedge[w])
            w = parent[w]
        while u != w:
            path_i.append(pedge[u])
            u = parent[u]
            path_j.append(pedge[w])
            w = parent[w]
        L = len(path_i) + len(path_j)
        minus, plus = [], []
        for t, k in enumerate(path_j):
            (minus if t % 2 == 0 else plus).append(k)
        for t, k in enumerate(path_i):
            (minus if (L - t) % 2 == 1 else plus).append(k)
        leave = minus[0]
        theta = flow[leave]
        for k in minus[1:]:
            if flow[k] < theta:
                theta = flow[k]
                leave = k
        for k in minus:
            flow[k] -= theta
        for k in plus:
            flow[k] += theta
        bi[leave], bjs[leave], flow[leave] = ei, ej, theta
    rows = np.array(bi, dtype=np.int64)
    cols = np.array(bjs, dtype=np.int64)
    fl = np.array(flow, dtype=float)
    cost = float(np.sum(fl * C[rows, cols]))
    return rows, cols, fl, cost, it


def base_orbit(kind, param, y0, noise):
    """Jittered orbit ``y[k+1] = (S(y[k]) + noise[k]) mod 1`` of a circle map.

    ``kind`` 0: ``y -> param * y``; ``kind`` 1: Pomeau-Manneville with ``q = param``.
    """
    nz = [float(x) for x in noise]
    out = [0.0] * (len(nz) + 1)
    y = float(y0) % 1.0
    out[0] = y
    if kind == 0:
        k = float(param)
        for i, e in enumerate(nz):
            y = (k * y + e) % 1.0
            out[i + 1] = y
    elif kind == 1:
        q = float(param)
        for i, e in enumerate(nz):
            if y <= 0.5:
                y = (1.0 + (2.0 * y) ** q) * y
            else:
                y = 2.0 * y - 1.0
            y = (y + e) % 1.0
            out[i + 1] = y
    else:
        raise ValueError(f"unknown orbit kind {kind}")
    return np.array(out)
