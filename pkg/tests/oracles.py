"""Independent reference solvers used only by the tests."""
import numpy as np
from scipy.optimize import linprog


def lp_transport(a, b, C):
    """Optimal transport cost by the HiGHS LP solver."""
    m, n = C.shape
    A_eq = np.zeros((m + n, m * n))
    for i in range(m):
        A_eq[i, i * n:(i + 1) * n] = 1.0
    for j in range(n):
        A_eq[m + j, j::n] = 1.0
    res = linprog(C.ravel(), A_eq=A_eq, b_eq=np.concatenate([a, b]), bounds=(0, None),
                  method="highs")
    assert res.status == 0, res.message
    return float(res.fun)


def _tree_solution(basis, a, b):
    """Basic solution on a spanning-tree support, by repeatedly peeling leaves."""
    ra, rb = list(a), list(b)
    cells = set(basis)
    x = {}
    while cells:
        deg_r, deg_c = {}, {}
        for i, j in cells:
            deg_r[i] = deg_r.get(i, 0) + 1
            deg_c[j] = deg_c.get(j, 0) + 1
        for i, j in list(cells):
            if deg_r[i] == 1:
                x[i, j] = ra[i]
                rb[j] -= ra[i]
                ra[i] = 0.0
            elif deg_c[j] == 1:
                x[i, j] = rb[j]
                ra[i] -= rb[j]
                rb[j] = 0.0
            else:
                continue
            cells.discard((i, j))
            break
    return x


def _cycle(basis, e):
    """Alternating cycle closed by non-basic cell ``e`` (list starting at ``e``)."""
    adj = {}
    for i, j in basis:
        adj.setdefault(("r", i), []).append(("c", j))
        adj.setdefault(("c", j), []).append(("r", i))
    start, goal = ("c", e[1]), ("r", e[0])
    prev = {start: None}
    stack = [start]
    while stack:
        u = stack.pop()
        if u == goal:
            break
        for v in adj.get(u, []):
            if v not in prev:
                prev[v] = u
                stack.append(v)
    path = [goal]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    # path runs row e0 -> ... -> col e1; consecutive nodes are basic cells
    cells = [e]
    for u, v in zip(path, path[1:]):
        cells.append((u[1], v[1]) if u[0] == "r" else (v[1], u[1]))
    return cells


def transport_vertices(a, b, C, tol=1e-12):
    """Costs of all vertices of the transport polytope ``U(a, b)``.

    Vertices are basic feasible solutions, i.e. spanning trees of the
    complete bipartite graph carrying a nonnegative flow.  Starting from the
    north-west-corner tree, every basis exchange (add a non-basic cell,
    drop a cell of the closed cycle that reaches zero first) is followed
    breadth-first; the vertex graph is connected, so all vertices are found.
    No objective is used in the walk.
    """
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    m, n = len(a), len(b)
    # north-west corner
    i = j = 0
    ra, rb = list(a), list(b)
    basis = []
    while True:
        basis.append((i, j))
        x = min(ra[i], rb[j])
        ra[i] -= x
        rb[j] -= x
        if i == m - 1 and j == n - 1:
            break
        if (ra[i] <= rb[j] and i < m - 1) or j == n - 1:
            i += 1
        else:
            j += 1
    seen = {frozenset(basis)}
    queue = [frozenset(basis)]
    costs = {}
    all_cells = [(i, j) for i in range(m) for j in range(n)]
    while queue:
        B = queue.pop()
        x = _tree_solution(B, a, b)
        key = tuple(sorted((c, round(v, 12)) for c, v in x.items() if v > tol))
        costs[key] = sum(v * C[c[0]][c[1]] for c, v in x.items())
        for e in all_cells:
            if e in B:
                continue
            cyc = _cycle(B, e)
            minus = cyc[1::2]
            theta = min(x[c] for c in minus)
            for c in minus:
                if x[c] <= theta + tol:
                    nb = (B - {c}) | {e}
                    if nb not in seen:
                        seen.add(nb)
                        queue.append(nb)
    return list(costs.values())


def brute_force_transport(a, b, C):
    return min(transport_vertices(a, b, C))
