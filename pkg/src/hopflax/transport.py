"""Exact discrete optimal transport by the network simplex method."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .costs import CostFunction
from .errors import InfeasibleMarginals, ValidationError
from .hopf_lax import inf_convolution
from .measures import ProbMeasure, integrate, log_mean_exp
from .metric_space import MetricSpace

MASS_TOL = 1e-9
# consecutive zero-step pivots before switching to the lowest-index rule
DEGENERATE_STREAK = 50


@dataclass(frozen=True)
class TransportPlan:
    pi: np.ndarray
    cost: float
    u: np.ndarray
    v: np.ndarray
    duality_gap: float
    min_reduced_cost: float
    pivots: int


def _weights(nu) -> np.ndarray:
    if isinstance(nu, ProbMeasure):
        return np.array(nu.weights)
    w = np.array(nu, dtype=float)
    if w.ndim != 1 or np.any(~np.isfinite(w)) or np.any(w < 0):
        raise ValidationError("marginals must be finite nonnegative vectors")
    w[w < 1e-300] = 0.0
    return w


class _Simplex:
    """Transportation simplex on a spanning tree of basic cells.

    Nodes 0..m-1 are sources and m..m+k-1 sinks.  The tree is kept rooted at
    node 0 with parent pointers and depths; potentials satisfy
    u[i] + v[j] = c[i, j] on every basic cell.
    """

    def __init__(self, c, a, b):
        self.c = c
        self.m, self.k = c.shape
        self.a, self.b = a, b
        self.scale = max(1.0, float(np.abs(c).max()))
        self.tol = 1e-12 * self.scale
        self.flow = np.zeros(c.shape)
        self.basic = np.zeros(c.shape, dtype=bool)
        self.adj = [set() for _ in range(self.m + self.k)]
        self._initial_tree()
        self._rebuild()

    # cells and tree edges -------------------------------------------------
    def _cell(self, x, y):
        return (x, y - self.m) if x < self.m else (y, x - self.m)

    def _add(self, i, j, amount):
        self.flow[i, j] = amount
        self.basic[i, j] = True
        self.adj[i].add(self.m + j)
        self.adj[self.m + j].add(i)

    def _remove(self, i, j):
        self.flow[i, j] = 0.0
        self.basic[i, j] = False
        self.adj[i].discard(self.m + j)
        self.adj[self.m + j].discard(i)

    def _initial_tree(self):
        """Cheaper of the least-cost and northwest-corner starting bases."""
        order_lc = np.argsort(self.c, axis=None, kind="stable")
        cells_lc = self._allocate(order_lc)
        cells_nw = self._allocate(None)
        cost = [math.fsum(x * self.c[i, j] for i, j, x in cells) for cells in (cells_lc, cells_nw)]
        for i, j, x in cells_lc if cost[0] <= cost[1] else cells_nw:
            self._add(i, j, x)

    def _allocate(self, order):
        """Greedy allocation crossing out exactly one line per cell.

        With ``order`` None the staircase (northwest-corner) walk is used.
        Either way the m + k - 1 cells form a spanning tree.
        """
        s, d = list(self.a), list(self.b)
        row_open = np.ones(self.m, dtype=bool)
        col_open = np.ones(self.k, dtype=bool)
        rows_left, cols_left = self.m, self.k
        cells = []
        i = j = 0
        flats = iter(order) if order is not None else None
        while True:
            if flats is not None:
                i, j = divmod(int(next(flats)), self.k)
                if not (row_open[i] and col_open[j]):
                    continue
            x = min(s[i], d[j])
            cells.append((i, j, x))
            s[i] -= x
            d[j] -= x
            if rows_left == 1 and cols_left == 1:
                return cells
            if (s[i] <= d[j] and rows_left > 1) or cols_left == 1:
                row_open[i] = False
                rows_left -= 1
                i += 1
            else:
                col_open[j] = False
                cols_left -= 1
                j += 1

    def _rebuild(self):
        """Parents, depths and potentials from scratch by BFS from node 0."""
        n = self.m + self.k
        self.parent = np.full(n, -1)
        self.depth = np.zeros(n, dtype=int)
        self.pot = np.zeros(n)
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            x = queue.popleft()
            for y in self.adj[x]:
                if not seen[y]:
                    seen[y] = True
                    self.parent[y] = x
                    self.depth[y] = self.depth[x] + 1
                    i, j = self._cell(x, y)
                    self.pot[y] = self.c[i, j] - self.pot[x]
                    queue.append(y)
        if not seen.all():
            raise RuntimeError("basis is not a spanning tree")

    # pivoting -------------------------------------------------------------
    def reduced(self, rows=slice(None)):
        return self.c[rows] - self.pot[: self.m, None][rows] - self.pot[None, self.m:]

    def _path(self, x, y):
        """Tree path from x to y as a node list."""
        left, right = [x], [y]
        while x != y:
            if self.depth[x] >= self.depth[y]:
                x = self.parent[x]
                left.append(x)
            else:
                y = self.parent[y]
                right.append(y)
        return left + right[-2::-1]

    def pivot(self, i, j, bland: bool) -> bool:
        """Bring cell (i, j) into the basis; return True if the step was degenerate."""
        jn = self.m + j
        nodes = self._path(jn, i)
        # cells along the cycle alternate: decrease, increase, ...
        dec = [self._cell(nodes[t], nodes[t + 1]) for t in range(0, len(nodes) - 1, 2)]
        inc = [self._cell(nodes[t], nodes[t + 1]) for t in range(1, len(nodes) - 1, 2)]
        theta = min(self.flow[cell] for cell in dec)
        ties = [cell for cell in dec if self.flow[cell] == theta]
        if bland:
            leave = min(ties, key=lambda cell: cell[0] * self.k + cell[1])
        else:
            # the last tie along the cycle keeps the tree strongly feasible
            leave = ties[-1]
        if theta > 0:
            for cell in dec:
                self.flow[cell] -= theta
            for cell in inc:
                self.flow[cell] += theta
        li, lj = leave
        ln = self.m + lj
        child = li if self.parent[li] == ln else ln
        self._remove(li, lj)
        self._add(i, j, theta)
        self._reattach(child, i, jn)
        return theta == 0

    def _reattach(self, child, i, jn):
        """Re-hang the subtree cut off at ``child`` through the entering cell."""
        x = i
        while self.depth[x] > self.depth[child]:
            x = self.parent[x]
        inner, outer = (i, jn) if x == child else (jn, i)
        delta = (self.c[i, jn - self.m] - self.pot[outer]) - self.pot[inner]
        same = inner < self.m
        self.parent[inner] = outer
        self.depth[inner] = self.depth[outer] + 1
        pot, depth, parent, adj, m = self.pot, self.depth, self.parent, self.adj, self.m
        queue = deque([inner])
        while queue:
            x = queue.popleft()
            pot[x] += delta if (x < m) == same else -delta
            px, dx = parent[x], depth[x] + 1
            for y in adj[x]:
                if y != px:
                    parent[y] = x
                    depth[y] = dx
                    queue.append(y)

    def _price(self, bland: bool):
        """Entering cell as a flat index, or None when no cell is eligible.

        Dantzig's rule is applied to one block of rows at a time, moving to
        the next block only when the current one has no eligible cell.
        """
        if bland:
            eligible = np.flatnonzero((self.reduced() < -self.tol).ravel())
            return int(eligible[0]) if len(eligible) else None
        for _ in range(self.nblocks):
            lo = self.block * self.block_rows
            r = self.reduced(slice(lo, lo + self.block_rows))
            flat = int(np.argmin(r))
            if r.flat[flat] < -self.tol:
                return lo * self.k + flat
            self.block = (self.block + 1) % self.nblocks
        return None

    def solve(self, max_pivots=None):
        pivots, streak = 0, 0
        limit = max_pivots or 50 * (self.m + self.k) ** 2
        self.block_rows = max(1, -(-self.m // 8))
        self.nblocks = -(-self.m // self.block_rows)
        self.block = 0
        while pivots < limit:
            bland = streak >= DEGENERATE_STREAK
            flat = self._price(bland)
            if flat is None:
                # confirm with exact potentials before declaring optimality
                self._rebuild()
                if self.reduced().min() >= -self.tol:
                    break
                continue
            i, j = divmod(flat, self.k)
            degenerate = self.pivot(i, j, bland)
            streak = streak + 1 if degenerate else 0
            pivots += 1
        else:
            raise RuntimeError("network simplex exceeded its pivot limit")
        self._peel_flows()
        self._rebuild()
        return pivots

    def _peel_flows(self):
        """Recompute basic flows exactly from the marginals by removing leaves."""
        n = self.m + self.k
        rest = np.concatenate([self.a, self.b])
        deg = np.array([len(s) for s in self.adj])
        adj = [set(s) for s in self.adj]
        leaves = deque(x for x in range(n) if deg[x] == 1)
        done = np.zeros(n, dtype=bool)
        while leaves:
            x = leaves.popleft()
            if done[x] or not adj[x]:
                continue
            y = adj[x].pop()
            adj[y].discard(x)
            done[x] = True
            i, j = self._cell(x, y)
            amount = max(rest[x], 0.0)
            self.flow[i, j] = amount
            rest[y] -= amount
            if len(adj[y]) == 1:
                leaves.append(y)


def ot_cost(c, nu1, nu2, max_pivots=None) -> TransportPlan:
    """Optimal coupling of nu1 and nu2 for the cost matrix c."""
    c = np.asarray(c, dtype=float)
    a, b = _weights(nu1), _weights(nu2)
    if c.shape != (len(a), len(b)):
        raise ValidationError(f"cost matrix shape {c.shape} does not match marginals ({len(a)}, {len(b)})")
    if not np.all(np.isfinite(c)):
        raise ValidationError("cost matrix entries must be finite")
    sa, sb = math.fsum(a), math.fsum(b)
    if abs(sa - sb) > MASS_TOL:
        raise InfeasibleMarginals(sa, sb)
    rows, cols = np.flatnonzero(a > 0), np.flatnonzero(b > 0)
    pi = np.zeros(c.shape)
    u = np.zeros(len(a))
    v = np.zeros(len(b))
    pivots = 0
    if len(rows) and len(cols):
        sub = c[np.ix_(rows, cols)]
        bb = b[cols] * (a[rows].sum() / b[cols].sum())
        solver = _Simplex(sub, a[rows], bb)
        pivots = solver.solve(max_pivots)
        pi[np.ix_(rows, cols)] = solver.flow
        u[rows] = solver.pot[: len(rows)]
        v[cols] = solver.pot[len(rows):]
    # extend the potentials to dropped points as the largest feasible values
    dropped_cols = b <= 0
    if dropped_cols.any() and len(rows):
        v[dropped_cols] = (c[rows][:, dropped_cols] - u[rows, None]).min(axis=0)
    dropped_rows = a <= 0
    if dropped_rows.any():
        u[dropped_rows] = (c[dropped_rows] - v[None, :]).min(axis=1)
    cost = math.fsum((pi * c)[pi > 0])
    dual = math.fsum(a * u) + math.fsum(b * v)
    reduced = c - u[:, None] - v[None, :]
    return TransportPlan(pi, cost, u, v, cost - dual, float(reduced.min()), pivots)


def ot_oracle_1d(positions, p: float, nu1, nu2) -> float:
    """Cost of the monotone (quantile) coupling for |x - y|^p / p on the line."""
    x = np.asarray(positions, dtype=float)
    if np.any(np.diff(x) <= 0):
        raise ValidationError("positions must be strictly increasing")
    a, b = list(_weights(nu1)), list(_weights(nu2))
    i = j = 0
    total = []
    while i < len(a) and j < len(b):
        move = min(a[i], b[j])
        if move > 0:
            total.append(move * abs(x[i] - x[j]) ** p / p)
        a[i] -= move
        b[j] -= move
        if a[i] <= 0:
            i += 1
        else:
            j += 1
    return math.fsum(total)


def transport_cost_matrix(space: MetricSpace, cost: CostFunction) -> np.ndarray:
    return cost.matrix(space.dist)


def bobkov_gotze_gap(space: MetricSpace, cost: CostFunction, mu: ProbMeasure, C: float, f) -> float:
    """log of the integral of exp(Q_1 f / C) minus (integral of f) / C."""
    if not C > 0:
        raise ValidationError(f"C must be positive, got {C!r}")
    q = inf_convolution(space, cost, f, 1.0)
    return log_mean_exp(mu, q / C) - integrate(mu, f) / C
