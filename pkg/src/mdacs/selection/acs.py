"""Active channel sparsification as a small mixed-integer program.

The program picks binary beam indicators ``x`` and user indicators ``y`` and
maximizes the size of a fractional matching ``z`` on the beam/user adjacency:

    max  sum z[i, m]
    s.t. z[i, m] <= A[i, m],  sum_i z[i, m] <= x[m],  sum_m z[i, m] <= y[i]
         sum_m A[i, m] x[m] <= cap       for every active user
         p_min y[i] <= sum_m W[i, m] x[m]
         x[m] <= sum_i A[i, m] y[i]

For fixed binary ``(x, y)`` the z-problem is bipartite matching, whose LP is
integral, so it is solved exactly as a unit-capacity max-flow. The outer
binaries are handled by depth-first branch and bound whose bound sets every
undecided indicator to 1. This is meant for desk-scale instances only.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from ..errors import InvalidInputError, UnsupportedScaleError
from .graph import LOG_FLOOR, finalize

MAX_SCALE = 32


@dataclass
class ScalarGraph:
    """Binary adjacency and real weights on (user, beam) pairs.

    ``block`` maps every beam column to the block beam it belongs to.
    """

    adjacency: np.ndarray
    weights: np.ndarray
    block: np.ndarray = None

    def __post_init__(self):
        self.adjacency = np.asarray(self.adjacency, dtype=int)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.adjacency.shape != self.weights.shape or self.adjacency.ndim != 2:
            raise InvalidInputError("adjacency and weights must be equal-shape 2-D arrays")
        if self.block is None:
            self.block = np.arange(self.adjacency.shape[1])

    @property
    def n_users(self):
        return self.adjacency.shape[0]

    @property
    def n_beams(self):
        return self.adjacency.shape[1]


def scalar_graph_from_matrix(graph, threshold):
    """Per-antenna graph: one column per diagonal entry of each 2x2 block weight.

    Column ``2*m + j`` carries ``Re [W_i]_m[j, j]`` and is adjacent iff that
    weight exceeds ``threshold``.
    """
    diag = np.real(np.diagonal(graph.weights, axis1=2, axis2=3))  # (nu, nb, 2)
    w = diag.reshape(graph.n_users, 2 * graph.n_beams)
    return ScalarGraph((w > threshold).astype(int), w, np.repeat(np.arange(graph.n_beams), 2))


def matrix_graph(graph, threshold):
    """Block-beam graph with weights ``trace([W_i]_m)``."""
    return ScalarGraph((graph.psi > threshold).astype(int), graph.psi.copy())


def matching_size(adjacency, x, y):
    """Maximum matching between beams with ``x`` > 0 and users with ``y`` > 0."""
    a = np.asarray(adjacency)[np.asarray(y) > 0][:, np.asarray(x) > 0]
    n_u, n_b = a.shape
    if n_u == 0 or n_b == 0 or not a.any():
        return 0
    # nodes: 0 source, 1..n_b beams, then users, then sink
    sink = 1 + n_b + n_u
    ui, bi = np.nonzero(a)
    rows = np.concatenate([np.zeros(n_b, int), 1 + bi, 1 + n_b + np.arange(n_u)])
    cols = np.concatenate([1 + np.arange(n_b), 1 + n_b + ui, np.full(n_u, sink)])
    cap = csr_matrix((np.ones(rows.size, dtype=np.int32), (rows, cols)), shape=(sink + 1, sink + 1))
    return int(maximum_flow(cap, 0, sink).flow_value)


@dataclass
class AcsSolution:
    x: np.ndarray
    y: np.ndarray
    value: int
    nodes: int
    optimal: bool
    info: dict = field(default_factory=dict)


def constraints_hold(adjacency, weights, x, y, cap, p_min):
    """Check the side constraints on a fully decided binary ``(x, y)``."""
    a = np.asarray(adjacency)
    x = np.asarray(x)
    y = np.asarray(y)
    on = y > 0
    if np.any((a[on] @ x) > cap):
        return False
    if np.any(p_min * y > np.asarray(weights) @ x + 1e-12):
        return False
    if np.any(x > a.T @ y):
        return False
    return True


def solve_acs_milp(adjacency, weights, cap, p_min, max_nodes=None):
    """Exact branch and bound over ``(x, y)``.

    ``max_nodes`` caps the search; if it is hit, the best solution found so
    far is returned with ``optimal=False``.
    """
    a = np.asarray(adjacency, dtype=int)
    w = np.asarray(weights, dtype=float)
    n_u, n_b = a.shape
    # users first: a decided user lets the beam decisions prune on its degree cap
    order = [("y", i) for i in range(n_u)] + [("x", m) for m in range(n_b)]
    x = np.full(n_b, -1)
    y = np.full(n_u, -1)
    best = {"value": 0, "x": np.zeros(n_b, int), "y": np.zeros(n_u, int)}
    stats = {"nodes": 0, "truncated": False}

    def prune(x, y):
        x_hi = (x != 0).astype(float)
        y_hi = (y != 0).astype(int)
        on = y == 1
        if np.any(a[on] @ (x == 1) > cap):
            return True
        if np.any(p_min > w[on] @ x_hi + 1e-12):
            return True
        if np.any((x == 1) & (a.T @ y_hi == 0)):
            return True
        return False

    def visit(depth):
        stats["nodes"] += 1
        if max_nodes is not None and stats["nodes"] > max_nodes:
            stats["truncated"] = True
            return
        if prune(x, y):
            return
        if depth == len(order):
            val = matching_size(a, x, y)
            if val > best["value"]:
                best.update(value=val, x=x.copy(), y=y.copy())
            return
        bound = matching_size(a, x != 0, y != 0)
        if bound <= best["value"]:
            return
        kind, k = order[depth]
        vec = y if kind == "y" else x
        for v in (1, 0):
            vec[k] = v
            visit(depth + 1)
            if stats["truncated"]:
                break
        vec[k] = -1

    visit(0)
    return AcsSolution(best["x"], best["y"], best["value"], stats["nodes"], not stats["truncated"])


def baseline_acs_milp(graph, T, p_min, threshold, mode="matrix", kappa_u=None, kappa_b=None,
                      max_nodes=None, floor=LOG_FLOOR):
    """ACS selection on the scalar (per-antenna) or matrix (per-block) graph.

    The degree cap is ``T`` pilot dimensions: ``T`` scalar beams, or ``T // 2``
    block beams since each block beam occupies two. In scalar mode a block
    beam is switched on if either of its two columns is.
    """
    if mode == "matrix":
        sg = matrix_graph(graph, threshold)
        cap = T // 2
    elif mode == "scalar":
        sg = scalar_graph_from_matrix(graph, threshold)
        cap = T
    else:
        raise InvalidInputError(f"unknown ACS mode {mode!r}")
    if sg.n_beams > MAX_SCALE or sg.n_users > MAX_SCALE:
        raise UnsupportedScaleError(
            f"ACS branch and bound limited to {MAX_SCALE} beams and users, "
            f"got {sg.n_beams} beams and {sg.n_users} users")
    sol = solve_acs_milp(sg.adjacency, sg.weights, cap, p_min, max_nodes=max_nodes)
    x = np.zeros(graph.n_beams, dtype=int)
    x[np.unique(sg.block[sol.x > 0])] = 1
    return finalize(graph, x, sol.y, kappa_u or graph.n_users, kappa_b or graph.n_beams, floor,
                    matching=sol.value, nodes=sol.nodes, optimal=sol.optimal, mode=mode)
