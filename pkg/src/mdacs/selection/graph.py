"""Matrix-weight beam/user bipartite graph and the greedy's scoring pieces."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidInputError
from ..linalg import block_diagonal_weights, is_hermitian, shuffle

LOG_FLOOR = 1e-12


@dataclass
class BeamUserGraph:
    """Per-(user, beam) 2x2 weights ``[Sigma_i]_m`` plus derived scalars.

    Attributes
    ----------
    weights : (n_users, n_beams, 2, 2) complex array
    psi : (n_users, n_beams) real array, ``psi[i, m] = trace(weights[i, m])``
    mask : (n_users, n_beams) int array, the adjacency ``A'``
    """

    weights: np.ndarray
    psi: np.ndarray = None
    mask: np.ndarray = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=complex)
        if self.weights.ndim != 4 or self.weights.shape[2:] != (2, 2):
            raise InvalidInputError("weights must have shape (n_users, n_beams, 2, 2)")
        if self.psi is None:
            self.psi = np.real(np.trace(self.weights, axis1=2, axis2=3))
        if self.mask is None:
            self.mask = np.ones(self.psi.shape, dtype=int)

    @property
    def n_users(self):
        return self.weights.shape[0]

    @property
    def n_beams(self):
        return self.weights.shape[1]

    def subgraph(self, users):
        """Graph restricted to the given user indices (mask carried along)."""
        users = np.asarray(users, dtype=int)
        return BeamUserGraph(self.weights[users], self.psi[users].copy(), self.mask[users].copy())


def build_graph(covariances, geom, shuffled=False):
    """Shuffle each covariance and extract its block-beam weights.

    Pass ``shuffled=True`` if the covariances are already in interleaved order.
    """
    m = geom.n_antennas
    weights = []
    for i, r in enumerate(covariances):
        r = np.asarray(r)
        if r.shape != (m, m):
            raise InvalidInputError(f"covariance {i} has shape {r.shape}, expected {(m, m)}")
        if not is_hermitian(r):
            raise InvalidInputError(f"covariance {i} is not Hermitian")
        weights.append(block_diagonal_weights(r if shuffled else shuffle(r), geom.mx, geom.my))
    if not weights:
        return BeamUserGraph(np.zeros((0, geom.n_beams, 2, 2), dtype=complex))
    return BeamUserGraph(np.stack(weights))


def top_indices(values, k):
    """Indices of the ``k`` largest entries, ties resolved toward lower index."""
    order = np.argsort(-np.asarray(values, dtype=float), kind="stable")
    return order[:k]


def top_np_mask(psi, n_p):
    """Row-wise mask keeping the ``n_p`` largest entries of ``psi``."""
    psi = np.asarray(psi, dtype=float)
    n_beams = psi.shape[1]
    if not 1 <= n_p <= n_beams:
        raise InvalidInputError(f"n_p must lie in [1, {n_beams}], got {n_p}")
    order = np.argsort(-psi, axis=1, kind="stable")[:, :n_p]
    mask = np.zeros(psi.shape, dtype=int)
    np.put_along_axis(mask, order, 1, axis=1)
    return mask


@dataclass
class ProfitCost:
    p: np.ndarray
    c: np.ndarray


def pair_traces(graph):
    """``G[i, j, m] = trace([Sigma_i]_m [Sigma_j]_m^H)`` (real, >= 0 for PSD weights)."""
    w = graph.weights
    return np.einsum("imab,jmab->ijm", w, w.conj()).real


def profit_cost(graph, y, floor=LOG_FLOOR, pair=None):
    """Profit and cost matrices for the user activity vector ``y``.

    ``P[i, m] = log max(floor, sum_j y_j G[i, j, m])`` and ``C`` is the same sum
    without ``j = i``. Pass a precomputed :func:`pair_traces` as ``pair`` to
    avoid recomputing it inside loops.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (graph.n_users,):
        raise InvalidInputError(f"y must have length {graph.n_users}")
    g = pair_traces(graph) if pair is None else pair
    total = np.einsum("ijm,j->im", g, y)
    self_term = np.einsum("iim->im", g) * y[:, None]
    cross = np.clip(total - self_term, 0.0, None)
    p = np.log(np.maximum(floor, total))
    c = np.log(np.maximum(floor, cross))
    return ProfitCost(p, np.minimum(c, p))


def evaluate_phi(pc, x, y, mask=None):
    """``sum_i sum_m x_m y_i (P - C)[i, m]``.

    With ``mask`` only the surviving graph edges ``mask[i, m] = 1`` count.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = pc.p - pc.c
    if mask is not None:
        d = d * np.asarray(mask)
    return float(y @ d @ x)


@dataclass
class Selection:
    """Beam vector ``x`` and user vector ``y`` with bookkeeping."""

    x: np.ndarray
    y: np.ndarray
    feasible: bool
    phi_value: float
    mask: np.ndarray = None
    iterations: int = 0
    info: dict = field(default_factory=dict)

    @property
    def users(self):
        return np.flatnonzero(self.y)

    @property
    def beams(self):
        return np.flatnonzero(self.x)


def beam_loads(mask, x, y):
    """Active users per beam under ``mask``."""
    return (np.asarray(mask) * np.asarray(y)[:, None] * np.asarray(x)[None, :]).sum(axis=0)


def user_degrees(mask, x, y):
    return (np.asarray(mask) * np.asarray(y)[:, None] * np.asarray(x)[None, :]).sum(axis=1)


def is_feasible(mask, x, y, kappa_u, kappa_b):
    return bool(np.all(beam_loads(mask, x, y) <= kappa_u)
                and np.all(user_degrees(mask, x, y) <= kappa_b))


def finalize(graph, x, y, kappa_u, kappa_b, floor=LOG_FLOOR, mask=None, **info):
    """Wrap ``(x, y)`` into a :class:`Selection` with an honest feasibility flag.

    Feasibility is judged on ``mask`` (default: the top-``kappa_b`` mask gated by
    ``x`` and ``y``). ``phi_value`` uses profit/cost at the final ``y``, summed
    over the masked edges (``objective="masked"``) or all pairs (``"full"``).
    """
    objective = info.pop("objective", "masked")
    x = np.asarray(x, dtype=int)
    y = np.asarray(y, dtype=int)
    if mask is None:
        mask = top_np_mask(graph.psi, min(kappa_b, graph.n_beams)) * y[:, None] * x[None, :]
    phi = 0.0
    if graph.n_users:
        phi = evaluate_phi(profit_cost(graph, y, floor), x, y,
                           mask if objective == "masked" else None)
    return Selection(x, y, is_feasible(mask, x, y, kappa_u, kappa_b), phi,
                     mask=np.asarray(mask, dtype=int), info=info)
