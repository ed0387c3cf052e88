"""Reference selection policies: everything on, and covariance-similarity grouping."""

import numpy as np

from ..errors import InvalidInputError
from .graph import LOG_FLOOR, finalize, top_np_mask


def baseline_no_selection(graph, kappa_u, kappa_b, floor=LOG_FLOOR):
    """All users and all beams active. The feasibility flag may well be False."""
    x = np.ones(graph.n_beams, dtype=int)
    y = np.ones(graph.n_users, dtype=int)
    return finalize(graph, x, y, kappa_u, kappa_b, floor)


def dominant_subspace(r, rank):
    """Orthonormal basis of the ``rank`` leading eigenvectors of a Hermitian ``r``."""
    r = np.asarray(r)
    rank = min(int(rank), r.shape[0])
    _, u = np.linalg.eigh(0.5 * (r + r.conj().T))
    return u[:, ::-1][:, :rank]


def chordal_distances(bases):
    """Pairwise ``||U_i U_i^H - U_j U_j^H||_F``."""
    n = len(bases)
    proj = [u @ u.conj().T for u in bases]
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = np.linalg.norm(proj[i] - proj[j])
    return d


def k_medoids(dist, k, max_swaps=100):
    """PAM (greedy BUILD, then best-improvement SWAP) on a distance matrix.

    Returns ``(medoids, labels)``; ``labels[i]`` indexes into ``medoids``.
    Ties go to the lower index so the result is deterministic.
    """
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    if not 1 <= k <= n:
        raise InvalidInputError(f"k must lie in [1, {n}], got {k}")

    medoids = [int(np.argmin(dist.sum(axis=1)))]
    nearest = dist[:, medoids[0]].copy()
    while len(medoids) < k:
        gain = np.clip(nearest[:, None] - dist, 0.0, None).sum(axis=0)
        gain[medoids] = -np.inf
        c = int(np.argmax(gain))
        medoids.append(c)
        nearest = np.minimum(nearest, dist[:, c])

    def cost(meds):
        return dist[:, meds].min(axis=1).sum()

    best = cost(medoids)
    for _ in range(max_swaps):
        move = None
        for a in range(k):
            for h in range(n):
                if h in medoids:
                    continue
                trial = medoids.copy()
                trial[a] = h
                c = cost(trial)
                if c < best - 1e-12:
                    best, move = c, trial
        if move is None:
            break
        medoids = move
    medoids = np.array(medoids)
    labels = np.argmin(dist[:, medoids], axis=1)
    labels[medoids] = np.arange(k)  # duplicate points must not empty a cluster
    return medoids, labels


def baseline_jsdm(covariances, k, rng, kappa_b, graph, kappa_u=None, floor=LOG_FLOOR):
    """Group users by covariance similarity and serve one random user per group.

    Users are clustered with k-medoids under the chordal distance between
    their rank ``2*kappa_b`` dominant eigenspaces. The beams switched on are
    the union of the chosen users' ``kappa_b`` strongest block beams.
    """
    n = len(covariances)
    if not 1 <= k <= n:
        raise InvalidInputError(f"k must lie in [1, {n}], got {k}")
    if graph.n_users != n:
        raise InvalidInputError("graph and covariance list disagree on the user count")
    bases = [dominant_subspace(r, 2 * kappa_b) for r in covariances]
    _, labels = k_medoids(chordal_distances(bases), k)

    y = np.zeros(n, dtype=int)
    for c in range(k):
        members = np.flatnonzero(labels == c)
        y[rng.choice(members)] = 1
    mask = top_np_mask(graph.psi, kappa_b) * y[:, None]
    x = (mask.sum(axis=0) > 0).astype(int)
    if kappa_u is None:
        kappa_u = n
    return finalize(graph, x, y, kappa_u, kappa_b, floor, mask=mask * x[None, :], k=k)
