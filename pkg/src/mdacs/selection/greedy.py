"""Greedy beam/user selection for multi-dimensional active channel sparsification."""

import numpy as np

from ..errors import InvalidInputError
from .graph import (
    LOG_FLOOR,
    Selection,
    beam_loads,
    evaluate_phi,
    is_feasible,
    pair_traces,
    profit_cost,
    top_indices,
    top_np_mask,
)

REFRESH_MODES = ("iteration", "once")
OBJECTIVES = ("masked", "full")


def greedy_mdacs(graph, kappa_u, kappa_b, floor=LOG_FLOOR, refresh="iteration", objective="masked",
                 callback=None):
    """Switch beams/users off until no active beam serves more than ``kappa_u`` users.

    Every user first keeps only its ``kappa_b`` strongest block beams (mask
    ``A'``). Overloaded beams are visited in ascending index order. For each,
    two repairs are scored with ``Phi``: switching the beam off, or keeping
    its ``kappa_u`` strongest users and switching the other users on that
    beam off everywhere. The higher score wins; ties keep the users.

    ``Phi`` is summed over the edges still present in ``A'`` after the
    candidate move (``objective="masked"``, the default), or over every
    active (user, beam) pair (``objective="full"``). Without the mask,
    switching off a crowded beam costs almost nothing, because its
    ``P - C`` terms are near zero, while dropping users costs their terms on
    every beam. The full form therefore keeps users whose beams have all been
    switched off.

    Parameters
    ----------
    graph : BeamUserGraph
    kappa_u, kappa_b : int
        Users per beam and beams per user.
    floor : float
        Lower clamp on the trace inside the profit/cost logarithms.
    refresh : {"iteration", "once"}
        Recompute profit/cost from the current ``y`` at every iteration, or
        only once from the all-active state.
    objective : {"masked", "full"}
    callback : callable, optional
        Called as ``callback(iteration, x, y)`` after every update.

    Returns
    -------
    Selection
        ``iterations`` holds the number of while-loop passes (at most ``n_beams``).
    """
    n_users, n_beams = graph.n_users, graph.n_beams
    if not 1 <= kappa_b <= n_beams:
        raise InvalidInputError(f"kappa_b must lie in [1, {n_beams}], got {kappa_b}")
    if not 1 <= kappa_u <= max(n_users, 1):
        raise InvalidInputError(f"kappa_u must lie in [1, {n_users}], got {kappa_u}")
    if refresh not in REFRESH_MODES:
        raise InvalidInputError(f"refresh must be one of {REFRESH_MODES}")
    if objective not in OBJECTIVES:
        raise InvalidInputError(f"objective must be one of {OBJECTIVES}")
    masked = objective == "masked"

    x = np.ones(n_beams, dtype=int)
    y = np.ones(n_users, dtype=int)
    pair = pair_traces(graph)
    pc = profit_cost(graph, y, floor, pair=pair)
    mask = top_np_mask(graph.psi, kappa_b)
    psi = mask * graph.psi
    overloaded = np.flatnonzero(beam_loads(mask, x, y) > kappa_u)

    iterations = 0
    while overloaded.size:
        iterations += 1
        if iterations > n_beams:
            raise RuntimeError("greedy selection exceeded n_beams iterations")
        m = overloaded[0]
        if refresh == "iteration":
            pc = profit_cost(graph, y, floor, pair=pair)

        x_off = x.copy()
        x_off[m] = 0
        mask_b = mask.copy()
        mask_b[:, m] = 0
        phi_b = evaluate_phi(pc, x_off, y, mask_b if masked else None)

        on_beam = np.flatnonzero(mask[:, m] * y)
        keep = on_beam[top_indices(psi[on_beam, m], kappa_u)]
        drop = np.setdiff1d(on_beam, keep)
        y_off = y.copy()
        y_off[drop] = 0
        mask_u = mask.copy()
        mask_u[drop, :] = 0
        phi_u = evaluate_phi(pc, x, y_off, mask_u if masked else None)

        if phi_b > phi_u:
            x[m] = 0
            mask[:, m] = 0
        else:
            y[drop] = 0
            mask[drop, :] = 0
        psi = mask * psi
        if callback is not None:
            callback(iterations, x.copy(), y.copy())
        overloaded = np.flatnonzero(beam_loads(mask, x, y) > kappa_u)

    final_pc = profit_cost(graph, y, floor, pair=pair)
    return Selection(
        x, y,
        feasible=is_feasible(mask, x, y, kappa_u, kappa_b),
        phi_value=evaluate_phi(final_pc, x, y, mask if masked else None),
        mask=mask,
        iterations=iterations,
        info={"objective": objective, "refresh": refresh},
    )
