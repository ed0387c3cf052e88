"""Monte-Carlo harness: user drops, covariance estimation, selection, link simulation.

Random streams are derived from the master seed with ``SeedSequence`` spawn
keys, so every draw is addressed by what it is for:

* ``(0, trial, user)``: the user's channel model, covariance samples and true
  channel. Shared by every algorithm and sweep point, and nested in the user
  count (user ``u`` is the same whether 15 or 45 users are simulated).
* ``(1, sweep_idx, trial, algorithm)``: pilot noise of one link simulation.
* ``(2, sweep_idx, trial)``: the random member picked from each JSDM group.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
import time

import numpy as np

from .channel import PathCluster, UserChannelModel, default_polarization, draw_channels, sample_covariance
from .errors import ConfigError
from .linalg import shuffle
from .linksim import TrainingConfig, simulate_link
from .selection import (
    baseline_acs_milp,
    baseline_jsdm,
    baseline_no_selection,
    build_graph,
    greedy_mdacs,
)

ALGORITHMS = ("greedy", "no_selection", "jsdm", "acs_scalar", "acs_matrix")
ALGORITHM_CODES = {name: k for k, name in enumerate(ALGORITHMS)}
SWEEP_AXES = ("snr_db", "pilot_T", "n_users")


@dataclass(frozen=True)
class PopulationSpec:
    """How user channel models are drawn. Angles in radians.

    Cluster centers are uniform over ``theta_range x phi_range``. The
    defaults describe ground users in front of an upright array: a small
    ``theta`` keeps arrivals near the horizontal (x-z) plane, ``phi`` sweeps
    a +/-60 degree sector. A user is
    indoor with probability ``indoor_fraction``; indoor users get
    ``indoor_clusters`` clusters with the wide spread, outdoor users
    ``outdoor_clusters`` with the narrow one. Cluster powers are a flat
    Dirichlet split of unit total power.
    """

    theta_range: tuple = (math.radians(-10.0), math.radians(10.0))
    phi_range: tuple = (math.radians(-60.0), math.radians(60.0))
    indoor_fraction: float = 0.5
    indoor_spread: tuple = (math.radians(10.0), math.radians(10.0))
    outdoor_spread: tuple = (math.radians(2.0), math.radians(2.0))
    indoor_clusters: int = 2
    outdoor_clusters: int = 1
    n_subpaths: int = 100
    xpol: float = 0.2


def draw_user_model(pop, rng):
    indoor = rng.random() < pop.indoor_fraction
    n_c = pop.indoor_clusters if indoor else pop.outdoor_clusters
    d_t, d_p = pop.indoor_spread if indoor else pop.outdoor_spread
    powers = rng.dirichlet(np.ones(n_c)) if n_c > 1 else np.ones(1)
    pol = default_polarization(pop.xpol)
    # keep the elevation box inside (-pi/2, pi/2)
    lim = math.pi / 2 - d_p - 1e-6
    clusters = []
    for k in range(n_c):
        theta = rng.uniform(*pop.theta_range)
        phi = float(np.clip(rng.uniform(*pop.phi_range), -lim, lim))
        clusters.append(PathCluster(theta, phi, d_t, d_p, float(powers[k]), pol))
    return UserChannelModel(tuple(clusters), pop.n_subpaths), indoor


def stream(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


@dataclass
class TrialRecord:
    sweep_idx: int
    sweep_value: float
    trial: int
    algorithm: str
    rates: np.ndarray
    sum_rate: float
    eff_rate: float
    n_selected: int
    n_beams: int
    mse: float = 0.0
    loaded: int = 0
    seconds: float = 0.0
    info: dict = field(default_factory=dict)


def point_settings(config, value):
    """``(n_users, t_pilot, snr_db)`` at one sweep value."""
    n_users, t_pilot, snr_db = config.n_users, config.pilot_T, config.snr_db
    if config.sweep_axis == "n_users":
        n_users = int(value)
    elif config.sweep_axis == "pilot_T":
        t_pilot = int(value)
    else:
        snr_db = float(value)
    return n_users, t_pilot, snr_db


def jsdm_k_wiring(greedy_result, n_users):
    """Number of JSDM groups: the greedy's user count, clamped to ``[1, n_users]``."""
    return int(min(max(int(np.sum(greedy_result.y)), 1), n_users))


def draw_population(config, trial, n_users):
    """True channels and sample covariances for users ``0..n_users-1`` (shuffled order)."""
    geom = config.geometry
    h = np.zeros((n_users, geom.n_antennas), dtype=complex)
    covs = np.zeros((n_users, geom.n_antennas, geom.n_antennas), dtype=complex)
    indoor = np.zeros(n_users, dtype=bool)
    for u in range(n_users):
        rng = stream(config.seed, 0, trial, u)
        model, indoor[u] = draw_user_model(config.population, rng)
        samples = draw_channels(geom, model, rng, config.n_cov_samples)
        h_true = draw_channels(geom, model, rng, 1)[0]
        covs[u] = shuffle(sample_covariance(samples))
        h[u] = shuffle(h_true)
    return h, covs, indoor


def select(config, name, graph, covs, t_pilot, cache, sweep_idx, trial):
    n = graph.n_users
    ku, kb = config.kappa_u, config.kappa_b
    if name == "greedy":
        key = ("greedy", n)
        if key not in cache:
            cache[key] = greedy_mdacs(graph, min(ku, n), kb, refresh=config.refresh,
                                      objective=config.objective)
        return cache[key]
    if name == "no_selection":
        return baseline_no_selection(graph, ku, kb)
    if name == "jsdm":
        greedy = select(config, "greedy", graph, covs, t_pilot, cache, sweep_idx, trial)
        k = jsdm_k_wiring(greedy, n)
        return baseline_jsdm(covs, k, stream(config.seed, 2, sweep_idx, trial), kb, graph, ku)
    if name in ("acs_scalar", "acs_matrix"):
        mode = name.split("_")[1]
        key = (name, n, t_pilot)
        if key not in cache:
            thr = config.acs_threshold if mode == "scalar" else config.acs_matrix_threshold
            cache[key] = baseline_acs_milp(graph, t_pilot, config.acs_p_min, thr, mode=mode,
                                           kappa_u=ku, kappa_b=kb, max_nodes=config.acs_max_nodes)
        return cache[key]
    raise ConfigError("algorithms", f"unknown algorithm {name!r}")


def run_trial(config, trial, timing=True):
    """All sweep points and algorithms for one trial, ordered (sweep_idx, algorithm)."""
    points = [point_settings(config, v) for v in config.sweep_values]
    n_max = max(p[0] for p in points)
    h, covs, _ = draw_population(config, trial, n_max)
    graphs = {}
    cache = {}
    order = sorted(config.algorithms, key=lambda a: (a == "jsdm", config.algorithms.index(a)))
    out = []
    for idx, (value, (n_users, t_pilot, snr_db)) in enumerate(zip(config.sweep_values, points)):
        if n_users not in graphs:
            graphs[n_users] = build_graph(covs[:n_users], config.geometry, shuffled=True)
        graph = graphs[n_users]
        training = TrainingConfig(t_pilot, config.rho_p, 10.0 ** (-snr_db / 10.0), config.frame_len)
        records = {}
        for name in order:
            t0 = time.perf_counter()
            sel = select(config, name, graph, covs[:n_users], t_pilot, cache, idx, trial)
            rng = stream(config.seed, 1, idx, trial, ALGORITHM_CODES[name])
            res = simulate_link(sel.x, sel.users, h, covs, config.geometry, training, rng)
            seconds = time.perf_counter() - t0 if timing else 0.0
            records[name] = TrialRecord(
                idx, value, trial, name, res.rates, res.sum_rate, res.eff_rate,
                int(np.sum(sel.y)), int(np.sum(sel.x)), res.mse, res.loaded, seconds,
                info=dict(sel.info, feasible=sel.feasible))
        out.extend(records[name] for name in config.algorithms)
    return out


def run_experiment(config, threads=1, timing=True):
    """Records for every (trial, sweep point, algorithm), sorted by sweep, trial, algorithm."""
    trials = range(config.n_trials)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda t: run_trial(config, t, timing), trials))
    else:
        chunks = [run_trial(config, t, timing) for t in trials]
    records = [r for chunk in chunks for r in chunk]
    rank = {name: k for k, name in enumerate(config.algorithms)}
    records.sort(key=lambda r: (r.sweep_idx, r.trial, rank[r.algorithm]))
    return records


@dataclass
class ResultRow:
    sweep: float
    algorithm: str
    sum_rate: float
    eff_rate: float
    stderr: float
    users_selected: float
    seconds: float


def summarize(config, records):
    """One row per (sweep value, algorithm), in config order."""
    rows = []
    for idx, value in enumerate(config.sweep_values):
        for name in config.algorithms:
            rs = [r for r in records if r.sweep_idx == idx and r.algorithm == name]
            if not rs:
                continue
            eff = np.array([r.eff_rate for r in rs])
            se = float(eff.std(ddof=1) / np.sqrt(eff.size)) if eff.size > 1 else 0.0
            rows.append(ResultRow(
                value, name,
                float(np.mean([r.sum_rate for r in rs])), float(eff.mean()), se,
                float(np.mean([r.n_selected for r in rs])),
                float(sum(r.seconds for r in rs))))
    return rows
