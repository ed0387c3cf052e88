"""Downlink training, MMSE estimation, regularized ZF and achievable rates.

Everything here lives in the interleaved (shuffled) antenna ordering, where
the block-beam basis is ``V = F_my (x) F_mx (x) I_2``. Callers shuffle true
channels and covariances once; rates are permutation-invariant.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import InvalidInputError, InvalidSelectionError
from .linalg import block_beam_basis, dft_matrix

COND_LIMIT = 1e12


@dataclass(frozen=True)
class TrainingConfig:
    t_pilot: int
    rho_p: float = 1.0
    noise_var: float = 0.01
    frame_len: int = 64

    def __post_init__(self):
        if not 1 <= self.t_pilot <= self.frame_len:
            raise InvalidInputError(
                f"t_pilot must lie in [1, frame_len={self.frame_len}], got {self.t_pilot}")
        if self.rho_p <= 0:
            raise InvalidInputError("rho_p must be positive")
        if self.noise_var < 0:
            raise InvalidInputError("noise_var must be non-negative")


def sparsifying_precoder(x, geom):
    """Columns of ``V`` belonging to active block beams, ``M x 2*sum(x)``."""
    x = np.asarray(x)
    if x.shape != (geom.n_beams,):
        raise InvalidInputError(f"x must have length {geom.n_beams}")
    active = np.flatnonzero(x)
    if active.size == 0:
        raise InvalidSelectionError("no active beam: the sparsifying precoder is empty")
    v = block_beam_basis(geom.mx, geom.my)
    cols = np.stack([2 * active, 2 * active + 1], axis=1).ravel()
    return v[:, cols]


def pilot_matrix(t, m_prime, rho_p=1.0):
    """``T x M'`` scaled truncated DFT.

    For ``T <= M'`` this is ``sqrt(rho_p)`` times the first ``T`` rows of
    ``F_{M'}`` (orthonormal rows, ``trace(S S^H) = rho_p T``). For ``T > M'``
    it is the first ``M'`` columns of ``F_T`` scaled so that the total energy
    is again ``rho_p T`` (orthogonal columns).
    """
    if t < 1 or m_prime < 1:
        raise InvalidInputError("pilot dimensions must be positive")
    if t <= m_prime:
        return np.sqrt(rho_p) * dft_matrix(m_prime)[:t, :]
    return np.sqrt(rho_p * t / m_prime) * dft_matrix(t)[:, :m_prime]


def observe(h, s, v_h, noise_var, rng):
    """Noisy pilot observation ``y_p = S V_h^H h + n``, ``n ~ CN(0, noise_var I_T)``."""
    t = s.shape[0]
    n = np.sqrt(noise_var / 2) * (rng.standard_normal(t) + 1j * rng.standard_normal(t))
    return s @ (v_h.conj().T @ h) + n


@dataclass
class MmseEstimator:
    """Linear MMSE map ``y_p -> h_hat`` for one user; ``loaded`` flags regularization."""

    gain: np.ndarray
    loaded: bool = False
    cond: float = 1.0

    def __call__(self, y_p):
        return self.gain @ np.asarray(y_p)


def mmse_estimator(r, s, v_h, noise_var):
    """``G = R A^H (A R A^H + noise_var I)^{-1}`` with ``A = S V_h^H``.

    If the inner matrix is worse conditioned than ``1e12`` a diagonal load of
    ``1e-12 * lambda_max`` is added and the estimator is flagged.
    """
    r = np.asarray(r)
    a = s @ v_h.conj().T
    ra = r @ a.conj().T
    inner = a @ ra + noise_var * np.eye(a.shape[0])
    inner = 0.5 * (inner + inner.conj().T)
    w = np.linalg.eigvalsh(inner)
    top = max(abs(w[-1]), 0.0)
    cond = np.inf if w[0] <= 0 else top / w[0]
    loaded = False
    if top == 0.0:
        return MmseEstimator(np.zeros((r.shape[0], a.shape[0]), dtype=complex), False, cond)
    if cond > COND_LIMIT:
        inner = inner + (top / COND_LIMIT) * np.eye(a.shape[0])
        loaded = True
    gain = sla.solve(inner, ra.conj().T, assume_a="her").conj().T
    return MmseEstimator(gain, loaded, float(cond))


def mmse_estimate(y_p, r, s, v_h, noise_var):
    """One-shot MMSE channel estimate."""
    return mmse_estimator(r, s, v_h, noise_var)(y_p)


def zf_precoders(h_hat, total_power=1.0, alpha=0.0):
    """Regularized ZF ``H (H^H H + alpha I)^{-1}``, columns normalized to equal power.

    ``h_hat`` is ``M x K`` (one estimate per column) or a list of vectors.
    A user whose column comes out zero gets a zero precoder.
    """
    h = np.column_stack(h_hat) if isinstance(h_hat, (list, tuple)) else np.asarray(h_hat)
    k = h.shape[1]
    if k == 0:
        return np.zeros_like(h)
    gram = h.conj().T @ h + alpha * np.eye(k)
    p = h @ np.linalg.pinv(gram, hermitian=True)
    norms = np.linalg.norm(p, axis=0)
    scale = np.zeros(k)
    nz = norms > 1e-300
    scale[nz] = np.sqrt(total_power / k) / norms[nz]
    return p * scale


def user_rates(h_true, precoders, noise_var):
    """``log2(1 + |h_i^H p_i|^2 / (noise_var + sum_{j != i} |h_i^H p_j|^2))``.

    Both arguments are ``M x K``; column ``i`` of each belongs to user ``i``.
    """
    h = np.asarray(h_true)
    p = np.asarray(precoders)
    if h.shape != p.shape:
        raise InvalidInputError("true channels and precoders must have equal shapes")
    if h.shape[1] == 0:
        return np.zeros(0)
    g = np.abs(h.conj().T @ p) ** 2  # g[i, j] = |h_i^H p_j|^2
    sig = np.diag(g)
    interf = g.sum(axis=1) - sig
    denom = noise_var + interf
    with np.errstate(divide="ignore", invalid="ignore"):
        sinr = np.where(sig > 0, sig / denom, 0.0)
    return np.log2(1.0 + sinr)


def effective_rate(rate, t_pilot, frame_len):
    return (1.0 - t_pilot / frame_len) * rate


@dataclass
class LinkResult:
    """Outcome of one downlink transmission to the selected users."""

    rates: np.ndarray
    sum_rate: float
    eff_rate: float
    mse: float = 0.0
    loaded: int = 0
    info: dict = field(default_factory=dict)


def sum_rate(h_true, precoders, noise_var, t_pilot=0, frame_len=1):
    rates = user_rates(h_true, precoders, noise_var)
    total = float(rates.sum())
    return LinkResult(rates, total, effective_rate(total, t_pilot, frame_len))


def simulate_link(x, users, h_true, covs, geom, training, rng, total_power=1.0):
    """Train, estimate and precode for the selected users; rate on true channels.

    ``h_true`` (n x M) and ``covs`` (n x M x M) are in the shuffled ordering.
    """
    users = np.asarray(users, dtype=int)
    if users.size == 0 or not np.any(x):
        return LinkResult(np.zeros(users.size), 0.0, 0.0)
    v_h = sparsifying_precoder(x, geom)
    s = pilot_matrix(training.t_pilot, v_h.shape[1], training.rho_p)
    est = np.zeros((geom.n_antennas, users.size), dtype=complex)
    loaded = 0
    for k, i in enumerate(users):
        y_p = observe(h_true[i], s, v_h, training.noise_var, rng)
        f = mmse_estimator(covs[i], s, v_h, training.noise_var)
        loaded += f.loaded
        est[:, k] = f(y_p)
    truth = h_true[users].T
    mse = float(np.mean(np.sum(np.abs(truth - est) ** 2, axis=0)))
    alpha = users.size * training.noise_var / total_power
    p = zf_precoders(est, total_power, alpha)
    res = sum_rate(truth, p, training.noise_var, training.t_pilot, training.frame_len)
    res.mse = mse
    res.loaded = loaded
    return res
