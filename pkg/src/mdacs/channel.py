"""Geometric cluster channel model for a dual-polarized UPA.

Each user sees one or more path clusters. A cluster spans the angle box
``[theta_c +/- delta_theta] x [phi_c +/- delta_phi]`` and is discretized
into a fixed midpoint grid of rays. Every channel realization draws fresh
i.i.d. complex-normal ray gains, correlated across the two polarizations
through the 2x2 matrix ``pol``. Channels are stacked ``[h_V; h_H]``.

Angles follow the steering vector convention: ``phi`` is measured from the
array broadside and ``theta`` is the azimuth within the array plane, so the
direction cosines along the y and x axes are ``sin(phi) sin(theta)`` and
``sin(phi) cos(theta)``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import InvalidInputError
from .linalg import is_psd

DEFAULT_XPOL = 0.2


def default_polarization(rho=DEFAULT_XPOL):
    """``[[1, conj(rho)], [rho, 1]]``."""
    return np.array([[1.0, np.conj(rho)], [rho, 1.0]], dtype=complex)


@dataclass(frozen=True)
class ArrayGeometry:
    """``mx`` ports per row (x axis), ``my`` rows (y axis), two polarizations each."""

    mx: int
    my: int
    dx: float = 0.5
    dy: float = 0.5
    wavelength: float = 1.0

    def __post_init__(self):
        if self.mx < 1 or self.my < 1:
            raise InvalidInputError(f"array needs mx, my >= 1 (got {self.mx}, {self.my})")
        if self.dx <= 0 or self.dy <= 0 or self.wavelength <= 0:
            raise InvalidInputError("antenna spacings and wavelength must be positive")

    @property
    def n_ports(self):
        return self.mx * self.my

    @property
    def n_antennas(self):
        return 2 * self.mx * self.my

    @property
    def n_beams(self):
        return self.mx * self.my


@dataclass(frozen=True)
class PathCluster:
    theta_c: float
    phi_c: float
    delta_theta: float = 0.0
    delta_phi: float = 0.0
    power: float = 1.0
    pol: np.ndarray = field(default_factory=default_polarization)

    def __post_init__(self):
        if self.delta_theta < 0 or self.delta_phi < 0:
            raise InvalidInputError("angular spreads must be non-negative")
        if self.power < 0:
            raise InvalidInputError("cluster power must be non-negative")
        lo, hi = self.phi_c - self.delta_phi, self.phi_c + self.delta_phi
        if lo <= -math.pi / 2 or hi >= math.pi / 2:
            raise InvalidInputError(
                f"elevation interval [{lo:.4f}, {hi:.4f}] leaves (-pi/2, pi/2)")
        pol = np.asarray(self.pol, dtype=complex)
        if pol.shape != (2, 2) or not is_psd(pol):
            raise InvalidInputError("polarization matrix must be 2x2 Hermitian PSD")
        object.__setattr__(self, "pol", pol)


@dataclass(frozen=True)
class UserChannelModel:
    clusters: tuple
    n_subpaths: int = 100

    def __post_init__(self):
        if len(self.clusters) == 0:
            raise InvalidInputError("a user needs at least one cluster")
        if self.n_subpaths < 1:
            raise InvalidInputError("n_subpaths must be >= 1")
        object.__setattr__(self, "clusters", tuple(self.clusters))


def _steering_factors(geom, theta, phi):
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    z1 = np.sin(phi) * np.sin(theta)
    z2 = np.sin(phi) * np.cos(theta)
    ky = 2 * np.pi * geom.dy / geom.wavelength * np.arange(geom.my)
    kx = 2 * np.pi * geom.dx / geom.wavelength * np.arange(geom.mx)
    a_y = np.exp(1j * z1[..., None] * ky)
    a_x = np.exp(1j * z2[..., None] * kx)
    return a_y, a_x


def steering_vector(geom, theta, phi):
    """``a(theta, phi) = a_y (x) a_x``, length ``mx*my``.

    Array inputs broadcast; the port axis is appended last.
    """
    a_y, a_x = _steering_factors(geom, theta, phi)
    out = a_y[..., :, None] * a_x[..., None, :]
    return out.reshape(*out.shape[:-2], geom.n_ports)


def _midpoints(center, spread, n):
    if spread == 0 or n == 1:
        return np.array([center], dtype=float)
    return center + spread * ((np.arange(n) + 0.5) / n * 2.0 - 1.0)


def _ray_grid_shape(n):
    # Largest divisor <= sqrt(n) keeps the grid close to square.
    a = int(math.isqrt(n))
    while n % a:
        a -= 1
    return a, n // a


def ray_angles(cluster, n_rays):
    """Midpoint grid of ``n_rays`` ray directions over the cluster box."""
    n_t, n_p = _ray_grid_shape(n_rays)
    th = _midpoints(cluster.theta_c, cluster.delta_theta, n_t)
    ph = _midpoints(cluster.phi_c, cluster.delta_phi, n_p)
    tt, pp = np.meshgrid(th, ph, indexing="ij")
    tt, pp = tt.ravel(), pp.ravel()
    if tt.size < n_rays:
        # zero spread collapses an axis; repeat the point so power is unchanged
        tt = np.resize(tt, n_rays)
        pp = np.resize(pp, n_rays)
    return tt, pp


def _psd_sqrt(p):
    w, u = np.linalg.eigh(0.5 * (p + p.conj().T))
    return u * np.sqrt(np.clip(w, 0.0, None))


def draw_channels(geom, model, rng, n):
    """``n`` i.i.d. channel realizations, shape ``(n, 2*mx*my)``."""
    h_v = np.zeros((n, geom.n_ports), dtype=complex)
    h_h = np.zeros((n, geom.n_ports), dtype=complex)
    for cluster in model.clusters:
        k = model.n_subpaths
        theta, phi = ray_angles(cluster, k)
        a = steering_vector(geom, theta, phi)  # (k, ports)
        root = _psd_sqrt(cluster.pol)
        w = (rng.standard_normal((n, k, 2)) + 1j * rng.standard_normal((n, k, 2))) / np.sqrt(2)
        g = (w @ root.T) * np.sqrt(cluster.power / k)
        h_v += g[..., 0] @ a
        h_h += g[..., 1] @ a
    return np.concatenate([h_v, h_h], axis=1)


def draw_channel(geom, model, rng):
    """One realization ``h = [h_V; h_H]`` of length ``2*mx*my``."""
    return draw_channels(geom, model, rng, 1)[0]


def sample_covariance(samples):
    """``(1/N) sum_t h_t h_t^H`` over the rows (or list entries) of ``samples``."""
    if isinstance(samples, np.ndarray):
        h = samples
        if h.ndim == 1:
            h = h[None, :]
    else:
        if len(samples) == 0:
            raise InvalidInputError("sample_covariance needs at least one sample")
        lengths = {len(s) for s in samples}
        if len(lengths) != 1:
            raise InvalidInputError(f"samples have unequal lengths {sorted(lengths)}")
        h = np.asarray(samples, dtype=complex)
    if h.shape[0] == 0:
        raise InvalidInputError("sample_covariance needs at least one sample")
    r = h.T @ h.conj() / h.shape[0]
    return 0.5 * (r + r.conj().T)


def spatial_covariance(geom, cluster, n_quad=64):
    """Normalized angular integral ``B = (1/|Omega|) int a a^H`` (midpoint rule)."""
    if n_quad < 1:
        raise InvalidInputError("n_quad must be >= 1")
    th = _midpoints(cluster.theta_c, cluster.delta_theta, n_quad)
    ph = _midpoints(cluster.phi_c, cluster.delta_phi, n_quad)
    tt, pp = np.meshgrid(th, ph, indexing="ij")
    a = steering_vector(geom, tt.ravel(), pp.ravel())
    b = a.T @ a.conj() / a.shape[0]
    return 0.5 * (b + b.conj().T)


def analytic_covariance(geom, cluster, n_quad=64):
    """``power * (P_beta (x) B)`` in the stacked ``[V; H]`` ordering."""
    return cluster.power * np.kron(cluster.pol, spatial_covariance(geom, cluster, n_quad))


def model_covariance(geom, model, n_quad=64):
    """Sum of the analytic covariances of all clusters of a user."""
    return sum(analytic_covariance(geom, c, n_quad) for c in model.clusters)


def _critical_angles(lo, hi, period_points):
    pts = [lo, hi]
    for p in period_points:
        if lo < p < hi:
            pts.append(p)
    return pts


def support_rectangle(cluster, geom):
    """Frequency box outside which the cluster's spectral density vanishes.

    Returns ``((w1_lo, w1_hi), (w2_lo, w2_hi))`` with
    ``w1 in [-(dy/lambda) z1_max, -(dy/lambda) z1_min]`` and likewise for
    ``w2`` with ``dx``; ``z1 = sin(phi) sin(theta)``, ``z2 = sin(phi) cos(theta)``.
    Extrema are taken over corners and interior stationary points.
    """
    t_lo, t_hi = cluster.theta_c - cluster.delta_theta, cluster.theta_c + cluster.delta_theta
    p_lo, p_hi = cluster.phi_c - cluster.delta_phi, cluster.phi_c + cluster.delta_phi
    half_pi_multiples = [k * np.pi / 2 for k in range(-8, 9)]
    thetas = np.array(_critical_angles(t_lo, t_hi, half_pi_multiples))
    phis = np.array(_critical_angles(p_lo, p_hi, half_pi_multiples))
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    z1 = np.sin(pp) * np.sin(tt)
    z2 = np.sin(pp) * np.cos(tt)
    cy = geom.dy / geom.wavelength
    cx = geom.dx / geom.wavelength
    return (-cy * z1.max(), -cy * z1.min()), (-cx * z2.max(), -cx * z2.min())
