import numpy as np
import pytest

from mdacs.channel import ArrayGeometry
from mdacs.errors import InvalidInputError, InvalidSelectionError
from mdacs.linalg import dft_matrix
from mdacs.linksim import (
    TrainingConfig,
    effective_rate,
    mmse_estimate,
    mmse_estimator,
    pilot_matrix,
    sparsifying_precoder,
    sum_rate,
    user_rates,
    zf_precoders,
)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_psd(rng, m, rank=None):
    g = crandn(rng, m, rank or m)
    return g @ g.conj().T


# -- sparsifying precoder ---------------------------------------------------

def test_precoder_columns_orthonormal():
    geom = ArrayGeometry(4, 2)
    x = np.zeros(geom.n_beams, int)
    x[[1, 5, 6]] = 1
    v = sparsifying_precoder(x, geom)
    assert v.shape == (16, 6)
    assert np.allclose(v.conj().T @ v, np.eye(6), atol=1e-12)


def test_precoder_all_beams_is_unitary():
    geom = ArrayGeometry(2, 2)
    v = sparsifying_precoder(np.ones(4, int), geom)
    assert np.allclose(v @ v.conj().T, np.eye(8), atol=1e-12)


def test_precoder_rejects_empty_selection():
    with pytest.raises(InvalidSelectionError):
        sparsifying_precoder(np.zeros(4, int), ArrayGeometry(2, 2))


# -- pilots -------------------------------------------------------------------

def test_square_pilot_is_scaled_unitary():
    s = pilot_matrix(6, 6, rho_p=2.5)
    assert np.allclose(s @ s.conj().T, 2.5 * np.eye(6), atol=1e-12)


def test_short_pilot_is_dft_rows():
    s = pilot_matrix(2, 4)
    expect = np.exp(-2j * np.pi * np.outer(np.arange(2), np.arange(4)) / 4) / 2
    assert np.allclose(s, expect, atol=1e-14)
    assert np.allclose(s, dft_matrix(4)[:2], atol=1e-14)


@pytest.mark.parametrize("t,m", [(1, 4), (3, 4), (4, 4), (8, 4), (12, 2)])
def test_pilot_energy(t, m):
    s = pilot_matrix(t, m, rho_p=0.7)
    assert np.real(np.trace(s @ s.conj().T)) == pytest.approx(0.7 * t)
    # rows orthogonal when T <= M', columns orthogonal otherwise
    g = s @ s.conj().T if t <= m else s.conj().T @ s
    assert np.allclose(g, np.diag(np.diag(g)), atol=1e-12)


def test_training_config_validation():
    with pytest.raises(InvalidInputError):
        TrainingConfig(0)
    with pytest.raises(InvalidInputError):
        TrainingConfig(65, frame_len=64)
    with pytest.raises(InvalidInputError):
        TrainingConfig(4, rho_p=0)


# -- MMSE -----------------------------------------------------------------------

def test_zero_observation_gives_zero_estimate():
    rng = np.random.default_rng(0)
    geom = ArrayGeometry(2, 2)
    v = sparsifying_precoder(np.array([1, 0, 1, 0]), geom)
    s = pilot_matrix(3, 4)
    est = mmse_estimate(np.zeros(3), random_psd(rng, 8), s, v, 0.1)
    assert np.all(est == 0)


def test_noiseless_full_observation_recovers_channel():
    rng = np.random.default_rng(1)
    geom = ArrayGeometry(2, 2)  # M = 8
    v = sparsifying_precoder(np.ones(4, int), geom)
    s = pilot_matrix(8, 8)
    r = random_psd(rng, 8)
    worst = 0.0
    for _ in range(20):
        h = np.linalg.cholesky(r) @ crandn(rng, 8)
        est = mmse_estimate(s @ v.conj().T @ h, r, s, v, 0.0)
        worst = max(worst, np.linalg.norm(est - h) / np.linalg.norm(h))
    assert worst < 1e-8


@pytest.mark.parametrize("r,rho,sigma2", [(1.0, 1.0, 0.1), (2.5, 0.3, 1.0), (0.01, 10.0, 0.5)])
def test_scalar_closed_form(r, rho, sigma2):
    s = pilot_matrix(1, 1, rho)
    g = mmse_estimator(np.array([[r]]), s, np.eye(1), sigma2).gain
    assert abs(g[0, 0] - np.sqrt(rho) * r / (rho * r + sigma2)) < 1e-12


def test_conditioning_triggers_loading():
    r = np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex)
    f = mmse_estimator(r, pilot_matrix(4, 4), np.eye(4), 0.0)
    assert f.loaded
    assert np.all(np.isfinite(f.gain))


def _mc_mse(rho, n_trials=500, seed=7):
    geom = ArrayGeometry(2, 2)
    rng = np.random.default_rng(seed)
    r = random_psd(rng, 8, rank=5)
    root = np.linalg.cholesky(r + 1e-12 * np.eye(8))
    v = sparsifying_precoder(np.array([1, 1, 0, 1]), geom)
    s = pilot_matrix(4, 6, rho)
    f = mmse_estimator(r, s, v, 0.1)
    err = 0.0
    for _ in range(n_trials):
        h = root @ crandn(rng, 8)
        n = np.sqrt(0.1) * crandn(rng, 4)
        err += np.sum(np.abs(f(s @ v.conj().T @ h + n) - h) ** 2)
    analytic = np.real(np.trace(r - f.gain @ s @ v.conj().T @ r))
    return err / n_trials, analytic


def test_mse_non_increasing_in_pilot_power():
    mc, an = zip(*[_mc_mse(rho) for rho in (0.1, 1.0, 10.0)])
    assert an[0] >= an[1] >= an[2]
    assert mc[0] >= mc[1] >= mc[2]
    for a, b in zip(mc, an):
        assert a == pytest.approx(b, rel=0.15)


# -- ZF and rates -------------------------------------------------------------

def test_single_user_zf_is_matched_filter():
    rng = np.random.default_rng(2)
    h = crandn(rng, 6, 1)
    p = zf_precoders(h, total_power=2.0)
    assert np.allclose(p, np.sqrt(2.0) * h / np.linalg.norm(h))


def test_zf_nulls_interference():
    rng = np.random.default_rng(3)
    h = crandn(rng, 8, 4)
    p = zf_precoders(h)
    g = h.conj().T @ p
    assert np.allclose(g, np.diag(np.diag(g)), atol=1e-9)
    assert np.allclose(np.linalg.norm(p, axis=0) ** 2, 0.25)


def test_zf_zero_estimate():
    h = np.zeros((4, 2), complex)
    h[:, 0] = 1.0
    p = zf_precoders(h)
    assert np.all(p[:, 1] == 0)
    assert np.all(zf_precoders(np.zeros((4, 1), complex)) == 0)


def test_single_user_rate_formula():
    h = np.array([[1.0 + 1j], [0.5]])
    p = np.array([[0.3], [0.2j]])
    snr = abs(np.vdot(h[:, 0], p[:, 0])) ** 2 / 0.1
    assert sum_rate(h, p, 0.1).sum_rate == pytest.approx(np.log2(1 + snr))


def test_zero_precoders_zero_rate():
    rng = np.random.default_rng(4)
    assert sum_rate(crandn(rng, 4, 3), np.zeros((4, 3)), 0.1).sum_rate == 0.0


def test_two_user_hand_example():
    h = np.array([[1.0, 0.0], [0.0, 1.0]], complex)
    p = np.array([[1.0, 0.5], [0.5, 1.0]], complex)
    # user 0: signal 1, interference 0.25; user 1 likewise
    rates = user_rates(h, p, 0.25)
    assert np.allclose(rates, np.log2(1 + 1 / 0.5))


def test_orthogonal_users_rate_invariant():
    h = np.eye(3, dtype=complex)
    p = zf_precoders(h, total_power=3.0)
    assert np.allclose(user_rates(h, p, 0.5), np.log2(1 + 1 / 0.5))


def test_effective_rate_vanishes_at_frame_length():
    assert effective_rate(12.0, 64, 64) == 0.0
    assert effective_rate(12.0, 16, 64) == pytest.approx(9.0)
    assert sum_rate(np.eye(2), np.eye(2), 1.0, 8, 8).eff_rate == 0.0


def test_orthogonal_users_rate_formula_with_unequal_norms():
    rng = np.random.default_rng(5)
    q, _ = np.linalg.qr(crandn(rng, 6, 3))
    h = q * np.array([0.5, 1.0, 2.0])
    p = zf_precoders(h, total_power=1.0, alpha=0.0)
    pwr = np.linalg.norm(p, axis=0) ** 2
    expect = np.log2(1 + np.linalg.norm(h, axis=0) ** 2 * pwr / 0.3)
    assert np.allclose(user_rates(h, p, 0.3), expect, atol=1e-9)


def test_rate_log_slope_one_bit_per_snr_doubling():
    rng = np.random.default_rng(6)
    q, _ = np.linalg.qr(crandn(rng, 8, 4))
    p = zf_precoders(q)
    for noise in (1e-4, 1e-6):
        slope = user_rates(q, p, noise / 2) - user_rates(q, p, noise)
        assert np.allclose(slope, 1.0, atol=1e-2)
