import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mdacs.channel import ArrayGeometry, PathCluster, analytic_covariance, steering_vector
from mdacs.errors import InvalidDimensionError, InvalidInputError
from mdacs.linalg import (
    beam_frequencies,
    block_beam_basis,
    block_diagonal_weights,
    circulant_approximant,
    dft_matrix,
    is_doubly_block_toeplitz,
    is_hermitian,
    is_psd,
    kronecker,
    off_block_energy_ratio,
    perfect_shuffle,
    sample_spectral_density,
    shuffle,
    spectral_density,
    toeplitz_blocks,
    unshuffle,
    wrap_frequency,
)


def rand_c(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def rand_psd(rng, n):
    a = rand_c(rng, n, n)
    return a @ a.conj().T


def test_dft_small_cases():
    assert np.allclose(dft_matrix(1), [[1.0]])
    assert np.allclose(dft_matrix(2), np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=1e-15)
    f = dft_matrix(8)
    assert np.max(np.abs(f @ f.conj().T - np.eye(8))) < 1e-12


@pytest.mark.parametrize("n", [0, -3, 2.5])
def test_dft_rejects_bad_sizes(n):
    with pytest.raises(InvalidDimensionError):
        dft_matrix(n)


def test_dft_unitary_up_to_64():
    for n in range(1, 65):
        f = dft_matrix(n)
        assert np.max(np.abs(f @ f.conj().T - np.eye(n))) < 1e-10


def test_dft_entry_definition():
    n = 5
    f = dft_matrix(n)
    for p in range(n):
        for q in range(n):
            assert f[p, q] == pytest.approx(np.exp(-2j * np.pi * p * q / n) / np.sqrt(n))


def test_kronecker_examples():
    rng = np.random.default_rng(0)
    assert np.array_equal(kronecker(np.eye(2), np.eye(3)), np.eye(6))
    b = rand_c(rng, 3, 2)
    assert np.allclose(kronecker([[2.0]], b), 2 * b)
    a, b, c, d = (rand_c(rng, 2, 2) for _ in range(4))
    lhs = kronecker(a, b) @ kronecker(c, d)
    # dense oracle for (AC) (x) (BD)
    ac, bd = a @ c, b @ d
    rhs = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            rhs[2 * i:2 * i + 2, 2 * j:2 * j + 2] = ac[i, j] * bd
    assert np.allclose(lhs, rhs)


def test_perfect_shuffle_m4_row_order():
    q = perfect_shuffle(4)
    # rows (1, 3, 2, 4) of the identity, 1-based
    assert np.array_equal(q, np.eye(4)[[0, 2, 1, 3]])


def test_perfect_shuffle_orthogonal_and_odd():
    q = perfect_shuffle(8)
    assert np.array_equal(q @ q.T, np.eye(8))
    with pytest.raises(InvalidDimensionError):
        perfect_shuffle(7)


@settings(max_examples=40, deadline=None)
@given(half=st.integers(1, 12), seed=st.integers(0, 2**32 - 1))
def test_perfect_shuffle_swaps_kronecker_factors_exactly(half, seed):
    rng = np.random.default_rng(seed)
    # Gaussian integers keep every product exact, so p*b == b*p bit for bit
    p = rng.integers(-9, 10, (2, 2)) + 1j * rng.integers(-9, 10, (2, 2))
    b = rng.integers(-9, 10, (half, half)) + 1j * rng.integers(-9, 10, (half, half))
    q = perfect_shuffle(2 * half)
    # applied as a permutation only entries move, so equality is exact
    assert np.array_equal(shuffle(np.kron(p, b)), np.kron(b, p))
    # the dense product may round through BLAS fused multiply-adds
    assert np.allclose(q @ np.kron(p, b) @ q.T, np.kron(b, p), rtol=0, atol=1e-14)


def test_shuffle_round_trip_vectors_and_matrices():
    rng = np.random.default_rng(1)
    r = rand_c(rng, 12, 12)
    h = rand_c(rng, 12)
    assert np.array_equal(unshuffle(shuffle(r)), r)
    assert np.array_equal(unshuffle(shuffle(h)), h)
    assert np.array_equal(shuffle(h), perfect_shuffle(12) @ h)


def test_block_diagonal_weights_identity():
    w = block_diagonal_weights(np.eye(32), 4, 4)
    assert w.shape == (16, 2, 2)
    assert np.allclose(w, np.eye(2))


@pytest.mark.parametrize("mx,my", [(1, 1), (2, 3), (4, 4), (3, 2)])
def test_block_diagonal_round_trip(mx, my):
    rng = np.random.default_rng(mx * 10 + my)
    n = mx * my
    blocks = [rand_psd(rng, 2) for _ in range(n)]
    d = np.zeros((2 * n, 2 * n), dtype=complex)
    for k, b in enumerate(blocks):
        d[2 * k:2 * k + 2, 2 * k:2 * k + 2] = b
    v = block_beam_basis(mx, my)
    r = v @ d @ v.conj().T
    got = block_diagonal_weights(r, mx, my)
    assert np.max(np.abs(got - np.array(blocks))) < 1e-10
    assert off_block_energy_ratio(r, mx, my) < 1e-12


def test_block_weights_trace_and_hermitian():
    rng = np.random.default_rng(3)
    a = rand_c(rng, 24, 24)
    r = a + a.conj().T
    w = block_diagonal_weights(r, 3, 4)
    assert np.trace(w, axis1=1, axis2=2).sum() == pytest.approx(np.trace(r))
    assert all(is_hermitian(b) for b in w)


def test_block_weights_dimension_mismatch():
    with pytest.raises(InvalidDimensionError):
        block_diagonal_weights(np.eye(30), 4, 4)


def test_block_beam_basis_is_kron_of_dfts():
    v = block_beam_basis(3, 2)
    ref = np.kron(np.kron(dft_matrix(2), dft_matrix(3)), np.eye(2))
    assert np.allclose(v, ref)
    assert np.allclose(v.conj().T @ v, np.eye(12))


def test_predicates():
    rng = np.random.default_rng(4)
    p = rand_psd(rng, 4)
    assert is_hermitian(p) and is_psd(p)
    assert not is_psd(-p)
    assert not is_hermitian(rand_c(rng, 3, 3))
    assert is_hermitian(np.zeros((3, 3)))
    assert not is_hermitian(np.zeros((2, 3)))


def test_spectral_density_constant_term():
    a = np.array([[2.0, 0.5j], [-0.5j, 1.0]])
    for w in [(0.0, 0.0), (0.3, -0.2), (-0.5, 0.49)]:
        assert np.allclose(spectral_density({(0, 0): a}, w), a)


def test_spectral_density_rejects_asymmetric_table():
    b = np.array([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(InvalidInputError):
        spectral_density({(0, 0): np.eye(2), (1, 0): b, (-1, 0): b}, (0.1, 0.1))
    with pytest.raises(InvalidInputError):
        spectral_density({(0, 0): np.eye(2), (1, 0): b}, (0.1, 0.1))


def _analytic_shuffled(mx, my, cluster):
    geom = ArrayGeometry(mx, my)
    return geom, shuffle(analytic_covariance(geom, cluster, n_quad=48))


def test_spectral_density_at_beam_grid_matches_circulant():
    cluster = PathCluster(0.4, 0.7, 0.1, 0.05)
    geom, r = _analytic_shuffled(4, 3, cluster)
    table = toeplitz_blocks(r, 4, 3)
    c = circulant_approximant(table, 4, 3)
    diag = block_diagonal_weights(c, 4, 3)
    freqs = beam_frequencies(4, 3)
    for m, (w1, w2) in enumerate(freqs):
        s = spectral_density(table, (w1, w2))
        assert np.max(np.abs(s - diag[m])) < 1e-10
        assert is_hermitian(s)


def test_sample_spectral_density_matches_pointwise():
    cluster = PathCluster(-0.3, 0.5, 0.05, 0.05)
    _, r = _analytic_shuffled(3, 3, cluster)
    table = toeplitz_blocks(r, 3, 3)
    w1 = np.linspace(-0.5, 0.45, 7)
    w2 = np.linspace(-0.5, 0.4, 5)
    sd = sample_spectral_density(table, w1, w2)
    assert sd.blocks.shape == (7, 5, 2, 2)
    assert sd.grid.shape == (35, 2)
    for a in range(7):
        for b in range(5):
            assert np.allclose(sd.blocks[a, b], spectral_density(table, (w1[a], w2[b])))


def test_single_path_peak_location():
    theta_c, phi_c = 0.6, 0.45
    geom = ArrayGeometry(8, 8)
    cluster = PathCluster(theta_c, phi_c)
    r = shuffle(analytic_covariance(geom, cluster, n_quad=1))
    table = toeplitz_blocks(r, 8, 8)
    grid = np.arange(256) / 256 - 0.5
    tr = sample_spectral_density(table, grid, grid).trace()
    a, b = np.unravel_index(np.argmax(np.abs(tr)), tr.shape)
    expect1 = wrap_frequency(-0.5 * np.sin(phi_c) * np.sin(theta_c))
    expect2 = wrap_frequency(-0.5 * np.sin(phi_c) * np.cos(theta_c))
    assert abs(wrap_frequency(grid[a] - expect1)) <= 1 / 256
    assert abs(wrap_frequency(grid[b] - expect2)) <= 1 / 256


@pytest.mark.parametrize("mx,my", [(2, 2), (3, 4), (4, 4)])
def test_shuffled_analytic_covariance_is_doubly_block_toeplitz(mx, my):
    cluster = PathCluster(0.2, -0.6, 0.1, 0.08, pol=np.array([[1.0, 0.3 - 0.1j], [0.3 + 0.1j, 0.7]]))
    _, r = _analytic_shuffled(mx, my, cluster)
    assert is_doubly_block_toeplitz(r, mx, my, rtol=1e-9)


def test_lag_convention_reads_steering_phase():
    # a single ray: lag (m1, m2) block = P * exp(j*2*pi*(d/lambda)*(m1*z1 + m2*z2))
    geom = ArrayGeometry(3, 3)
    theta, phi = 0.3, 0.8
    r = shuffle(analytic_covariance(geom, PathCluster(theta, phi), n_quad=1))
    table = toeplitz_blocks(r, 3, 3)
    z1, z2 = np.sin(phi) * np.sin(theta), np.sin(phi) * np.cos(theta)
    for (m1, m2), blk in table.items():
        phase = np.exp(2j * np.pi * 0.5 * (m1 * z1 + m2 * z2))
        assert np.allclose(blk, phase * PathCluster(0, 0).pol)
    a = steering_vector(geom, theta, phi)
    assert np.allclose(np.outer(a, a.conj())[3, 0], np.exp(2j * np.pi * 0.5 * z1))


def test_off_block_ratio_decreases_with_array_size_for_reference_cluster():
    cluster = PathCluster(np.radians(30), np.radians(60), np.radians(5), np.radians(5))
    ratios = []
    for n in (2, 4, 8):
        geom = ArrayGeometry(n, n)
        r = shuffle(analytic_covariance(geom, cluster, n_quad=64))
        ratios.append(off_block_energy_ratio(r, n, n))
    # non-increasing within 10% slack per step
    assert ratios[1] <= 1.1 * ratios[0]
    assert ratios[2] <= 1.1 * ratios[1]
