"""Structured complex linear algebra for DP-UPA covariance analysis.

Conventions
-----------
Matrices are dense ``complex128`` numpy arrays. A DP-UPA covariance in the
*stacked* ordering ``[h_V; h_H]`` is turned into the *interleaved* ordering
(one 2x2 block per antenna port) by the perfect shuffle ``Q``. Ports are
indexed row-major, ``p = p_y * mx + p_x``, so the y axis is the slow axis.

The block-beam basis is fixed to ``V = F_my (x) F_mx (x) I_2`` everywhere.
Block beam ``m = a_y * mx + a_x`` samples the spectral density at
``(omega_1, omega_2) = (a_y / my, a_x / mx)`` (wrapped to ``[-1/2, 1/2)``),
where ``omega_1`` pairs with the y-axis lag and ``omega_2`` with the x-axis lag.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError, InvalidInputError

HERMITIAN_RTOL = 1e-9
PSD_RTOL = 1e-9


def is_hermitian(x, rtol=HERMITIAN_RTOL):
    """True iff ``max|X - X^H| < rtol * max|X|`` (exact for the zero matrix)."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        return False
    scale = np.max(np.abs(x)) if x.size else 0.0
    dev = np.max(np.abs(x - x.conj().T)) if x.size else 0.0
    if scale == 0.0:
        return dev == 0.0
    return dev < rtol * scale


def is_psd(x, rtol=PSD_RTOL):
    """Hermitian and ``lambda_min >= -rtol * lambda_max``."""
    if not is_hermitian(x):
        return False
    x = np.asarray(x)
    if x.size == 0:
        return True
    w = np.linalg.eigvalsh(0.5 * (x + x.conj().T))
    return w[0] >= -rtol * max(w[-1], 0.0)


def dft_matrix(n):
    """Unitary DFT matrix with ``F[p, q] = exp(-2j*pi*p*q/n) / sqrt(n)``."""
    if int(n) != n or n < 1:
        raise InvalidDimensionError(f"DFT size must be a positive integer, got {n}")
    n = int(n)
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def kronecker(a, b):
    return np.kron(np.asarray(a), np.asarray(b))


def shuffle_permutation(m):
    """Row order of the perfect shuffle as a 0-based index array.

    Row ``2k + j`` of ``Q`` is row ``k + j*m/2`` of the identity, i.e. the
    V and H elements of port ``k`` become adjacent.
    """
    if int(m) != m or m < 2 or m % 2:
        raise InvalidDimensionError(f"perfect shuffle needs an even size >= 2, got {m}")
    half = int(m) // 2
    return (np.arange(half)[:, None] + half * np.arange(2)[None, :]).ravel()


def perfect_shuffle(m):
    """Permutation matrix ``Q`` with ``Q (P (x) B) Q^T = B (x) P`` for 2x2 ``P``."""
    perm = shuffle_permutation(m)
    q = np.zeros((m, m))
    q[np.arange(m), perm] = 1.0
    return q


def shuffle(r):
    """``Q R Q^T`` without forming ``Q``; also accepts vectors (``Q h``)."""
    r = np.asarray(r)
    perm = shuffle_permutation(r.shape[0])
    if r.ndim == 1:
        return r[perm]
    return r[np.ix_(perm, perm)]


def unshuffle(r):
    """Inverse of :func:`shuffle`."""
    r = np.asarray(r)
    inv = np.argsort(shuffle_permutation(r.shape[0]))
    if r.ndim == 1:
        return r[inv]
    return r[np.ix_(inv, inv)]


def block_beam_basis(mx, my):
    """``V = F_my (x) F_mx (x) I_2`` (size ``2*mx*my`` square, unitary)."""
    return np.kron(np.kron(dft_matrix(my), dft_matrix(mx)), np.eye(2))


def _check_shape(r, mx, my):
    r = np.asarray(r)
    m = 2 * mx * my
    if r.shape != (m, m):
        raise InvalidDimensionError(
            f"expected a {m}x{m} matrix for a {mx}x{my}x2 array, got {r.shape}")
    return r


def block_conjugate(r_shuffled, mx, my):
    """``V^H R_hat V`` for the canonical block-beam basis."""
    r = _check_shape(r_shuffled, mx, my)
    v = block_beam_basis(mx, my)
    return v.conj().T @ r @ v


def block_diagonal_weights(r_shuffled, mx, my):
    """Diagonal 2x2 blocks of ``V^H R_hat V``.

    Returns an array of shape ``(mx*my, 2, 2)``; entry ``m`` is the matrix
    weight of block beam ``m``.
    """
    s = block_conjugate(r_shuffled, mx, my)
    n = mx * my
    blocks = s.reshape(n, 2, n, 2)
    idx = np.arange(n)
    return blocks[idx, :, idx, :]


def off_block_energy_ratio(r_shuffled, mx, my):
    """``||V^H R V - blockdiag(V^H R V)||_F / ||R||_F``."""
    s = block_conjugate(r_shuffled, mx, my)
    n = mx * my
    mask = np.kron(np.eye(n), np.ones((2, 2)))
    denom = np.linalg.norm(r_shuffled)
    if denom == 0:
        return 0.0
    return float(np.linalg.norm(s * (1 - mask)) / denom)


def toeplitz_blocks(r_shuffled, mx, my):
    """Read the lag table ``{(m1, m2): 2x2 block}`` off a doubly-block-Toeplitz matrix.

    ``m1`` is the y-port lag in ``(-my, my)`` and ``m2`` the x-port lag in
    ``(-mx, mx)``; the block for lag ``(m1, m2)`` is the one at row port
    ``(max(m1,0), max(m2,0))`` and column port ``(max(-m1,0), max(-m2,0))``.
    Only the first block row/column are read; use
    :func:`is_doubly_block_toeplitz` to check that the rest agrees.
    """
    r = _check_shape(r_shuffled, mx, my)
    out = {}
    for m1 in range(-my + 1, my):
        for m2 in range(-mx + 1, mx):
            row = max(m1, 0) * mx + max(m2, 0)
            col = max(-m1, 0) * mx + max(-m2, 0)
            out[(m1, m2)] = r[2 * row:2 * row + 2, 2 * col:2 * col + 2].copy()
    return out


def max_toeplitz_deviation(r_shuffled, mx, my):
    """Largest relative deviation of any block from its lag representative."""
    r = _check_shape(r_shuffled, mx, my)
    table = toeplitz_blocks(r, mx, my)
    n = mx * my
    blocks = r.reshape(n, 2, n, 2).transpose(0, 2, 1, 3)
    scale = np.max(np.abs(r)) or 1.0
    worst = 0.0
    for p in range(n):
        py, px = divmod(p, mx)
        for q in range(n):
            qy, qx = divmod(q, mx)
            ref = table[(py - qy, px - qx)]
            worst = max(worst, float(np.max(np.abs(blocks[p, q] - ref))))
    return worst / scale


def is_doubly_block_toeplitz(r_shuffled, mx, my, rtol=1e-9):
    return max_toeplitz_deviation(r_shuffled, mx, my) < rtol


def _check_symmetric_table(blocks, rtol=HERMITIAN_RTOL):
    scale = max((np.max(np.abs(b)) for b in blocks.values()), default=0.0)
    for (m1, m2), b in blocks.items():
        b = np.asarray(b)
        if b.shape != (2, 2):
            raise InvalidInputError(f"block {(m1, m2)} is not 2x2")
        mirror = blocks.get((-m1, -m2))
        if mirror is None:
            raise InvalidInputError(f"lag {(-m1, -m2)} missing (needed by {(m1, m2)})")
        if np.max(np.abs(np.asarray(mirror) - b.conj().T)) > rtol * max(scale, 1e-300):
            raise InvalidInputError(
                f"block table is not Hermitian-symmetric at lag {(m1, m2)}")


def spectral_density(blocks, at):
    """Truncated matrix-valued generating function at one frequency pair.

    ``Sigma(w1, w2) = sum_{m1, m2} T[m1, m2] exp(2j*pi*(m1*w1 + m2*w2))``.
    The sum runs over the lags present in ``blocks``; for a finite array that
    is every lag there is, so no further truncation happens.
    """
    _check_symmetric_table(blocks)
    w1, w2 = at
    out = np.zeros((2, 2), dtype=complex)
    for (m1, m2), b in blocks.items():
        out += np.asarray(b) * np.exp(2j * np.pi * (m1 * w1 + m2 * w2))
    return out


@dataclass(frozen=True)
class BlockSpectralDensity:
    """Samples of the 2x2 spectral density on a rectangular frequency grid.

    ``omega1`` (length n1) and ``omega2`` (length n2) define the grid;
    ``blocks`` has shape ``(n1, n2, 2, 2)``.
    """

    omega1: np.ndarray
    omega2: np.ndarray
    blocks: np.ndarray

    @property
    def grid(self):
        w1, w2 = np.meshgrid(self.omega1, self.omega2, indexing="ij")
        return np.stack([w1.ravel(), w2.ravel()], axis=1)

    def trace(self):
        return np.real(np.trace(self.blocks, axis1=2, axis2=3))


def sample_spectral_density(blocks, omega1, omega2):
    """Evaluate :func:`spectral_density` on the grid ``omega1 x omega2`` (vectorized)."""
    _check_symmetric_table(blocks)
    omega1 = np.asarray(omega1, dtype=float)
    omega2 = np.asarray(omega2, dtype=float)
    lags = sorted(blocks)
    l1 = np.array([k[0] for k in lags])
    l2 = np.array([k[1] for k in lags])
    tab = np.stack([np.asarray(blocks[k], dtype=complex) for k in lags])
    e1 = np.exp(2j * np.pi * np.outer(omega1, l1))  # (n1, L)
    e2 = np.exp(2j * np.pi * np.outer(omega2, l2))  # (n2, L)
    out = np.einsum("al,bl,lij->abij", e1, e2, tab)
    return BlockSpectralDensity(omega1, omega2, out)


def wrap_frequency(w):
    """Map frequencies to ``[-1/2, 1/2)``."""
    return (np.asarray(w) + 0.5) % 1.0 - 0.5


def beam_frequencies(mx, my):
    """Frequency pair sampled by each block beam, shape ``(mx*my, 2)``."""
    a_y, a_x = np.divmod(np.arange(mx * my), mx)
    return np.stack([wrap_frequency(a_y / my), wrap_frequency(a_x / mx)], axis=1)


def circulant_approximant(blocks, mx, my):
    """Doubly-block-circulant matrix whose generator is the wrapped lag table.

    Block ``(p, q)`` equals the sum of all lags congruent to
    ``(p_y - q_y, p_x - q_x)`` modulo ``(my, mx)``. Its block-diagonal
    in the ``V`` basis equals the truncated spectral density sampled at
    :func:`beam_frequencies`.
    """
    n = mx * my
    wrapped = {}
    for (m1, m2), b in blocks.items():
        key = (m1 % my, m2 % mx)
        wrapped[key] = wrapped.get(key, 0) + np.asarray(b, dtype=complex)
    c = np.zeros((2 * n, 2 * n), dtype=complex)
    for p in range(n):
        py, px = divmod(p, mx)
        for q in range(n):
            qy, qx = divmod(q, mx)
            b = wrapped.get(((py - qy) % my, (px - qx) % mx))
            if b is not None:
                c[2 * p:2 * p + 2, 2 * q:2 * q + 2] = b
    return c
