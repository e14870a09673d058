"""Centered inverse 2D FFT and Hermitian pair packing.

A centered spectrum stores frequency ``n`` in ``[-N/2, N/2)`` at index
``n + N/2``. Shifting the spectrum by N/2 in both axes multiplies the spatial
result by ``(-1)^(i+j)``, so the centered inverse transform is a plain inverse
FFT followed by a checkerboard sign flip. The inverse carries the ``1/N^2``
factor as ``numpy.fft.ifft2`` does.

A spectrum is Hermitian when ``X[s] == conj(X[(N - s) mod N])`` in storage
indices; its inverse transform is then real. Two Hermitian spectra X and Y
can be recovered from one transform of ``X + iY`` (real and imaginary parts).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from oceansim.errors import ConfigError, InvariantError


def _check_square(field: np.ndarray) -> int:
    if field.ndim < 2 or field.shape[-1] != field.shape[-2]:
        raise ConfigError(f"field must be square, got shape {field.shape}")
    N = field.shape[-1]
    if N < 2 or N & (N - 1):
        raise ConfigError(f"field size must be a power of two >= 2, got {N}")
    return N


@lru_cache(maxsize=16)
def checkerboard(N: int) -> np.ndarray:
    """``(-1)^(i+j)`` as an N x N float array."""
    i = np.arange(N)
    cb = 1.0 - 2.0 * ((i[:, None] + i[None, :]) & 1)
    cb.setflags(write=False)
    return cb


def ifft2_centered(field: np.ndarray) -> np.ndarray:
    """Inverse 2D DFT of a centered spectrum (last two axes).

    Equals ``(1/N^2) sum_{n,m} X[n+N/2, m+N/2] exp(2 pi i (n i + m j) / N)``.
    """
    field = np.asarray(field)
    N = _check_square(field)
    out = np.fft.ifft2(field, axes=(-2, -1))
    return out * checkerboard(N).astype(out.real.dtype, copy=False)


def hermitian_residual(X: np.ndarray) -> float:
    """Max ``|X[s] - conj(X[-s])|`` in storage indices."""
    Xn = np.conj(np.roll(X[..., ::-1, ::-1], 1, axis=(-2, -1)))
    return float(np.max(np.abs(X - Xn))) if X.size else 0.0


def is_hermitian(X: np.ndarray, tol: float = 1e-9) -> bool:
    scale = max(1.0, float(np.max(np.abs(X)))) if X.size else 1.0
    return hermitian_residual(X) <= tol * scale


def ifft2_hermitian_pair(X: np.ndarray, Y: np.ndarray, check: bool = False, tol: float = 1e-9):
    """Real inverse transforms of two Hermitian spectra from a single FFT.

    Returns ``(Re F^-1(X), Re F^-1(Y))`` computed as the real and imaginary
    parts of ``F^-1(X + iY)``.
    """
    X = np.asarray(X)
    Y = np.asarray(Y)
    if X.shape != Y.shape:
        raise ConfigError(f"shape mismatch {X.shape} vs {Y.shape}")
    if check:
        for name, M in (("X", X), ("Y", Y)):
            if not is_hermitian(M, tol):
                raise InvariantError(f"{name} is not Hermitian (residual {hermitian_residual(M):.3e})")
    out = ifft2_centered(X + 1j * Y)
    return out.real, out.imag


def random_hermitian(N: int, rng: np.random.Generator, zero_nyquist: bool = False) -> np.ndarray:
    """Random centered Hermitian spectrum, built by symmetrizing a complex draw."""
    Z = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    H = 0.5 * (Z + np.conj(np.roll(Z[::-1, ::-1], 1, axis=(0, 1))))
    if zero_nyquist:
        H[0, :] = 0.0
        H[:, 0] = 0.0
    return H
