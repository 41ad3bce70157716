"""Discrete Fourier transforms and zero-padding helpers.

Conventions: the forward transform is unnormalized,
``x_hat[k] = sum_j x[j] exp(-2i pi j.k / M)``, and the inverse carries the
``1 / M**d`` factor. This is the ``norm="backward"`` convention of
:mod:`scipy.fft`, which does the actual work.
"""
from __future__ import annotations

import os

import numpy as np
import scipy.fft as sfft

from .errors import ShapeError
from .grid import ProblemParams

_workers: int | None = None


def set_workers(n: int | None) -> None:
    """Number of threads used by every FFT in the package (``None``: one)."""
    global _workers
    _workers = None if n is None else max(1, int(n))


def workers() -> int:
    if _workers is not None:
        return _workers
    env = os.environ.get("FRACLAP_THREADS")
    return int(env) if env else 1


def _check_cube(b: np.ndarray) -> None:
    if b.ndim == 0 or any(n != b.shape[0] for n in b.shape):
        raise ShapeError(f"spectral buffer must be a cube array, got shape {b.shape}")


def dft_forward(b: np.ndarray) -> np.ndarray:
    b = np.asarray(b)
    _check_cube(b)
    return sfft.fftn(b, workers=workers())


def dft_inverse(b: np.ndarray) -> np.ndarray:
    b = np.asarray(b)
    _check_cube(b)
    return sfft.ifftn(b, workers=workers())


def embed_padded(u: np.ndarray) -> np.ndarray:
    """Place ``u`` (side ``N``) at offset ``N`` in each axis of a zero buffer of side ``2N``."""
    u = np.asarray(u)
    _check_cube(u)
    N = u.shape[0]
    b = np.zeros((2 * N,) * u.ndim, dtype=complex)
    b[(slice(N, 2 * N),) * u.ndim] = u
    return b


def crop(b: np.ndarray, params: ProblemParams) -> np.ndarray:
    """Real part of the leading ``N^d`` block of a side-``2N`` buffer."""
    b = np.asarray(b)
    if b.shape != (2 * params.N,) * params.d:
        raise ShapeError(f"expected buffer of side {2 * params.N}, got {b.shape}")
    return np.ascontiguousarray(b[(slice(0, params.N),) * params.d].real)
