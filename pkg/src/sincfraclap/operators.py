"""Matrix-free application of the sinc-fractional Laplacian.

The lattice values ``u_k`` are embedded at offset ``N`` into a zero buffer of
side ``2N``, transformed, multiplied by ``Phi_hat`` and transformed back; the
leading ``N^d`` block then holds the non-circular convolution
``sum_k u_k Phi^N(kappa - k)``.
"""
from __future__ import annotations

import numpy as np
import scipy.fft as sfft

from .errors import ShapeError
from .grid import ProblemParams, check_grid, shift_to_signed
from .kernel import ConvolutionKernel, periodic_symbol
from .transform import crop, dft_forward, dft_inverse, embed_padded, workers


class SincLaplacian:
    """Handle for repeated applications of one convolution kernel.

    Holds the half spectrum of the real kernel with the offset-``N`` embedding
    folded in as a phase ``(-1)^{k_1 + ... + k_d}``. Each axis is then
    transformed on the non-zero slab only, and inverse transforms keep only
    the ``N`` leading outputs, which saves the work on the zero padding.
    :meth:`copy` gives a second handle sharing the (immutable) spectrum.
    """

    def __init__(self, kernel: ConvolutionKernel):
        self.kernel = kernel
        self.params = kernel.params
        d = self.params.d
        # The operator acts on real data, so only the Hermitian part of
        # Phi_hat matters; keeping its half spectrum halves the FFT work.
        g = sfft.ifftn(kernel.phi_hat, workers=workers()).real
        spec = sfft.rfftn(g, workers=workers())
        for a in range(d):
            shape = [1] * d
            shape[a] = spec.shape[a]
            spec *= np.where(np.arange(spec.shape[a]) % 2 == 0, 1.0, -1.0).reshape(shape)
        self._phi_half = spec

    def copy(self) -> "SincLaplacian":
        other = object.__new__(SincLaplacian)
        other.kernel = self.kernel
        other.params = self.params
        other._phi_half = self._phi_half
        return other

    def apply(self, u: np.ndarray) -> np.ndarray:
        u = check_grid(self.params, u)
        N, d = self.params.N, self.params.d
        M = 2 * N
        nw = workers()
        X = sfft.rfft(u, n=M, axis=-1, workers=nw)
        for a in range(d - 1):
            X = sfft.fft(X, n=M, axis=a, workers=nw, overwrite_x=True)
        X *= self._phi_half
        for a in range(d - 1):
            X = sfft.ifft(X, axis=a, workers=nw, overwrite_x=True)
            X = X[(slice(None),) * a + (slice(0, N),)]
        f = sfft.irfft(X, n=M, axis=-1, workers=nw)
        return np.ascontiguousarray(f[..., :N])

    __call__ = apply

    def apply_masked(self, mask: np.ndarray, u: np.ndarray) -> np.ndarray:
        """``S_Omega Phi S_Omega^T u``: zero outside the mask before and after."""
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != self.params.shape:
            raise ShapeError(f"mask shape {mask.shape} does not match {self.params.shape}")
        u = check_grid(self.params, u)
        f = self.apply(np.where(mask, u, 0.0))
        f[~mask] = 0.0
        return f

    def kernel_values(self) -> np.ndarray:
        """Lattice kernel ``Phi^N(K)`` for lags ``K`` in ``{-N, ..., N-1}^d``.

        Entry ``[K_1 + N, ..., K_d + N]`` holds lag ``K``. The stored spectrum
        includes the alternating phase, so its inverse DFT is the kernel
        shifted by ``N`` along every axis, which is exactly this layout.
        """
        return kernel_values(self.kernel)


def kernel_values(kernel: ConvolutionKernel, return_imag: bool = False):
    g = dft_inverse(kernel.phi_hat)
    if return_imag:
        return g.real, float(np.max(np.abs(g.imag)))
    return g.real


def lag_of_index(m, N: int):
    """Lag ``K`` stored at position ``m`` of :func:`kernel_values`."""
    return shift_to_signed((np.asarray(m) + N) % (2 * N), 2 * N)


def apply_sinc(kernel: ConvolutionKernel, u: np.ndarray) -> np.ndarray:
    """Reference path: complex full-spectrum transforms, exactly as the algorithm reads."""
    u = check_grid(kernel.params, u)
    b = dft_forward(embed_padded(u))
    b *= kernel.phi_hat
    return crop(dft_inverse(b), kernel.params)


def apply_masked(kernel_or_handle, mask: np.ndarray, u: np.ndarray) -> np.ndarray:
    op = kernel_or_handle if isinstance(kernel_or_handle, SincLaplacian) else SincLaplacian(kernel_or_handle)
    return op.apply_masked(mask, u)


def apply_scaled_periodic(params: ProblemParams, S: int, u: np.ndarray) -> np.ndarray:
    """Periodic fractional Laplacian on the ``(SN)^d`` lattice, read on the first ``N^d`` block.

    ``u`` is extended by zeros to side ``SN``. No ``S^{-2s}`` factor is applied.
    """
    u = check_grid(params, u)
    N, d = params.N, params.d
    M = S * N
    buf = np.zeros((M,) * d)
    buf[(slice(0, N),) * d] = u
    nw = workers()
    spec = sfft.rfftn(buf, workers=nw)
    # the symbol is even, so the half spectrum is its leading slab on the last axis
    spec *= periodic_symbol(params, S)[..., : M // 2 + 1]
    out = sfft.irfftn(spec, s=buf.shape, workers=nw, overwrite_x=True)
    return np.ascontiguousarray(out[(slice(0, N),) * d])
