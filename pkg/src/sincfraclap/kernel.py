"""Assembly of the DFT of the sinc-fractional Laplacian's convolution kernel.

The lattice kernel is

    Phi^N(K) = N^{2s} (2 pi)^{-d} int_{[-pi, pi]^d} |w|^{2s} exp(i w.K) dw,

and its ``(2N)^d``-point DFT is evaluated directly as a quadrature over the
unit cells of ``[-N, N]^d``: per quadrature node one circular convolution of
``|j + x_i|^{2s}`` with a product of geometric sums ``Y``.
"""
from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft as sfft
from scipy.special import gamma, rgamma

from .errors import ConfigError, FormatError
from .grid import ProblemParams
from .transform import workers

KERNEL_MAGIC = b"FLKERN01"
KERNEL_VERSION = 1
_KERNEL_HEADER = struct.Struct("<8sIIQdBI")
_QUAD_KINDS = {"uniform": 0, "gauss_legendre": 1}

# |x mod 2pi| below this uses the limit value 2N
Y_SINGULAR_TOL = 1e-9


def Y(x, N: int):
    """Geometric sum ``sum_{j=-N}^{N-1} exp(i j x)``.

    Evaluated through the closed form in half-angle shape,
    ``exp(-i x/2) sin(N x) / sin(x/2)``, after reducing ``x`` to ``[-pi, pi]``.
    """
    x = np.asarray(x, dtype=float)
    r = x - 2 * np.pi * np.round(x / (2 * np.pi))
    singular = np.abs(r) < Y_SINGULAR_TOL
    half = np.where(singular, 1.0, np.sin(0.5 * r))
    val = np.exp(-0.5j * r) * np.sin(N * r) / half
    out = np.where(singular, 2.0 * N, val)
    return out[()] if out.ndim == 0 else out


def Y_d(x, N: int):
    """Product of :func:`Y` over the last axis of ``x``."""
    x = np.asarray(x, dtype=float)
    return np.prod(Y(x, N), axis=-1)


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor-product quadrature rule on ``[0, 1]^d``.

    ``nodes_1d`` and ``weights_1d`` describe the one-dimensional factor;
    ``nodes`` and ``weights`` enumerate the tensor product in row-major order.
    """

    kind: str
    n: int
    d: int
    nodes_1d: np.ndarray
    weights_1d: np.ndarray

    @property
    def id(self) -> str:
        return f"uniform:{self.n}" if self.kind == "uniform" else f"gl{self.n}"

    @cached_property
    def nodes(self) -> np.ndarray:
        grids = np.meshgrid(*([self.nodes_1d] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    @cached_property
    def weights(self) -> np.ndarray:
        w = self.weights_1d
        for _ in range(self.d - 1):
            w = np.multiply.outer(w, self.weights_1d)
        return np.ravel(w)

    def index_tuples(self):
        """Per node: the tuple of 1d factor indices."""
        return np.ndindex(*([self.n] * self.d))


def uniform_rule(n: int, d: int) -> QuadratureRule:
    """Left-endpoint rule with nodes ``i / n`` and equal weights ``1 / n^d``."""
    if n < 1:
        raise ConfigError("uniform rule needs at least one node")
    return QuadratureRule("uniform", n, d, np.arange(n) / n, np.full(n, 1.0 / n))


def _legendre(n: int, x: np.ndarray):
    """Legendre polynomial P_n and its derivative by the three-term recurrence."""
    p0, p1 = np.ones_like(x), x
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1)
    return p1, dp


def gauss_legendre_rule(n: int, d: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule per axis, mapped to ``[0, 1]``.

    Nodes are the roots of ``P_n`` found by Newton's method from the
    Chebyshev-like initial guesses ``cos(pi (i - 1/4) / (n + 1/2))``.
    """
    if not 1 <= n <= 32:
        raise ConfigError(f"Gauss-Legendre order must be in [1, 32], got {n}")
    if n == 1:
        x, w = np.zeros(1), np.full(1, 2.0)
    else:
        i = np.arange(1, n + 1)
        x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
        for _ in range(100):
            p, dp = _legendre(n, x)
            dx = p / dp
            x = x - dx
            if np.max(np.abs(dx)) < 1e-15:
                break
        p, dp = _legendre(n, x)
        w = 2.0 / ((1 - x * x) * dp * dp)
        x = x[::-1]
        w = w[::-1]
    return QuadratureRule("gauss_legendre", n, d, 0.5 * (x + 1), 0.5 * w)


def default_rule(d: int) -> QuadratureRule:
    return gauss_legendre_rule(5 if d == 3 else 7, d)


def parse_rule(spec: str, d: int) -> QuadratureRule:
    """Rule from a descriptor such as ``"gl7"`` or ``"uniform:3"``."""
    spec = spec.strip().lower()
    try:
        if spec.startswith("gl"):
            return gauss_legendre_rule(int(spec[2:]), d)
        if spec.startswith("uniform:"):
            return uniform_rule(int(spec.split(":", 1)[1]), d)
    except ValueError as exc:
        raise ConfigError(f"bad quadrature descriptor {spec!r}") from exc
    raise ConfigError(f"unknown quadrature {spec!r}; use glN or uniform:K")


def c_int(d: int, s: float) -> float:
    """Normalization constant of the singular-integral definition."""
    return s * 2 ** (2 * s) * gamma(s + d / 2) * rgamma(1 - s) / math.pi ** (d / 2)


def c_ball(d: int, s: float) -> float:
    """Amplitude of the solution to ``(-Delta)^s u = 1`` on the unit ball."""
    return gamma(d / 2) / (2 ** (2 * s) * gamma(d / 2 + s) * gamma(1 + s))


def kernel_prefactor(N: int, d: int, s: float) -> float:
    """``(2 pi)^{-d} (pi/N)^{d+2s} N^{2s}``, which simplifies to ``pi^{2s} (2N)^{-d}``."""
    return (2 * np.pi) ** (-d) * (np.pi / N) ** (d + 2 * s) * N ** (2 * s)


@dataclass(frozen=True, eq=False)
class ConvolutionKernel:
    params: ProblemParams
    quad_kind: str
    quad_n: int
    phi_hat: np.ndarray

    @property
    def quadrature_id(self) -> str:
        return f"uniform:{self.quad_n}" if self.quad_kind == "uniform" else f"gl{self.quad_n}"


def _alternating(M: int, d: int) -> list[np.ndarray]:
    """Broadcastable factors of ``exp(i pi (k_1 + ... + k_d))``."""
    sign = np.where(np.arange(M) % 2 == 0, 1.0, -1.0)
    return [sign.reshape((M,) + (1,) * (d - 1 - a)) for a in range(d)]


def build_kernel(params: ProblemParams, rule: QuadratureRule | None = None) -> ConvolutionKernel:
    """Assemble ``Phi_hat`` on the ``(2N)^d`` grid.

    For every node ``x_i`` the arrays ``c1[j] = |j - N + x_i|^{2s}`` and
    ``c2[j] = Y_d(-(pi/N)(j - N - x_i))`` are convolved circularly. The
    transform of ``c2`` factorizes over axes and is formed from 1d FFTs. All
    weighted products are summed in the spectral domain, so a single inverse
    FFT closes the convolution. The result is scaled by
    ``E_k = pi^{2s} (2N)^{-d} exp(i pi sum(k))``; the alternating sign
    compensates the offset-``N`` embedding used when the kernel is applied.
    """
    if rule is None:
        rule = default_rule(params.d)
    if rule.d != params.d:
        raise ConfigError(f"quadrature rule is {rule.d}d but the problem is {params.d}d")
    d, N, s = params.d, params.N, params.s
    M = 2 * N
    j = np.arange(M) - N
    nw = workers()

    # 1d spectra of the Y-factors, one per 1d node
    y_hat = [sfft.fft(Y(-(np.pi / N) * (j - t), N), workers=nw) for t in rule.nodes_1d]

    acc = np.zeros((M,) * d, dtype=complex)
    for idx in rule.index_tuples():
        x = rule.nodes_1d[list(idx)]
        alpha = float(np.prod(rule.weights_1d[list(idx)]))
        r2 = np.zeros((1,) * d)
        for a in range(d):
            shape = [1] * d
            shape[a] = M
            r2 = r2 + ((j + x[a]) ** 2).reshape(shape)
        c1 = r2 if s == 1.0 else np.power(r2, s)
        term = sfft.fftn(c1, workers=nw)
        for a in range(d):
            shape = [1] * d
            shape[a] = M
            term *= y_hat[idx[a]].reshape(shape)
        term *= alpha
        acc += term
        del term, c1, r2

    phi_hat = sfft.ifftn(acc, workers=nw, overwrite_x=True)
    phi_hat *= kernel_prefactor(N, d, s)
    for sign in _alternating(M, d):
        phi_hat *= sign
    return ConvolutionKernel(params, rule.kind, rule.n, phi_hat)


def periodic_symbol(params: ProblemParams, S: int = 1) -> np.ndarray:
    """Multipliers ``|2 pi k|^{2s}`` of the ``(SN)^d``-point periodic operator."""
    if S < 1:
        raise ConfigError("scale factor S must be >= 1")
    M = S * params.N
    k = sfft.fftfreq(M, 1.0 / M)
    k2 = np.zeros((1,) * params.d)
    for a in range(params.d):
        shape = [1] * params.d
        shape[a] = M
        k2 = k2 + (k**2).reshape(shape)
    return (2 * np.pi) ** (2 * params.s) * np.power(k2, params.s)


def save_kernel(kernel: ConvolutionKernel, path) -> None:
    p = kernel.params
    header = _KERNEL_HEADER.pack(
        KERNEL_MAGIC, KERNEL_VERSION, p.d, p.N, float(p.s),
        _QUAD_KINDS[kernel.quad_kind], kernel.quad_n,
    )
    payload = np.ascontiguousarray(kernel.phi_hat, dtype="<c16").tobytes()
    tmp = Path(f"{path}.tmp{os.getpid()}")
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(payload)
    os.replace(tmp, path)


def load_kernel(path) -> ConvolutionKernel:
    data = Path(path).read_bytes()
    if len(data) < _KERNEL_HEADER.size:
        raise FormatError("kernel file truncated in header")
    magic, version, d, N, s, kind, qn = _KERNEL_HEADER.unpack_from(data)
    if magic != KERNEL_MAGIC:
        raise FormatError(f"bad kernel magic {magic!r}")
    if version != KERNEL_VERSION:
        raise FormatError(f"unsupported kernel version {version}")
    kinds = {v: k for k, v in _QUAD_KINDS.items()}
    if kind not in kinds:
        raise FormatError(f"unknown quadrature kind {kind}")
    try:
        params = ProblemParams(d, N, s)
    except ConfigError as exc:
        raise FormatError(f"invalid kernel header: {exc}") from exc
    expected = (2 * N) ** d * 16
    if len(data) - _KERNEL_HEADER.size != expected:
        raise FormatError(
            f"kernel payload has {len(data) - _KERNEL_HEADER.size} bytes, expected {expected}"
        )
    phi_hat = np.frombuffer(data, dtype="<c16", offset=_KERNEL_HEADER.size)
    return ConvolutionKernel(params, kinds[kind], qn, phi_hat.reshape((2 * N,) * d).astype(complex))


def cache_dir() -> Path:
    env = os.environ.get("FRACLAP_CACHE_DIR")
    return Path(env) if env else Path.home() / ".cache" / "sincfraclap"


def cache_path(params: ProblemParams, rule: QuadratureRule, directory=None) -> Path:
    directory = Path(directory) if directory is not None else cache_dir()
    tag = rule.id.replace(":", "")
    return directory / f"kernel_d{params.d}_N{params.N}_s{params.s:.17g}_{tag}.bin"


def get_kernel(params: ProblemParams, rule: QuadratureRule | None = None,
               cache: bool = True, directory=None) -> ConvolutionKernel:
    """Load the kernel from the cache directory, building and storing it on a miss."""
    if rule is None:
        rule = default_rule(params.d)
    if not cache:
        return build_kernel(params, rule)
    path = cache_path(params, rule, directory)
    if path.exists():
        try:
            k = load_kernel(path)
            if k.params == params and k.quadrature_id == rule.id:
                return k
        except FormatError:
            pass
    k = build_kernel(params, rule)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        save_kernel(k, path)
    except OSError:
        pass
    return k
