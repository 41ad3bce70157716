"""Lattice geometry on the unit cube.

Grid functions are plain ``numpy`` arrays of shape ``(N,) * d`` holding the
samples ``u_k = u(k / N)``; C (row-major) order makes the flattened array the
linear layout with axis 0 varying slowest. Domain masks are boolean arrays of
the same shape.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError, GeometryError, ShapeError

MASK_MAGIC = b"FLMASK01"
_MASK_HEADER = struct.Struct("<8sIQ")


@dataclass(frozen=True)
class ProblemParams:
    """Dimension ``d``, points per axis ``N`` and fractional exponent ``s``."""

    d: int
    N: int
    s: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ConfigError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.N < 4 or self.N % 2:
            raise ConfigError(f"N must be even and >= 4, got {self.N}")
        if not 0.0 < self.s <= 1.0:
            raise ConfigError(f"s must lie in (0, 1], got {self.s}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def size(self) -> int:
        return self.N**self.d

    def coordinates(self) -> list[np.ndarray]:
        """Open-mesh lattice coordinates ``k / N`` along each axis."""
        x = np.arange(self.N) / self.N
        return list(np.meshgrid(*([x] * self.d), indexing="ij", sparse=True))


def check_grid(params: ProblemParams, u: np.ndarray) -> np.ndarray:
    """Return ``u`` as a float array of shape ``params.shape`` or raise."""
    u = np.asarray(u, dtype=float)
    if u.shape != params.shape:
        if u.size == params.size and u.ndim == 1:
            return u.reshape(params.shape)
        raise ShapeError(f"expected grid of shape {params.shape}, got {u.shape}")
    return u


def linear_index(m, params: ProblemParams) -> int:
    m = tuple(int(c) for c in m)
    if len(m) != params.d:
        raise IndexError(f"multi-index {m} does not have {params.d} components")
    for c in m:
        if not 0 <= c < params.N:
            raise IndexError(f"component {c} outside [0, {params.N})")
    return int(np.ravel_multi_index(m, params.shape))


def multi_index(i: int, params: ProblemParams) -> tuple[int, ...]:
    """Inverse of :func:`linear_index`."""
    if not 0 <= i < params.size:
        raise IndexError(f"linear index {i} outside [0, {params.size})")
    return tuple(int(c) for c in np.unravel_index(i, params.shape))


def shift_to_signed(m, M: int):
    """Map indices in ``{0, ..., M-1}`` to ``{-M/2, ..., M/2-1}``.

    Works elementwise on scalars, tuples and integer arrays.
    """
    a = np.asarray(m)
    if np.any(a < 0) or np.any(a >= M):
        raise IndexError(f"index outside [0, {M})")
    out = np.where(a < M // 2, a, a - M)
    if np.ndim(m) == 0:
        return int(out)
    if isinstance(m, tuple):
        return tuple(int(c) for c in out)
    return out


def check_ball(d: int, center, radius: float) -> np.ndarray:
    c = np.broadcast_to(np.asarray(center, dtype=float), (d,))
    if radius <= 0:
        raise GeometryError("radius must be positive")
    if np.any(c - radius < 0) or np.any(c + radius > 1):
        raise GeometryError(
            f"ball with center {tuple(c)} and radius {radius} is not inside [0, 1)^{d}"
        )
    return c


def distance_squared(params: ProblemParams, center) -> np.ndarray:
    """Squared distance of every lattice point to ``center``."""
    c = np.broadcast_to(np.asarray(center, dtype=float), (params.d,))
    return sum((x - ci) ** 2 for x, ci in zip(params.coordinates(), c))


def make_mask(params: ProblemParams, shape: str = "cube", *, center=0.5,
              radius: float = 0.45, path=None) -> np.ndarray:
    """Boolean selector of the lattice points ``k / N`` lying in a domain.

    ``shape`` is one of ``"cube"``, ``"disc"`` (open ball, strict ``|x - c| < r``),
    ``"lshape"`` (unit square minus ``[1/2, 1)^2``, 2d only) or ``"raster"``
    (bits read from a mask file at ``path``).
    """
    if shape == "cube":
        return np.ones(params.shape, dtype=bool)
    if shape == "disc":
        c = check_ball(params.d, center, radius)
        return distance_squared(params, c) < radius * radius
    if shape == "lshape":
        if params.d != 2:
            raise GeometryError("the L-shape is only defined for d = 2")
        x, y = params.coordinates()
        return ~((x >= 0.5) & (y >= 0.5))
    if shape == "raster":
        mask = read_mask(path)
        if mask.shape != params.shape:
            raise FormatError(f"raster mask has shape {mask.shape}, expected {params.shape}")
        return mask
    raise ConfigError(f"unknown domain shape {shape!r}")


def write_mask(path, mask: np.ndarray) -> None:
    mask = np.asarray(mask, dtype=bool)
    d, N = mask.ndim, mask.shape[0]
    if mask.shape != (N,) * d:
        raise ShapeError("mask must be a cube array")
    with open(path, "wb") as fh:
        fh.write(_MASK_HEADER.pack(MASK_MAGIC, d, N))
        fh.write(mask.astype(np.uint8).tobytes(order="C"))


def read_mask(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _MASK_HEADER.size:
        raise FormatError("mask file truncated")
    magic, d, N = _MASK_HEADER.unpack_from(data)
    if magic != MASK_MAGIC:
        raise FormatError(f"bad mask magic {magic!r}")
    if d not in (1, 2, 3):
        raise FormatError(f"bad mask dimension {d}")
    payload = np.frombuffer(data, dtype=np.uint8, offset=_MASK_HEADER.size)
    if payload.size != N**d:
        raise FormatError(f"mask payload has {payload.size} bytes, expected {N**d}")
    if np.any(payload > 1):
        raise FormatError("mask payload bytes must be 0 or 1")
    return payload.reshape((N,) * d).astype(bool)


def norm_l2(u: np.ndarray) -> float:
    """Discrete L2 norm ``sqrt(mean(u**2))`` over the lattice."""
    u = np.asarray(u, dtype=float)
    return float(np.sqrt(np.mean(u * u)))


def norm_linf(u: np.ndarray) -> float:
    return float(np.max(np.abs(u)))
