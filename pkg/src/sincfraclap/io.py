"""Grid dumps, PGM images and time-series CSV."""
from __future__ import annotations

import csv
import re
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, ShapeError

GRID_MAGIC = b"FLGRID01"
GRID_VERSION = 1
_GRID_HEADER = struct.Struct("<8sIIQ")


def write_grid(path, u: np.ndarray) -> None:
    """Write a cube array as ``FLGRID01``: header, then ``N^d`` little-endian f64, row-major."""
    u = np.asarray(u, dtype=float)
    d = u.ndim
    if d not in (1, 2, 3) or u.shape != (u.shape[0],) * d:
        raise ShapeError(f"grid must be a 1-3 dimensional cube, got shape {u.shape}")
    with open(path, "wb") as fh:
        fh.write(_GRID_HEADER.pack(GRID_MAGIC, GRID_VERSION, d, u.shape[0]))
        fh.write(np.ascontiguousarray(u, dtype="<f8").tobytes())


def read_grid(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _GRID_HEADER.size:
        raise FormatError("grid file truncated in header")
    magic, version, d, N = _GRID_HEADER.unpack_from(data)
    if magic != GRID_MAGIC:
        raise FormatError(f"bad grid magic {magic!r}")
    if version != GRID_VERSION:
        raise FormatError(f"unsupported grid version {version}")
    if d not in (1, 2, 3):
        raise FormatError(f"bad grid dimension {d}")
    expected = N**d * 8
    if len(data) - _GRID_HEADER.size != expected:
        raise FormatError(f"grid payload has {len(data) - _GRID_HEADER.size} bytes, expected {expected}")
    u = np.frombuffer(data, dtype="<f8", offset=_GRID_HEADER.size)
    return u.reshape((N,) * d).astype(float)


# ---------------------------------------------------------------- PGM

_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _is_pow2(n: int) -> bool:
    return n > 0 and not n & (n - 1)


def read_pgm(path) -> np.ndarray:
    """Read a binary 8-bit PGM (P5) with square power-of-two side as floats in ``[0, 1]``."""
    data = Path(path).read_bytes()
    pos = 0
    fields = []
    for _ in range(4):
        m = _PGM_TOKEN.match(data, pos)
        if m is None:
            raise FormatError("truncated PGM header")
        fields.append(m.group(1))
        pos = m.end()
    if fields[0] != b"P5":
        raise FormatError(f"not a binary PGM (magic {fields[0][:8]!r})")
    try:
        w, h, maxval = (int(f) for f in fields[1:])
    except ValueError as exc:
        raise FormatError("malformed PGM header") from exc
    if maxval != 255:
        raise FormatError(f"only 8-bit PGM (maxval 255) is supported, got {maxval}")
    if w != h or not _is_pow2(w):
        raise FormatError(f"image must be square with power-of-two side, got {w}x{h}")
    pos += 1  # single whitespace byte after maxval
    pixels = np.frombuffer(data, dtype=np.uint8, offset=pos)
    if pixels.size != w * h:
        raise FormatError(f"PGM payload has {pixels.size} bytes, expected {w * h}")
    return pixels.reshape(h, w) / 255.0


def to_gray_levels(u: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(np.asarray(u, dtype=float), 0.0, 1.0) * 255).astype(np.uint8)


def write_pgm(path, u: np.ndarray) -> None:
    """Write ``u`` clipped to ``[0, 1]`` as 8-bit P5."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 2 or u.shape[0] != u.shape[1] or not _is_pow2(u.shape[0]):
        raise FormatError(f"image must be square with power-of-two side, got {u.shape}")
    N = u.shape[0]
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (N, N))
        fh.write(to_gray_levels(u).tobytes())


# ---------------------------------------------------------------- CSV


def write_time_series(path, times, mass, kink, timing: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "mass", "kink_position"])
        for t, m, k in zip(times, mass, kink):
            w.writerow([f"{t:.17g}", f"{m:.17g}", "" if np.isnan(k) else f"{k:.17g}"])
        if timing:
            fh.write(f"# timing: {timing}\n")


def read_time_series(path):
    """Return ``(t, mass, kink)`` arrays; empty kink cells become ``nan``."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#"):
                continue
            rows.append(row)
    if not rows or rows[0] != ["t", "mass", "kink_position"]:
        raise FormatError("missing time-series header")
    body = np.array([[float(c) if c else np.nan for c in r] for r in rows[1:]], dtype=float)
    body = body.reshape(-1, 3)
    return body[:, 0], body[:, 1], body[:, 2]
