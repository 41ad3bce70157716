"""Fractional Allen-Cahn, fractional-regularized denoising and operator comparisons."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.fft as sfft
from scipy.optimize import curve_fit

from .errors import ConfigError, NumericalError
from .grid import ProblemParams, check_ball, check_grid, distance_squared
from .kernel import QuadratureRule, get_kernel, periodic_symbol
from .operators import SincLaplacian, apply_scaled_periodic
from .solver import CgConfig, cg_solve
from .transform import workers


def double_well_prime(u):
    """Derivative of ``W(u) = u^2 (u - 1)^2 / 4``."""
    return 0.5 * u * (u - 1.0) * (2.0 * u - 1.0)


def _periodic_half_symbol(params: ProblemParams) -> np.ndarray:
    return periodic_symbol(params, 1)[..., : params.N // 2 + 1]


# ---------------------------------------------------------------- Allen-Cahn


def indicator_initial(params: ProblemParams, lo: float = 0.25, hi: float = 0.75) -> np.ndarray:
    """Indicator of ``[lo, hi)`` along axis 0.

    Half-open, so that for ``lo = 1/4, hi = 3/4`` both phases occupy exactly
    ``N/2`` lattice points.
    """
    x = params.coordinates()[0]
    return np.broadcast_to(((x >= lo) & (x < hi)).astype(float), params.shape).copy()


@dataclass
class AllenCahnConfig:
    params: ProblemParams = field(default_factory=lambda: ProblemParams(1, 1024, 0.5))
    eps: float = 2e-3
    tau: float = 1e-3
    t_end: float = 40.0
    backend: str = "periodic"
    initial: np.ndarray | None = None
    record_every: int = 10
    snapshot_times: tuple[float, ...] = ()
    cg: CgConfig = field(default_factory=lambda: CgConfig(tol=1e-20, max_iter=500))

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigError("eps must be positive")
        if not self.tau > 0:
            raise ConfigError("tau must be positive")
        if not self.t_end >= self.tau:
            raise ConfigError("t_end must be at least one time step")
        if self.backend not in ("periodic", "dirichlet"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")


@dataclass
class AllenCahnResult:
    times: np.ndarray
    mass: np.ndarray
    kink: np.ndarray
    final: np.ndarray
    snapshots: dict[float, np.ndarray]


def kink_position(u: np.ndarray, level: float = 0.5) -> float:
    """Leftmost upward crossing of ``level`` along axis 0, linearly interpolated.

    Returns ``nan`` when ``u`` never crosses upward.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim > 1:
        u = u.reshape(u.shape[0], -1).mean(axis=1)
    N = u.size
    below = u[:-1] < level
    above = u[1:] >= level
    idx = np.flatnonzero(below & above)
    if idx.size == 0:
        return math.nan
    k = int(idx[0])
    frac = (level - u[k]) / (u[k + 1] - u[k])
    return (k + frac) / N


def allen_cahn_step_operator(cfg: AllenCahnConfig, rule: QuadratureRule | None = None):
    """Return ``step(u) -> u_next`` for the implicit Euler scheme."""
    p, tau, eps = cfg.params, cfg.tau, cfg.eps
    if cfg.backend == "periodic":
        denom = 1.0 + tau * _periodic_half_symbol(p)

        def step(u):
            rhs = u - (tau / eps) * double_well_prime(u)
            spec = sfft.rfftn(rhs, workers=workers())
            spec /= denom
            return sfft.irfftn(spec, s=p.shape, workers=workers())

        return step

    op = SincLaplacian(get_kernel(p, rule))

    def apply(v):
        return v + tau * op.apply(v)

    def step(u):
        rhs = u - (tau / eps) * double_well_prime(u)
        rep = cg_solve(apply, rhs, None, cfg.cg, x0=u)
        if not rep.converged:
            raise NumericalError("CG did not converge")
        return rep.solution

    return step


def allen_cahn_run(cfg: AllenCahnConfig, rule: QuadratureRule | None = None,
                   progress: Callable[[float], None] | None = None) -> AllenCahnResult:
    """Integrate ``(1 + tau A) u_{n+1} = u_n - (tau / eps) W'(u_n)`` up to ``t_end``.

    ``A`` is the periodic fractional Laplacian (solved by division in Fourier
    space) or the sinc-fractional Laplacian with zero exterior (solved by CG).
    """
    p = cfg.params
    u = check_grid(p, cfg.initial if cfg.initial is not None else indicator_initial(p)).copy()
    step = allen_cahn_step_operator(cfg, rule)
    n_steps = int(round(cfg.t_end / cfg.tau))
    snap_steps = {int(round(t / cfg.tau)): t for t in cfg.snapshot_times}
    times, mass, kink = [0.0], [float(u.mean())], [kink_position(u)]
    snapshots = {}
    if 0 in snap_steps:
        snapshots[snap_steps[0]] = u.copy()
    for n in range(1, n_steps + 1):
        try:
            u = step(u)
        except NumericalError as exc:
            raise NumericalError(f"Allen-Cahn step {n}: {exc}") from exc
        if n % cfg.record_every == 0 or n == n_steps:
            t = n * cfg.tau
            times.append(t)
            mass.append(float(u.mean()))
            kink.append(kink_position(u))
            if progress:
                progress(t)
        if n in snap_steps:
            snapshots[snap_steps[n]] = u.copy()
    return AllenCahnResult(np.array(times), np.array(mass), np.array(kink), u, snapshots)


def fit_annihilation(times, mass, floor: float = 0.02):
    """Fit ``mass(t) = a sqrt(t0 - t)`` to the samples with ``mass > floor``.

    Returns ``(a, t0)``.
    """
    times = np.asarray(times, dtype=float)
    mass = np.asarray(mass, dtype=float)
    keep = mass > floor
    last = np.flatnonzero(~keep)
    if last.size:
        keep[last[0]:] = False
    t, m = times[keep], mass[keep]
    if t.size < 3:
        raise ConfigError("not enough samples above the floor to fit")
    # mass^2 is linear in t; use that for the starting guess
    slope, icpt = np.polyfit(t, m * m, 1)
    a0 = math.sqrt(max(-slope, 1e-12))
    t00 = icpt / (a0 * a0)

    def model(tt, a, t0):
        return a * np.sqrt(np.clip(t0 - tt, 0.0, None))

    (a, t0), _ = curve_fit(model, t, m, p0=(a0, max(t00, t[-1] + 1e-6)))
    return float(a), float(t0)


# ---------------------------------------------------------------- denoising


@dataclass
class DenoiseConfig:
    s: float = 0.42
    alpha: float = 20 * math.pi
    cg: CgConfig = field(default_factory=lambda: CgConfig(tol=1e-20, max_iter=5000))

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError("alpha must be positive")
        if not 0 < self.s < 1:
            raise ConfigError("s must lie in (0, 1)")


def denoise(image: np.ndarray, cfg: DenoiseConfig = DenoiseConfig(), backend: str = "dirichlet",
            rule: QuadratureRule | None = None, report: dict | None = None) -> np.ndarray:
    """Minimize ``|(-Delta)^{s/2} u|^2 / 2 + alpha |u - g|^2 / 2`` for a square image ``g``.

    Solves ``(alpha + (-Delta)^s) u = alpha (g - mean(g))`` and returns
    ``u + mean(g)`` without clipping.
    """
    g = np.asarray(image, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ConfigError("denoising needs a square 2d image")
    p = ProblemParams(2, g.shape[0], cfg.s)
    # correctly rounded, so a constant image is reproduced exactly
    mean = math.fsum(g.ravel()) / g.size
    rhs = cfg.alpha * (g - mean)
    if backend == "periodic":
        spec = sfft.rfftn(rhs, workers=workers())
        spec /= cfg.alpha + _periodic_half_symbol(p)
        u = sfft.irfftn(spec, s=p.shape, workers=workers())
        info = {"iterations": 0, "converged": True}
    elif backend == "dirichlet":
        op = SincLaplacian(get_kernel(p, rule))
        rep = cg_solve(lambda v: cfg.alpha * v + op.apply(v), rhs, None, cfg.cg)
        u = rep.solution
        info = {"iterations": rep.iterations, "converged": rep.converged,
                "final_residual": rep.final_residual}
    else:
        raise ConfigError(f"unknown backend {backend!r}")
    if report is not None:
        report.update(info)
    return u + mean


def denoise_energies(u, g, s: float, alpha: float, backend: str = "dirichlet",
                     rule: QuadratureRule | None = None):
    """Data-fidelity ``alpha/2 mean((u-g)^2)`` and regularizer ``1/2 mean(u' A u')``, ``u' = u - mean(g)``."""
    u = np.asarray(u, dtype=float)
    g = np.asarray(g, dtype=float)
    p = ProblemParams(2, g.shape[0], s)
    v = u - g.mean()
    if backend == "periodic":
        spec = sfft.rfftn(v, workers=workers())
        spec *= _periodic_half_symbol(p)
        Av = sfft.irfftn(spec, s=p.shape, workers=workers())
    else:
        Av = SincLaplacian(get_kernel(p, rule)).apply(v)
    return 0.5 * alpha * float(np.mean((u - g) ** 2)), 0.5 * float(np.mean(v * Av))


def phantom(N: int) -> np.ndarray:
    """Piecewise-constant test image in ``[0, 1]`` with a disc, a square and a bar."""
    p = ProblemParams(2, N, 0.5)
    x, y = p.coordinates()
    img = np.full(p.shape, 0.2)
    img[distance_squared(p, (0.35, 0.4)) < 0.2**2] = 0.8
    img[(np.abs(x - 0.7) < 0.12) & (np.abs(y - 0.7) < 0.12)] = 0.6
    img[(np.abs(x - 0.75) < 0.04) & (y > 0.1) & (y < 0.5)] = 1.0
    return img


def boundary_band(N: int, width: float = 0.1) -> np.ndarray:
    """Pixels within ``width * N`` of any image edge."""
    w = int(round(width * N))
    band = np.zeros((N, N), dtype=bool)
    band[:w, :] = band[-w:, :] = True
    band[:, :w] = band[:, -w:] = True
    return band


# ---------------------------------------------------------------- operator comparison


def mollifier(params: ProblemParams, center=0.5, radius: float = 0.5) -> np.ndarray:
    """Unnormalized bump ``exp(-1 / (1 - rho^2))`` with ``rho = |x - c| / radius``."""
    c = check_ball(params.d, center, radius)
    rho2 = distance_squared(params, c) / radius**2
    inside = rho2 < 1
    return np.where(inside, np.exp(-1.0 / np.where(inside, 1 - rho2, 1.0)), 0.0)


@dataclass
class ComparisonRow:
    rule: str
    S: int
    error: float


def operator_comparison(params: ProblemParams, rules, S_list, u: np.ndarray | None = None,
                        cache: bool = True) -> list[ComparisonRow]:
    """``e(S) = max |sinc(u) - S^{-2s} periodic_S(u)|`` for each rule and scale factor."""
    if u is None:
        u = mollifier(params)
    periodic = {S: S ** (-2 * params.s) * apply_scaled_periodic(params, S, u) for S in S_list}
    rows = []
    for rule in rules:
        op = SincLaplacian(get_kernel(params, rule, cache=cache))
        f = op.apply(u)
        for S in S_list:
            rows.append(ComparisonRow(rule.id, int(S), float(np.max(np.abs(f - periodic[S])))))
    return rows
