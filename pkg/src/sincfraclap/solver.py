"""Conjugate gradients for the masked system and convergence studies."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, NumericalError
from .grid import ProblemParams, check_grid, distance_squared, make_mask, norm_l2, check_ball
from .kernel import ConvolutionKernel, QuadratureRule, c_ball, get_kernel
from .operators import SincLaplacian

DISC_CENTER = 0.5
DISC_RADIUS = 0.45


@dataclass(frozen=True)
class CgConfig:
    """Stopping rule for :func:`cg_solve`.

    ``tol`` bounds the residual functional ``sum(r**2) / N**d`` (no square root).
    """

    tol: float = 1e-8
    max_iter: int = 10_000
    record_history: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be at least 1")


@dataclass
class SolveReport:
    solution: np.ndarray
    iterations: int
    final_residual: float
    converged: bool
    history: list[float] | None = None
    info: dict = field(default_factory=dict)

    @property
    def final_residual_rooted(self) -> float:
        """Square root of :attr:`final_residual`, i.e. the discrete L2 norm of the residual."""
        return float(np.sqrt(self.final_residual))


def cg_solve(apply: Callable[[np.ndarray], np.ndarray], b: np.ndarray,
             mask: np.ndarray | None = None, cfg: CgConfig = CgConfig(),
             x0: np.ndarray | None = None) -> SolveReport:
    """Unpreconditioned Hestenes-Stiefel CG on the entries selected by ``mask``.

    All iterates, residuals and search directions vanish outside the mask, so
    the exterior of the returned solution is exactly zero.
    """
    b = np.asarray(b, dtype=float)
    if mask is None:
        mask = np.ones(b.shape, dtype=bool)
    outside = ~np.asarray(mask, dtype=bool)
    b = np.where(outside, 0.0, b)
    n = b.size

    def A(v):
        w = apply(v)
        w[outside] = 0.0
        return w

    if x0 is None:
        x = np.zeros_like(b)
        r = b.copy()
    else:
        x = np.where(outside, 0.0, np.asarray(x0, dtype=float))
        r = b - A(x)
    rr = float(np.vdot(r, r))
    res = rr / n
    history = [res] if cfg.record_history else None
    if res < cfg.tol:
        return SolveReport(x, 0, res, True, history)

    p = r.copy()
    it = 0
    while it < cfg.max_iter:
        Ap = A(p)
        pAp = float(np.vdot(p, Ap))
        alpha = rr / pAp
        x += alpha * p
        r -= alpha * Ap
        rr_new = float(np.vdot(r, r))
        it += 1
        res = rr_new / n
        if not np.isfinite(res):
            raise NumericalError(f"non-finite residual in CG iteration {it}")
        if history is not None:
            history.append(res)
        if res < cfg.tol:
            return SolveReport(x, it, res, True, history)
        p *= rr_new / rr
        p += r
        rr = rr_new
    return SolveReport(x, it, res, False, history)


def solve_dirichlet(params: ProblemParams, mask: np.ndarray, f: np.ndarray,
                    rule: QuadratureRule | None = None, cfg: CgConfig = CgConfig(),
                    kernel: ConvolutionKernel | SincLaplacian | None = None,
                    cache: bool = True) -> SolveReport:
    """Solve ``(-Delta)^s u = f`` in the masked domain with ``u = 0`` outside it."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != params.shape:
        raise ConfigError(f"mask shape {mask.shape} does not match {params.shape}")
    if not mask.any():
        raise ConfigError("domain mask selects no lattice points")
    f = check_grid(params, f)
    if not np.all(np.isfinite(f)):
        raise ConfigError("right-hand side contains non-finite values")
    if isinstance(kernel, SincLaplacian):
        op = kernel
    else:
        op = SincLaplacian(kernel if kernel is not None else get_kernel(params, rule, cache=cache))
    if op.params != params:
        raise ConfigError("kernel parameters do not match the problem")
    report = cg_solve(op.apply, np.where(mask, f, 0.0), mask, cfg)
    report.info.update(dofs=int(mask.sum()), quadrature=op.kernel.quadrature_id)
    return report


def exact_ball_solution(params: ProblemParams, center=DISC_CENTER,
                        radius: float = DISC_RADIUS) -> np.ndarray:
    """Lattice samples of the solution to ``(-Delta)^s u = 1`` on a ball.

    ``u(x) = r^{2s} C_ball(d, s) (1 - |x - c|^2 / r^2)^s`` inside, zero outside.
    """
    c = check_ball(params.d, center, radius)
    rho2 = distance_squared(params, c) / radius**2
    inside = rho2 < 1
    amp = radius ** (2 * params.s) * c_ball(params.d, params.s)
    return np.where(inside, amp * np.power(np.where(inside, 1 - rho2, 0.0), params.s), 0.0)


def fit_rate(ns, errors) -> float | None:
    """Negated least-squares slope of ``log2(error)`` against ``log2(N)``.

    With five or more points the two coarsest are left out.
    """
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if ns.size >= 5:
        ns, errors = ns[2:], errors[2:]
    if ns.size < 2:
        return None
    slope = np.polyfit(np.log2(ns), np.log2(errors), 1)[0]
    return float(-slope)


@dataclass
class StudyRow:
    s: float
    N: int
    error: float
    iterations: int
    rate: float | None = None


def _check_levels(n_list):
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ConfigError("N-list must be strictly ascending")
    if any(n & (n - 1) for n in n_list):
        raise ConfigError("N-list entries must be powers of two")
    return n_list


def convergence_study(d: int, s_list, n_list, geometry: str = "disc",
                      rule: QuadratureRule | None = None, cfg: CgConfig = CgConfig(),
                      radius: float = DISC_RADIUS, cache: bool = True,
                      progress: Callable[[str], None] | None = None) -> list[StudyRow]:
    """L2 errors and fitted convergence rates of the constant right-hand-side problem.

    ``geometry="disc"`` compares against the analytic ball solution;
    ``geometry="lshape"`` (2d only) compares each level against the finest
    level in ``n_list``, read on the coarse sublattice.
    """
    n_list = _check_levels(n_list)
    if geometry not in ("disc", "lshape"):
        raise ConfigError(f"unknown geometry {geometry!r}")
    if geometry == "lshape" and d != 2:
        raise ConfigError("the L-shape geometry is two-dimensional")
    rows: list[StudyRow] = []
    for s in s_list:
        block: list[StudyRow] = []
        sols = {}
        for N in n_list:
            p = ProblemParams(d, N, float(s))
            if geometry == "disc":
                mask = make_mask(p, "disc", center=DISC_CENTER, radius=radius)
            else:
                mask = make_mask(p, "lshape")
            rep = solve_dirichlet(p, mask, np.ones(p.shape), rule, cfg, cache=cache)
            if not rep.converged:
                raise NumericalError(f"CG did not converge for d={d}, N={N}, s={s}")
            if geometry == "disc":
                err = norm_l2(rep.solution - exact_ball_solution(p, DISC_CENTER, radius))
                block.append(StudyRow(float(s), N, err, rep.iterations))
            else:
                sols[N] = (rep.solution, rep.iterations)
            if progress:
                progress(f"s={s} N={N} iterations={rep.iterations}")
        if geometry == "lshape":
            fine_N = n_list[-1]
            fine = sols[fine_N][0]
            for N in n_list[:-1]:
                ref = fine[(slice(None, None, fine_N // N),) * d]
                block.append(StudyRow(float(s), N, norm_l2(sols[N][0] - ref), sols[N][1]))
        rate = fit_rate([r.N for r in block], [r.error for r in block])
        for r in block:
            r.rate = rate
        rows.extend(block)
    return rows


def format_float(x: float | None) -> str:
    return "" if x is None else f"{x:.17g}"


def study_csv(rows: list[StudyRow], timing: str | None = None) -> str:
    """CSV text with header ``N,error,rate``; one ``# s=...`` comment per exponent."""
    buf = io.StringIO()
    buf.write("N,error,rate\n")
    w = csv.writer(buf, lineterminator="\n")
    current = None
    for r in rows:
        if r.s != current:
            buf.write(f"# s={r.s:.17g}\n")
            current = r.s
        w.writerow([r.N, format_float(r.error), format_float(r.rate)])
    if timing:
        buf.write(f"# timing: {timing}\n")
    return buf.getvalue()
