"""Command-line interface: ``sincfraclap <subcommand> ...``.

Exit codes: 0 success, 2 usage or configuration error, 3 I/O or file-format
error, 4 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import subprocess
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import apps, io
from .errors import ConfigError, FormatError, GeometryError, NumericalError, ShapeError
from .grid import ProblemParams, make_mask, read_mask
from .kernel import build_kernel, cache_path, default_rule, get_kernel, load_kernel, parse_rule, save_kernel
from .operators import SincLaplacian
from .solver import CgConfig, convergence_study, format_float, solve_dirichlet, study_csv
from .transform import set_workers

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4


class NotConverged(Exception):
    pass


def version_string() -> str:
    """``git describe`` of the source tree when available, else the installed version."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    try:
        return "v" + metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


class Manifest:
    """Collects resolved parameters and per-phase timings; written as JSON next to outputs."""

    def __init__(self, subcommand: str, params: dict):
        self.data = {"subcommand": subcommand, "parameters": params, "kernel_cache": None,
                     "timings": {}, "version": version_string()}

    def time(self, phase: str):
        manifest = self

        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                manifest.data["timings"][phase] = time.perf_counter() - self.t0

        return _Timer()

    def timing_line(self) -> str:
        return " ".join(f"{k}={v:.6f}s" for k, v in self.data["timings"].items())

    def write_beside(self, path) -> None:
        Path(f"{path}.manifest.json").write_text(json.dumps(self.data, indent=2, default=str) + "\n")


# ---------------------------------------------------------------- helpers


def _params(args) -> ProblemParams:
    return ProblemParams(args.dim, args.n, args.s)


def _kernel_from_args(args, m: Manifest):
    """Load ``--kernel`` or build/look up the kernel described by the inline flags."""
    if getattr(args, "kernel", None):
        with m.time("kernel"):
            k = load_kernel(args.kernel)
        m.data["kernel_cache"] = str(args.kernel)
        return k
    if args.dim is None or args.n is None or args.s is None:
        raise ConfigError("give --kernel or all of --dim, --n and --s")
    p = _params(args)
    rule = parse_rule(args.quad, p.d) if args.quad else default_rule(p.d)
    with m.time("kernel"):
        k = get_kernel(p, rule, cache=not args.no_cache)
    if not args.no_cache:
        m.data["kernel_cache"] = str(cache_path(p, rule))
    return k


def _parse_domain(spec: str, p: ProblemParams):
    kind, _, arg = spec.partition(":")
    if kind == "cube":
        return make_mask(p, "cube")
    if kind == "disc":
        return make_mask(p, "disc", radius=float(arg) if arg else 0.45)
    if kind == "lshape":
        return make_mask(p, "lshape")
    if kind == "mask":
        if not arg:
            raise ConfigError("mask domain needs a file, e.g. mask:domain.bin")
        mask = read_mask(arg)
        if mask.shape != p.shape:
            raise FormatError(f"mask has shape {mask.shape}, expected {p.shape}")
        return mask
    raise ConfigError(f"unknown domain {spec!r}; use cube, disc:r, lshape or mask:file")


def _parse_rhs(spec: str, p: ProblemParams) -> np.ndarray:
    if spec.startswith("const:"):
        try:
            v = float(spec[6:])
        except ValueError as exc:
            raise ConfigError(f"bad constant right-hand side {spec!r}") from exc
        return np.full(p.shape, v)
    f = io.read_grid(spec)
    if f.shape != p.shape:
        raise FormatError(f"right-hand side has shape {f.shape}, expected {p.shape}")
    return f


def _float_list(text: str) -> list[float]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if "/" in tok:
            a, b = tok.split("/")
            out.append(float(a) / float(b))
        else:
            out.append(float(tok))
    return out


# ---------------------------------------------------------------- subcommands


def cmd_kernel(args) -> int:
    p = _params(args)
    rule = parse_rule(args.quad, p.d)
    m = Manifest("kernel", {"dim": p.d, "n": p.N, "s": p.s, "quad": rule.id})
    with m.time("build"):
        k = build_kernel(p, rule)
    with m.time("write"):
        save_kernel(k, args.out)
    digest = hashlib.sha256(Path(args.out).read_bytes()).hexdigest()
    m.data["kernel_cache"] = str(args.out)
    m.data["sha256"] = digest
    m.write_beside(args.out)
    print(f"built {rule.id} kernel d={p.d} N={p.N} s={p.s:g} in {m.data['timings']['build']:.3f} s")
    print(f"sha256 {digest}")
    return EXIT_OK


def cmd_apply(args) -> int:
    m = Manifest("apply", {"in": args.input})
    u = io.read_grid(args.input)
    k = _kernel_from_args(args, m)
    m.data["parameters"].update(dim=k.params.d, n=k.params.N, s=k.params.s, quad=k.quadrature_id)
    if u.shape != k.params.shape:
        raise FormatError(f"input grid has shape {u.shape}, expected {k.params.shape}")
    with m.time("apply"):
        f = SincLaplacian(k).apply(u)
    io.write_grid(args.out, f)
    m.write_beside(args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    m = Manifest("solve", {})
    k = _kernel_from_args(args, m)
    p = k.params
    cfg = CgConfig(tol=args.tol, max_iter=args.max_iter)
    mask = _parse_domain(args.domain, p)
    f = _parse_rhs(args.rhs, p)
    m.data["parameters"].update(dim=p.d, n=p.N, s=p.s, quad=k.quadrature_id, domain=args.domain,
                                rhs=args.rhs, tol=cfg.tol, max_iter=cfg.max_iter)
    with m.time("solve"):
        rep = solve_dirichlet(p, mask, f, cfg=cfg, kernel=k)
    print(f"iterations {rep.iterations} residual {rep.final_residual:.3e} "
          f"converged {rep.converged} dofs {rep.info['dofs']}")
    if args.out_grid:
        io.write_grid(args.out_grid, rep.solution)
        m.write_beside(args.out_grid)
    if args.out_report:
        with open(args.out_report, "w") as fh:
            fh.write("iterations,final_residual,converged,dofs,quadrature\n")
            fh.write(f"{rep.iterations},{format_float(rep.final_residual)},{int(rep.converged)},"
                     f"{rep.info['dofs']},{rep.info['quadrature']}\n")
            fh.write(f"# timing: {m.timing_line()}\n")
        m.write_beside(args.out_report)
    if not rep.converged:
        raise NotConverged(f"CG stopped after {rep.iterations} iterations without converging")
    return EXIT_OK


def cmd_bench(args) -> int:
    s_list = _float_list(args.s_list)
    try:
        n_list = [int(x) for x in args.n_list.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad --n-list {args.n_list!r}") from exc
    if args.geometry == "lshape" and args.dim != 2:
        raise ConfigError("the lshape geometry is two-dimensional")
    rule = parse_rule(args.quad, args.dim) if args.quad else None
    m = Manifest("bench", {"dim": args.dim, "s_list": s_list, "n_list": n_list,
                           "geometry": args.geometry, "tol": args.tol,
                           "quad": (rule or default_rule(args.dim)).id})
    with m.time("study"):
        rows = convergence_study(args.dim, s_list, n_list, args.geometry, rule,
                                 CgConfig(tol=args.tol, max_iter=args.max_iter),
                                 cache=not args.no_cache,
                                 progress=(lambda msg: print(msg, file=sys.stderr)) if args.verbose else None)
    text = study_csv(rows, m.timing_line())
    if args.out:
        Path(args.out).write_text(text)
        m.write_beside(args.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_allen_cahn(args) -> int:
    p = ProblemParams(1, args.n, args.s)
    snaps = tuple(_float_list(args.snapshots)) if args.snapshots else ()
    cfg = apps.AllenCahnConfig(params=p, eps=args.eps, tau=args.tau, t_end=args.t_end,
                               backend=args.backend, record_every=args.record_every,
                               snapshot_times=snaps)
    m = Manifest("allen-cahn", {"n": p.N, "s": p.s, "eps": cfg.eps, "tau": cfg.tau,
                                "t_end": cfg.t_end, "backend": cfg.backend,
                                "record_every": cfg.record_every, "snapshots": list(snaps)})
    with m.time("run"):
        res = apps.allen_cahn_run(cfg)
    io.write_time_series(args.out, res.times, res.mass, res.kink, m.timing_line())
    m.write_beside(args.out)
    for t, u in res.snapshots.items():
        path = Path(args.out).with_name(f"{Path(args.out).stem}_t{t:g}.grid")
        io.write_grid(path, u)
        m.write_beside(path)
    print(f"final mass {res.mass[-1]:.6g} at t={res.times[-1]:g}")
    return EXIT_OK


def cmd_denoise(args) -> int:
    g = io.read_pgm(args.input)
    cfg = apps.DenoiseConfig(s=args.s, alpha=args.alpha)
    m = Manifest("denoise", {"in": args.input, "s": cfg.s, "alpha": cfg.alpha,
                             "backend": args.backend, "n": g.shape[0]})
    report: dict = {}
    with m.time("solve"):
        u = apps.denoise(g, cfg, args.backend, report=report)
    fid, reg = apps.denoise_energies(u, g, cfg.s, cfg.alpha, args.backend)
    m.data["report"] = report
    m.data["energies"] = {"data_fidelity": fid, "regularizer": reg}
    io.write_pgm(args.out, u)
    m.write_beside(args.out)
    print(f"data-fidelity {fid:.17g}")
    print(f"regularizer {reg:.17g}")
    if not report.get("converged", True):
        raise NotConverged("CG did not converge")
    return EXIT_OK


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _add_kernel_flags(sp, required: bool):
    sp.add_argument("--dim", type=int, required=required)
    sp.add_argument("--n", type=int, required=required)
    sp.add_argument("--s", type=float, required=required, help="fractional exponent in (0, 1]")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sincfraclap", description="Sinc-basis fractional Laplacian toolkit.")
    ap.add_argument("--threads", type=int, default=None,
                    help="FFT worker threads (default: all CPUs)")
    ap.add_argument("--version", action="version", version=version_string())
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("kernel", help="precompute a convolution kernel file")
    _add_kernel_flags(sp, True)
    sp.add_argument("--quad", default="gl7", help="glN or uniform:K (default gl7)")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_kernel)

    sp = sub.add_parser("apply", help="apply the operator to a grid file")
    sp.add_argument("--kernel")
    _add_kernel_flags(sp, False)
    sp.add_argument("--quad")
    sp.add_argument("--no-cache", action="store_true")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_apply)

    sp = sub.add_parser("solve", help="solve the Dirichlet problem on a masked domain")
    sp.add_argument("--kernel", help="kernel file written by the kernel subcommand")
    _add_kernel_flags(sp, False)
    sp.add_argument("--quad")
    sp.add_argument("--no-cache", action="store_true")
    sp.add_argument("--domain", default="cube", help="cube, disc:r, lshape or mask:file")
    sp.add_argument("--rhs", default="const:1", help="const:v or a grid file")
    sp.add_argument("--tol", type=float, default=1e-8,
                    help="bound on mean(r**2), the unrooted residual functional")
    sp.add_argument("--max-iter", type=int, default=10_000)
    sp.add_argument("--out-grid")
    sp.add_argument("--out-report")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("bench", help="convergence study with fitted rates")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--s-list", required=True)
    sp.add_argument("--n-list", required=True)
    sp.add_argument("--geometry", choices=("disc", "lshape"), default="disc")
    sp.add_argument("--quad")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--max-iter", type=int, default=10_000)
    sp.add_argument("--no-cache", action="store_true")
    sp.add_argument("--verbose", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("allen-cahn", help="1d fractional Allen-Cahn evolution")
    sp.add_argument("--n", type=int, default=1024)
    sp.add_argument("--s", type=float, default=0.5)
    sp.add_argument("--eps", type=float, default=2e-3)
    sp.add_argument("--tau", type=float, default=1e-3)
    sp.add_argument("--t-end", type=float, default=40.0)
    sp.add_argument("--backend", choices=("periodic", "dirichlet"), default="periodic")
    sp.add_argument("--record-every", type=int, default=10)
    sp.add_argument("--snapshots", help="comma-separated times for grid dumps")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_allen_cahn)

    sp = sub.add_parser("denoise", help="fractional-regularized denoising of a PGM image")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--s", type=float, default=0.42)
    sp.add_argument("--alpha", type=float, default=20 * np.pi)
    sp.add_argument("--backend", choices=("periodic", "dirichlet"), default="dirichlet")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_denoise)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    set_workers(args.threads if args.threads else os.cpu_count())
    try:
        return args.func(args)
    except (ConfigError, GeometryError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NotConverged, NumericalError) as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
