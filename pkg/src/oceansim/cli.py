"""Command line entry point.

Exit codes: 0 success, 2 configuration error, 3 mesh error, 4 non-finite
simulation state, 5 I/O error. Failures print ``ERROR <code> <context>`` on
stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from oceansim import __version__
from oceansim.config import Scenario, bundled_scenario, load_scenario
from oceansim.errors import ConfigError, MeshError, NumericBlowUp
from oceansim.parallel import set_threads

EXIT_OK, EXIT_CONFIG, EXIT_MESH, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4, 5


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="scenario TOML file or bundled scenario name")
    p.add_argument("--seed", type=_u64, help="override the scenario seed")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--threads", type=_positive_int, default=1, help="worker threads (results do not depend on it)")
    p.add_argument("--precision", choices=("f32", "f64"), default="f64")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="oceansim", description="Spectral ocean and floating body simulator.")
    parser.add_argument("--version", action="version", version=f"oceansim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="run a scenario")
    run.add_argument("--report-timing", action="store_true", help="write per-stage timing to timing.csv")
    run.add_argument("--steps", type=_positive_int, help="override the number of steps")

    bench = sub.add_parser("bench", help="numerical studies")
    bsub = bench.add_subparsers(dest="study", required=True)
    b = bsub.add_parser("interp-accuracy", parents=[common], help="velocity interpolation error vs direct sum")
    b.add_argument("--wind", type=float, default=20.0)
    b.add_argument("--N", type=int, default=128)
    b.add_argument("--points", type=_positive_int, default=10000)
    b.add_argument("--d", type=int, nargs="+", default=[4, 8, 16])
    b = bsub.add_parser("convergence", parents=[common], help="height retrieval iterations vs wind")
    b.add_argument("--N", type=int, default=256)
    b.add_argument("--points", type=_positive_int, default=1000)
    b.add_argument("--domain", type=float, default=1e4)
    b.add_argument("--tol", type=float, default=0.01)
    b.add_argument("--wind-min", type=float, default=0.1)
    b.add_argument("--wind-max", type=float, default=35.0)
    b.add_argument("--wind-step", type=float, default=0.5)
    b = bsub.add_parser("normalization", parents=[common], help="Monte-Carlo directional normalization")
    b.add_argument("--samples", type=_positive_int, default=10000)
    b = bsub.add_parser("degree-study", parents=[common], help="slice count selection J(d)")
    b.add_argument("--wind", type=float, default=20.0)
    b.add_argument("--N", type=int, default=128)
    b.add_argument("--points", type=_positive_int, default=2000)
    b.add_argument("--d", type=int, nargs="+", default=list(range(2, 17)))

    v = sub.add_parser("validate-mesh", parents=[common], help="check OBJ meshes")
    v.add_argument("meshes", nargs="*", help="OBJ files (default: every mesh in --config)")

    d = sub.add_parser("dump-surface", parents=[common], help="write composed surface fields at time t")
    d.add_argument("--t", type=float, default=0.0)
    d.add_argument("--csv", action="store_true", help="also write CSV files")
    return parser


class CliError(Exception):
    def __init__(self, code: int, context: str):
        super().__init__(context)
        self.code = code


def _scenario(args, required: bool = True) -> Scenario | None:
    if args.config is None:
        if required:
            raise ConfigError("--config is required")
        return None
    path = Path(args.config)
    if not path.exists() and not path.suffix:
        path = bundled_scenario(args.config)
    sc = load_scenario(path)
    if args.seed is not None:
        sc = sc.with_seed(args.seed)
    return sc


def _spectrum(args, wind=None):
    from dataclasses import replace

    from oceansim.spectra import SpectrumParams

    sc = _scenario(args, required=False)
    params = sc.spectrum if sc is not None else SpectrumParams()
    if wind is not None and sc is None:
        params = replace(params, wind_speed=wind)
    seed = args.seed if args.seed is not None else params.rng_seed
    return replace(params, rng_seed=seed), seed


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot create {out}: {exc.strerror}") from exc
    return out


def cmd_run(args) -> int:
    from oceansim.output import run_scenario

    sc = _scenario(args)
    out = _out_dir(args)
    res = run_scenario(sc, out, precision=args.precision, report_timing=args.report_timing, n_steps=args.steps)
    if sc.output.figures and not args.no_figures:
        from oceansim.report import run_figures

        res.files += run_figures(out)
    print(f"{sc.name}: {res.steps} steps, {len(sc.bodies)} bodies -> {out}")
    if args.report_timing:
        print("stage       total_s  per_step_ms")
        for stage, total, per in res.timing:
            print(f"{stage:<10} {total:8.3f} {per:12.3f}")
    return EXIT_OK


def cmd_bench(args) -> int:
    from oceansim import bench

    out = _out_dir(args)
    figures = not args.no_figures
    if figures:
        from oceansim import report
    if args.study == "interp-accuracy":
        params, seed = _spectrum(args, args.wind)
        res = bench.interp_accuracy(params, N=args.N, n_points=args.points, d_values=args.d, seed=seed)
        bench.write_interp_accuracy(res, out)
        if figures:
            report.interp_figure(res, out)
        for row, tim in zip(res.rows, res.timing):
            print(f"d={row[0]:<3} {row[1]:<8} {row[2]:<7} mean={row[3]:.6f} p95={row[4]:.6f} "
                  f"build={tim[3]:.2f} ms query={tim[4]:.1f} ns")
    elif args.study == "convergence":
        params, seed = _spectrum(args)
        winds = np.round(np.arange(args.wind_min, args.wind_max + 1e-9, args.wind_step), 10)
        res = bench.convergence(winds, n_points=args.points, domain=args.domain, tol=args.tol, N=args.N,
                                seed=seed, base=params)
        bench.write_convergence(res, out)
        if figures:
            report.convergence_figure(res, out)
        print(f"winds {winds[0]}..{winds[-1]}: mean iterations {res.mean_iters.min():.3f}..{res.mean_iters.max():.3f}, "
              f"min fraction within {res.n_iter} = {res.frac_within.min():.3f}")
    elif args.study == "normalization":
        seed = args.seed if args.seed is not None else 0
        res = bench.normalization(args.samples, seed)
        bench.write_normalization(res, out)
        if figures:
            report.normalization_figure(res, out)
        print(f"polynomial factor mean {res.polynomial_mean:.6f}")
        print(f"quadrature factor mean {res.quadrature_mean:.6f}")
    else:
        params, seed = _spectrum(args, args.wind)
        res = bench.run_degree_study(params, N=args.N, n_points=args.points, d_values=args.d, seed=seed)
        bench.write_degree_study(res, out)
        if figures:
            report.degree_figure(res, out)
        for d, a, p, j in zip(res.degrees, res.accuracy, res.runtime, res.objective):
            print(f"d={d:<3} A={a:.6f} m/s P={p:.4f} s J={j:.4f}")
        print(f"best d = {res.best_degree}")
    return EXIT_OK


def cmd_validate_mesh(args) -> int:
    from oceansim.meshes import load_obj

    paths = [Path(p) for p in args.meshes]
    if not paths:
        sc = _scenario(args, required=False)
        if sc is None:
            raise ConfigError("give mesh files or --config")
        paths = [sc.resolve(b.mesh) for b in sc.bodies if b.mesh != "box"]
    for p in paths:
        m = load_obj(p)
        print(f"{p}: ok, {len(m.vertices)} vertices, {len(m.triangles)} triangles, "
              f"volume {m.volume:.6g} m3, area {m.total_area:.6g} m2, degenerate {m.n_degenerate}")
    return EXIT_OK


def cmd_dump_surface(args) -> int:
    from oceansim.surface import (FIELD_NAMES, build_cascades, composed_grid, generate_maps,
                                  write_heightfield, write_heightfield_csv)

    sc = _scenario(args, required=False) or Scenario()
    if args.seed is not None and args.config is None:
        sc = sc.with_seed(args.seed)
    o = sc.ocean
    dtype = np.complex64 if args.precision == "f32" else np.complex128
    cascades = build_cascades(sc.spectrum, N=o.N, lengths=o.lengths, cutoffs=o.cutoffs,
                              choppiness=o.choppiness, dtype=dtype)
    maps = generate_maps(cascades, args.t)
    fields = composed_grid(maps, o.n_iter, [n for n in FIELD_NAMES if n != "h"])
    out = _out_dir(args)
    for name, data in fields.items():
        write_heightfield(out / f"surface_{name}.abhf", data, t=args.t)
        if args.csv:
            write_heightfield_csv(out / f"surface_{name}.csv", data, maps.lengths[0])
    print(f"wrote {len(fields)} fields at t={args.t} to {out}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "bench": cmd_bench, "validate-mesh": cmd_validate_mesh, "dump-surface": cmd_dump_surface}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        set_threads(args.threads)
        return COMMANDS[args.command](args)
    except CliError as exc:
        code, msg = exc.code, str(exc)
    except MeshError as exc:
        code, msg = EXIT_MESH, str(exc)
    except ConfigError as exc:
        code, msg = EXIT_CONFIG, str(exc)
    except NumericBlowUp as exc:
        code, msg = EXIT_NUMERIC, str(exc)
    except OSError as exc:
        code, msg = EXIT_IO, f"{exc.filename or ''}: {exc.strerror or exc}".strip(": ")
    print(f"ERROR {code} {' '.join(msg.split())}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
