"""
Command-line entry point: `membrane-fsi <subcommand> [options]`.

Exit codes: 0 success, 1 numerical failure (blow-up, non-convergence,
lost contour), 2 configuration error.

numpy and the numerical kernels are imported only after the thread
variables are exported, so BLAS and OpenMP pick up `--threads`.
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import yaml

from .core.exceptions import ConfigurationError, NumericalFailure
from .core.settings import get_settings

logger = logging.getLogger("backend.cli")

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2

THREAD_VARIABLES = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")
SAMPLE_RANGE = (1e-4, 1e4)
SAMPLE_SEED = 0
LATTICE_AXIS = (0.1, 10.0)
LATTICE_DX = 0.05


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="YAML case file")
    parser.add_argument("--out", type=Path, default=None, help="Output directory")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="Override one config key (repeatable)")
    parser.add_argument("--threads", type=int, default=None, help="BLAS/OpenMP threads")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--quiet", action="store_true", help="Warnings and errors only")
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="membrane-fsi",
        description="Eulerian membrane FSI solver: stability, verification and shear benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stability1d", help="1D Von Neumann sweep and explicit-bound classification")
    _common(p)
    p.add_argument("--sweep", choices=["default", "none"], default="default")
    p.add_argument("--samples", type=int, default=200, help="Random parameter tuples")
    p.add_argument("--thetas", type=int, default=64, help="θ values per tuple")
    p.add_argument("--lattice", type=int, default=0,
                   help="Points per axis of the explicit-bound lattice (0 skips)")

    p = sub.add_parser("ms-convergence", help="Manufactured-solution grid convergence")
    _common(p)
    p.add_argument("--meshes", type=int, nargs="+", default=[20, 40, 80, 160, 320])

    p = sub.add_parser("shear", help="Run one shear-flow case")
    _common(p)
    p.add_argument("--no-snapshots", action="store_true")

    p = sub.add_parser("dt-search", help="Maximum stable Δt by bisection")
    _common(p)
    p.add_argument("--scheme", default=None, help="Explicit | SemiImplicit (default: config)")
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--rel-tol", type=float, default=0.1)

    p = sub.add_parser("contour", help="Contour of a φ snapshot, optional Hausdorff comparison")
    _common(p)
    p.add_argument("snapshot", type=Path, help="φ snapshot file")
    p.add_argument("--compare", type=Path, default=None, help="x,y contour CSV to compare with")
    return parser


def export_threads(threads: int) -> None:
    """Set the BLAS/OpenMP thread variables; effective only before numpy loads."""
    if "numpy" in sys.modules:
        logger.debug("numpy already loaded; %d threads apply to child processes only", threads)
    for name in THREAD_VARIABLES:
        os.environ[name] = str(threads)


def _setup(args: argparse.Namespace) -> Path:
    settings = get_settings()
    threads = args.threads or settings.threads
    export_threads(threads)
    from .core.utils import configure_logging

    level = "DEBUG" if args.verbose else "WARNING" if args.quiet else settings.log_level
    configure_logging(level)
    out = args.out or settings.output_dir
    out.mkdir(parents=True, exist_ok=True)
    invocation = {key: (str(value) if isinstance(value, Path) else value)
                  for key, value in vars(args).items()}
    invocation["threads"] = threads
    (out / "invocation.yaml").write_text(yaml.safe_dump(invocation, sort_keys=False))
    return out


def _load(args: argparse.Namespace, out: Path):
    from .core.config import dump_config, load_config

    config = load_config(args.config, args.overrides)
    dump_config(config, out / "effective_config.yaml")
    return config


def _dump_effective(out: Path, values: dict) -> Path:
    """effective_config.yaml for commands that do not take a case file."""
    path = out / "effective_config.yaml"
    path.write_text(yaml.safe_dump(values, sort_keys=False))
    return path


def cmd_stability1d(args: argparse.Namespace, out: Path) -> int:
    import numpy as np

    from .core.models import Model1DParams
    from .core.report import write_csv
    from .core.stability1d import stability_table, sweep_spectral_radius
    from .core.utils import format_kv, log_uniform

    _dump_effective(out, {
        "sweep": args.sweep, "samples": args.samples, "thetas": args.thetas,
        "sample_range": list(SAMPLE_RANGE), "sample_seed": SAMPLE_SEED,
        "lattice": args.lattice, "lattice_axis": list(LATTICE_AXIS), "lattice_dx": LATTICE_DX,
    })
    if args.sweep == "default":
        rng = np.random.default_rng(SAMPLE_SEED)
        values = log_uniform(rng, *SAMPLE_RANGE, size=(args.samples, 5))
        params = [Model1DParams(dt=v[0], dx=v[1], mu=v[2], K=v[3], eps=v[4]) for v in values]
        thetas = np.linspace(0.0, 2.0 * np.pi, args.thetas, endpoint=False)
        frame = sweep_spectral_radius(params, thetas)
        write_csv(frame, out / "spectral_radius.csv")
        print(format_kv("sweep", len(frame), max_radius=float(frame["rho_semi_implicit"].max())))
    if args.lattice:
        axis = np.geomspace(*LATTICE_AXIS, args.lattice)
        params = [Model1DParams(mu=mu, K=k, eps=eps, dx=LATTICE_DX, dt=1.0)
                  for mu in axis for k in axis for eps in axis]
        table = stability_table(params)
        write_csv(table, out / "explicit_bound.csv")
        print(format_kv("lattice", len(table), min_ratio=float(table["ratio"].min()),
                        max_ratio=float(table["ratio"].max())))
    return EXIT_OK


def cmd_ms_convergence(args: argparse.Namespace, out: Path) -> int:
    from .core.utils import format_kv
    from .core.verification import MsCase, run_convergence

    case = MsCase()
    _dump_effective(out, {
        "meshes": list(args.meshes), "u": str(case.u1), "m": str(case.m_xx), "mass": case.mass,
        "solver": "splu",
    })
    frame = run_convergence(args.meshes, out_dir=out)
    for _, row in frame.iterrows():
        print(format_kv("elem", int(row["elem"]), error=float(row["error"]), order=float(row["order"])))
    return EXIT_OK


def cmd_shear(args: argparse.Namespace, out: Path) -> int:
    from .core.bench import run, summarize_runs
    from .core.utils import format_kv

    config = _load(args, out)
    report = run(config, out, snapshots=not args.no_snapshots)
    summarize_runs([report.summary], out)
    s = report.summary
    print(format_kv("run", s.scheme.value, dt=s.dt, steps=s.steps, t=s.t, area_drift=s.area_drift,
                    tangential_speed=s.tangential_speed))
    return EXIT_OK


def cmd_dt_search(args: argparse.Namespace, out: Path) -> int:
    from .core.bench import max_stable_dt_search
    from .core.models import SchemeMode
    from .core.utils import format_kv

    config = _load(args, out)
    try:
        scheme = SchemeMode(args.scheme) if args.scheme else config.scheme
    except ValueError as exc:
        raise ConfigurationError(f"unknown scheme '{args.scheme}'") from exc
    found = max_stable_dt_search(config, scheme, args.lo, args.hi, args.rel_tol)
    (out / "max_dt.yaml").write_text(yaml.safe_dump({"scheme": scheme.value, "max_dt": found}))
    print(format_kv("max_dt", repr(found), scheme=scheme.value))
    return EXIT_OK


def cmd_contour(args: argparse.Namespace, out: Path) -> int:
    from .core.contour import ContourPolyline, contour_from_array, hausdorff_distance
    from .core.exceptions import ContourError
    from .core.grid import read_snapshot
    from .core.report import read_contour_csv, write_contour_csv
    from .core.utils import format_kv

    if not args.snapshot.is_file():
        raise ConfigurationError(f"snapshot not found: {args.snapshot}")
    grid, t, values = read_snapshot(args.snapshot)
    lines = contour_from_array(values, grid)
    if len(lines) != 1 or not lines[0].closed:
        raise ContourError(len(lines), all(line.closed for line in lines))
    line = lines[0]
    write_contour_csv(line.x, line.y, out / f"{args.snapshot.stem}_contour.csv")
    fields = {"t": t, "area": line.enclosed_area}
    if args.compare is not None:
        x, y = read_contour_csv(args.compare)
        fields["hausdorff"] = hausdorff_distance(line, ContourPolyline(x, y))
    print(format_kv("contour", len(line.x), **fields))
    return EXIT_OK


COMMANDS = {
    "stability1d": cmd_stability1d,
    "ms-convergence": cmd_ms_convergence,
    "shear": cmd_shear,
    "dt-search": cmd_dt_search,
    "contour": cmd_contour,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out = _setup(args)
        return COMMANDS[args.command](args, out)
    except ConfigurationError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        logger.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
