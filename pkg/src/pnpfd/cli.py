"""Command line: ``pnpfd {run,mms-space,mms-time,selftest}``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .io import SnapshotWriter, output_directory, write_convergence_csv, write_diagnostics_csv
from .linsolve import SolverOptions
from .mms import mms_space_study, mms_time_study
from .stepper import StepFailure, run

logger = logging.getLogger("pnpfd")


def _solver(cfg, study: bool) -> SolverOptions:
    method = cfg.solver.method
    if study and method == "auto":
        method = "lagged"
    return SolverOptions(method=method, tol=cfg.solver.tol)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    outdir = output_directory(cfg.output.directory)
    outdir.mkdir(parents=True, exist_ok=True)
    stride = cfg.output.snapshot_stride
    snaps = SnapshotWriter(outdir / "fields") if stride > 0 else None

    def on_step(state, _diag):
        if snaps is not None and state.m % stride == 0:
            snaps.write_state(state)

    try:
        final, records = run(cfg, on_step=on_step)
    except StepFailure as exc:
        write_diagnostics_csv(outdir / "diagnostics.csv", exc.diagnostics, cfg.output.diagnostics_stride)
        if snaps is not None:
            snaps.write_state(exc.state)
            snaps.close()
        print(f"error: {exc}", file=sys.stderr)
        return 3
    if snaps is not None:
        if final.m % stride != 0:
            snaps.write_state(final)
        snaps.close()
    path = write_diagnostics_csv(outdir / "diagnostics.csv", records, cfg.output.diagnostics_stride)
    last = records[-1]
    print(f"t={final.t:.6g} steps={final.m} energy={last.energy:.6e} wrote {path}")
    return 0


def cmd_mms_space(args) -> int:
    cfg = load_config(args.config)
    report = mms_space_study(cfg.study.meshes, cfg.dt, cfg.T, solver=_solver(cfg, True))
    outdir = output_directory(cfg.output.directory)
    outdir.mkdir(parents=True, exist_ok=True)
    path = write_convergence_csv(outdir / "convergence_space.csv", report)
    print(report.format())
    print(f"wrote {path}")
    return 0


def cmd_mms_time(args) -> int:
    cfg = load_config(args.config)
    report = mms_time_study(
        cfg.nx, cfg.study.dts, cfg.T, cfg.study.reference, cfg.study.ref_factor, solver=_solver(cfg, True)
    )
    outdir = output_directory(cfg.output.directory)
    outdir.mkdir(parents=True, exist_ok=True)
    path = write_convergence_csv(outdir / "convergence_time.csv", report)
    print(report.format())
    print(f"wrote {path}")
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    return 0 if run_selftest() else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pnpfd", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_ in (
        ("run", cmd_run, "time-dependent run; writes diagnostics and field snapshots"),
        ("mms-space", cmd_mms_space, "spatial convergence study with manufactured sources"),
        ("mms-time", cmd_mms_time, "temporal convergence study with manufactured sources"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="JSON run configuration")
        p.set_defaults(func=func)
    p = sub.add_parser("selftest", help="invariant checks on small grids")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
