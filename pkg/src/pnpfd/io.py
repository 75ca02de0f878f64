"""CSV writers for diagnostics, field snapshots and convergence reports.

Floats are written with ``repr`` (shortest round-trip decimal) and rows come
out in a fixed order, so identical runs give byte-identical files.

Headers:

* diagnostics: ``t``, then ``mass_<s>, mass_rel_err_<s>, min_conc_<s>`` per
  species in run order, then ``energy, diss_charge, diss_x, diss_y,
  energy_residual``
* field: ``j, k, x, y, value`` with ``j`` outer and ``k`` inner, 1-based
* convergence: ``variable, resolution, l2_err, linf_err, order`` where
  ``order`` is the L2 order and is empty on the coarsest row
"""
from __future__ import annotations

import csv
import os
from pathlib import Path
from typing import Sequence

from .diagnostics import StepDiagnostics
from .grid import Field
from .mms import ConvergenceReport

__all__ = [
    "diagnostics_header",
    "write_diagnostics_csv",
    "write_field_csv",
    "write_convergence_csv",
    "SnapshotWriter",
]

CONVERGENCE_HEADER = ("variable", "resolution", "l2_err", "linf_err", "order")
FIELD_HEADER = ("j", "k", "x", "y", "value")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, str)):
        return str(x)
    return repr(float(x))


def diagnostics_header(species_names: Sequence[str]) -> list[str]:
    cols = ["t"]
    for name in species_names:
        cols += [f"mass_{name}", f"mass_rel_err_{name}", f"min_conc_{name}"]
    return cols + ["energy", "diss_charge", "diss_x", "diss_y", "energy_residual"]


def write_diagnostics_csv(path, records: Sequence[StepDiagnostics], stride: int = 1) -> Path:
    """Write every ``stride``-th record; the last record is always included."""
    path = Path(path)
    if not records:
        raise ValueError("no diagnostics to write")
    names = list(records[0].masses)
    chosen = [r for i, r in enumerate(records) if i % stride == 0]
    if chosen[-1] is not records[-1]:
        chosen.append(records[-1])
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(diagnostics_header(names))
        for r in chosen:
            row = [_fmt(r.t)]
            for name in names:
                row += [_fmt(r.masses[name]), _fmt(r.mass_rel_err[name]), _fmt(r.min_conc[name])]
            row += [_fmt(v) for v in (r.energy, r.diss_charge, r.diss_x, r.diss_y, r.energy_residual)]
            w.writerow(row)
    return path


def write_field_csv(path, field: Field) -> Path:
    path = Path(path)
    grid = field.grid
    xs, ys = grid.x, grid.y
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIELD_HEADER)
        for j in range(grid.nx):
            for k in range(grid.ny):
                w.writerow([j + 1, k + 1, _fmt(xs[j]), _fmt(ys[k]), _fmt(field.values[j, k])])
    return path


def write_convergence_csv(path, report: ConvergenceReport) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CONVERGENCE_HEADER)
        for r in report.rows:
            w.writerow([r.variable, _fmt(r.resolution), _fmt(r.l2_err), _fmt(r.linf_err), _fmt(r.order)])
    return path


class SnapshotWriter:
    """Writes ``<variable>_<step>.csv`` files plus an index ``snapshots.csv`` (step, t, variable, file)."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._index = []

    def write(self, name: str, field: Field, step: int, t: float) -> Path:
        fname = f"{name}_{step:06d}.csv"
        write_field_csv(self.directory / fname, field)
        self._index.append((step, t, name, fname))
        return self.directory / fname

    def write_state(self, state) -> None:
        for s in state.species:
            self.write(s.name, s.conc, state.m, state.t)
        self.write("phi", state.phi, state.m, state.t)

    def close(self) -> Path:
        path = self.directory / "snapshots.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "t", "variable", "file"])
            for step, t, name, fname in self._index:
                w.writerow([step, _fmt(t), name, fname])
        return path


def output_directory(configured: str) -> Path:
    """``PNPFD_OUTPUT_DIR`` overrides the configured directory."""
    return Path(os.environ.get("PNPFD_OUTPUT_DIR", configured))
