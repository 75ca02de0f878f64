"""Manufactured-solution verification on the unit square.

Exact fields (all satisfy zero Neumann conditions on every edge)::

    p   = (3x^2 - 2x^3 + 3y^2 - 2y^3) e^{-t}
    n   = (g(x) + g(y)) e^{-t}
    phi = g(x) g(y) e^{-t},        g(s) = s^2 (1 - s)^2

They solve the forced system

    p_t = div(grad p + p grad phi) + f1
    n_t = div(grad n - n grad phi) + f2
    -lap phi = p - n + c

with the sources written out below.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import Field, make_grid, norm_inf, norm_l2
from .linsolve import GaugeSpec, SolverOptions
from .stepper import SimState, SourceSet, Species, Stepper, simulate, step_count

logger = logging.getLogger(__name__)

__all__ = [
    "ManufacturedCase",
    "POLYNOMIAL_CASE",
    "exact_p",
    "exact_n",
    "exact_phi",
    "sources",
    "order1",
    "order2",
    "ConvergenceRow",
    "ConvergenceReport",
    "mms_space_study",
    "mms_time_study",
]


def _g(s):
    return s ** 2 * (1 - s) ** 2


def _dg(s):
    return 2 * s - 6 * s ** 2 + 4 * s ** 3


def _d2g(s):
    return 2 - 12 * s + 12 * s ** 2


def _P(x, y):
    return 3 * x ** 2 - 2 * x ** 3 + 3 * y ** 2 - 2 * y ** 3


def _N(x, y):
    return _g(x) + _g(y)


def _Phi(x, y):
    return _g(x) * _g(y)


def exact_p(t, x, y):
    return _P(x, y) * np.exp(-t)


def exact_n(t, x, y):
    return _N(x, y) * np.exp(-t)


def exact_phi(t, x, y):
    return _Phi(x, y) * np.exp(-t)


def _lap_Phi(x, y):
    return _d2g(x) * _g(y) + _g(x) * _d2g(y)


def source_p(t, x, y):
    """``f1 = p_t - lap p - div(p grad phi)``."""
    e = np.exp(-t)
    Px, Py = 6 * x - 6 * x ** 2, 6 * y - 6 * y ** 2
    lapP = 12 - 12 * x - 12 * y
    Phix, Phiy = _dg(x) * _g(y), _g(x) * _dg(y)
    drift = Px * Phix + Py * Phiy + _P(x, y) * _lap_Phi(x, y)
    return -_P(x, y) * e - lapP * e - drift * e * e


def source_n(t, x, y):
    """``f2 = n_t - lap n + div(n grad phi)``."""
    e = np.exp(-t)
    Phix, Phiy = _dg(x) * _g(y), _g(x) * _dg(y)
    lapN = _d2g(x) + _d2g(y)
    drift = _dg(x) * Phix + _dg(y) * Phiy + _N(x, y) * _lap_Phi(x, y)
    return -_N(x, y) * e - lapN * e + drift * e * e


def source_charge(t, x, y):
    """``c = -lap phi - p + n``."""
    return (-_lap_Phi(x, y) - _P(x, y) + _N(x, y)) * np.exp(-t)


def sources(t, x, y):
    return source_p(t, x, y), source_n(t, x, y), source_charge(t, x, y)


@dataclass(frozen=True)
class ManufacturedCase:
    exact_p: Callable = exact_p
    exact_n: Callable = exact_n
    exact_phi: Callable = exact_phi
    f1: Callable = source_p
    f2: Callable = source_n
    c: Callable = source_charge

    def source_set(self) -> SourceSet:
        return SourceSet(species={"p": self.f1, "n": self.f2}, potential=self.c)

    def gauge(self, grid, pin_cell=(1, 1)) -> GaugeSpec:
        x, y = grid.center(*pin_cell)
        return GaugeSpec(pin_cell=pin_cell, value_at=lambda t: float(self.exact_phi(t, x, y)))

    def initial_species(self, grid, t=0.0) -> tuple[Species, Species]:
        return (
            Species("p", +1, grid.sample(lambda x, y: self.exact_p(t, x, y))),
            Species("n", -1, grid.sample(lambda x, y: self.exact_n(t, x, y))),
        )

    def exact_fields(self, grid, t) -> dict[str, Field]:
        return {
            "p": grid.sample(lambda x, y: self.exact_p(t, x, y)),
            "n": grid.sample(lambda x, y: self.exact_n(t, x, y)),
            "phi": grid.sample(lambda x, y: self.exact_phi(t, x, y)),
        }


POLYNOMIAL_CASE = ManufacturedCase()


def order1(err_h: float, err_h2: float) -> float:
    """Observed order from errors on meshes ``h`` and ``h/2``."""
    if not (err_h > 0 and err_h2 > 0):
        raise ValueError(f"errors must be positive, got {err_h}, {err_h2}")
    return float(np.log2(err_h / err_h2))


def order2(err_dt: float, err_dt2: float) -> float:
    """Observed order from errors with steps ``dt`` and ``dt/2``."""
    return order1(err_dt, err_dt2)


VARIABLES = ("p", "n", "phi")


@dataclass(frozen=True)
class ConvergenceRow:
    variable: str
    resolution: float
    l2_err: float
    linf_err: float
    order: float | None = None
    order_inf: float | None = None


@dataclass
class ConvergenceReport:
    kind: str
    rows: list[ConvergenceRow] = field(default_factory=list)

    def for_variable(self, variable: str) -> list[ConvergenceRow]:
        return [r for r in self.rows if r.variable == variable]

    def orders(self, variable: str, norm: str = "l2") -> list[float]:
        attr = "order" if norm == "l2" else "order_inf"
        return [getattr(r, attr) for r in self.for_variable(variable)[1:]]

    def format(self) -> str:
        label = "h" if self.kind == "space" else "dt"
        lines = [f"{'var':>4} {label:>10} {'l2_err':>11} {'order':>6} {'linf_err':>11} {'order':>6}"]
        for r in self.rows:
            o2 = "-" if r.order is None else f"{r.order:.2f}"
            oi = "-" if r.order_inf is None else f"{r.order_inf:.2f}"
            lines.append(f"{r.variable:>4} {r.resolution:10.4g} {r.l2_err:11.3e} {o2:>6} {r.linf_err:11.3e} {oi:>6}")
        return "\n".join(lines)


def _tabulate(kind, resolutions, errors) -> ConvergenceReport:
    report = ConvergenceReport(kind)
    for var in VARIABLES:
        prev = None
        for res, err in zip(resolutions, errors):
            l2, li = err[var]
            o2 = oi = None
            if prev is not None:
                o2, oi = order1(prev[0], l2), order1(prev[1], li)
            report.rows.append(ConvergenceRow(var, res, l2, li, o2, oi))
            prev = (l2, li)
    return report


def run_case(
    n: int,
    dt: float,
    T: float,
    case: ManufacturedCase = POLYNOMIAL_CASE,
    solver: SolverOptions | None = None,
) -> SimState:
    """Forced run on an ``n x n`` mesh of the unit square; returns the state at ``ceil(T/dt) * dt``."""
    grid = make_grid(0.0, 1.0, 0.0, 1.0, n, n)
    stepper = Stepper(grid, dt, case.gauge(grid), case.source_set(), solver)
    state = stepper.initial_state(case.initial_species(grid))
    state, _ = simulate(stepper, state, step_count(T, dt), diagnostics=False)
    return state


def _errors(state: SimState, reference: dict[str, Field]) -> dict[str, tuple[float, float]]:
    out = {}
    for var in VARIABLES:
        approx = state.phi if var == "phi" else state[var]
        e = approx - reference[var]
        out[var] = (norm_l2(e), norm_inf(e))
    return out


def mms_space_study(
    meshes: Sequence[int] = (10, 20, 40, 80),
    dt: float = 1e-5,
    T: float = 0.1,
    case: ManufacturedCase = POLYNOMIAL_CASE,
    solver: SolverOptions | None = None,
) -> ConvergenceReport:
    """Errors against the exact solution at the final time on ``n x n`` meshes, ``h = 1/n``."""
    solver = solver or SolverOptions(method="lagged")
    errors = []
    for n in meshes:
        state = run_case(n, dt, T, case, solver)
        errors.append(_errors(state, case.exact_fields(state.grid, state.t)))
        logger.info("space study: n=%d done, errors %s", n, errors[-1])
    return _tabulate("space", [1.0 / n for n in meshes], errors)


def mms_time_study(
    n: int = 64,
    dts: Sequence[float] = (1 / 40, 1 / 80, 1 / 160, 1 / 320),
    T: float = 1.0,
    reference: str = "self",
    ref_factor: int = 16,
    case: ManufacturedCase = POLYNOMIAL_CASE,
    solver: SolverOptions | None = None,
) -> ConvergenceReport:
    """Temporal refinement on a fixed ``n x n`` mesh.

    ``reference="exact"`` measures error against the exact solution, which
    only isolates the temporal error when the mesh is very fine.
    ``reference="self"`` compares against a run on the same mesh with step
    ``min(dts) / ref_factor``, cancelling the spatial error.
    """
    if reference not in ("self", "exact"):
        raise ValueError(f"reference must be 'self' or 'exact', got {reference!r}")
    solver = solver or SolverOptions(method="lagged")
    states = [run_case(n, dt, T, case, solver) for dt in dts]
    if reference == "self":
        ref_state = run_case(n, min(dts) / ref_factor, T, case, solver)
        ref = {"p": ref_state["p"], "n": ref_state["n"], "phi": ref_state.phi}
        for s in states:
            if abs(s.t - ref_state.t) > 1e-9 * max(1.0, T):
                raise ValueError("time steps do not all land on the same final time")
        errors = [_errors(s, ref) for s in states]
    else:
        errors = [_errors(s, case.exact_fields(s.grid, s.t)) for s in states]
    return _tabulate("time", list(dts), errors)
