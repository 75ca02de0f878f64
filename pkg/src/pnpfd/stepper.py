"""Time stepping for the multi-species Poisson-Nernst-Planck system.

Each step solves

    (I/dt - F/2) C_i[m+1] = (I/dt + F/2) C_i[m] + z_i A(C_i[m]) (Phi[m+1] + Phi[m]) / 2 + f_i[m]
    F Phi[m+1] = -(sum_i z_i C_i[m+1] + c[m+1])

by first eliminating the species: the potential solves the Schur system
``(((2/dt) I - F) F + A(w)) Phi[m+1] = rhs`` with ``w = sum_i z_i**2 C_i[m]``,
then each species is one SPD solve, for the increment ``C_i[m+1] - C_i[m]``,
with a matrix that is factored once per run. ``f_i`` and ``c`` are optional manufactured-solution sources.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .assembly import drift_apply, laplacian_matrix, schur_base, schur_operator, schur_rhs, weighted_concentration
from .diagnostics import StepDiagnostics, diagnose, mass
from .grid import Field, Grid, NonFiniteFieldError
from .linsolve import GaugedSolver, GaugeSpec, SolveReport, SolverError, SolverOptions, SPDSolver

logger = logging.getLogger(__name__)

__all__ = [
    "Species",
    "SimState",
    "SourceSet",
    "Stepper",
    "StepFailure",
    "ChargeImbalanceWarning",
    "initial_potential",
    "step",
    "simulate",
    "run",
    "step_count",
]

SourceFunc = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


class ChargeImbalanceWarning(UserWarning):
    """Initial data are not charge neutral, so the Neumann potential problem is incompatible."""


class StepFailure(RuntimeError):
    """A step failed; carries the last good state and the diagnostics so far."""

    def __init__(self, message, state, diagnostics):
        super().__init__(message)
        self.state = state
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class Species:
    name: str
    z: int
    conc: Field

    def __post_init__(self):
        if isinstance(self.z, bool) or int(self.z) != self.z:
            raise ValueError(f"valence of {self.name!r} must be an integer, got {self.z!r}")
        if self.z == 0:
            raise ValueError(f"valence of {self.name!r} must be non-zero")
        object.__setattr__(self, "z", int(self.z))

    def with_conc(self, conc: Field) -> "Species":
        return replace(self, conc=conc)


@dataclass(frozen=True)
class SimState:
    t: float
    m: int
    species: tuple[Species, ...]
    phi: Field

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(self.species))
        names = [s.name for s in self.species]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate species names in {names}")
        for s in self.species:
            if s.conc.grid != self.phi.grid:
                raise ValueError(f"species {s.name!r} lives on a different grid")

    @property
    def grid(self) -> Grid:
        return self.phi.grid

    def __getitem__(self, name: str) -> Field:
        for s in self.species:
            if s.name == name:
                return s.conc
        raise KeyError(name)


@dataclass(frozen=True, eq=False)
class SourceSet:
    """Volumetric sources ``f_i(t, x, y)`` keyed by species name and a charge source ``c(t, x, y)``."""

    species: Mapping[str, SourceFunc] = field(default_factory=dict)
    potential: SourceFunc | None = None

    def species_fields(self, species: Sequence[Species], grid: Grid, t: float) -> list[Field | None]:
        out = []
        for s in species:
            f = self.species.get(s.name)
            out.append(None if f is None else grid.sample(lambda x, y, f=f: f(t, x, y)))
        return out

    def potential_field(self, grid: Grid, t: float) -> Field | None:
        if self.potential is None:
            return None
        return grid.sample(lambda x, y: self.potential(t, x, y))


def _net_charge(species: Sequence[Species]) -> np.ndarray:
    q = np.zeros(species[0].conc.grid.size)
    for s in species:
        q += s.z * s.conc.ravel()
    return q


class Stepper:
    """Advances states on a fixed grid with a fixed ``dt``.

    The SPD species matrix is factored at construction and reused; the Schur
    operator is rebuilt every step.
    """

    def __init__(
        self,
        grid: Grid,
        dt: float,
        gauge: GaugeSpec | None = None,
        sources: SourceSet | None = None,
        solver: SolverOptions | None = None,
    ):
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.grid = grid
        self.dt = float(dt)
        self.gauge = gauge or GaugeSpec()
        self.gauge.validate(grid)
        self.sources = sources
        self.solver = solver or SolverOptions()
        self.F = laplacian_matrix(grid)
        eye = sp.identity(grid.size, format="csr")
        self._implicit = (eye / self.dt - 0.5 * self.F.matrix).tocsr()
        self._species_solver = SPDSolver(self._implicit, self.solver)
        self._schur_base = schur_base(self.dt, self.F)
        self._potential_solver = GaugedSolver(grid, self.solver)
        self.last_reports: list[SolveReport] = []

    def initial_potential(self, species: Sequence[Species], t: float = 0.0) -> Field:
        """Poisson solve for the potential of the initial concentrations."""
        rhs = -_net_charge(species)
        if self.sources is not None:
            c = self.sources.potential_field(self.grid, t)
            if c is not None:
                rhs -= c.ravel()
        solver = GaugedSolver(self.grid, replace(self.solver, method="direct") if self.solver.method == "lagged" else self.solver)
        x, report = solver.solve(self.F, rhs, self.gauge, t=t)
        self.last_reports = [report]
        return Field.from_flat(self.grid, x)

    def initial_state(self, species: Sequence[Species], t: float = 0.0) -> SimState:
        species = tuple(species)
        if self.sources is None:
            charge = sum(s.z * mass(s.conc) for s in species)
            scale = sum(abs(s.z * mass(s.conc)) for s in species)
            if abs(charge) > 1e-10 * max(scale, 1e-300):
                warnings.warn(
                    f"net initial charge {charge:.3e} is not zero; the Neumann potential problem is incompatible",
                    ChargeImbalanceWarning,
                    stacklevel=2,
                )
        return SimState(t=t, m=0, species=species, phi=self.initial_potential(species, t))

    def step(self, state: SimState) -> SimState:
        if state.grid != self.grid:
            raise ValueError("state lives on a different grid")
        dt = self.dt
        t_new = state.t + dt
        species = state.species
        w = weighted_concentration(species)
        f_src = c_src = None
        if self.sources is not None:
            f_src = self.sources.species_fields(species, self.grid, state.t)
            c_src = self.sources.potential_field(self.grid, t_new)
        M = schur_operator(dt, self.F, w, self._schur_base)
        rhs = schur_rhs(dt, self.F, species, w, state.phi, f_src, c_src)
        phi_vec, report = self._potential_solver.solve(M, rhs, self.gauge, t=t_new, x0=state.phi.ravel())
        reports = [report]
        phi_new = Field.from_flat(self.grid, phi_vec)
        phi_half = 0.5 * (state.phi.ravel() + phi_vec)
        updated = []
        for i, s in enumerate(species):
            c = s.conc.ravel()
            # increment form: the rounded diagonal of (I/dt - F/2) then cannot bias the mass
            b = self.F.matrix @ c + s.z * drift_apply(s.conc, phi_half)
            if f_src is not None and f_src[i] is not None:
                b += f_src[i].ravel()
            delta, rep = self._species_solver.solve(b)
            reports.append(rep)
            updated.append(s.with_conc(Field.from_flat(self.grid, c + delta)))
        self.last_reports = reports
        return SimState(t=t_new, m=state.m + 1, species=tuple(updated), phi=phi_new)


def initial_potential(
    species: Sequence[Species],
    gauge: GaugeSpec | None = None,
    sources: SourceSet | None = None,
    t: float = 0.0,
    solver: SolverOptions | None = None,
) -> Field:
    grid = species[0].conc.grid
    # dt is irrelevant to the Poisson solve
    return Stepper(grid, 1.0, gauge, sources, solver).initial_potential(species, t)


def step(
    state: SimState,
    dt: float,
    gauge: GaugeSpec | None = None,
    sources: SourceSet | None = None,
    solver: SolverOptions | None = None,
) -> SimState:
    """Single step; builds a fresh :class:`Stepper`, so loops should use one directly."""
    return Stepper(state.grid, dt, gauge, sources, solver).step(state)


def step_count(T: float, dt: float) -> int:
    """``ceil(T / dt)``, forgiving round-off when ``T`` is a multiple of ``dt``."""
    if T < 0:
        raise ValueError("T must be non-negative")
    ratio = T / dt
    nearest = round(ratio)
    if abs(ratio - nearest) <= 1e-9 * max(1.0, ratio):
        return int(nearest)
    return int(math.ceil(ratio))


def simulate(
    stepper: Stepper,
    state: SimState,
    nsteps: int,
    on_step: Callable[[SimState, StepDiagnostics], None] | None = None,
    diagnostics: bool = True,
) -> tuple[SimState, list[StepDiagnostics]]:
    """Advance ``nsteps`` steps, recording diagnostics for every state.

    On failure raises :class:`StepFailure` holding the last good state.
    """
    base = {s.name: mass(s.conc) for s in state.species}
    records = []
    if diagnostics:
        records.append(diagnose(None, state, stepper.dt, base))
    if on_step is not None:
        on_step(state, records[-1] if records else None)
    for _ in range(nsteps):
        try:
            new = stepper.step(state)
        except (SolverError, NonFiniteFieldError) as exc:
            logger.error("step %d failed: %s", state.m + 1, exc)
            raise StepFailure(f"step {state.m + 1} failed: {exc}", state, records) from exc
        if diagnostics:
            records.append(diagnose(state, new, stepper.dt, base))
        if on_step is not None:
            on_step(new, records[-1] if records else None)
        state = new
    return state, records


def run(config, on_step=None) -> tuple[SimState, list[StepDiagnostics]]:
    """Run a :class:`pnpfd.config.RunConfig` from its initial data to ``T``."""
    from .config import build_problem

    problem = build_problem(config)
    stepper = Stepper(problem.grid, config.dt, problem.gauge, problem.sources, problem.solver)
    state = stepper.initial_state(problem.species)
    return simulate(stepper, state, step_count(config.T, config.dt), on_step=on_step)
