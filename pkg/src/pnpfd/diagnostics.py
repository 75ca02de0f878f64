"""Conserved and dissipated quantities of the discrete scheme.

The functions take states with ``.species`` (objects with ``z``, ``name`` and
``conc``) and ``.phi``; see :class:`pnpfd.stepper.SimState`.

Over a source-free step the scheme satisfies exactly

    (E[m+1] - E[m]) / dt = -(D1 + D2 + D3)

with ``E = 1/2 ||grad_h phi||_h**2`` and

    D1 = || sum_i z_i c_i[m+1/2] ||_h**2
    D2 = < sum_i z_i**2 (c_i[m])_L , (backward_dx phi[m+1/2])**2 >_h
    D3 = < sum_i z_i**2 (c_i[m])_R , (backward_dy phi[m+1/2])**2 >_h

``D2`` and ``D3`` are evaluated as weighted sums of squares rather than as
norms of square roots, so they stay defined if a concentration dips below
zero; such states are logged as positivity violations.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .grid import (
    Field,
    backward_dx,
    backward_dy,
    face_avg_L,
    face_avg_R,
    grad_norm2_h,
    norm2_h,
)

logger = logging.getLogger(__name__)

__all__ = [
    "StepDiagnostics",
    "mass",
    "electric_energy",
    "dissipation_terms",
    "energy_identity_residual",
    "min_concentration",
    "diagnose",
]


@dataclass(frozen=True)
class StepDiagnostics:
    """Per-step scalars. Dissipation and residual are 0 on the initial row."""

    t: float
    m: int
    masses: Mapping[str, float]
    mass_rel_err: Mapping[str, float]
    min_conc: Mapping[str, float]
    energy: float
    diss_charge: float
    diss_x: float
    diss_y: float
    energy_residual: float


def mass(f: Field) -> float:
    """``sum f dx dy``."""
    return float(np.sum(f.values) * f.grid.cell_area)


def electric_energy(phi: Field) -> float:
    return 0.5 * grad_norm2_h(phi)


def dissipation_terms(state_m, state_mp1) -> tuple[float, float, float]:
    grid = state_m.phi.grid
    area = grid.cell_area
    phi_half = 0.5 * (state_m.phi + state_mp1.phi)
    charge = np.zeros(grid.shape)
    wL = np.zeros(grid.shape)
    wR = np.zeros(grid.shape)
    for old, new in zip(state_m.species, state_mp1.species):
        if old.name != new.name or old.z != new.z:
            raise ValueError("states carry different species")
        charge += 0.5 * old.z * (old.conc.values + new.conc.values)
        wL += old.z ** 2 * face_avg_L(old.conc).values
        wR += old.z ** 2 * face_avg_R(old.conc).values
    if wL.min() < 0 or wR.min() < 0:
        logger.warning("negative weighted concentration at t=%g: positivity violated", state_m.t)
    d1 = norm2_h(Field(grid, charge))
    d2 = float(np.sum(wL * backward_dx(phi_half).values ** 2) * area)
    d3 = float(np.sum(wR * backward_dy(phi_half).values ** 2) * area)
    return d1, d2, d3


def energy_identity_residual(state_m, state_mp1, dt: float) -> float:
    """Relative defect of the discrete energy identity over one step.

    Only meaningful for source-free steps; with manufactured sources the
    identity does not hold and the value is O(1).
    """
    rate = (electric_energy(state_mp1.phi) - electric_energy(state_m.phi)) / dt
    d1, d2, d3 = dissipation_terms(state_m, state_mp1)
    return abs(rate + d1 + d2 + d3) / max(1.0, abs(rate))


def min_concentration(species) -> dict[str, float]:
    return {s.name: s.conc.min() for s in species}


def diagnose(state_prev, state, dt: float, initial_masses: Mapping[str, float] | None = None) -> StepDiagnostics:
    """Diagnostics row for ``state``; ``state_prev`` is ``None`` on the initial row."""
    masses = {s.name: mass(s.conc) for s in state.species}
    base = initial_masses if initial_masses is not None else masses
    rel = {}
    for name, value in masses.items():
        ref = base[name]
        rel[name] = abs(value - ref) / abs(ref) if ref != 0 else abs(value - ref)
    energy = electric_energy(state.phi)
    if state_prev is None:
        d1 = d2 = d3 = res = 0.0
    else:
        d1, d2, d3 = dissipation_terms(state_prev, state)
        rate = (energy - electric_energy(state_prev.phi)) / dt
        res = abs(rate + d1 + d2 + d3) / max(1.0, abs(rate))
    return StepDiagnostics(
        t=state.t,
        m=state.m,
        masses=masses,
        mass_rel_err=rel,
        min_conc=min_concentration(state.species),
        energy=energy,
        diss_charge=d1,
        diss_x=d2,
        diss_y=d3,
        energy_residual=res,
    )
