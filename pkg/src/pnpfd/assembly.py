"""Sparse operators of the semi-implicit step.

``F`` is the matrix of the discrete Laplacian, ``A(c)`` the drift operator
``phi -> dx(c dx phi) + dy(c dy phi)`` with face-averaged ``c`` and zero
boundary flux, and the Schur operator ``((2/dt) I - F) F + A(w)`` acts on the
new potential once the species updates have been eliminated.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .grid import Field, Grid

__all__ = [
    "SymOperator",
    "laplacian_matrix",
    "drift_matrix",
    "drift_apply",
    "weighted_concentration",
    "schur_base",
    "schur_operator",
    "schur_rhs",
]


@dataclass(frozen=True, eq=False)
class SymOperator:
    """Symmetric sparse operator on the grid functions of ``grid``."""

    matrix: sp.csr_matrix
    grid: Grid

    def __post_init__(self):
        n = self.grid.size
        if self.matrix.shape != (n, n):
            raise ValueError(f"operator shape {self.matrix.shape} does not match grid size {n}")
        object.__setattr__(self, "matrix", sp.csr_matrix(self.matrix))

    @property
    def n(self) -> int:
        return self.grid.size

    @cached_property
    def squared(self) -> sp.csr_matrix:
        """``matrix @ matrix``, symmetrised so that round-off keeps it exactly symmetric."""
        sq = (self.matrix @ self.matrix).tocsr()
        return _symmetrize(sq)

    def apply(self, f: Field) -> Field:
        if f.grid != self.grid:
            raise ValueError("field lives on a different grid")
        return Field.from_flat(self.grid, self.matrix @ f.ravel())

    def __matmul__(self, other):
        if isinstance(other, Field):
            return self.apply(other)
        return self.matrix @ other

    def __add__(self, other: "SymOperator") -> "SymOperator":
        if not isinstance(other, SymOperator):
            return NotImplemented
        if other.grid != self.grid:
            raise ValueError("operators live on different grids")
        return SymOperator(self.matrix + other.matrix, self.grid)

    def __mul__(self, scalar: float) -> "SymOperator":
        return SymOperator(self.matrix * float(scalar), self.grid)

    __rmul__ = __mul__

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()


def _symmetrize(m: sp.spmatrix) -> sp.csr_matrix:
    out = ((m + m.T) * 0.5).tocsr()
    out.sum_duplicates()
    out.sort_indices()
    return out


def _neumann_1d(n: int, h: float) -> sp.csr_matrix:
    main = np.full(n, -2.0)
    main[0] = main[-1] = -1.0
    off = np.ones(n - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr") / (h * h)


def laplacian_matrix(grid: Grid) -> SymOperator:
    """Matrix of the five-point Neumann Laplacian."""
    tx = _neumann_1d(grid.nx, grid.dx)
    ty = _neumann_1d(grid.ny, grid.dy)
    F = sp.kron(tx, sp.identity(grid.ny), format="csr") + sp.kron(sp.identity(grid.nx), ty, format="csr")
    F.sum_duplicates()
    F.sort_indices()
    return SymOperator(F, grid)


def _face_pairs(grid: Grid):
    idx = np.arange(grid.size).reshape(grid.shape)
    # x faces join (j, k) and (j + 1, k); y faces join (j, k) and (j, k + 1)
    return (idx[:-1, :].ravel(), idx[1:, :].ravel()), (idx[:, :-1].ravel(), idx[:, 1:].ravel())


def drift_matrix(c: Field) -> SymOperator:
    """Drift operator ``A(c)``, linear in ``c``.

    Each interior face carries the coefficient ``(c_left + c_right) / 2 / h**2``;
    boundary faces carry no flux.
    """
    grid = c.grid
    v = c.ravel()
    (xl, xr), (yl, yr) = _face_pairs(grid)
    ax = 0.5 * (v[xl] + v[xr]) / grid.dx ** 2
    ay = 0.5 * (v[yl] + v[yr]) / grid.dy ** 2
    lo = np.concatenate([xl, yl])
    hi = np.concatenate([xr, yr])
    coef = np.concatenate([ax, ay])
    rows = np.concatenate([lo, hi, lo, hi])
    cols = np.concatenate([hi, lo, lo, hi])
    vals = np.concatenate([coef, coef, -coef, -coef])
    A = sp.coo_matrix((vals, (rows, cols)), shape=(grid.size, grid.size)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return SymOperator(A, grid)


def drift_apply(c: Field, phi) -> np.ndarray:
    """Matrix-free ``A(c) @ phi``; ``phi`` may be a Field or a flat vector."""
    grid = c.grid
    cv = c.values
    pv = np.asarray(phi.values if isinstance(phi, Field) else phi, dtype=np.float64).reshape(grid.shape)
    out = np.zeros(grid.shape)
    fx = 0.5 * (cv[:-1, :] + cv[1:, :]) * (pv[1:, :] - pv[:-1, :]) / grid.dx ** 2
    fy = 0.5 * (cv[:, :-1] + cv[:, 1:]) * (pv[:, 1:] - pv[:, :-1]) / grid.dy ** 2
    out[:-1, :] += fx
    out[1:, :] -= fx
    out[:, :-1] += fy
    out[:, 1:] -= fy
    return out.ravel()


def weighted_concentration(species: Sequence) -> Field:
    """``w = sum_i z_i**2 c_i`` for a sequence of objects with ``.z`` and ``.conc``."""
    species = list(species)
    if not species:
        raise ValueError("need at least one species")
    w = species[0].conc * 0.0
    for s in species:
        w = w + (s.z * s.z) * s.conc
    return w


def schur_base(dt: float, F: SymOperator) -> sp.csr_matrix:
    """The concentration-independent part ``((2/dt) I - F) F``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return _symmetrize((2.0 / dt) * F.matrix - F.squared)


def schur_operator(dt: float, F: SymOperator, w: Field, base: sp.csr_matrix | None = None) -> SymOperator:
    """``M = ((2/dt) I - F) F + A(w)``.

    Symmetric and negative semi-definite for ``w >= 0``, with the constants
    as null space. ``base`` may pass a cached :func:`schur_base`.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if w.grid != F.grid:
        raise ValueError("weight field lives on a different grid")
    if base is None:
        base = schur_base(dt, F)
    # both terms are exactly symmetric, so their sum is too
    M = (base + drift_matrix(w).matrix).tocsr()
    M.sort_indices()
    return SymOperator(M, F.grid)


def schur_rhs(
    dt: float,
    F: SymOperator,
    species: Sequence,
    w: Field,
    phi_m: Field,
    species_sources: Sequence[Field | None] | None = None,
    potential_source: Field | None = None,
) -> np.ndarray:
    """Right-hand side paired with :func:`schur_operator`.

    ``-sum_i z_i ((2/dt) I + F) C_i - A(w) Phi_m``. With per-species sources
    ``f_i`` (added to the species updates) and a potential source ``c`` (added
    to the charge), the extra terms are ``-2 sum_i z_i f_i - ((2/dt) I - F) c``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    n = F.n
    for f in [w, phi_m, *(s.conc for s in species)]:
        if f.grid != F.grid:
            raise ValueError("dimension mismatch between fields and operator")
    charge = np.zeros(n)
    for s in species:
        charge += s.z * s.conc.ravel()
    rhs = -((2.0 / dt) * charge + F.matrix @ charge)
    rhs -= drift_apply(w, phi_m)
    if species_sources is not None:
        if len(species_sources) != len(species):
            raise ValueError("need one (possibly None) source per species")
        for s, f in zip(species, species_sources):
            if f is not None:
                rhs -= 2.0 * s.z * f.ravel()
    if potential_source is not None:
        cv = potential_source.ravel()
        rhs -= (2.0 / dt) * cv - F.matrix @ cv
    return rhs
