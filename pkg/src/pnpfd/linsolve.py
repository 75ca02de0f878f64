"""Linear solves for the species updates (SPD) and the gauged potential system.

The potential operators (``F`` and the Schur operator) are symmetric negative
semi-definite with the constants as null space. The null space is removed by
a symmetric pin: the pinned row and column are replaced by the identity and
the known column moves to the right-hand side, which keeps the reduced matrix
symmetric and negative definite.

Methods
-------
``direct``
    Sparse LU in symmetric mode, with up to two steps of iterative refinement.
``lagged``
    Conjugate gradients preconditioned by the factorisation of an earlier
    operator, refactored once the iteration count grows. Suited to long runs
    with small ``dt`` where the operator changes slowly between steps.
``cg``
    Jacobi-preconditioned conjugate gradients; fallback for very large grids.
``auto``
    ``direct`` up to 256 x 256 cells, ``cg`` beyond.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import SymOperator
from .grid import Grid

logger = logging.getLogger(__name__)

__all__ = [
    "GaugeSpec",
    "SolveReport",
    "SolverError",
    "SolverOptions",
    "SPDSolver",
    "GaugedSolver",
    "pin_system",
    "solve_spd",
    "solve_gauged",
]

METHODS = ("auto", "direct", "lagged", "cg")
AUTO_DIRECT_LIMIT = 256 * 256


@dataclass(frozen=True)
class GaugeSpec:
    """Where and to what the potential is pinned.

    ``value_at``, when given, supplies the pin value as a function of time and
    takes precedence over ``pin_value``.
    """

    pin_cell: tuple[int, int] = (1, 1)
    pin_value: float = 0.0
    value_at: Callable[[float], float] | None = field(default=None, compare=False)

    def validate(self, grid: Grid) -> None:
        j, k = self.pin_cell
        if not grid.is_boundary_cell(j, k):
            raise ValueError(f"pin cell {self.pin_cell} is not on the boundary layer")

    def value(self, t: float | None = None) -> float:
        if self.value_at is not None:
            if t is None:
                raise ValueError("time-dependent gauge needs t")
            return float(self.value_at(t))
        return float(self.pin_value)


@dataclass(frozen=True)
class SolveReport:
    residual_norm: float
    factor_reused: bool
    method: Literal["direct", "iterative"]
    iterations: int = 0

    def __post_init__(self):
        if not self.residual_norm >= 0:
            raise ValueError("residual_norm must be non-negative")


class SolverError(RuntimeError):
    """Breakdown, non-convergence, or a singular pinned system."""

    def __init__(self, message: str, report: SolveReport | None = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class SolverOptions:
    method: str = "auto"
    tol: float = 1e-12
    maxiter: int = 2000
    # lagged only: refactor when a solve needs more iterations than this
    refactor_after: int = 8

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown solver method {self.method!r}; choose from {METHODS}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    def resolve(self, n: int) -> str:
        if self.method == "auto":
            return "direct" if n <= AUTO_DIRECT_LIMIT else "cg"
        return self.method


def _factorize(A: sp.spmatrix):
    try:
        return spla.splu(
            sp.csc_matrix(A),
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
    except RuntimeError as exc:  # "Factor is exactly singular"
        raise SolverError(f"factorisation failed: {exc}") from exc


def _inf_norm(A: sp.spmatrix) -> float:
    return float(abs(A).sum(axis=1).max())


def _backward_error(A, x, b, normA) -> tuple[float, float]:
    r = b - A @ x
    rn = float(np.linalg.norm(r))
    scale = normA * float(np.linalg.norm(x)) + float(np.linalg.norm(b))
    return rn, (rn / scale if scale > 0 else 0.0)


def _pcg(A, b, precond, x0, converged, maxiter, sign=1.0):
    """Preconditioned CG on ``sign * A`` (SPD). ``converged(rn, x)`` decides when to stop."""
    x = x0.copy()
    r = sign * (b - A @ x)
    z = precond(r)
    p = z.copy()
    rz = float(r @ z)
    rn = float(np.linalg.norm(r))
    for it in range(maxiter + 1):
        if rn == 0.0 or converged(rn, x):
            return x, rn, it
        if it == maxiter:
            break
        q = sign * (A @ p)
        pq = float(p @ q)
        if not pq > 0:
            raise SolverError("CG breakdown: operator not definite on the search space")
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        rn = float(np.linalg.norm(r))
        z = precond(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(
        f"CG did not converge in {maxiter} iterations",
        SolveReport(rn, False, "iterative", maxiter),
    )


class SPDSolver:
    """Reusable solver for a fixed symmetric positive definite matrix.

    The convergence contract is ``||M x - b|| <= tol * max(1, ||b||)``.
    """

    def __init__(self, M, options: SolverOptions | None = None):
        self.options = options or SolverOptions()
        mat = M.matrix if isinstance(M, SymOperator) else M
        self.matrix = sp.csr_matrix(mat)
        self.method = self.options.resolve(self.matrix.shape[0])
        self._normA = _inf_norm(self.matrix)
        self._lu = None
        self._diag = None
        self._solves = 0
        if self.method in ("direct", "lagged"):
            self._lu = _factorize(self.matrix)
        else:
            d = self.matrix.diagonal()
            if np.any(d <= 0):
                raise SolverError("SPD matrix has a non-positive diagonal entry")
            self._diag = d

    def solve(self, b) -> tuple[np.ndarray, SolveReport]:
        b = np.asarray(b, dtype=np.float64)
        tol = self.options.tol
        goal = tol * max(1.0, float(np.linalg.norm(b)))
        reused = self._solves > 0
        self._solves += 1
        if self._lu is not None:
            x = self._lu.solve(b)
            rn = float(np.linalg.norm(b - self.matrix @ x))
            for _ in range(2):
                if rn <= goal:
                    break
                x = x + self._lu.solve(b - self.matrix @ x)
                rn = float(np.linalg.norm(b - self.matrix @ x))
            report = SolveReport(rn, reused, "direct")
        else:
            inv_d = 1.0 / self._diag
            x, rn, its = _pcg(
                self.matrix, b, lambda r: inv_d * r, np.zeros_like(b),
                lambda rn, x: rn <= goal, self.options.maxiter,
            )
            report = SolveReport(rn, reused, "iterative", its)
        if not np.all(np.isfinite(x)):
            raise SolverError("non-finite solution", report)
        if rn > goal:
            raise SolverError(f"SPD solve residual {rn:.3e} above {goal:.3e}", report)
        return x, report


def solve_spd(M, b, tol: float = 1e-12, method: str = "direct") -> tuple[np.ndarray, SolveReport]:
    """One-shot SPD solve; see :class:`SPDSolver` for repeated right-hand sides."""
    return SPDSolver(M, SolverOptions(method=method, tol=tol)).solve(b)


def pin_system(M: sp.spmatrix, b: np.ndarray, index: int, value: float) -> tuple[sp.csr_matrix, np.ndarray]:
    """Symmetric pin of unknown ``index`` to ``value``.

    ``M`` must be symmetric with a stored diagonal entry at ``index``.
    """
    A = sp.csr_matrix(M, copy=True)
    A.sum_duplicates()
    n = A.shape[0]
    lo, hi = A.indptr[index], A.indptr[index + 1]
    col = np.zeros(n)
    col[A.indices[lo:hi]] = A.data[lo:hi]  # column == row by symmetry
    rhs = np.asarray(b, dtype=np.float64) - col * value
    rhs[index] = value
    rows = np.repeat(np.arange(n), np.diff(A.indptr))
    hit = (rows == index) | (A.indices == index)
    A.data[hit] = 0.0
    diag = np.flatnonzero((rows == index) & (A.indices == index))
    if diag.size != 1:
        raise SolverError(f"no stored diagonal entry at pinned index {index}")
    A.data[diag] = 1.0
    A.eliminate_zeros()
    return A, rhs


class GaugedSolver:
    """Solves ``M x = b`` on the non-pinned rows with ``x[pin] = value``.

    Holds the lagged factorisation between calls when ``method == "lagged"``.
    Convergence is judged by the normwise backward error of the unpinned rows,
    ``||r|| <= tol * (||M|| ||x|| + ||b||)``, since the potential operators are
    too ill-conditioned for a purely ``||b||``-relative criterion.
    """

    def __init__(self, grid: Grid, options: SolverOptions | None = None):
        self.grid = grid
        self.options = options or SolverOptions()
        self.method = self.options.resolve(grid.size)
        self._lagged = None
        self.factorizations = 0

    def solve(self, M, b, gauge: GaugeSpec, t: float | None = None, x0=None) -> tuple[np.ndarray, SolveReport]:
        mat = sp.csr_matrix(M.matrix if isinstance(M, SymOperator) else M)
        gauge.validate(self.grid)
        pin = self.grid.flat_index(*gauge.pin_cell)
        value = gauge.value(t)
        A, rhs = pin_system(mat, b, pin, value)
        normA = _inf_norm(A)
        tol = self.options.tol
        reused = False
        iterations = 0
        if self.method == "direct":
            lu = _factorize(A)
            self.factorizations += 1
            x = lu.solve(rhs)
            rn, err = _backward_error(A, x, rhs, normA)
            for _ in range(2):
                if err <= tol:
                    break
                x = x + lu.solve(rhs - A @ x)
                rn, err = _backward_error(A, x, rhs, normA)
            kind = "direct"
        else:
            if self.method == "lagged":
                if self._lagged is None:
                    self._lagged = _factorize(A)
                    self.factorizations += 1
                else:
                    reused = True
                precond = lambda r: -self._lagged.solve(r)  # noqa: E731
            else:
                d = -A.diagonal()
                d[pin] = 1.0  # decoupled pin row; its residual stays zero
                if np.any(d <= 0):
                    raise SolverError("pinned operator is not negative definite on its diagonal")
                precond = lambda r: r / d  # noqa: E731
            start = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=np.float64)
            start[pin] = value
            bn = float(np.linalg.norm(rhs))

            def converged(rn, x):
                return rn <= tol * (normA * float(np.linalg.norm(x)) + bn)

            x, rn, iterations = _pcg(A, rhs, precond, start, converged, self.options.maxiter, sign=-1.0)
            err = rn / max(normA * float(np.linalg.norm(x)) + bn, 1e-300)
            if self.method == "lagged" and iterations > self.options.refactor_after:
                logger.debug("lagged preconditioner needed %d iterations; refactoring", iterations)
                self._lagged = None
            kind = "iterative"
        report = SolveReport(rn, reused, kind, iterations)
        if not np.all(np.isfinite(x)):
            raise SolverError("non-finite solution of the pinned system", report)
        if err > tol:
            raise SolverError(f"pinned solve backward error {err:.3e} above tol {tol:.1e}", report)
        return x, report


def solve_gauged(M, b, gauge: GaugeSpec, tol: float = 1e-12, method: str = "direct", t: float | None = None):
    """One-shot pinned solve of a semi-definite system with constant null space."""
    grid = M.grid if isinstance(M, SymOperator) else None
    if grid is None:
        raise TypeError("solve_gauged needs a SymOperator so the pin cell can be located")
    return GaugedSolver(grid, SolverOptions(method=method, tol=tol)).solve(M, b, gauge, t=t)
