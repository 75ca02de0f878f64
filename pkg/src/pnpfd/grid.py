"""Cell-centred rectangular grids, grid functions and difference operators.

Values live at cell centres ``x_j = a + (j - 1/2) dx``, ``y_k = c + (k - 1/2) dy``
with ``1 <= j <= nx`` and ``1 <= k <= ny``. Storage is 0-based: cell ``(j, k)``
is ``values[j - 1, k - 1]`` and ``(j - 1) * ny + (k - 1)`` in the flattened
(C-order) vector used by the sparse operators.

Zero-Neumann closure is done with one layer of fictitious cells that mirror
the adjacent interior cell. Ghost values are computed on demand and never
stored.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "GradPair",
    "NonFiniteFieldError",
    "make_grid",
    "ghost_value",
    "laplacian_h",
    "grad_h",
    "backward_dx",
    "backward_dy",
    "face_avg_L",
    "face_avg_R",
    "inner_h",
    "norm2_h",
    "norm_l2",
    "norm_inf",
    "grad_norm2_h",
]


class NonFiniteFieldError(ValueError):
    """Raised when a grid function would hold NaN or Inf."""


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred mesh of ``[a, b] x [c, d]``."""

    a: float
    b: float
    c: float
    d: float
    nx: int
    ny: int

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"domain bound {name} must be finite")
            object.__setattr__(self, name, value)
        if not self.b > self.a:
            raise ValueError(f"need b > a, got a={self.a}, b={self.b}")
        if not self.d > self.c:
            raise ValueError(f"need d > c, got c={self.c}, d={self.d}")
        for name in ("nx", "ny"):
            count = getattr(self, name)
            if isinstance(count, bool) or int(count) != count:
                raise ValueError(f"{name} must be an integer, got {count!r}")
            if count < 2:
                raise ValueError(f"{name} must be >= 2, got {count}")
            object.__setattr__(self, name, int(count))

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.nx

    @property
    def dy(self) -> float:
        return (self.d - self.c) / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def x(self) -> np.ndarray:
        """Cell-centre abscissae ``x_1 .. x_nx``."""
        return self.a + (np.arange(1, self.nx + 1) - 0.5) * self.dx

    @property
    def y(self) -> np.ndarray:
        return self.c + (np.arange(1, self.ny + 1) - 0.5) * self.dy

    def center(self, j: int, k: int) -> tuple[float, float]:
        """Coordinates of cell ``(j, k)`` (1-based)."""
        self._check_interior(j, k)
        return (self.a + (j - 0.5) * self.dx, self.c + (k - 0.5) * self.dy)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def flat_index(self, j: int, k: int) -> int:
        self._check_interior(j, k)
        return (j - 1) * self.ny + (k - 1)

    def is_boundary_cell(self, j: int, k: int) -> bool:
        self._check_interior(j, k)
        return j in (1, self.nx) or k in (1, self.ny)

    def sample(self, func: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "Field":
        """Evaluate ``func(x, y)`` at every cell centre."""
        X, Y = self.meshgrid()
        return Field(self, np.broadcast_to(func(X, Y), self.shape))

    def constant(self, value: float) -> "Field":
        return Field(self, np.full(self.shape, float(value)))

    def zeros(self) -> "Field":
        return self.constant(0.0)

    def _check_interior(self, j, k):
        if not (1 <= j <= self.nx and 1 <= k <= self.ny):
            raise IndexError(f"cell ({j}, {k}) outside 1..{self.nx} x 1..{self.ny}")


def make_grid(a: float, b: float, c: float, d: float, nx: int, ny: int) -> Grid:
    """Partition ``[a, b] x [c, d]`` into ``nx x ny`` equal cells."""
    return Grid(a, b, c, d, nx, ny)


class Field(np.lib.mixins.NDArrayOperatorsMixin):
    """Immutable grid function: one finite float64 per cell.

    Arithmetic with scalars, arrays of the grid shape, or other Fields on the
    same grid returns a new Field.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        arr = np.array(values, dtype=np.float64)
        if arr.shape != grid.shape:
            if arr.ndim == 1 and arr.size == grid.size:
                arr = arr.reshape(grid.shape)
            else:
                raise ValueError(f"values of shape {arr.shape} do not match grid {grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteFieldError("field values must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Field is immutable")

    @classmethod
    def from_flat(cls, grid: Grid, vec) -> "Field":
        return cls(grid, np.asarray(vec, dtype=np.float64).reshape(grid.shape))

    def ravel(self) -> np.ndarray:
        """Flattened view in operator ordering."""
        return self.values.ravel()

    def at(self, j: int, k: int) -> float:
        """Stored value of cell ``(j, k)`` (1-based)."""
        self.grid._check_interior(j, k)
        return float(self.values[j - 1, k - 1])

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or "out" in kwargs:
            return NotImplemented
        raw = []
        for x in inputs:
            if isinstance(x, Field):
                if x.grid != self.grid:
                    raise ValueError("fields live on different grids")
                raw.append(x.values)
            else:
                raw.append(x)
        result = getattr(ufunc, method)(*raw, **kwargs)
        if isinstance(result, np.ndarray) and result.shape == self.grid.shape:
            return Field(self.grid, result)
        return result

    def __eq__(self, other):
        return (
            isinstance(other, Field)
            and other.grid == self.grid
            and np.array_equal(other.values, self.values)
        )

    __hash__ = None

    def __repr__(self):
        return f"Field(grid={self.grid!r}, min={self.min():.6g}, max={self.max():.6g})"


class GradPair(NamedTuple):
    """Forward-difference gradient components."""

    gx: Field
    gy: Field


def _padded(f: Field) -> np.ndarray:
    # edge padding reproduces the mirror ghosts; the corner entries it also
    # creates are never read by the 5-point stencils below
    return np.pad(f.values, 1, mode="edge")


def ghost_value(f: Field, j: int, k: int) -> float:
    """Value of ``f`` at cell ``(j, k)``, including the first fictitious layer.

    Fictitious cells mirror their interior neighbour. Corner ghosts and
    anything beyond one layer are rejected.
    """
    nx, ny = f.grid.shape
    in_j = 1 <= j <= nx
    in_k = 1 <= k <= ny
    if in_j and in_k:
        return float(f.values[j - 1, k - 1])
    if in_k and j in (0, nx + 1):
        return float(f.values[0 if j == 0 else nx - 1, k - 1])
    if in_j and k in (0, ny + 1):
        return float(f.values[j - 1, 0 if k == 0 else ny - 1])
    raise IndexError(f"({j}, {k}) is not an interior cell or a first-layer edge ghost")


def laplacian_h(f: Field) -> Field:
    """Five-point Laplacian with mirror ghosts."""
    g = _padded(f)
    dx2, dy2 = f.grid.dx ** 2, f.grid.dy ** 2
    c = g[1:-1, 1:-1]
    lap = (g[2:, 1:-1] - 2.0 * c + g[:-2, 1:-1]) / dx2 + (g[1:-1, 2:] - 2.0 * c + g[1:-1, :-2]) / dy2
    return Field(f.grid, lap)


def grad_h(f: Field) -> GradPair:
    """Forward differences; the last column/row vanishes through the ghost."""
    g = _padded(f)
    c = g[1:-1, 1:-1]
    gx = (g[2:, 1:-1] - c) / f.grid.dx
    gy = (g[1:-1, 2:] - c) / f.grid.dy
    return GradPair(Field(f.grid, gx), Field(f.grid, gy))


def backward_dx(f: Field, j: int | None = None, k: int | None = None):
    """Backward difference in x.

    Returns the whole Field, or the scalar value at ``(j, k)`` when an index is
    given. The ``j = 1`` entries read the mirror ghost and are therefore zero.
    """
    g = _padded(f)
    out = Field(f.grid, (g[1:-1, 1:-1] - g[:-2, 1:-1]) / f.grid.dx)
    return out if j is None else out.at(j, k)


def backward_dy(f: Field, j: int | None = None, k: int | None = None):
    """Backward difference in y; see :func:`backward_dx`."""
    g = _padded(f)
    out = Field(f.grid, (g[1:-1, 1:-1] - g[1:-1, :-2]) / f.grid.dy)
    return out if j is None else out.at(j, k)


def face_avg_L(f: Field) -> Field:
    """Mean of each cell and its left (``j - 1``) neighbour."""
    g = _padded(f)
    return Field(f.grid, 0.5 * (g[:-2, 1:-1] + g[1:-1, 1:-1]))


def face_avg_R(f: Field) -> Field:
    """Mean of each cell and its lower (``k - 1``) neighbour."""
    g = _padded(f)
    return Field(f.grid, 0.5 * (g[1:-1, :-2] + g[1:-1, 1:-1]))


def _check_same(f: Field, g: Field):
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")


def inner_h(f: Field, g: Field) -> float:
    """Discrete L2 inner product ``sum f g dx dy``."""
    _check_same(f, g)
    return float(np.sum(f.values * g.values) * f.grid.cell_area)


def norm2_h(f: Field) -> float:
    """Squared discrete L2 norm ``<f, f>_h``."""
    return inner_h(f, f)


def norm_l2(f: Field) -> float:
    return float(np.sqrt(norm2_h(f)))


def norm_inf(f: Field) -> float:
    return float(np.max(np.abs(f.values)))


def grad_norm2_h(f: Field) -> float:
    """Squared discrete gradient norm, summed over every cell."""
    gx, gy = grad_h(f)
    return float(np.sum(gx.values ** 2 + gy.values ** 2) * f.grid.cell_area)
