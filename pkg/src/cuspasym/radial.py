"""Logarithmic radial grids and scalar fields on them.

All radial discretization lives in the variable t = log x, where the cusp
coordinate x ranges over (0, x_max] with x_max < 1.  In t the scaling
vector field x d/dx becomes d/dt, so the model Laplacian

    (1/2) ((x d/dx)^2 + x d/dx)  =  (1/2) (d^2/dt^2 + d/dt)

has constant coefficients and the x -> 0 degeneracy disappears from the
stencil.  Grids are uniform in t; centered second-order differences are
used at interior nodes and one-sided second-order differences at the two
endpoints (the latter only ever for diagnostics, never inside solves).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_banded

CSV_FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid in t = log x on [t_min, t_max], t_max < 0."""

    t_min: float
    t_max: float
    n_nodes: int

    def __post_init__(self):
        if not (self.t_min < self.t_max):
            raise ValueError(f"need t_min < t_max, got [{self.t_min}, {self.t_max}]")
        if not (self.t_max < 0):
            raise ValueError(f"need t_max < 0 so that x stays below 1, got {self.t_max}")
        if self.n_nodes < 8:
            raise ValueError(f"need at least 8 nodes, got {self.n_nodes}")

    @cached_property
    def t(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.n_nodes)

    @cached_property
    def x(self) -> np.ndarray:
        return np.exp(self.t)

    @property
    def h(self) -> float:
        return (self.t_max - self.t_min) / (self.n_nodes - 1)

    @property
    def x_min(self) -> float:
        return math.exp(self.t_min)

    @property
    def x_max(self) -> float:
        return math.exp(self.t_max)

    def refined(self) -> "RadialGrid":
        """Same span with halved spacing (nodes are nested)."""
        return RadialGrid(self.t_min, self.t_max, 2 * self.n_nodes - 1)

    def window_mask(self, x_lo: float, x_hi: float) -> np.ndarray:
        if not (0 < x_lo <= x_hi):
            raise ValueError(f"invalid window [{x_lo}, {x_hi}]")
        return (self.x >= x_lo) & (self.x <= x_hi)

    def deepest_indices(self, fraction: float = 0.1) -> slice:
        """Indices of the deepest ``fraction`` of nodes (smallest x)."""
        count = max(1, int(round(self.n_nodes * fraction)))
        return slice(0, count)


DEFAULT_GRID = RadialGrid(t_min=-40.0, t_max=math.log(0.5), n_nodes=4096)


@dataclass
class RadialField:
    """Scalar samples on a radial grid; values must be finite everywhere."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_nodes,):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"({self.grid.n_nodes} nodes)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite at every node")

    @classmethod
    def from_function(cls, grid: RadialGrid, fn: Callable[[np.ndarray], np.ndarray]) -> "RadialField":
        """Sample fn(x) on the grid."""
        return cls(grid, np.asarray(fn(grid.x), dtype=float))

    @classmethod
    def zeros(cls, grid: RadialGrid) -> "RadialField":
        return cls(grid, np.zeros(grid.n_nodes))

    @classmethod
    def constant(cls, grid: RadialGrid, value: float) -> "RadialField":
        return cls(grid, np.full(grid.n_nodes, float(value)))

    def same_grid(self, other: "RadialField") -> bool:
        return self.grid == other.grid

    def write_csv(self, path) -> None:
        """Write as "x,value" rows, ascending x, 17 significant digits."""
        with open(path, "w", encoding="ascii") as fh:
            fh.write("x,value\n")
            for xv, val in zip(self.grid.x, self.values):
                fh.write(f"{CSV_FLOAT_FMT % xv},{CSV_FLOAT_FMT % val}\n")

    @classmethod
    def read_csv(cls, path) -> "RadialField":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 2:
            raise ValueError(f"expected two columns x,value in {path}")
        x, values = data[:, 0], data[:, 1]
        if np.any(x <= 0) or np.any(np.diff(x) <= 0):
            raise ValueError(f"x column in {path} must be positive and ascending")
        t = np.log(x)
        h = (t[-1] - t[0]) / (len(t) - 1)
        if np.max(np.abs(np.diff(t) - h)) > 1e-8 * abs(h):
            raise ValueError(f"x column in {path} is not log-uniform")
        grid = RadialGrid(float(t[0]), float(t[-1]), len(t))
        return cls(grid, values)


# ---------------------------------------------------------------------------
# Stencils for the unit model Laplacian (1/2)(d^2/dt^2 + d/dt)
# ---------------------------------------------------------------------------

def laplacian_coefficients(h: float) -> tuple[float, float, float]:
    """(sub, diag, sup) coefficients of the interior centered stencil."""
    sub = 0.5 / h**2 - 0.25 / h
    diag = -1.0 / h**2
    sup = 0.5 / h**2 + 0.25 / h
    return sub, diag, sup


def unit_laplacian_interior(values: np.ndarray, h: float) -> np.ndarray:
    """Centered stencil on interior nodes; endpoints returned as 0."""
    sub, diag, sup = laplacian_coefficients(h)
    out = np.zeros_like(values)
    out[1:-1] = sub * values[:-2] + diag * values[1:-1] + sup * values[2:]
    return out


def unit_laplacian(values: np.ndarray, h: float) -> np.ndarray:
    """Full-grid stencil: centered inside, one-sided second order at ends.

    The one-sided rows are diagnostic only; solves impose boundary
    conditions instead of using them.
    """
    out = unit_laplacian_interior(values, h)
    v = values
    d1_left = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
    d2_left = (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / h**2
    out[0] = 0.5 * (d2_left + d1_left)
    d1_right = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
    d2_right = (2 * v[-1] - 5 * v[-2] + 4 * v[-3] - v[-4]) / h**2
    out[-1] = 0.5 * (d2_right + d1_right)
    return out


def solve_tridiagonal(sub: np.ndarray, diag: np.ndarray, sup: np.ndarray,
                      rhs: np.ndarray) -> np.ndarray:
    """Direct banded solve of A u = rhs with A[j,j-1]=sub[j], A[j,j]=diag[j],
    A[j,j+1]=sup[j]."""
    n = len(diag)
    ab = np.zeros((3, n))
    ab[0, 1:] = sup[:-1]
    ab[1, :] = diag
    ab[2, :-1] = sub[1:]
    return solve_banded((1, 1), ab, rhs)


def evaluate_expansion(terms: Sequence[tuple[float, float, int]], x: np.ndarray) -> np.ndarray:
    """Evaluate sum of a * x^z * (log x)^k term triples on samples x."""
    x = np.asarray(x, dtype=float)
    t = np.log(x)
    out = np.zeros_like(x)
    for a, z, k in terms:
        out += float(a) * np.exp(float(z) * t) * t ** int(k)
    return out
