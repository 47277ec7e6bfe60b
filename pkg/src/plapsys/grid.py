"""Structured box grids, nodal fields and the discrete norms built on them.

Fields are stored as full nodal arrays (``indexing="ij"``) so that node
``(i, j)`` sits at ``(i*h_x, j*h_y)`` relative to the lower corner.  Gradients
live on cells: one vector per cell, taken from the multilinear interpolant
of the cell's corner values at the cell center.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels


@dataclass(frozen=True)
class Grid:
    """Uniform tensor-product grid on a box in R^N, N in {2, 3}.

    Parameters
    ----------
    dims : node counts per axis, each >= 3.
    extent : physical side lengths of the box; defaults to the unit box.
    """

    dims: tuple[int, ...]
    extent: tuple[float, ...] | None = None
    spacing: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if len(dims) not in (2, 3):
            raise ValueError(f"grid dimension must be 2 or 3, got {len(dims)}")
        if min(dims) < 3:
            raise ValueError(f"need at least 3 nodes per axis, got {dims}")
        extent = (1.0,) * len(dims) if self.extent is None else tuple(float(e) for e in self.extent)
        if len(extent) != len(dims) or min(extent) <= 0:
            raise ValueError(f"invalid extent {extent} for dims {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "spacing", tuple(e / (n - 1) for e, n in zip(extent, dims)))

    @classmethod
    def uniform(cls, n_cells: int, dim: int = 2, length: float = 1.0) -> "Grid":
        """Grid with ``n_cells`` cells per axis on a cube of side ``length``."""
        return cls((n_cells + 1,) * dim, (length,) * dim)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def h(self) -> float:
        """Spacing of the first axis; equals every spacing on isotropic grids."""
        return self.spacing[0]

    @property
    def cell_shape(self) -> tuple[int, ...]:
        return tuple(n - 1 for n in self.dims)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    @property
    def n_interior(self) -> int:
        return int(np.prod([n - 2 for n in self.dims]))

    @property
    def interior(self) -> tuple[slice, ...]:
        return (slice(1, -1),) * self.ndim

    @property
    def boundary_mask(self) -> np.ndarray:
        mask = np.ones(self.dims, dtype=bool)
        mask[self.interior] = False
        return mask

    def coordinates(self) -> list[np.ndarray]:
        axes = [np.linspace(0.0, e, n) for e, n in zip(self.extent, self.dims)]
        return np.meshgrid(*axes, indexing="ij")

    def cell_centers(self) -> list[np.ndarray]:
        axes = [(np.arange(n - 1) + 0.5) * h for n, h in zip(self.dims, self.spacing)]
        return np.meshgrid(*axes, indexing="ij")

    def zeros(self) -> np.ndarray:
        return np.zeros(self.dims)

    def embed(self, x: np.ndarray) -> np.ndarray:
        """Interior unknown vector -> full nodal array with zero boundary."""
        u = np.zeros(self.dims)
        u[self.interior] = np.reshape(x, [n - 2 for n in self.dims])
        return u

    def restrict(self, u: np.ndarray) -> np.ndarray:
        """Full nodal array -> flat vector of interior values."""
        return np.ascontiguousarray(u[self.interior]).ravel()


class GridFunction:
    """Nodal scalar field on a :class:`Grid`, zero on the boundary.

    ``check=False`` skips the boundary test; unit tests use it to feed
    affine fields through :func:`cell_gradient`.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values, check: bool = True):
        values = np.array(values, dtype=float)
        if values.shape != grid.dims:
            raise ValueError(f"values have shape {values.shape}, grid has {grid.dims}")
        if check:
            if not np.all(np.isfinite(values)):
                raise ValueError("field contains non-finite values")
            if np.any(values[grid.boundary_mask] != 0.0):
                raise ValueError("field must vanish on the boundary")
        values.flags.writeable = False
        self.grid = grid
        self.values = values

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, grid.zeros())

    @classmethod
    def from_interior(cls, grid: Grid, x: np.ndarray) -> "GridFunction":
        return cls(grid, grid.embed(x))

    @classmethod
    def from_function(cls, grid: Grid, func) -> "GridFunction":
        """Sample ``func(*coords)`` at the nodes and clamp the boundary to 0."""
        values = np.array(func(*grid.coordinates()), dtype=float)
        values = np.broadcast_to(values, grid.dims).copy()
        values[grid.boundary_mask] = 0.0
        return cls(grid, values)

    @property
    def interior_values(self) -> np.ndarray:
        return self.grid.restrict(self.values)

    def __repr__(self):
        return f"GridFunction(dims={self.grid.dims}, max|u|={np.abs(self.values).max():.4g})"

    def __add__(self, other):
        return GridFunction(self.grid, self.values + _vals(other))

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - _vals(other))

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)


def _vals(u) -> np.ndarray:
    return u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)


@dataclass(frozen=True)
class CellField:
    """One N-vector per cell; ``values`` has shape ``cell_shape + (N,)``."""

    grid: Grid
    values: np.ndarray

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values**2, axis=-1))


def cell_gradient(u: GridFunction) -> CellField:
    """Gradient of the multilinear interpolant at every cell center."""
    g = kernels.cell_gradient(u.values, u.grid.spacing)
    return CellField(u.grid, g)


def integrate_cells(w, grid: Grid) -> float:
    """Midpoint-rule integral of per-cell values."""
    w = np.asarray(w, dtype=float)
    if w.shape != grid.cell_shape:
        raise ValueError(f"expected one value per cell {grid.cell_shape}, got {w.shape}")
    return float(w.sum() * grid.cell_volume)


def integrate_nodes(w, grid: Grid) -> float:
    """Mass-lumped integral: sum of nodal values times the cell volume."""
    return float(np.sum(w) * grid.cell_volume)


def lq_norm(u: GridFunction, q: float) -> float:
    if q < 1:
        raise ValueError(f"L^q norm needs q >= 1, got {q}")
    a = np.abs(u.values)
    scale = a.max()
    if scale == 0.0:
        return 0.0
    # scaled to avoid overflow of |u|^q for large q
    return float(scale * (np.sum((a / scale) ** q) * u.grid.cell_volume) ** (1.0 / q))


def w1p_seminorm(u: GridFunction, p: float) -> float:
    """Discrete W^{1,p}_0 norm (L^p norm of the cell gradients)."""
    if p <= 1:
        raise ValueError(f"W^{{1,p}} seminorm needs p > 1, got {p}")
    g = cell_gradient(u).values
    scale = np.abs(g).max()
    if scale == 0.0:
        return 0.0
    # scaled before squaring so tiny and huge fields neither underflow nor overflow
    mag = np.sqrt(np.sum((g / scale) ** 2, axis=-1))
    return float(scale * (np.sum(mag**p) * u.grid.cell_volume) ** (1.0 / p))


def positive_part(u: GridFunction) -> GridFunction:
    return GridFunction(u.grid, np.maximum(u.values, 0.0))


def negative_part(u: GridFunction) -> GridFunction:
    return GridFunction(u.grid, np.maximum(-u.values, 0.0))


# -- field dump format -------------------------------------------------------

def save_field(u: GridFunction, path: str | Path) -> None:
    """Write ``plapfield N nx [ny [nz]] h`` followed by one value per line."""
    grid = u.grid
    if not np.allclose(grid.spacing, grid.h, rtol=1e-14, atol=0):
        raise ValueError("field dumps require isotropic spacing")
    header = " ".join(["plapfield", str(grid.ndim), *map(str, grid.dims), repr(grid.h)])
    body = "\n".join(repr(float(v)) for v in u.values.ravel(order="C"))
    Path(path).write_text(header + "\n" + body + "\n")


def load_field(path: str | Path) -> GridFunction:
    lines = Path(path).read_text().split("\n")
    head = lines[0].split()
    if not head or head[0] != "plapfield":
        raise ValueError(f"{path}: missing 'plapfield' header")
    ndim = int(head[1])
    dims = tuple(int(n) for n in head[2 : 2 + ndim])
    h = float(head[2 + ndim])
    values = np.array([float(s) for s in lines[1:] if s.strip()])
    if values.size != np.prod(dims):
        raise ValueError(f"{path}: expected {np.prod(dims)} values, found {values.size}")
    grid = Grid(dims, tuple(h * (n - 1) for n in dims))
    return GridFunction(grid, values.reshape(dims), check=False)


def as_grid_function(grid: Grid, values: Sequence[float] | np.ndarray) -> GridFunction:
    return GridFunction(grid, np.asarray(values, dtype=float))
