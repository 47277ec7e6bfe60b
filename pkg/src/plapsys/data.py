"""Right-hand sides: smooth bumps and capped radial singularities."""
from __future__ import annotations

import numpy as np

from .grid import Grid, GridFunction


def default_center(grid: Grid) -> tuple[float, ...]:
    """Cell center nearest the box center, so no node sits on it.

    For an even cell count this is the box center shifted by half a cell.
    """
    return tuple((n // 2 + 0.5) * h for n, h in zip(grid.cell_shape, grid.spacing))


def make_singular_f(grid: Grid, alpha: float, center=None, cap_radius: float | None = None) -> GridFunction:
    """Nodal samples of ``max(|x - x0|, cap_radius)^(-alpha)``.

    The data are bounded by ``cap_radius^(-alpha)`` and never exceed the
    uncapped ``|x - x0|^(-alpha)``.  The default cap is ``h/2``, so
    refining the grid raises the cap monotonically towards the singular
    function; ``|x|^(-alpha)`` lies in L^m exactly when ``alpha m < N``.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    center = default_center(grid) if center is None else tuple(float(c) for c in center)
    if len(center) != grid.ndim or not all(0 < c < e for c, e in zip(center, grid.extent)):
        raise ValueError(f"center {center} must lie strictly inside the box {grid.extent}")
    cap = 0.5 * grid.h if cap_radius is None else float(cap_radius)
    if not cap > 0:
        raise ValueError(f"cap_radius must be positive, got {cap}")
    dist = np.sqrt(sum((x - c) ** 2 for x, c in zip(grid.coordinates(), center)))
    values = np.maximum(dist, cap) ** (-alpha)
    values[grid.boundary_mask] = 0.0
    return GridFunction(grid, values)


def make_smooth_f(grid: Grid, amplitude: float = 1.0) -> GridFunction:
    """``amplitude * N pi^2 prod sin(pi x_i / L_i)``; for p = 2 the solution is the product of sines."""
    vals = np.prod([np.sin(np.pi * x / e) for x, e in zip(grid.coordinates(), grid.extent)], axis=0)
    scale = sum((np.pi / e) ** 2 for e in grid.extent)
    return GridFunction.from_function(grid, lambda *xs: amplitude * scale * vals)
