"""Discrete variational functionals of the coupled system and their gradients.

All gradients are exact derivatives of the discrete values with respect to
the nodal unknowns, so they can be checked by finite differences.  Gradient
terms use one-point cell quadrature of the regularized density
``(|grad u|^2 + eps^2)^(p/2)``; zero-order terms use nodal (lumped)
quadrature, which keeps their derivatives diagonal.

On a finite grid every integral is finite, so the ``+inf`` branch of the
saddle functional never occurs and is not modeled.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .grid import Grid, GridFunction

DEFAULT_EPS = 1e-8


class DegenerateConfigurationError(ValueError):
    """p < 2 with eps = 0 and a cell where the gradient vanishes."""


@dataclass(frozen=True)
class CouplingParams:
    """Exponents and coupling strength ``(p, A, r, theta)`` plus smoothing ``eps``.

    ``eps=None`` picks ``1e-8`` for ``p < 2`` and ``0`` otherwise.  ``A = 0``
    is accepted: it decouples the first equation and serves as the control
    arm of refinement experiments.
    """

    p: float = 2.0
    A: float = 1.0
    r: float = 2.0
    theta: float = 0.0
    eps: float | None = None

    def __post_init__(self):
        if self.eps is None:
            object.__setattr__(self, "eps", DEFAULT_EPS if self.p < 2 else 0.0)
        if not self.p > 1:
            raise ValueError(f"need p > 1, got p={self.p}")
        if not self.A >= 0:
            raise ValueError(f"need A >= 0, got A={self.A}")
        if not self.r > 1:
            raise ValueError(f"need r > 1, got r={self.r}")
        if not 0 <= self.theta < self.p - 1:
            raise ValueError(f"need 0 <= theta < p - 1, got theta={self.theta}, p={self.p}")
        if not self.eps >= 0:
            raise ValueError(f"need eps >= 0, got eps={self.eps}")


# -- array-level helpers (full nodal arrays) ---------------------------------

def _check_degenerate(values, grid, p, eps):
    if p < 2 and eps == 0:
        g = kernels.cell_gradient(values, grid.spacing)
        if np.any(np.sum(g * g, axis=-1) == 0.0):
            raise DegenerateConfigurationError(
                f"p={p} < 2 with eps=0: gradient vanishes on some cell, "
                "the p-Laplacian is singular there; use eps > 0"
            )


def p_energy(values, grid: Grid, p, eps, want_grad=True):
    if want_grad:
        _check_degenerate(values, grid, p, eps)
    return kernels.p_energy_grad(values, grid.spacing, p, eps, want_grad)


def signed_power(z, e):
    """``|z|^(e-1) z`` with value 0 at z = 0."""
    return np.sign(z) * np.abs(z) ** (e - 1.0)


def pos_power(eta, e):
    """``(eta^+)^e``, taken as 0 wherever eta <= 0 (also for e = 0)."""
    out = np.zeros_like(eta)
    mask = eta > 0
    out[mask] = eta[mask] ** e
    return out


def coupling_weight(psi, params):
    """Nodal weight ``(psi^+)^(theta+1)`` of the lower-order term."""
    return pos_power(psi, params.theta + 1.0)


def p_hessian(values, grid: Grid, p, eps, shift=0.0):
    """Sparse Hessian of the p-energy restricted to interior nodes.

    ``shift`` adds ``shift * (cell weight)`` to the isotropic part, which
    keeps the matrix definite where ``|grad u| = eps = 0`` and ``p > 2``.
    """
    n = grid.ndim
    dims = grid.dims
    vol = grid.cell_volume
    g = kernels.cell_gradient(values, grid.spacing).reshape(-1, n)
    s = np.sum(g * g, axis=1) + eps * eps
    with np.errstate(divide="ignore", invalid="ignore"):
        w = s ** (0.5 * p - 1.0)
        aniso = np.where(s > 0, (p - 2.0) / s, 0.0)
    offsets = np.array(np.meshgrid(*[[0, 1]] * n, indexing="ij")).reshape(n, -1).T
    scale = np.array([1.0 / (h * 2 ** (n - 1)) for h in grid.spacing])
    B = (2 * offsets.T - 1) * scale[:, None]          # (n, 2^n) shape-gradient matrix
    bg = g @ B                                         # (cells, 2^n)
    local = vol * (
        (w + shift)[:, None, None] * (B.T @ B)[None]
        + (w * aniso)[:, None, None] * bg[:, :, None] * bg[:, None, :]
    )

    cell_idx = np.array(np.meshgrid(*[np.arange(c) for c in grid.cell_shape], indexing="ij")).reshape(n, -1).T
    strides = np.array([int(np.prod(dims[d + 1:])) for d in range(n)])
    corner_nodes = (cell_idx[:, None, :] + offsets[None, :, :]) @ strides  # (cells, 2^n)

    interior_id = -np.ones(int(np.prod(dims)), dtype=np.int64)
    inner = np.zeros(dims, dtype=bool)
    inner[grid.interior] = True
    interior_id[inner.ravel()] = np.arange(grid.n_interior)
    cid = interior_id[corner_nodes]
    rows = np.repeat(cid[:, :, None], cid.shape[1], axis=2)
    cols = np.repeat(cid[:, None, :], cid.shape[1], axis=1)
    keep = (rows >= 0) & (cols >= 0)
    m = grid.n_interior
    return sp.coo_matrix((local[keep], (rows[keep], cols[keep])), shape=(m, m)).tocsr()


# -- public functionals ------------------------------------------------------

def p_dirichlet(u: GridFunction, p: float, eps: float = 0.0) -> float:
    """``(1/p) sum_cells (|grad u|^2 + eps^2)^(p/2) h^N``."""
    return p_energy(u.values, u.grid, p, eps, want_grad=False)[0]


def grad_p_dirichlet(u: GridFunction, p: float, eps: float = 0.0) -> GridFunction:
    """Nodal gradient of :func:`p_dirichlet`, zero on the boundary.

    Raises :class:`DegenerateConfigurationError` for ``p < 2``, ``eps = 0``
    when some cell gradient is zero.
    """
    _, g = p_energy(u.values, u.grid, p, eps)
    g[u.grid.boundary_mask] = 0.0
    return GridFunction(u.grid, g)


def J_value(z: GridFunction, eta: GridFunction, f: GridFunction, params: CouplingParams) -> float:
    """Saddle functional ``J(z, eta)``.

    ``int |grad eta|^p`` is evaluated as ``p * p_dirichlet(eta, p, eps)`` so
    that J splits exactly into :func:`I1_value` and the eta-only term.
    """
    p, A, r, th = params.p, params.A, params.r, params.theta
    eta_term = p * p_dirichlet(eta, p, params.eps)
    return I1_value(z, eta, f, params) - A * (th + 1) / (p * r) * eta_term


def I1_value(z: GridFunction, psi: GridFunction, f: GridFunction, params: CouplingParams) -> float:
    return _I1(z.values, psi.values, f.values, z.grid, params, want_grad=False)[0]


def I1_grad(z: GridFunction, psi: GridFunction, f: GridFunction, params: CouplingParams) -> GridFunction:
    _, g = _I1(z.values, psi.values, f.values, z.grid, params)
    return GridFunction(z.grid, g)


def I3_value(eta: GridFunction, v: GridFunction, params: CouplingParams) -> float:
    return _I3(eta.values, v.values, eta.grid, params, want_grad=False)[0]


def I3_grad(eta: GridFunction, v: GridFunction, params: CouplingParams) -> GridFunction:
    _, g = _I3(eta.values, v.values, eta.grid, params)
    return GridFunction(eta.grid, g)


def _I1(z, psi, f, grid, params, want_grad=True, weight=None):
    vol = grid.cell_volume
    A, r = params.A, params.r
    if weight is None:
        weight = coupling_weight(psi, params)
    e, g = p_energy(z, grid, params.p, params.eps, want_grad)
    az = np.abs(z)
    val = e + A / r * vol * float(np.sum(weight * az**r)) - vol * float(np.sum(f * z))
    if not want_grad:
        return val, None
    g = g + vol * (A * weight * signed_power(z, r) - f)
    g[grid.boundary_mask] = 0.0
    return val, g


def _I3(eta, v, grid, params, want_grad=True, vr=None):
    vol = grid.cell_volume
    k = params.theta + 1.0
    if vr is None:
        vr = np.abs(v) ** params.r
    e, g = p_energy(eta, grid, params.p, params.eps, want_grad)
    val = k * e - vol * float(np.sum(pos_power(eta, k) * vr))
    if not want_grad:
        return val, None
    g = k * g - vol * k * pos_power(eta, params.theta) * vr
    g[grid.boundary_mask] = 0.0
    return val, g
