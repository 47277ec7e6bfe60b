"""Solution maps of the two frozen-coefficient problems and the first eigenpair.

``solve_S(psi, f)`` minimizes the strictly convex energy I1 for a frozen
``psi``; ``solve_T(v)`` minimizes I3 for a frozen ``v`` and returns the
nonnegative minimizer.  Both accept ``full_output=True`` to also return a
:class:`SubsolveInfo`; otherwise a non-converged solve only emits a
:class:`NonConvergenceWarning` and returns the best iterate.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .energy import (
    CouplingParams,
    _I1,
    _I3,
    coupling_weight,
    p_energy,
    p_hessian,
)
from .grid import Grid, GridFunction, lq_norm
from .optimize import SolverOptions, minimize


class NonConvergenceWarning(RuntimeWarning):
    pass


@dataclass
class SubsolveInfo:
    converged: bool
    residual: float
    gtol: float
    iterations: int
    values: list
    positive_part_ok: bool = True


@dataclass(frozen=True)
class EigenPair:
    lambda1: float
    phi1: GridFunction

    def __post_init__(self):
        if not self.lambda1 > 0:
            raise ValueError(f"first eigenvalue must be positive, got {self.lambda1}")
        if np.any(self.phi1.values < 0):
            raise ValueError("first eigenfunction must be nonnegative")


def _hessian_shift(grid: Grid, p, eps):
    # only needed where the p-weight can vanish (p > 2, eps = 0)
    return 1e-10 if (p > 2 and eps == 0) else 0.0


def _report(result, gtol, full_output, what, positive_ok=True):
    info = SubsolveInfo(result.converged, result.grad_norm, gtol, result.iterations,
                        result.values, positive_ok)
    if not result.converged and not full_output:
        warnings.warn(f"{what}: {result.message}, residual {result.grad_norm:.3e} > {gtol:.3e}",
                      NonConvergenceWarning, stacklevel=3)
    return info


def s_hessian(z, weight, grid: Grid, params: CouplingParams):
    """Interior Hessian of I1 at the nodal array ``z`` for a frozen coupling weight."""
    p, eps, A, r = params.p, params.eps, params.A, params.r
    H = p_hessian(z, grid, p, eps, _hessian_shift(grid, p, eps))
    if A > 0 and np.any(weight > 0):
        az = np.abs(grid.restrict(z))
        if r < 2:
            az = np.maximum(az, 1e-8)
        H = H + sp.diags(grid.cell_volume * A * (r - 1) * grid.restrict(weight) * az ** (r - 2))
    return H


def s_tolerance(f: GridFunction, opts: SolverOptions) -> float:
    return opts.tol * max(1.0, float(np.linalg.norm(f.values)) * f.grid.cell_volume)


def solve_S(psi: GridFunction, f: GridFunction, params: CouplingParams,
            opts: SolverOptions | None = None, x0: GridFunction | None = None,
            full_output: bool = False):
    """Unique minimizer of ``z -> I1(z; psi, f)``."""
    opts = opts or SolverOptions()
    grid = f.grid
    weight = coupling_weight(psi.values, params)
    fv = f.values

    def fun(x):
        val, g = _I1(grid.embed(x), None, fv, grid, params, weight=weight)
        return val, grid.restrict(g)

    def value(x):
        return _I1(grid.embed(x), None, fv, grid, params, want_grad=False, weight=weight)[0]

    def hess(x):
        return s_hessian(grid.embed(x), weight, grid, params)

    gtol = s_tolerance(f, opts)
    start = np.zeros(grid.n_interior) if x0 is None else x0.interior_values
    if not np.any(fv):
        start = np.zeros(grid.n_interior)
    res = minimize(fun, start, opts, gtol, hess=hess, value_only=value)
    u = GridFunction.from_interior(grid, res.x)
    info = _report(res, gtol, full_output, "solve_S")
    return (u, info) if full_output else u


def scaling_init(v: GridFunction, params: CouplingParams, eigen: EigenPair):
    """Constants of ``t -> c1 t^p - c2 t^(theta+1)`` along the ray of phi1 and its minimizer."""
    p, th = params.p, params.theta
    vol = v.grid.cell_volume
    phi1 = eigen.phi1.values
    c1 = (th + 1) * eigen.lambda1 / p * float(np.sum(phi1**p)) * vol
    c2 = float(np.sum(phi1 ** (th + 1) * np.abs(v.values) ** params.r)) * vol
    if c2 == 0.0:
        return 0.0, c1, c2
    t_star = ((th + 1) * c2 / (p * c1)) ** (1.0 / (p - 1 - th))
    return t_star, c1, c2


def solve_T(v: GridFunction, params: CouplingParams, eigen: EigenPair,
            opts: SolverOptions | None = None, x0: GridFunction | None = None,
            full_output: bool = False):
    """Nonnegative minimizer of ``eta -> I3(eta; v)``.

    The search starts from ``t* phi1`` (negative energy by construction) or
    from ``x0`` when that has lower energy, and is unconstrained; the result
    is replaced by its positive part at the end.
    """
    opts = opts or SolverOptions()
    grid = v.grid
    p, eps, th = params.p, params.eps, params.theta
    vr = np.abs(v.values) ** params.r
    gtol = opts.tol * max(1.0, float(np.linalg.norm(vr)) * grid.cell_volume)
    if not np.any(vr):
        zero = GridFunction.zeros(grid)
        info = SubsolveInfo(True, 0.0, gtol, 0, [0.0])
        return (zero, info) if full_output else zero

    shift = _hessian_shift(grid, p, eps)

    def fun(x):
        val, g = _I3(grid.embed(x), None, grid, params, vr=vr)
        return val, grid.restrict(g)

    def value(x):
        return _I3(grid.embed(x), None, grid, params, want_grad=False, vr=vr)[0]

    def hess(x):
        # convex part only: the coupling term is concave in eta
        return (th + 1) * p_hessian(grid.embed(x), grid, p, eps, shift)

    t_star, _, _ = scaling_init(v, params, eigen)
    start = t_star * eigen.phi1.interior_values
    if x0 is not None and value(x0.interior_values) < value(start):
        start = x0.interior_values
    res = minimize(fun, start, opts, gtol, hess=hess, value_only=value)

    raw = grid.embed(res.x)
    zeta = np.maximum(raw, 0.0)
    e_raw = value(res.x)
    e_pos = value(grid.restrict(zeta))
    positive_ok = e_pos <= e_raw + 1e-12 * (1.0 + abs(e_raw))
    info = _report(res, gtol, full_output, "solve_T", positive_ok)
    out = GridFunction(grid, zeta)
    return (out, info) if full_output else out


def rayleigh_quotient(v: GridFunction, p: float, eps: float = 0.0) -> float:
    """``int |grad v|^p / int |v|^p`` with cell and nodal quadrature."""
    num = p * p_energy(v.values, v.grid, p, eps, want_grad=False)[0]
    den = lq_norm(v, p) ** p
    return num / den


def first_eigenpair(grid: Grid, p: float, eps: float | None = None,
                    opts: SolverOptions | None = None, full_output: bool = False):
    """First eigenpair of the discrete p-Laplacian.

    Projected gradient descent on the unit L^p sphere for the Rayleigh
    quotient.  The gradient is preconditioned by the Hessian of the
    p-energy (for p = 2 the first trial step is exactly inverse iteration),
    and each iterate is renormalized.  Stops when the quotient changes by
    less than ``opts.tol`` relatively.
    """
    opts = opts or SolverOptions()
    if eps is None:
        eps = CouplingParams(p=p).eps
    vol = grid.cell_volume
    shift = _hessian_shift(grid, p, eps)

    def normalize(x):
        return x / (np.sum(np.abs(x) ** p) * vol) ** (1.0 / p)

    def quotient(x):
        return p * p_energy(grid.embed(x), grid, p, eps, want_grad=False)[0] / (np.sum(np.abs(x) ** p) * vol)

    def quotient_grad(x):
        e, ge = p_energy(grid.embed(x), grid, p, eps)
        m = np.sum(np.abs(x) ** p) * vol
        gm = p * vol * np.sign(x) * np.abs(x) ** (p - 1)
        return p * e / m, (p * grid.restrict(ge) * m - p * e * gm) / m**2

    x = normalize(np.prod([np.sin(np.pi * c / e) for c, e in zip(grid.coordinates(), grid.extent)], axis=0)[grid.interior].ravel())
    R, g = quotient_grad(x)
    history = [R]
    converged = False
    it = 0
    for it in range(1, opts.max_iters + 1):
        H = p_hessian(grid.embed(x), grid, p, eps, shift)
        d = spla.spsolve(H.tocsc(), -g)
        if not np.all(np.isfinite(d)) or g @ d >= 0:
            d = -g
        # first trial step is the inverse-iteration point (exact for p = 2)
        alpha = (p - 1.0) / p
        slope = float(g @ d)
        for _ in range(60):
            x_new = normalize(x + alpha * d)
            R_new = quotient(x_new)
            if R_new <= R + opts.armijo_c * alpha * slope:
                break
            alpha *= opts.backtrack
        else:
            break
        change = abs(R - R_new) / R
        x = x_new
        R, g = quotient_grad(x)
        history.append(R)
        if change <= opts.tol:
            converged = True
            break

    if x.mean() < 0:
        x = -x
    x = normalize(np.maximum(x, 0.0))
    phi1 = GridFunction.from_interior(grid, x)
    pair = EigenPair(rayleigh_quotient(phi1, p, eps), phi1)
    if not converged and not full_output:
        warnings.warn(f"first_eigenpair: no convergence in {it} iterations",
                      NonConvergenceWarning, stacklevel=2)
    if full_output:
        return pair, SubsolveInfo(converged, float(np.linalg.norm(g)), opts.tol, it, history)
    return pair
