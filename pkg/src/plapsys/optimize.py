"""Line-search minimizers for the smooth discrete energies.

Three search directions share one Armijo backtracking loop:

* ``gradient_descent``: steepest descent, step length carried between
  iterations;
* ``nonlinear_cg``: Polak-Ribiere+ with periodic restarts;
* ``newton_damped``: sparse Newton (or Gauss-Newton-like convex part of the
  Hessian, supplied by the caller) with backtracking.

Near convergence the energy decrease can fall below the rounding level of
the energy itself, and Armijo tests on energy values become noise.  The
search then switches to the directional derivative: a step is accepted
where ``|grad . d|`` dropped to a tenth of its initial value and the energy
did not rise beyond rounding; otherwise the run stops with
``converged=False``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

METHODS = ("gradient_descent", "nonlinear_cg", "newton_damped")


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    max_iters: int = 5000
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    method: str = "newton_damped"
    restart: int | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        for name in ("armijo_c", "backtrack"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {getattr(self, name)}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")


@dataclass
class MinimizeResult:
    x: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    values: list[float] = field(default_factory=list)
    message: str = ""


def _newton_direction(H, g):
    try:
        d = spla.spsolve(H.tocsc(), -g)
    except RuntimeError:  # singular factorization
        return None
    if not np.all(np.isfinite(d)):
        return None
    return d


def _derivative_search(fun, x, d, slope, alpha, max_evals=20):
    """Step with ``|g(x + a d) . d| <= 0.1 |slope|`` by bracketing and secant steps."""
    lo, d_lo = 0.0, slope
    hi = d_hi = None
    for _ in range(max_evals):
        x_new = x + alpha * d
        f_new, g_new = fun(x_new)
        if not np.isfinite(f_new):
            hi, d_hi = alpha, None
        else:
            deriv = float(g_new @ d)
            if abs(deriv) <= 0.1 * abs(slope):
                return alpha, x_new, f_new, g_new
            if deriv < 0:
                lo, d_lo = alpha, deriv
            else:
                hi, d_hi = alpha, deriv
        if hi is None:
            alpha *= 2.0
        elif d_hi is None:
            alpha = 0.5 * (lo + hi)
        else:
            # secant on the derivative, kept inside the bracket
            a = lo - d_lo * (hi - lo) / (d_hi - d_lo)
            alpha = a if lo + 0.01 * (hi - lo) < a < hi - 0.01 * (hi - lo) else 0.5 * (lo + hi)
    return None


def minimize(
    fun: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: np.ndarray,
    opts: SolverOptions,
    gtol: float,
    hess: Callable[[np.ndarray], sp.spmatrix] | None = None,
    value_only: Callable[[np.ndarray], float] | None = None,
) -> MinimizeResult:
    """Minimize ``fun`` (returning value and gradient) from ``x0``.

    ``gtol`` is the absolute Euclidean gradient-norm target.  ``hess`` must
    return a symmetric positive (semi)definite sparse matrix when the method
    is ``newton_damped``; without it Newton falls back to nonlinear CG.
    """
    method = opts.method
    if method == "newton_damped" and hess is None:
        method = "nonlinear_cg"
    value_only = value_only or (lambda x: fun(x)[0])
    restart = opts.restart or max(x0.size, 1)

    x = np.array(x0, dtype=float)
    f, g = fun(x)
    gnorm = float(np.linalg.norm(g))
    values = [f]
    d_prev = g_prev = None
    step = 1.0
    it = 0
    message = "max_iters reached"
    rounding = 64 * np.finfo(float).eps

    while True:
        if gnorm <= gtol:
            message = "gradient tolerance met"
            break
        if it >= opts.max_iters:
            break
        it += 1

        if method == "newton_damped":
            d = _newton_direction(hess(x), g)
            if d is None or g @ d >= 0:
                d = -g
            alpha = 1.0
        elif method == "nonlinear_cg":
            if d_prev is None or it % restart == 0:
                d = -g
            else:
                beta = max(0.0, g @ (g - g_prev) / (g_prev @ g_prev))
                d = -g + beta * d_prev
                if g @ d >= 0:
                    d = -g
            alpha = step
        else:
            d = -g
            alpha = step

        slope = float(g @ d)
        accepted = False
        for _ in range(60):
            if -alpha * slope < rounding * (1.0 + abs(f)):
                break  # predicted decrease is below rounding: use the fallback
            x_new = x + alpha * d
            f_new = value_only(x_new)
            if np.isfinite(f_new) and f_new <= f + opts.armijo_c * alpha * slope:
                accepted = True
                break
            alpha *= opts.backtrack
        if accepted:
            f_new, g_new = fun(x_new)
        else:
            # decrease below rounding: locate a zero of the directional
            # derivative instead, which stays well resolved near the minimum
            found = _derivative_search(fun, x, d, slope, 1.0 if method == "newton_damped" else step)
            if found is not None:
                alpha, x_new, f_new, g_new = found
                accepted = f_new <= f + rounding * (1.0 + abs(f))
            if not accepted:
                message = "line search failed"
                break

        g_prev, d_prev = g, d
        step = min(2.0 * alpha, 1e6)
        x, f, g = x_new, f_new, g_new
        gnorm = float(np.linalg.norm(g))
        values.append(f)

    converged = gnorm <= gtol
    if not converged:
        log.debug("minimize: %s after %d iterations, |g|=%.3e > %.3e", message, it, gnorm, gtol)
    return MinimizeResult(x, f, gnorm, it, converged, values, message)
