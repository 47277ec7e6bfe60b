"""Built-in verification battery behind ``plapsys check``.

Each check returns a :class:`CheckResult` carrying its tolerance and the
measured value, so a failure says by how much it missed.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import exponents as ex
from .energy import CouplingParams, I1_grad, I1_value, I3_grad, I3_value, grad_p_dirichlet, p_dirichlet
from .grid import Grid, GridFunction
from .optimize import SolverOptions
from .subsolvers import solve_S


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<28} measured={self.measured:.6g}  required {self.tolerance}"


def exponent_identities() -> CheckResult:
    """Exact identities among the exponent formulas, over a small rational grid."""
    worst = Fraction(0)
    for N in (2, 3, 4):
        for p in (Fraction(3, 2), Fraction(9, 5)):
            if not p < N:
                continue
            pstar = ex.sobolev_conjugate(N, p)
            for r in (Fraction(2), Fraction(6), Fraction(13, 2)):
                r1d = ex.dual_exponent(r + 1)
                diffs = [
                    ex.s_exponent(r1d, p, r) - (r + 1),
                    ex.s_exponent(Fraction(8, 5), p, r) - r - ex.gamma_exponent(Fraction(8, 5), p, r),
                    ex.r_threshold(N, p) - (pstar - 1),
                    ex.m2(N, p, r, 0) - ex.m1(N, p, r),
                    ex.t_exponent(N, ex.dual_exponent(pstar), p) - pstar,
                ]
                worst = max([worst] + [abs(d) for d in diffs])
        r = Fraction(5)
        worst = max(worst, abs(ex.m1(3, 2, r) - 6 * r / (5 + 4 * r)))
    return CheckResult("exponent identities", worst == 0, float(worst), "== 0 (exact)")


def _fd_error(value, grad, x, rng, h=1e-6):
    """Max relative error of central differences along random unit directions."""
    worst = 0.0
    for _ in range(3):
        d = rng.standard_normal(x.size)
        d /= np.linalg.norm(d)
        fd = (value(x + h * d) - value(x - h * d)) / (2 * h)
        an = float(grad(x) @ d)
        worst = max(worst, abs(fd - an) / max(abs(an), abs(fd), 1e-8))
    return worst


def gradient_checks(params: CouplingParams, n_points: int = 20, seed: int = 0,
                    n_cells: int = 7) -> CheckResult:
    """Finite differences against analytic gradients of the p-energy, I1 and I3 on an 8 x 8 node grid."""
    grid = Grid.uniform(n_cells)
    rng = np.random.default_rng(seed)
    fv = GridFunction.from_interior(grid, rng.standard_normal(grid.n_interior))
    p, eps = params.p, params.eps

    def gf(x):
        return GridFunction.from_interior(grid, x)

    worst = 0.0
    for _ in range(n_points):
        x = rng.standard_normal(grid.n_interior)
        psi = gf(np.abs(rng.standard_normal(grid.n_interior)))
        v = gf(rng.standard_normal(grid.n_interior))
        # keep eta away from the kink of (eta^+)^(theta+1) at 0
        eta0 = 0.5 + np.abs(rng.standard_normal(grid.n_interior))
        worst = max(
            worst,
            _fd_error(lambda y: p_dirichlet(gf(y), p, eps),
                      lambda y: grad_p_dirichlet(gf(y), p, eps).interior_values, x, rng),
            _fd_error(lambda y: I1_value(gf(y), psi, fv, params),
                      lambda y: I1_grad(gf(y), psi, fv, params).interior_values, x, rng),
            _fd_error(lambda y: I3_value(gf(y), v, params),
                      lambda y: I3_grad(gf(y), v, params).interior_values, eta0, rng),
        )
    return CheckResult("gradient finite differences", worst <= 1e-5, worst, "<= 1e-05 relative")


def poisson_error(n_cells: int, eps: float = 0.0, opts: SolverOptions | None = None) -> float:
    """Max nodal error of S for p = 2, A = 0 against ``sin(pi x) sin(pi y)``."""
    grid = Grid.uniform(n_cells)
    exact = GridFunction.from_function(grid, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
    f = exact * (2 * np.pi**2)
    u = solve_S(GridFunction.zeros(grid), f, CouplingParams(p=2.0, A=0.0, eps=eps), opts)
    return float(np.max(np.abs(u.values - exact.values)))


def poisson_oracle(eps: float = 0.0) -> CheckResult:
    ratio = poisson_error(32, eps) / poisson_error(64, eps)
    return CheckResult("Poisson O(h^2) ratio", 3.5 <= ratio <= 4.5, ratio, "in [3.5, 4.5]")


def homogeneity_error(p: float = 3.0, N: int = 3, n_cells: int = 6, lam: float = 3.0,
                      eps: float = 0.0, seed: int = 0) -> float:
    """``|S(lam f) - lam^(1/(p-1)) S(f)| / |lam^(1/(p-1)) S(f)|`` in the max norm, with A = 0."""
    grid = Grid.uniform(n_cells, dim=N)
    rng = np.random.default_rng(seed)
    f = GridFunction.from_interior(grid, 1.0 + rng.random(grid.n_interior))
    params = CouplingParams(p=p, A=0.0, eps=eps)
    opts = SolverOptions(tol=1e-11, max_iters=200)
    zero = GridFunction.zeros(grid)
    u1 = solve_S(zero, f, params, opts)
    u2 = solve_S(zero, f * lam, params, opts)
    ref = u1.values * lam ** (1.0 / (p - 1.0))
    return float(np.max(np.abs(u2.values - ref)) / np.max(np.abs(ref)))


def homogeneity_check(eps: float = 0.0) -> CheckResult:
    err = homogeneity_error(eps=eps)
    return CheckResult("p-homogeneity of S", err <= 1e-4, err, "<= 1e-04 relative")


def run_battery(params: CouplingParams | None = None, seed: int = 0) -> list[CheckResult]:
    """All checks; ``params`` feeds the gradient checks and the smoothing of the others."""
    params = params or CouplingParams(p=1.5, A=1.0, r=6.0, theta=0.3)
    return [
        exponent_identities(),
        gradient_checks(params, seed=seed),
        poisson_oracle(params.eps),
        homogeneity_check(params.eps),
    ]
