"""Alternating fixed-point iteration ``phi <- T(S(phi))`` for the coupled system.

Also hosts the diagnostics used to certify a computed pair: the a priori
quantities bounded uniformly along approximating sequences, the residual of
the energy identity ``int |grad phi|^p = int |u|^r phi^(theta+1)``, a
randomized saddle-point probe of J and the ratio ``max |u| / phi``.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

import scipy.sparse as sp
import scipy.sparse.linalg as spla

from scipy.optimize import minimize_scalar

from .energy import (
    CouplingParams,
    J_value,
    _I1,
    _I3,
    coupling_weight,
    p_energy,
    p_hessian,
    pos_power,
    signed_power,
)
from .grid import GridFunction, integrate_nodes, lq_norm, w1p_seminorm
from .optimize import SolverOptions
from .subsolvers import (
    EigenPair,
    _hessian_shift,
    first_eigenpair,
    s_hessian,
    s_tolerance,
    scaling_init,
    solve_S,
    solve_T,
)

log = logging.getLogger(__name__)

TRACE_COLUMNS = (
    "k", "dphi_rel", "J", "res_S", "res_T", "norm_u_r1", "norm_u_w1p",
    "norm_phi_w1p", "int_phi_ur", "int_ur1_phitheta", "energy_id_res",
)


@dataclass(frozen=True)
class FixedPointOptions:
    """Outer-loop controls.

    ``omega`` is a fixed relaxation factor in (0, 1] or ``"auto"``: then each
    step length is found by backtracking until the reduced functional
    ``G(phi) = J(S(phi), phi)`` increases sufficiently along
    ``T(S(phi)) - phi`` (phi maximizes J in its second slot).

    ``accel="newton"`` runs up to ``newton_iters`` steps of reduced Newton
    before the Picard loop: it minimizes ``M(z) = J(z, T(z))`` over the
    first unknown (convex for theta = 0), with directions from the sparse
    saddle-point system.  The Picard rows that follow certify the result.
    """

    fp_tol: float = 1e-6
    max_outer: int = 200
    omega: float | str = 1.0
    init: str = "zero"
    armijo_c: float = 1e-4
    min_omega: float = 1e-8
    accel: str = "none"
    newton_iters: int = 100

    def __post_init__(self):
        if not self.fp_tol > 0:
            raise ValueError(f"fp_tol must be positive, got {self.fp_tol}")
        if self.max_outer < 1:
            raise ValueError(f"max_outer must be >= 1, got {self.max_outer}")
        if self.omega != "auto" and not 0 < float(self.omega) <= 1:
            raise ValueError(f"damping omega must lie in (0, 1] or be 'auto', got {self.omega}")
        if self.accel not in ("none", "newton"):
            raise ValueError(f"accel must be 'none' or 'newton', got {self.accel!r}")
        if self.init not in ("zero", "eigen"):
            raise ValueError(f"init must be 'zero' or 'eigen', got {self.init!r}")


@dataclass(frozen=True)
class LemmaQuantities:
    norm_u_r1: float
    norm_u_w1p: float
    norm_phi_w1p: float
    int_phi_ur: float
    int_ur1_phitheta: float


@dataclass(frozen=True)
class TraceRecord:
    k: int
    dphi_rel: float
    J: float
    res_S: float
    res_T: float
    norm_u_r1: float
    norm_u_w1p: float
    norm_phi_w1p: float
    int_phi_ur: float
    int_ur1_phitheta: float
    energy_id_res: float


@dataclass
class SolveTrace:
    records: list[TraceRecord] = field(default_factory=list)

    def append(self, rec: TraceRecord):
        if self.records and rec.k <= self.records[-1].k:
            raise ValueError("trace index must increase")
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for rec in self.records:
            w.writerow([rec.k] + [repr(float(getattr(rec, c))) for c in TRACE_COLUMNS[1:]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SolveTrace":
        rows = list(csv.DictReader(io.StringIO(text)))
        if rows and tuple(rows[0].keys()) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace columns {tuple(rows[0].keys())}")
        trace = cls()
        for row in rows:
            trace.append(TraceRecord(int(row["k"]), *(float(row[c]) for c in TRACE_COLUMNS[1:])))
        return trace


@dataclass
class SolutionPair:
    u: GridFunction
    phi: GridFunction
    converged: bool
    trace: SolveTrace
    eigen: EigenPair | None = None


def lemma_quantities(u: GridFunction, phi: GridFunction, params: CouplingParams) -> LemmaQuantities:
    p, r, th = params.p, params.r, params.theta
    au = np.abs(u.values)
    ph = phi.values
    return LemmaQuantities(
        norm_u_r1=lq_norm(u, r + 1),
        norm_u_w1p=w1p_seminorm(u, p),
        norm_phi_w1p=w1p_seminorm(phi, p),
        int_phi_ur=integrate_nodes(ph ** (th + 1) * au**r, u.grid),
        int_ur1_phitheta=integrate_nodes(au ** (r + 1) * ph**th, u.grid),
    )


def energy_identity_residual(u: GridFunction, phi: GridFunction, params: CouplingParams) -> float:
    """``|int |grad phi|^p - int |u|^r phi^(theta+1)| / max(1, int |grad phi|^p)``."""
    p = params.p
    grad_term = w1p_seminorm(phi, p) ** p
    source_term = integrate_nodes(np.abs(u.values) ** params.r * phi.values ** (params.theta + 1), u.grid)
    return abs(grad_term - source_term) / max(1.0, grad_term)


def _relative_change(new: GridFunction, old: GridFunction, p) -> float:
    diff = w1p_seminorm(new - old, p)
    if diff == 0.0:
        return 0.0
    return diff / max(w1p_seminorm(new, p), np.finfo(float).tiny)


def _record(k, dphi, u, phi, f, params, res_s, res_t):
    return TraceRecord(
        k, dphi, J_value(u, phi, f, params), res_s, res_t,
        *asdict(lemma_quantities(u, phi, params)).values(),
        energy_identity_residual(u, phi, params),
    )


def _ray_rescale(f, params, T, u, phi, res_t):
    """Best multiple of ``u`` for ``M``, using homogeneity along the ray.

    With ``eta = T(u)`` and ``q = r / (p - 1 - theta)`` one has
    ``T(t u) = t^q eta``, hence (for eps = 0)
    ``M(t u) = t^p E(u) - t <f, u> - (A/r) t^(q p) I3(eta; u)``.
    No extra solves are needed to pick ``t``; the pair is kept unless the
    rescaled one really lowers M.
    """
    grid = f.grid
    p, A, r, th = params.p, params.A, params.r, params.theta
    vol = grid.cell_volume
    q = r / (p - 1.0 - th)
    E = p_energy(u.values, grid, p, params.eps, want_grad=False)[0]
    F = vol * float(np.sum(f.values * u.values))
    I3 = _I3(phi.values, None, grid, params, want_grad=False, vr=np.abs(u.values) ** r)[0]
    if not I3 < 0:
        return u, phi, res_t

    def along(log_t):
        t = np.exp(log_t)
        return t**p * E - t * F - (A / r) * t ** (q * p) * I3

    # the q p term dominates, so the minimizer sits at t <= max(1, ...) - search log t
    best = minimize_scalar(along, bounds=(-60.0, 5.0), method="bounded", options={"xatol": 1e-10})
    t = float(np.exp(best.x))
    if not along(best.x) < along(0.0):
        return u, phi, res_t
    u_t = u * t
    phi_t, res_new = T(u_t, phi * t**q)
    if J_value(u_t, phi_t, f, params) < J_value(u, phi, f, params):
        log.info("reduced Newton: rescaled start by t=%.6g", t)
        return u_t, phi_t, res_new
    return u, phi, res_t


def _kkt_step(Hzz, D, Hee, g):
    """``(dz, deta)`` of the saddle system, or ``(None, None)`` if dz is not a descent direction."""
    n = g.size
    kkt = sp.bmat([[Hzz, D], [D, Hee]], format="csc")
    try:
        step = spla.spsolve(kkt, np.concatenate([-g, np.zeros(n)]))
    except RuntimeError:
        return None, None
    dz, deta = step[:n], step[n:]
    if not np.all(np.isfinite(step)) or g @ dz >= 0:
        return None, None
    return dz, deta


def _reduced_newton(f, params, opts, fp_opts, T, u, phi, res_t, trace):
    """Damped Newton on ``M(z) = J(z, T(z))``; returns the last ``(u, phi)``.

    By the envelope theorem ``grad M(z)`` is the I1 gradient with the
    frozen weight ``T(z)^(theta+1)``.  The step solves the saddle system
    ``[[Hzz, D], [D, -(A/r) K]] (dz, deta) = (-grad M, 0)`` whose Schur
    complement ``Hzz + (r/A) D K^-1 D`` is positive definite, so ``dz`` is
    a descent direction; ``K`` is the convex part of the I3 Hessian.
    """
    grid = f.grid
    p, A, r, th = params.p, params.A, params.r, params.theta
    k_exp = th + 1.0
    vol = grid.cell_volume
    n = grid.n_interior
    gtol = s_tolerance(f, opts)
    shift = _hessian_shift(grid, p, params.eps)
    rounding = 64 * np.finfo(float).eps

    def gradient(z, eta):
        _, g = _I1(z.values, None, f.values, grid, params, weight=coupling_weight(eta.values, params))
        return grid.restrict(g)

    u, phi, res_t = _ray_rescale(f, params, T, u, phi, res_t)
    M = J_value(u, phi, f, params)
    g = gradient(u, phi)
    for _ in range(fp_opts.newton_iters):
        gnorm = float(np.linalg.norm(g))
        if gnorm <= gtol:
            break
        weight = coupling_weight(phi.values, params)
        Hzz = s_hessian(u.values, weight, grid, params)
        D = sp.diags(vol * A * k_exp * grid.restrict(pos_power(phi.values, th) * signed_power(u.values, r)))
        K = k_exp * p_hessian(phi.values, grid, p, params.eps, shift)
        dz = None
        if th > 0:
            # full I3 Hessian: semidefinite at the maximizer, so try it first
            concave = vol * k_exp * th * grid.restrict(pos_power(phi.values, th - 1.0) * np.abs(u.values) ** r)
            dz, deta = _kkt_step(Hzz, D, -(A / r) * (K - sp.diags(concave)), g)
        if dz is None:
            dz, deta = _kkt_step(Hzz, D, -(A / r) * K, g)
        if dz is None:
            dz, deta = -g, np.zeros(n)
        slope = float(g @ dz)

        alpha = 1.0
        accepted = False
        for attempt in range(40):
            u_new = GridFunction.from_interior(grid, u.interior_values + alpha * dz)
            guess = GridFunction.from_interior(grid, np.maximum(phi.interior_values + alpha * deta, 0.0))
            phi_new, res_new = T(u_new, guess)
            M_new = J_value(u_new, phi_new, f, params)
            if np.isfinite(M_new) and M_new <= M + fp_opts.armijo_c * alpha * slope:
                accepted = True
                break
            if attempt >= 8 and M_new <= M + rounding * (1.0 + abs(M)):
                # decrease below rounding: keep the step if the gradient shrank
                g_try = gradient(u_new, phi_new)
                if np.linalg.norm(g_try) < gnorm:
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            log.info("reduced Newton: line search failed at |grad M|=%.3e", gnorm)
            break

        dphi = _relative_change(phi_new, phi, p)
        k = len(trace) + 1
        trace.append(_record(k, dphi, u, phi, f, params, gnorm, res_t))
        log.info("newton %d: |grad M|=%.3e alpha=%.3g dphi=%.3e M=%.10e", k, gnorm, alpha, dphi, M_new)
        u, phi, res_t, M = u_new, phi_new, res_new, M_new
        g = gradient(u, phi)
        if dphi <= fp_opts.fp_tol:
            break
    return u, phi


def solve_system(f: GridFunction, params: CouplingParams,
                 opts: SolverOptions | None = None,
                 fp_opts: FixedPointOptions | None = None,
                 eigen: EigenPair | None = None) -> SolutionPair:
    """Fixed point of ``phi -> T(S(phi))`` by relaxed Picard iteration.

    Starts from ``phi = 0`` (or ``t* phi1`` with ``init="eigen"``).  Row k of
    the trace describes the current pair ``(u, phi)`` with ``u = S(phi)``;
    its ``dphi_rel`` is the relative W^{1,p} distance between ``T(u)`` and
    ``phi``.  The loop stops once that is at most ``fp_tol`` and returns
    that certified pair; ``converged=False`` otherwise.  Rows produced by
    the optional Newton phase describe ``(z, T(z))`` and the change of the
    second component between Newton steps.
    """
    opts = opts or SolverOptions()
    fp_opts = fp_opts or FixedPointOptions()
    grid = f.grid
    p = params.p

    def get_eigen():
        nonlocal eigen
        if eigen is None:
            eigen = first_eigenpair(grid, p, params.eps, opts)
        return eigen

    def T(u, phi):
        if not np.any(u.values):
            return GridFunction.zeros(grid), 0.0
        zeta, info = solve_T(u, params, get_eigen(), opts, x0=phi, full_output=True)
        return zeta, info.residual

    phi = GridFunction.zeros(grid)
    u, info_s = solve_S(phi, f, params, opts, full_output=True)
    if fp_opts.init == "eigen" and np.any(u.values):
        t_star, _, _ = scaling_init(u, params, get_eigen())
        phi = get_eigen().phi1 * t_star
        u, info_s = solve_S(phi, f, params, opts, x0=u, full_output=True)

    trace = SolveTrace()
    if fp_opts.accel == "newton" and params.A > 0 and np.any(u.values):
        zeta, res_t = T(u, phi)
        z, phi = _reduced_newton(f, params, opts, fp_opts, T, u, zeta, res_t, trace)
        u, info_s = solve_S(phi, f, params, opts, x0=z, full_output=True)

    converged = False
    omega = 1.0
    first = len(trace) + 1
    for k in range(first, first + fp_opts.max_outer):
        zeta, res_t = T(u, phi)
        dphi = _relative_change(zeta, phi, p)
        J0 = J_value(u, phi, f, params)
        trace.append(_record(k, dphi, u, phi, f, params, info_s.residual, res_t))
        log.info("outer %d: dphi=%.3e J=%.10e", k, dphi, J0)
        if not (math.isfinite(dphi) and math.isfinite(J0)):
            break
        if dphi <= fp_opts.fp_tol:
            converged = True
            break
        if k == first + fp_opts.max_outer - 1:
            break

        step = zeta - phi
        if fp_opts.omega == "auto":
            gain = J_value(u, zeta, f, params) - J0
            omega = min(1.0, 2.0 * omega)
            while True:
                phi_new = phi + omega * step
                u_new, info_new = solve_S(phi_new, f, params, opts, x0=u, full_output=True)
                if (J_value(u_new, phi_new, f, params) >= J0 + fp_opts.armijo_c * omega * gain
                        or omega <= fp_opts.min_omega):
                    break
                omega *= 0.5
        else:
            omega = float(fp_opts.omega)
            phi_new = zeta if omega == 1.0 else phi + omega * step
            u_new, info_new = solve_S(phi_new, f, params, opts, x0=u, full_output=True)
        # clip rounding-level negatives left by the affine combination
        phi = GridFunction(grid, np.maximum(phi_new.values, 0.0))
        u, info_s = u_new, info_new

    return SolutionPair(u, phi, converged, trace, eigen)


@dataclass(frozen=True)
class SaddleReport:
    passed: bool
    n_probes: int
    amplitude: float
    slack: float
    worst_u_margin: float
    worst_phi_margin: float


def saddle_check(u: GridFunction, phi: GridFunction, f: GridFunction, params: CouplingParams,
                 n_probes: int = 32, amplitude: float = 1e-3, seed: int = 0,
                 curvature_allowance: float = 1e-2) -> SaddleReport:
    """Probe J around ``(u, phi)`` along random unit-seminorm directions.

    Passes when ``J(u + a w, phi) >= J - slack`` and
    ``J(u, phi + a w) <= J + slack`` for every probe, with
    ``slack = 1e-8 (1 + |J|) + curvature_allowance * a^2``.  Margins are
    reported as the signed distance to failure (negative means violated).
    """
    grid = u.grid
    rng = np.random.default_rng(seed)
    J0 = J_value(u, phi, f, params)
    slack = 1e-8 * (1.0 + abs(J0)) + curvature_allowance * amplitude**2
    worst_u = worst_phi = math.inf
    for _ in range(n_probes):
        w = GridFunction.from_interior(grid, rng.standard_normal(grid.n_interior))
        w = w * (1.0 / w1p_seminorm(w, params.p))
        worst_u = min(worst_u, J_value(u + amplitude * w, phi, f, params) - J0 + slack)
        w = GridFunction.from_interior(grid, rng.standard_normal(grid.n_interior))
        w = w * (1.0 / w1p_seminorm(w, params.p))
        worst_phi = min(worst_phi, J0 + slack - J_value(u, phi + amplitude * w, f, params))
    passed = worst_u >= 0 and worst_phi >= 0
    return SaddleReport(passed, n_probes, amplitude, slack, worst_u, worst_phi)


def comparison_constant(u: GridFunction, phi: GridFunction, floor: float) -> float:
    """``max |u| / phi`` over interior nodes with ``phi >= floor`` (inf if none)."""
    if not floor > 0:
        raise ValueError(f"floor must be positive, got {floor}")
    inner = ~u.grid.boundary_mask & (phi.values >= floor)
    if not np.any(inner):
        return math.inf
    return float(np.max(np.abs(u.values[inner]) / phi.values[inner]))
