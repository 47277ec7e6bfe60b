"""Pure numpy versions of the grid kernels.

Works for any dimension: the cell gradient along axis ``d`` is the edge
difference along ``d`` averaged over the other axes, and the nodal
gradient of the energy is the adjoint of that map applied to the flux.
"""
import numpy as np


def _avg(a, axis):
    lo = [slice(None)] * a.ndim
    hi = [slice(None)] * a.ndim
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    return 0.5 * (a[tuple(lo)] + a[tuple(hi)])


def _avg_adjoint(a, axis, out_len):
    shape = list(a.shape)
    shape[axis] = out_len
    out = np.zeros(shape)
    lo = [slice(None)] * a.ndim
    hi = [slice(None)] * a.ndim
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    out[tuple(lo)] += 0.5 * a
    out[tuple(hi)] += 0.5 * a
    return out


def cell_gradient(u, spacing):
    n = u.ndim
    comps = []
    for d in range(n):
        g = np.diff(u, axis=d) / spacing[d]
        for e in range(n):
            if e != d:
                g = _avg(g, e)
        comps.append(g)
    return np.stack(comps, axis=-1)


def scatter_flux(flux, spacing, dims):
    """Adjoint of :func:`cell_gradient`: cell vectors -> nodal array."""
    n = len(dims)
    out = np.zeros(dims)
    for d in range(n):
        a = flux[..., d]
        for e in reversed(range(n)):
            if e != d:
                a = _avg_adjoint(a, e, dims[e])
        lo = [slice(None)] * n
        hi = [slice(None)] * n
        lo[d] = slice(None, -1)
        hi[d] = slice(1, None)
        out[tuple(lo)] -= a / spacing[d]
        out[tuple(hi)] += a / spacing[d]
    return out


def p_energy_grad(u, spacing, p, eps, want_grad=True):
    """Return ``(1/p) sum_cells (|g|^2+eps^2)^(p/2) vol`` and its nodal gradient."""
    vol = float(np.prod(spacing))
    g = cell_gradient(u, spacing)
    s = np.sum(g * g, axis=-1) + eps * eps
    energy = float(np.sum(s ** (0.5 * p))) * vol / p
    if not want_grad:
        return energy, None
    with np.errstate(divide="ignore", invalid="ignore"):
        w = s ** (0.5 * p - 1.0)
    flux = (vol * w)[..., None] * g
    return energy, scatter_flux(flux, spacing, u.shape)
