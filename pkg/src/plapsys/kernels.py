"""Backend selection for the hot grid kernels.

The compiled extension ``_ckernels`` is used when it was built; otherwise
the numpy implementation in ``_kernels_py`` takes over.  Both expose
``cell_gradient(u, spacing)`` and ``p_energy_grad(u, spacing, p, eps,
want_grad)``.  :func:`use_backend` switches explicitly (tests and the
benchmark compare the two).
"""
import logging

from . import _kernels_py

log = logging.getLogger(__name__)

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _kernels_py}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels

_active = _ckernels or _kernels_py


def available_backends():
    return sorted(_BACKENDS)


def backend():
    return "compiled" if _active is _ckernels and _ckernels is not None else "python"


def use_backend(name):
    """Select ``"compiled"`` or ``"python"``; returns the previous name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}")
    previous = backend()
    _active = _BACKENDS[name]
    log.debug("kernel backend %s -> %s", previous, name)
    return previous


def cell_gradient(u, spacing):
    return _active.cell_gradient(u, spacing)


def p_energy_grad(u, spacing, p, eps, want_grad=True):
    return _active.p_energy_grad(u, spacing, float(p), float(eps), want_grad)


scatter_flux = _kernels_py.scatter_flux
