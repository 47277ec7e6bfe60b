# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled grid kernels; same contract as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport pow

cnp.import_array()


def cell_gradient(u, spacing):
    u = np.ascontiguousarray(u, dtype=np.float64)
    if u.ndim == 2:
        return _grad2(u, spacing[0], spacing[1])
    return _grad3(u, spacing[0], spacing[1], spacing[2])


cdef _grad2(const double[:, ::1] u, double hx, double hy):
    cdef Py_ssize_t nx = u.shape[0], ny = u.shape[1], i, j
    out = np.empty((nx - 1, ny - 1, 2))
    cdef double[:, :, ::1] g = out
    cdef double ax = 0.5 / hx, ay = 0.5 / hy
    cdef double u00, u10, u01, u11
    for i in range(nx - 1):
        for j in range(ny - 1):
            u00 = u[i, j]; u10 = u[i + 1, j]; u01 = u[i, j + 1]; u11 = u[i + 1, j + 1]
            g[i, j, 0] = ax * (u10 - u00 + u11 - u01)
            g[i, j, 1] = ay * (u01 - u00 + u11 - u10)
    return out


cdef _grad3(const double[:, :, ::1] u, double hx, double hy, double hz):
    cdef Py_ssize_t nx = u.shape[0], ny = u.shape[1], nz = u.shape[2], i, j, k
    out = np.empty((nx - 1, ny - 1, nz - 1, 3))
    cdef double[:, :, :, ::1] g = out
    cdef double ax = 0.25 / hx, ay = 0.25 / hy, az = 0.25 / hz
    cdef double c000, c100, c010, c110, c001, c101, c011, c111
    for i in range(nx - 1):
        for j in range(ny - 1):
            for k in range(nz - 1):
                c000 = u[i, j, k]; c100 = u[i + 1, j, k]
                c010 = u[i, j + 1, k]; c110 = u[i + 1, j + 1, k]
                c001 = u[i, j, k + 1]; c101 = u[i + 1, j, k + 1]
                c011 = u[i, j + 1, k + 1]; c111 = u[i + 1, j + 1, k + 1]
                g[i, j, k, 0] = ax * (c100 - c000 + c110 - c010 + c101 - c001 + c111 - c011)
                g[i, j, k, 1] = ay * (c010 - c000 + c110 - c100 + c011 - c001 + c111 - c101)
                g[i, j, k, 2] = az * (c001 - c000 + c101 - c100 + c011 - c010 + c111 - c110)
    return out


def p_energy_grad(u, spacing, double p, double eps, bint want_grad=True):
    u = np.ascontiguousarray(u, dtype=np.float64)
    if u.ndim == 2:
        return _pe2(u, spacing[0], spacing[1], p, eps, want_grad)
    return _pe3(u, spacing[0], spacing[1], spacing[2], p, eps, want_grad)


cdef _pe2(const double[:, ::1] u, double hx, double hy, double p, double eps, bint want_grad):
    cdef Py_ssize_t nx = u.shape[0], ny = u.shape[1], i, j
    cdef double ax = 0.5 / hx, ay = 0.5 / hy, vol = hx * hy
    cdef double e2 = eps * eps, half_p = 0.5 * p, wexp = 0.5 * p - 1.0
    cdef double gx, gy, s, w, qx, qy, total = 0.0
    grad = np.zeros((nx, ny)) if want_grad else None
    cdef double[:, ::1] gr
    if want_grad:
        gr = grad
    for i in range(nx - 1):
        for j in range(ny - 1):
            gx = ax * (u[i + 1, j] - u[i, j] + u[i + 1, j + 1] - u[i, j + 1])
            gy = ay * (u[i, j + 1] - u[i, j] + u[i + 1, j + 1] - u[i + 1, j])
            s = gx * gx + gy * gy + e2
            total += pow(s, half_p)
            if want_grad:
                w = vol * pow(s, wexp)
                qx = w * gx * ax
                qy = w * gy * ay
                gr[i, j] += -qx - qy
                gr[i + 1, j] += qx - qy
                gr[i, j + 1] += -qx + qy
                gr[i + 1, j + 1] += qx + qy
    return total * vol / p, grad


cdef _pe3(const double[:, :, ::1] u, double hx, double hy, double hz, double p, double eps,
          bint want_grad):
    cdef Py_ssize_t nx = u.shape[0], ny = u.shape[1], nz = u.shape[2], i, j, k
    cdef double ax = 0.25 / hx, ay = 0.25 / hy, az = 0.25 / hz, vol = hx * hy * hz
    cdef double e2 = eps * eps, half_p = 0.5 * p, wexp = 0.5 * p - 1.0
    cdef double c000, c100, c010, c110, c001, c101, c011, c111
    cdef double gx, gy, gz, s, w, qx, qy, qz, total = 0.0
    grad = np.zeros((nx, ny, nz)) if want_grad else None
    cdef double[:, :, ::1] gr
    if want_grad:
        gr = grad
    for i in range(nx - 1):
        for j in range(ny - 1):
            for k in range(nz - 1):
                c000 = u[i, j, k]; c100 = u[i + 1, j, k]
                c010 = u[i, j + 1, k]; c110 = u[i + 1, j + 1, k]
                c001 = u[i, j, k + 1]; c101 = u[i + 1, j, k + 1]
                c011 = u[i, j + 1, k + 1]; c111 = u[i + 1, j + 1, k + 1]
                gx = ax * (c100 - c000 + c110 - c010 + c101 - c001 + c111 - c011)
                gy = ay * (c010 - c000 + c110 - c100 + c011 - c001 + c111 - c101)
                gz = az * (c001 - c000 + c101 - c100 + c011 - c010 + c111 - c110)
                s = gx * gx + gy * gy + gz * gz + e2
                total += pow(s, half_p)
                if want_grad:
                    w = vol * pow(s, wexp)
                    qx = w * gx * ax
                    qy = w * gy * ay
                    qz = w * gz * az
                    gr[i, j, k] += -qx - qy - qz
                    gr[i + 1, j, k] += qx - qy - qz
                    gr[i, j + 1, k] += -qx + qy - qz
                    gr[i + 1, j + 1, k] += qx + qy - qz
                    gr[i, j, k + 1] += -qx - qy + qz
                    gr[i + 1, j, k + 1] += qx - qy + qz
                    gr[i, j + 1, k + 1] += -qx + qy + qz
                    gr[i + 1, j + 1, k + 1] += qx + qy + qz
    return total * vol / p, grad
