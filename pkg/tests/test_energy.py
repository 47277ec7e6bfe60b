import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from plapsys.energy import (
    CouplingParams,
    DegenerateConfigurationError,
    I1_grad,
    I1_value,
    I3_grad,
    I3_value,
    J_value,
    grad_p_dirichlet,
    p_dirichlet,
    p_hessian,
    pos_power,
    signed_power,
)
from plapsys.grid import Grid, GridFunction, w1p_seminorm


def rand_gf(grid, rng, scale=1.0, positive=False):
    x = rng.standard_normal(grid.n_interior) * scale
    return GridFunction.from_interior(grid, np.abs(x) if positive else x)


def loop_p_dirichlet(u, p, eps):
    """Cell-by-cell recomputation with the bilinear shape functions."""
    v = u.values
    hx, hy = u.grid.spacing
    total = 0.0
    for i in range(v.shape[0] - 1):
        for j in range(v.shape[1] - 1):
            a, b, c, d = v[i, j], v[i + 1, j], v[i, j + 1], v[i + 1, j + 1]
            # d/dx and d/dy of the bilinear interpolant at the cell center
            gx = ((b - a) + (d - c)) / (2 * hx)
            gy = ((c - a) + (d - b)) / (2 * hy)
            total += (gx * gx + gy * gy + eps * eps) ** (p / 2) * hx * hy
    return total / p


def fd_directional(fun, x, d, t=1e-6):
    return (fun(x + t * d) - fun(x - t * d)) / (2 * t)


# -- parameters ---------------------------------------------------------------

def test_params_defaults_and_validation():
    assert CouplingParams(p=1.5).eps == 1e-8
    assert CouplingParams(p=2.5).eps == 0.0
    assert CouplingParams(p=1.5, eps=0.1).eps == 0.1
    assert CouplingParams(A=0.0).A == 0.0
    for bad in [dict(p=1.0), dict(A=-1.0), dict(r=1.0), dict(theta=-0.1),
                dict(p=1.5, theta=0.5), dict(eps=-1.0)]:
        with pytest.raises(ValueError):
            CouplingParams(**bad)


def test_signed_and_pos_power():
    z = np.array([-2.0, 0.0, 3.0])
    assert np.allclose(signed_power(z, 3.0), [-4.0, 0.0, 9.0])
    assert np.allclose(signed_power(z, 1.5), [-np.sqrt(2), 0.0, np.sqrt(3)])
    assert np.array_equal(pos_power(z, 0.0), [0.0, 0.0, 1.0])
    assert np.allclose(pos_power(z, 2.0), [0.0, 0.0, 9.0])


# -- p-Dirichlet ---------------------------------------------------------------

def test_p_dirichlet_examples(backend, rng):
    g = Grid.uniform(7)
    assert p_dirichlet(GridFunction.zeros(g), 1.5) == 0.0
    u = rand_gf(g, rng)
    assert p_dirichlet(u, 2.0) == pytest.approx(0.5 * w1p_seminorm(u, 2.0) ** 2, rel=1e-13)
    assert p_dirichlet(u, 1.5, 1e-8) == pytest.approx(loop_p_dirichlet(u, 1.5, 1e-8), rel=1e-12)
    assert p_dirichlet(u, 3.0, 0.2) == pytest.approx(loop_p_dirichlet(u, 3.0, 0.2), rel=1e-12)


@given(seed=st.integers(0, 2**16), p=st.floats(1.2, 4.0), e1=st.floats(0, 1), e2=st.floats(0, 1))
def test_p_dirichlet_monotone_in_eps(seed, p, e1, e2):
    g = Grid.uniform(5)
    u = rand_gf(g, np.random.default_rng(seed))
    lo, hi = sorted((e1, e2))
    assert p_dirichlet(u, p, lo) <= p_dirichlet(u, p, hi) * (1 + 1e-14)
    assert p_dirichlet(u, p, 0.0) == pytest.approx(w1p_seminorm(u, p) ** p / p, rel=1e-12)


def test_grad_p_dirichlet_zero_and_boundary(backend, rng):
    g = Grid.uniform(6)
    assert np.all(grad_p_dirichlet(GridFunction.zeros(g), 2.5).values == 0)
    gr = grad_p_dirichlet(rand_gf(g, rng), 1.5, 1e-8)
    assert np.all(gr.values[g.boundary_mask] == 0)


def test_grad_p_dirichlet_degenerate():
    g = Grid.uniform(6)
    with pytest.raises(DegenerateConfigurationError):
        grad_p_dirichlet(GridFunction.zeros(g), 1.5, 0.0)


@pytest.mark.parametrize("p,eps", [(1.5, 1e-8), (2.0, 0.0), (3.0, 0.0), (1.2, 0.05)])
def test_grad_p_dirichlet_finite_difference(backend, rng, p, eps):
    g = Grid.uniform(7)
    u, w = rand_gf(g, rng), rand_gf(g, rng)
    fd = (p_dirichlet(u + w * 1e-6, p, eps) - p_dirichlet(u - w * 1e-6, p, eps)) / 2e-6
    an = float(np.sum(grad_p_dirichlet(u, p, eps).values * w.values))
    assert fd == pytest.approx(an, rel=1e-5)


def test_p2_gradient_is_rotated_five_point_stencil():
    """p = 2 with one-point quadrature: h^2 (4u - sum of diagonal neighbours) / (2h^2)."""
    g = Grid.uniform(8)
    u = GridFunction.from_interior(g, np.eye(1, g.n_interior, 24).ravel())  # node (4, 4)
    gr = grad_p_dirichlet(u, 2.0).values
    expected = np.zeros(g.dims)
    expected[4, 4] = 2.0
    for di in (-1, 1):
        for dj in (-1, 1):
            expected[4 + di, 4 + dj] = -0.5
    assert np.allclose(gr, expected, atol=1e-14)


@pytest.mark.parametrize("p,eps", [(1.5, 1e-3), (2.0, 0.0), (3.0, 0.1)])
def test_p_hessian_matches_gradient_differences(rng, p, eps):
    g = Grid.uniform(6)
    u, w = rand_gf(g, rng), rand_gf(g, rng)
    H = p_hessian(u.values, g, p, eps)
    t = 1e-6
    fd = (grad_p_dirichlet(u + w * t, p, eps).values - grad_p_dirichlet(u - w * t, p, eps).values) / (2 * t)
    assert np.allclose(H @ w.interior_values, g.restrict(fd), rtol=1e-6, atol=1e-7)
    assert abs(H - H.T).max() < 1e-12


# -- J, I1, I3 ---------------------------------------------------------------

def loop_J(z, eta, f, params):
    p, A, r, th, eps = params.p, params.A, params.r, params.theta, params.eps
    vol = z.grid.cell_volume
    grad_z = loop_p_dirichlet(z, p, eps) * p
    grad_eta = loop_p_dirichlet(eta, p, eps) * p
    coupling = sum(max(e, 0.0) ** (th + 1) * abs(zz) ** r
                   for e, zz in zip(eta.values.ravel(), z.values.ravel())) * vol
    source = sum(a * b for a, b in zip(f.values.ravel(), z.values.ravel())) * vol
    return grad_z / p - A * (th + 1) / (p * r) * grad_eta + A / r * coupling - source


def test_J_examples(rng):
    g = Grid.uniform(7)
    params = CouplingParams(p=1.5, A=2.0, r=3.0, theta=0.2)
    zero = GridFunction.zeros(g)
    f = rand_gf(g, rng)
    assert J_value(zero, zero, f, params) == pytest.approx(0.0, abs=1e-12)
    eta = rand_gf(g, rng)
    val = J_value(zero, eta, f, params)
    assert val <= 0
    assert val == pytest.approx(-2.0 * 1.2 / (1.5 * 3.0) * 1.5 * p_dirichlet(eta, 1.5, params.eps), rel=1e-13)
    z = rand_gf(g, rng)
    assert J_value(z, eta, f, params) == pytest.approx(loop_J(z, eta, f, params), rel=1e-11)


@given(seed=st.integers(0, 2**16), th=st.floats(0, 0.45))
def test_J_decomposition(seed, th):
    rng = np.random.default_rng(seed)
    g = Grid.uniform(5)
    params = CouplingParams(p=1.5, A=1.3, r=2.5, theta=th)
    z, eta, f = rand_gf(g, rng), rand_gf(g, rng), rand_gf(g, rng)
    lhs = J_value(z, eta, f, params)
    rhs = I1_value(z, eta, f, params) - 1.3 * (th + 1) / (1.5 * 2.5) * 1.5 * p_dirichlet(eta, 1.5, params.eps)
    assert lhs == pytest.approx(rhs, rel=1e-13, abs=1e-13)


@given(seed=st.integers(0, 2**16))
def test_I3_is_J_in_second_slot(seed):
    """(A/r) I3(eta; v) + J(v, eta) does not depend on eta."""
    rng = np.random.default_rng(seed)
    g = Grid.uniform(5)
    params = CouplingParams(p=1.8, A=0.7, r=2.0, theta=0.4)
    v, f = rand_gf(g, rng), rand_gf(g, rng)
    e1, e2 = rand_gf(g, rng), rand_gf(g, rng)
    c1 = 0.7 / 2.0 * I3_value(e1, v, params) + J_value(v, e1, f, params)
    c2 = 0.7 / 2.0 * I3_value(e2, v, params) + J_value(v, e2, f, params)
    assert c1 == pytest.approx(c2, rel=1e-12, abs=1e-12)
    assert (J_value(v, e1, f, params) >= J_value(v, e2, f, params)) == (I3_value(e1, v, params) <= I3_value(e2, v, params))


@pytest.mark.parametrize("params", [
    CouplingParams(p=1.5, A=1.0, r=6.0, theta=0.0),
    CouplingParams(p=2.0, A=2.0, r=1.5, theta=0.5),
    CouplingParams(p=3.0, A=0.5, r=2.0, theta=1.2),
])
def test_I1_I3_gradients_finite_difference(backend, rng, params):
    g = Grid.uniform(7)
    psi, f, v = rand_gf(g, rng), rand_gf(g, rng), rand_gf(g, rng)
    for _ in range(5):
        z = rand_gf(g, rng)
        d = rng.standard_normal(g.n_interior)
        fun = lambda x: I1_value(GridFunction.from_interior(g, x), psi, f, params)
        fd = fd_directional(fun, z.interior_values, d)
        an = I1_grad(z, psi, f, params).interior_values @ d
        assert fd == pytest.approx(an, rel=1e-5)
        eta = rand_gf(g, rng, positive=True) + GridFunction.from_interior(g, np.full(g.n_interior, 0.5))
        fun3 = lambda x: I3_value(GridFunction.from_interior(g, x), v, params)
        fd3 = fd_directional(fun3, eta.interior_values, d)
        an3 = I3_grad(eta, v, params).interior_values @ d
        assert fd3 == pytest.approx(an3, rel=1e-5)


def test_I1_I3_trivial_minimizers(rng):
    g = Grid.uniform(6)
    params = CouplingParams(p=1.5)
    zero = GridFunction.zeros(g)
    psi = rand_gf(g, rng)
    assert I1_value(zero, psi, zero, params) == pytest.approx(p_dirichlet(zero, 1.5, params.eps))
    assert np.allclose(I1_grad(zero, psi, zero, params).values, 0.0)
    assert I3_value(zero, zero, params) == pytest.approx(1.0 * p_dirichlet(zero, 1.5, params.eps))


@given(seed=st.integers(0, 2**16), th=st.floats(0, 0.9))
def test_I3_positive_part_lowers_energy(seed, th):
    rng = np.random.default_rng(seed)
    g = Grid.uniform(5)
    params = CouplingParams(p=2.0, A=1.0, r=2.0, theta=th)
    eta, v = rand_gf(g, rng), rand_gf(g, rng)
    eta_plus = GridFunction(g, np.maximum(eta.values, 0.0))
    assert I3_value(eta_plus, v, params) <= I3_value(eta, v, params) + 1e-14


@given(seed=st.integers(0, 2**16), p=st.floats(1.2, 3.5))
def test_I1_midpoint_convexity(seed, p):
    rng = np.random.default_rng(seed)
    g = Grid.uniform(5)
    params = CouplingParams(p=p, A=1.0, r=2.5, eps=1e-3)
    psi, f = rand_gf(g, rng), rand_gf(g, rng)
    z1, z2 = rand_gf(g, rng), rand_gf(g, rng)
    mid = (z1 + z2) * 0.5
    assert I1_value(mid, psi, f, params) < 0.5 * (I1_value(z1, psi, f, params) + I1_value(z2, psi, f, params))
