import numpy as np
import pytest
import scipy.sparse as sp

from plapsys.optimize import METHODS, SolverOptions, minimize


def quadratic(n=20, seed=0):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    Q = M @ M.T + n * np.eye(n)
    b = rng.standard_normal(n)
    fun = lambda x: (0.5 * x @ Q @ x - b @ x, Q @ x - b)
    return fun, Q, b


@pytest.mark.parametrize("method", METHODS)
def test_quadratic_all_methods(method):
    fun, Q, b = quadratic()
    res = minimize(fun, np.zeros(b.size), SolverOptions(method=method), 1e-10,
                   hess=lambda x: sp.csr_matrix(Q))
    assert res.converged and res.grad_norm <= 1e-10
    assert np.allclose(res.x, np.linalg.solve(Q, b), atol=1e-9)
    assert all(b2 <= a + 1e-12 * abs(a) for a, b2 in zip(res.values, res.values[1:]))


def test_newton_converges_in_one_step_on_quadratic():
    fun, Q, b = quadratic()
    res = minimize(fun, np.zeros(b.size), SolverOptions(), 1e-10, hess=lambda x: sp.csr_matrix(Q))
    assert res.iterations == 1


def test_newton_without_hessian_falls_back():
    fun, Q, b = quadratic()
    res = minimize(fun, np.zeros(b.size), SolverOptions(), 1e-8)
    assert res.converged and res.iterations > 1


def test_rosenbrock_nonconvex():
    def fun(x):
        a, c = x
        return (1 - a) ** 2 + 100 * (c - a * a) ** 2, np.array([-2 * (1 - a) - 400 * a * (c - a * a), 200 * (c - a * a)])

    def hess(x):
        a, c = x
        return sp.csr_matrix([[2 - 400 * (c - 3 * a * a), -400 * a], [-400 * a, 200.0]])

    res = minimize(fun, np.array([-1.2, 1.0]), SolverOptions(), 1e-9, hess=hess)
    assert res.converged and np.allclose(res.x, [1.0, 1.0], atol=1e-6)


def test_max_iters_reported():
    fun, Q, b = quadratic()
    res = minimize(fun, np.zeros(b.size), SolverOptions(method="gradient_descent", max_iters=2), 1e-14)
    assert not res.converged and res.iterations == 2 and res.message == "max_iters reached"


@pytest.mark.parametrize("kw", [dict(tol=0), dict(max_iters=0), dict(armijo_c=1.0), dict(backtrack=0.0),
                                dict(method="bfgs")])
def test_options_validation(kw):
    with pytest.raises(ValueError):
        SolverOptions(**kw)


def test_rounding_level_decrease_does_not_stall():
    """Energy with a large constant offset: Armijo cannot see the last digits."""
    fun0, Q, b = quadratic()
    fun = lambda x: (fun0(x)[0] + 1e6, fun0(x)[1])
    res = minimize(fun, np.zeros(b.size), SolverOptions(), 1e-11, hess=lambda x: sp.csr_matrix(Q))
    assert res.converged
