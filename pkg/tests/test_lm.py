import numpy as np
import pytest
from scipy.optimize import least_squares

from eitrevival.lm import levenberg_marquardt, numerical_jacobian


def rosenbrock(x):
    return np.array([10 * (x[1] - x[0] ** 2), 1 - x[0]])


def test_rosenbrock():
    res = levenberg_marquardt(rosenbrock, [-1.2, 1.0])
    assert res.converged
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-8)


def test_jacobian_central_and_one_sided():
    f = lambda x: np.array([x[0] ** 2, x[0] * x[1]])  # noqa: E731
    jac, _ = numerical_jacobian(f, np.array([2.0, 3.0]), np.full(2, -np.inf), np.full(2, np.inf))
    np.testing.assert_allclose(jac, [[4, 0], [3, 2]], rtol=1e-8)
    jac, _ = numerical_jacobian(f, np.array([2.0, 3.0]), np.array([2.0, 3.0]), np.full(2, np.inf))
    np.testing.assert_allclose(jac, [[4, 0], [3, 2]], rtol=1e-5)


def test_bounds_are_honoured():
    # unconstrained optimum at x = 3
    res = levenberg_marquardt(lambda x: np.array([x[0] - 3.0]), [0.0], [-1.0], [1.0])
    assert res.x[0] == 1.0 and res.converged


def test_agrees_with_scipy_on_damped_cosine():
    rng = np.random.default_rng(4)
    t = np.linspace(0, 30, 400)

    def model(p):
        a, f, tau, c = p
        return a * np.exp(-((t / tau) ** 2)) * (1 + c * np.cos(2 * np.pi * f * t))

    truth = np.array([1.0, 0.31, 18.0, 0.4])
    y = model(truth) + 0.01 * rng.standard_normal(t.size)
    resid = lambda p: model(p) - y  # noqa: E731
    x0 = [0.9, 0.305, 15.0, 0.3]
    lo, hi = [0, 0, 1e-3, 0], [10, 1, 1e3, 1]
    ours = levenberg_marquardt(resid, x0, lo, hi)
    ref = least_squares(resid, x0, bounds=(lo, hi), xtol=1e-14, ftol=1e-14, gtol=1e-14)
    np.testing.assert_allclose(ours.x, ref.x, rtol=1e-6)
    assert ours.cost == pytest.approx(2 * ref.cost, rel=1e-9)


def test_zero_residual_stops_immediately():
    res = levenberg_marquardt(lambda x: x - x, [1.0, 2.0])
    assert res.converged and res.cost == 0.0 and res.iterations == 1
