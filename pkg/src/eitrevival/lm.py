"""Bounded Levenberg-Marquardt with a central-difference Jacobian."""
from dataclasses import dataclass

import numpy as np

REL_STEP = 1e-6


@dataclass
class LMResult:
    x: np.ndarray
    residuals: np.ndarray
    jacobian: np.ndarray
    cost: float
    converged: bool
    iterations: int
    nfev: int


def numerical_jacobian(func, x, lower, upper, f0=None, rel_step=REL_STEP):
    """Central differences, one-sided next to a bound."""
    x = np.asarray(x, dtype=float)
    if f0 is None:
        f0 = func(x)
    jac = np.empty((f0.size, x.size))
    nfev = 0
    for i in range(x.size):
        h = rel_step * max(abs(x[i]), 1e-8)
        up, dn = x.copy(), x.copy()
        up[i] += h
        dn[i] -= h
        if up[i] > upper[i]:
            jac[:, i] = (f0 - func(dn)) / h
            nfev += 1
        elif dn[i] < lower[i]:
            jac[:, i] = (func(up) - f0) / h
            nfev += 1
        else:
            jac[:, i] = (func(up) - func(dn)) / (2.0 * h)
            nfev += 2
    return jac, nfev


def levenberg_marquardt(
    func,
    x0,
    lower=None,
    upper=None,
    xtol=1e-10,
    ftol=1e-10,
    max_iter=500,
    lam0=1e-3,
):
    """Minimize ``sum(func(x)**2)`` inside the box ``[lower, upper]``.

    Marquardt's diagonal scaling makes the damping invariant to parameter
    units. Variables pinned at a bound by the gradient are frozen for the
    step. Converges when both the relative step and the relative cost
    decrease fall below their tolerances, or when no damped step can lower
    the cost any further.
    """
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    lower = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    x = np.clip(x, lower, upper)
    r = func(x)
    cost = float(r @ r)
    nfev = 1
    lam = lam0
    converged = False
    it = 0
    jac = None
    while it < max_iter:
        it += 1
        jac, k = numerical_jacobian(func, x, lower, upper, r)
        nfev += k
        grad = jac.T @ r
        hess = jac.T @ jac
        if cost == 0.0:
            converged = True
            break
        pinned = ((x <= lower) & (grad > 0)) | ((x >= upper) & (grad < 0))
        free = ~pinned
        if not free.any():
            converged = True
            break
        h = hess[np.ix_(free, free)]
        g = grad[free]
        diag = np.maximum(np.diag(h), 1e-300)
        accepted = False
        while lam < 1e16:
            try:
                step_free = np.linalg.solve(h + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 4.0
                continue
            step = np.zeros(n)
            step[free] = step_free
            x_new = np.clip(x + step, lower, upper)
            r_new = func(x_new)
            nfev += 1
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new < cost:
                accepted = True
                break
            lam *= 4.0
        if not accepted:
            converged = True  # no descent direction left at working precision
            break
        rel_step = np.max(np.abs(x_new - x) / np.maximum(np.abs(x), 1e-300))
        rel_drop = (cost - cost_new) / cost
        x, r, cost = x_new, r_new, cost_new
        lam = max(lam / 3.0, 1e-12)
        if rel_step < xtol and rel_drop < ftol:
            converged = True
            break
    jac, k = numerical_jacobian(func, x, lower, upper, r)
    nfev += k
    return LMResult(x, r, jac, cost, converged, it, nfev)
