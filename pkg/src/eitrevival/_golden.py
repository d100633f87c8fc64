"""Golden-section line search used for extremum refinement."""
import math

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_minimize(func, lo, hi, xtol=1e-9, maxiter=200):
    """Minimize a unimodal ``func`` on ``[lo, hi]``.

    Returns ``(x, f(x))``. The endpoints are never evaluated, so callers that
    care about them should compare against their own bracket values.
    """
    a, b = float(lo), float(hi)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = func(c), func(d)
    for _ in range(maxiter):
        if abs(b - a) <= xtol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = func(d)
    if fc <= fd:
        return c, fc
    return d, fd
