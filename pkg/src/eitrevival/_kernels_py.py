"""Pure-numpy fallback for the compiled interference kernel."""
import numpy as np

_CHUNK = 65536


def interference_factor(theta, coeffs, h0):
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    keep = np.nonzero(coeffs)[0]
    harmonics = (h0 + keep).astype(np.float64)
    c = coeffs[keep]
    out = np.empty(theta.shape[0], dtype=np.float64)
    for start in range(0, theta.shape[0], _CHUNK):
        phase = np.multiply.outer(theta[start:start + _CHUNK], harmonics)
        re = np.cos(phase) @ c
        im = np.sin(phase) @ c
        out[start:start + _CHUNK] = re * re + im * im
    return out


def interference_sum(theta, coeffs, h0):
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    keep = np.nonzero(coeffs)[0]
    harmonics = (h0 + keep).astype(np.float64)
    c = coeffs[keep]
    out = np.empty(theta.shape[0], dtype=np.complex128)
    for start in range(0, theta.shape[0], _CHUNK):
        phase = np.multiply.outer(theta[start:start + _CHUNK], harmonics)
        out[start:start + _CHUNK] = (np.cos(phase) @ c) + 1j * (np.sin(phase) @ c)
    return out
