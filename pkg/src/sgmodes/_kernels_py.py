"""Pure-Python twin of :mod:`sgmodes._kernels` with the identical API."""
import math

import numpy as np

FPMIN = 1e-300


def j_logderiv(nu, z, eps=5e-16, max_iter=0):
    z = complex(z)
    if max_iter <= 0:
        max_iter = 10000 + 2 * int(abs(z))
    xi = 1.0 / z
    h = nu * xi
    if abs(h) < FPMIN:
        h = complex(FPMIN)
    c = h
    d = 0j
    for i in range(1, max_iter + 1):
        b = (2.0 * (nu + i)) * xi
        d = b - d
        if abs(d) < FPMIN:
            d = complex(FPMIN)
        c = b - 1.0 / c
        if abs(c) < FPMIN:
            c = complex(FPMIN)
        d = 1.0 / d
        delta = c * d
        h = delta * h
        if abs(delta - 1.0) < eps:
            return h, i
    return h, -1


def j_logderiv_array(nu, z, out, eps=5e-16, max_iter=0):
    bad = 0
    for i in range(len(z)):
        out[i], it = j_logderiv(nu, z[i], eps, max_iter)
        if it < 0:
            bad += 1
    return bad


def branch_function(nu, eta, x, out):
    x = np.asarray(x, dtype=float)
    alpha = np.arccos(nu / (eta * x))
    phi = nu * (np.tan(alpha) - alpha) - 0.25 * math.pi
    beta = np.arccosh(nu / x)
    psi = nu * (np.tanh(beta) - beta)
    out[:] = (np.tanh(2.0 * psi - math.log(2.0)) * np.sinh(beta) * np.cos(phi)
              + eta * np.sin(alpha) * np.sin(phi))
