# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

The Lentz loop below uses only complex +, -, *, / so a tiny imaginary part of
the argument (kappa*x down to ~1e-300) is carried through at full relative
precision, like a complex-step derivative. Do not build with -ffast-math.
"""

from libc.math cimport acos, acosh, cos, sin, sinh, tan, tanh, M_PI, M_LN2

cdef extern from "complex.h" nogil:
    double cabs(double complex)

cdef double FPMIN = 1e-300


cdef long _cf_logderiv(long nu, double complex z, double eps, long max_iter,
                       double complex* out) noexcept nogil:
    cdef double complex xi = 1.0 / z
    cdef double complex h = nu * xi
    cdef double complex d = 0.0
    cdef double complex c, b, delta
    cdef long i
    if cabs(h) < FPMIN:
        h = FPMIN
    c = h
    for i in range(1, max_iter + 1):
        b = (2.0 * (nu + i)) * xi
        d = b - d
        if cabs(d) < FPMIN:
            d = FPMIN
        c = b - 1.0 / c
        if cabs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = c * d
        h = delta * h
        if cabs(delta - 1.0) < eps:
            out[0] = h
            return i
    out[0] = h
    return -1


def j_logderiv(long nu, double complex z, double eps=5e-16, long max_iter=0):
    """J'_nu(z)/J_nu(z) and the number of iterations used (-1: no convergence)."""
    cdef double complex out
    cdef long n
    if max_iter <= 0:
        max_iter = 10000 + 2 * <long>cabs(z)
    with nogil:
        n = _cf_logderiv(nu, z, eps, max_iter, &out)
    return complex(out), n


def j_logderiv_array(long nu, double complex[::1] z, double complex[::1] out,
                     double eps=5e-16, long max_iter=0):
    """Vectorised :func:`j_logderiv`; returns the number of unconverged entries."""
    cdef Py_ssize_t i, m = z.shape[0]
    cdef long bad = 0
    cdef long it, cap
    with nogil:
        for i in range(m):
            cap = max_iter if max_iter > 0 else 10000 + 2 * <long>cabs(z[i])
            it = _cf_logderiv(nu, z[i], eps, cap, &out[i])
            if it < 0:
                bad += 1
    return bad


def branch_function(long nu, double eta, double[::1] x, double[::1] out):
    """Pole-free Debye form of the real singularity condition on a grid.

    out = tanh(2 psi - ln 2) sinh(beta) cos(phi) + eta sin(alpha) sin(phi)
    """
    cdef Py_ssize_t i, m = x.shape[0]
    cdef double xi, alpha, phi, beta, psi
    with nogil:
        for i in range(m):
            xi = x[i]
            alpha = acos(nu / (eta * xi))
            phi = nu * (tan(alpha) - alpha) - 0.25 * M_PI
            beta = acosh(nu / xi)
            psi = nu * (tanh(beta) - beta)
            out[i] = (tanh(2.0 * psi - M_LN2) * sinh(beta) * cos(phi)
                      + eta * sin(alpha) * sin(phi))
