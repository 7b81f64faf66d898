"""Integer-order Bessel and Hankel functions, their zeros, and Debye forms.

Values at 53 bits come from scipy (AMOS); wider contexts go through mpmath.
Logarithmic derivatives ``J'/J`` use the continued-fraction kernel in
:mod:`sgmodes.kernels`, which keeps an O(kappa) imaginary part of the argument
at full relative precision even when kappa is far below machine epsilon.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from . import kernels
from .errors import BracketError, ConvergenceError, DomainError, PrecisionError
from .precision import DEFAULT_CONTEXT, PrecisionContext, mp_context

# Standard large-order constants for the first zeros (seeds only).
JPRIME_ZERO_COEFF = 0.8086165
J_ZERO_COEFF = 1.8557571

_KINDS = ("J", "H1", "H2")


def _check_order(nu):
    if int(nu) != nu or nu < 0:
        raise DomainError(f"order must be a non-negative integer, got {nu!r}")
    if nu > 10_000:
        raise DomainError("order above 1e4 is outside the supported range")
    return int(nu)


def _finite(value, what):
    if isinstance(value, (complex, float, int)):
        ok = math.isfinite(value.real) and math.isfinite(value.imag)
    else:
        ok = not (value.real != value.real or value.imag != value.imag) and abs(value) != float("inf")
    if not ok:
        raise PrecisionError(f"{what} is not representable at this precision")
    return value


# ---------------------------------------------------------------------------
# values


def _hw_arg(z):
    z = complex(z)
    return z.real if z.imag == 0.0 else z


def bessel_j(nu, z, ctx: PrecisionContext = DEFAULT_CONTEXT):
    """Bessel function of the first kind ``J_nu(z)`` at integer order."""
    nu = _check_order(nu)
    if abs(z) >= 1e6:
        raise DomainError("|z| must be below 1e6")
    if ctx.hardware:
        return _finite(complex(special.jv(nu, _hw_arg(z))), "J")
    mp = mp_context(ctx.mantissa_bits)
    return _finite(mp.mpc(mp.besselj(nu, mp.mpmathify(z))), "J")


def bessel_y(nu, z, ctx: PrecisionContext = DEFAULT_CONTEXT):
    """Bessel function of the second kind ``Y_nu(z)``."""
    nu = _check_order(nu)
    if z == 0:
        raise DomainError("Y is singular at z = 0")
    if ctx.hardware:
        return _finite(complex(special.yv(nu, _hw_arg(z))), "Y")
    mp = mp_context(ctx.mantissa_bits)
    return _finite(mp.mpc(mp.bessely(nu, mp.mpmathify(z))), "Y")


def hankel1(nu, z, ctx: PrecisionContext = DEFAULT_CONTEXT):
    """``H^(1)_nu(z) = J_nu(z) + i Y_nu(z)``."""
    nu = _check_order(nu)
    if z == 0:
        raise DomainError("Hankel functions are singular at z = 0")
    if ctx.hardware:
        return _finite(complex(special.hankel1(nu, _hw_arg(z))), "H1")
    mp = mp_context(ctx.mantissa_bits)
    return _finite(mp.mpc(mp.hankel1(nu, mp.mpmathify(z))), "H1")


def hankel2(nu, z, ctx: PrecisionContext = DEFAULT_CONTEXT):
    """``H^(2)_nu(z) = J_nu(z) - i Y_nu(z)``."""
    nu = _check_order(nu)
    if z == 0:
        raise DomainError("Hankel functions are singular at z = 0")
    if ctx.hardware:
        return _finite(complex(special.hankel2(nu, _hw_arg(z))), "H2")
    mp = mp_context(ctx.mantissa_bits)
    return _finite(mp.mpc(mp.hankel2(nu, mp.mpmathify(z))), "H2")


_EVAL = {"J": bessel_j, "H1": hankel1, "H2": hankel2}


def bessel_deriv(kind, nu, z, ctx: PrecisionContext = DEFAULT_CONTEXT):
    """Derivative with respect to the argument, ``(f_{nu-1} - f_{nu+1}) / 2``."""
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}")
    nu = _check_order(nu)
    f = _EVAL[kind]
    if nu == 0:
        # f_{-1} = -f_1 for all three kinds
        return -f(1, z, ctx)
    return (f(nu - 1, z, ctx) - f(nu + 1, z, ctx)) / 2


def wronskian_residual(nu, z, ctx: PrecisionContext = DEFAULT_CONTEXT) -> float:
    """Relative defect of ``J H1' - J' H1 = 2i/(pi z)``."""
    j = bessel_j(nu, z, ctx)
    h = hankel1(nu, z, ctx)
    jp = bessel_deriv("J", nu, z, ctx)
    hp = bessel_deriv("H1", nu, z, ctx)
    target = 2j / (math.pi * complex(z))
    return float(abs(complex(j * hp - jp * h) - target) / abs(target))


def validated_bessel_j(nu, z, ctx: PrecisionContext = DEFAULT_CONTEXT):
    """``bessel_j`` plus an internal Wronskian check against ``residual_tol``."""
    value = bessel_j(nu, z, ctx)
    err = wronskian_residual(nu, z, ctx)
    if err > max(ctx.residual_tol, 10.0 * 2.0 ** (-ctx.mantissa_bits)):
        raise PrecisionError(f"Wronskian defect {err:.3e} exceeds residual_tol")
    return value


# ---------------------------------------------------------------------------
# logarithmic derivatives


def logderiv_slope(nu, z, L):
    """d/dz of a Bessel log-derivative ``L = f'/f`` (Riccati form)."""
    return -1.0 + (nu * nu) / (z * z) - L / z - L * L


def j_logderiv(nu, z, ctx: PrecisionContext = DEFAULT_CONTEXT):
    """``J'_nu(z) / J_nu(z)`` for real or complex ``z``."""
    nu = _check_order(nu)
    if z == 0:
        raise DomainError("J'/J is singular at z = 0 for nu >= 1")
    if ctx.hardware:
        value, it = kernels.j_logderiv(nu, complex(z))
        if it < 0:
            raise ConvergenceError("continued fraction for J'/J did not converge", best=value)
        return _finite(value, "J'/J")
    mp = mp_context(ctx.mantissa_bits)
    z = mp.mpmathify(z)
    if z.imag != 0 and abs(z.imag) < mp.mpf(2) ** (-(mp.prec // 2)) * abs(z.real):
        # mpmath resolves Im J only to |J| 2^-prec; expand about Re z instead
        zr = mp.mpf(z.real)
        lr = mp.besselj(nu, zr, derivative=1) / mp.besselj(nu, zr)
        return _finite(lr + 1j * z.imag * logderiv_slope(nu, zr, lr), "J'/J")
    return _finite(mp.besselj(nu, z, derivative=1) / mp.besselj(nu, z), "J'/J")


def j_logderiv_array(nu, z):
    """Vectorised 53-bit ``J'/J`` over an array of complex arguments."""
    z = np.ascontiguousarray(np.asarray(z, dtype=complex).ravel())
    out = np.empty_like(z)
    bad = kernels.j_logderiv_array(_check_order(nu), z, out)
    if bad:
        raise ConvergenceError(f"{bad} continued fractions did not converge")
    return out


def _h1_logderiv_real(nu, x):
    j, jp = special.jv(nu, x), special.jvp(nu, x)
    y, yp = special.yv(nu, x), special.yvp(nu, x)
    if not (math.isfinite(y) and math.isfinite(yp)):
        raise PrecisionError(f"Y_{nu}({x}) overflows double precision")
    # scale by Y to keep |H|^2 in range
    r = j / y
    den = 1.0 + r * r
    re = (r * (jp / y) + yp / y) / den
    im = 2.0 / (math.pi * x) / y / y / den
    return complex(re, im)


def h1_logderiv(nu, x, ctx: PrecisionContext = DEFAULT_CONTEXT):
    """``H1'_nu(x) / H1_nu(x)``.

    For real ``x`` the imaginary part is taken from the Wronskian,
    ``2 / (pi x |H|^2)``, so it stays accurate when it is ~1e-170. For a
    complex argument with ``|Im x| < 1e-8 |x|`` a first-order expansion about
    ``Re x`` is used, which is exact to O((Im x)^2).
    """
    nu = _check_order(nu)
    if x == 0:
        raise DomainError("H'/H is singular at x = 0")
    if not ctx.hardware:
        mp = mp_context(ctx.mantissa_bits)
        x = mp.mpmathify(x)
        h = mp.hankel1(nu, x)
        hm = mp.hankel1(nu - 1, x) if nu > 0 else -mp.hankel1(1, x)
        return _finite(hm / h - nu / x, "H'/H")
    x = complex(x)
    if x.imag == 0.0:
        if x.real <= 0:
            raise DomainError("real argument must be positive")
        return _h1_logderiv_real(nu, x.real)
    if abs(x.imag) < 1e-8 * abs(x):
        L = _h1_logderiv_real(nu, x.real)
        return L + 1j * x.imag * logderiv_slope(nu, x.real, L)
    h = special.hankel1(nu, x)
    hp = special.h1vp(nu, x)
    return _finite(complex(hp / h), "H'/H")


def h1_log_modulus(nu, x) -> float:
    """``ln |H1_nu(x)|`` for real ``x > 0``."""
    j, y = special.jv(nu, x), special.yv(nu, x)
    if math.isfinite(y):
        return 0.5 * math.log(j * j + y * y) if abs(y) < 1e150 else math.log(abs(y)) + 0.5 * math.log1p((j / y) ** 2)
    return debye_h1(nu, x).log_modulus()


# ---------------------------------------------------------------------------
# zeros


def _real_eval(nu, kind, z, ctx):
    if ctx.hardware:
        if kind == "J":
            return float(special.jv(nu, z)), float(special.jvp(nu, z))
        jp = float(special.jvp(nu, z))
        j = float(special.jv(nu, z))
        return jp, -jp / z - (1.0 - nu * nu / (z * z)) * j
    mp = mp_context(ctx.mantissa_bits)
    z = mp.mpf(z)
    j = mp.besselj(nu, z)
    jp = mp.besselj(nu, z, derivative=1)
    if kind == "J":
        return j, jp
    return jp, -jp / z - (1 - mp.mpf(nu) ** 2 / z ** 2) * j


def _spacing(nu, z):
    # half-period of the oscillation in z (Debye); generous near the turning point
    s = math.sqrt(max(1.0 - (nu / z) ** 2, 0.0)) if z > nu else 0.0
    return math.pi / max(s, 1e-300) if s > 0 else math.inf


def _refine(nu, kind, lo, hi, ctx):
    """Bisection-safeguarded Newton on a sign-changing bracket."""
    flo = _real_eval(nu, kind, lo, ctx)[0]
    fhi = _real_eval(nu, kind, hi, ctx)[0]
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise BracketError("endpoints do not bracket a zero")
    z = 0.5 * (lo + hi)
    tol = ctx.residual_tol
    for _ in range(ctx.max_iter * 4):
        f, fp = _real_eval(nu, kind, z, ctx)
        if f == 0:
            return z
        if (f > 0) == (flo > 0):
            lo, flo = z, f
        else:
            hi = z
        step = f / fp if fp != 0 else math.inf
        znew = z - step
        if not (lo < znew < hi):
            znew = 0.5 * (lo + hi)
        if abs(znew - z) <= tol * abs(z) or hi - lo <= tol * abs(z):
            return znew
        z = znew
    raise ConvergenceError("zero refinement did not converge", best=z)


def _march(nu, kind, start, count, ctx, step=None):
    """Return the first ``count`` sign changes of ``kind`` above ``start``."""
    found = []
    z = start
    f = _real_eval(nu, kind, z, ctx)[0]
    base = max(nu, 1) ** (1.0 / 3.0) / 4.0
    guard = 0
    while len(found) < count:
        h = step or min(max(base, 0.05), _spacing(nu, z) / 8.0)
        z2 = z + h
        f2 = _real_eval(nu, kind, z2, ctx)[0]
        if f2 == 0 or (f2 > 0) != (f > 0):
            root = _refine(nu, kind, z, z2, ctx)
            found.append(root)
            # step just past the root so it is not found twice
            z2 = root + 1e-9 * max(abs(root), 1.0)
            f2 = _real_eval(nu, kind, z2, ctx)[0]
        z, f = z2, f2
        guard += 1
        if guard > 10_000_000:
            raise BracketError("zero marching ran away")
    return found


def bessel_zeros(nu, count, ctx: PrecisionContext = DEFAULT_CONTEXT, kind="J"):
    """First ``count`` positive zeros of ``J_nu`` (``kind="J"``) or ``J'_nu`` (``"Jp"``)."""
    nu = _check_order(nu)
    if count < 1:
        raise ValueError("count must be >= 1")
    if kind not in ("J", "Jp"):
        raise ValueError("kind must be 'J' or 'Jp'")
    # every positive zero of J_nu and J'_nu lies above nu (nu >= 1)
    start = 1e-6 if nu == 0 else float(nu)
    return _march(nu, kind, start, count, ctx)


def zero_seed(nu, kind="J") -> float:
    """Large-order estimate of the first zero, ``nu + c nu^(1/3)``."""
    c = J_ZERO_COEFF if kind == "J" else JPRIME_ZERO_COEFF
    return nu + c * nu ** (1.0 / 3.0)


def bessel_j_zero(nu, q, ctx: PrecisionContext = DEFAULT_CONTEXT):
    """The ``q``-th positive zero ``j_{nu,q}``."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return bessel_zeros(nu, q, ctx, "J")[-1]


def bessel_jprime_zero(nu, q, ctx: PrecisionContext = DEFAULT_CONTEXT):
    """The ``q``-th positive zero ``j'_{nu,q}`` of the derivative."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return bessel_zeros(nu, q, ctx, "Jp")[-1]


# ---------------------------------------------------------------------------
# Debye expansions


@dataclass(frozen=True)
class DebyeAngles:
    """Angles of the leading-order Debye forms.

    ``alpha = arccos(nu/zeta)``, ``phi = nu (tan alpha - alpha) - pi/4`` for the
    oscillatory side; ``beta = arccosh(nu/x)``, ``psi = nu (tanh beta - beta)``
    for the evanescent side. Either pair may be absent.
    """

    alpha: Optional[float] = None
    phi: Optional[float] = None
    beta: Optional[float] = None
    psi: Optional[float] = None

    def __post_init__(self):
        if self.alpha is not None and not 0.0 < self.alpha < math.pi / 2:
            raise DomainError("alpha must lie in (0, pi/2)")
        if self.beta is not None and not self.beta > 0.0:
            raise DomainError("beta must be positive")
        if self.psi is not None and self.psi > 0.0:
            raise DomainError("psi must be <= 0")


def _alpha_phi(nu, zeta):
    if not zeta > nu:
        raise DomainError(f"oscillatory Debye form needs zeta > nu (zeta={zeta}, nu={nu})")
    ratio = nu / zeta
    alpha = math.acos(ratio)
    # tan(alpha) - alpha without cancellation for small alpha
    t = math.sqrt((1.0 - ratio) * (1.0 + ratio)) / ratio
    diff = t - alpha if alpha > 1e-2 else _tan_minus(alpha)
    return alpha, nu * diff - math.pi / 4


def _tan_minus(a):
    a2 = a * a
    return a * a2 * (1 / 3 + a2 * (2 / 15 + a2 * (17 / 315 + a2 * (62 / 2835))))


def _beta_psi(nu, x):
    if not 0.0 < x < nu:
        raise DomainError(f"evanescent Debye form needs 0 < x < nu (x={x}, nu={nu})")
    beta = math.acosh(nu / x)
    if beta > 1e-2:
        diff = math.tanh(beta) - beta
    else:
        b2 = beta * beta
        diff = -beta * b2 * (1 / 3 - b2 * (2 / 15 - b2 * 17 / 315))
    return beta, nu * diff


def debye_angles(nu, zeta=None, x=None) -> DebyeAngles:
    """Build a :class:`DebyeAngles` record from ``zeta`` and/or ``x``."""
    alpha = phi = beta = psi = None
    if zeta is not None:
        alpha, phi = _alpha_phi(nu, zeta)
    if x is not None:
        beta, psi = _beta_psi(nu, x)
    return DebyeAngles(alpha, phi, beta, psi)


def debye_j(nu, zeta, ctx: PrecisionContext = DEFAULT_CONTEXT):
    """Leading Debye form of ``J_nu`` and ``J'_nu`` for ``zeta > nu``.

    Returns ``(value, deriv, angles)`` with
    ``J ~ sqrt(2/(pi nu tan a)) cos(phi)`` and
    ``J' ~ -sqrt(2/(pi nu tan a)) sin(a) sin(phi)``.
    """
    nu = _check_order(nu)
    alpha, phi = _alpha_phi(nu, float(zeta))
    amp = math.sqrt(2.0 / (math.pi * nu * math.tan(alpha)))
    return amp * math.cos(phi), -amp * math.sin(alpha) * math.sin(phi), DebyeAngles(alpha, phi)


@dataclass(frozen=True)
class DebyeHankel:
    """Log-space Debye form of ``H1_nu(x)`` for ``x < nu``.

    ``H ~ (e^psi - 2i e^-psi) / sqrt(2 pi nu tanh beta)`` and
    ``H' ~ sqrt(sinh 2beta / (4 pi nu)) (e^psi + 2i e^-psi)``.
    Only ``psi`` and the logarithms of the prefactors are stored.
    """

    psi: float
    log_prefactor: float
    log_prefactor_deriv: float
    angles: DebyeAngles

    def log_modulus(self) -> float:
        """``ln |H|``; the modulus is ``|e^psi - 2i e^-psi|``."""
        return self.log_prefactor - self.psi + math.log(2.0) + 0.5 * math.log1p(math.exp(4 * self.psi) / 4.0)

    def value(self) -> complex:
        p = self.psi
        return cmath.exp(self.log_prefactor) * (math.exp(p) - 2j * math.exp(-p))

    def deriv(self) -> complex:
        p = self.psi
        return cmath.exp(self.log_prefactor_deriv) * (math.exp(p) + 2j * math.exp(-p))

    def logderiv(self) -> complex:
        """``H'/H = sinh(beta) (e^{2psi} + 2i) / (e^{2psi} - 2i)``, overflow free."""
        e = math.exp(2 * self.psi)
        return math.sinh(self.angles.beta) * (e + 2j) / (e - 2j)


def debye_h1(nu, x, ctx: PrecisionContext = DEFAULT_CONTEXT) -> DebyeHankel:
    """Evanescent-side Debye decomposition of ``H1_nu(x)`` in log space."""
    nu = _check_order(nu)
    beta, psi = _beta_psi(nu, float(x))
    log_pre = -0.5 * math.log(2.0 * math.pi * nu * math.tanh(beta))
    log_pre_d = 0.5 * math.log(math.sinh(2.0 * beta) / (4.0 * math.pi * nu))
    return DebyeHankel(psi, log_pre, log_pre_d, DebyeAngles(beta=beta, psi=psi))
