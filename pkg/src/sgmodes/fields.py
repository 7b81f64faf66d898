"""Geometry, medium, boundary matching, reflection, energy density and flux.

Two polarisations are supported:

* ``axial-E``: ``E = E_z z`` with azimuthal number ``nu`` (the gallery modes);
* ``azimuthal-E``: ``E = E_phi phi`` with no angular dependence, whose
  field is ``J_1`` inside and ``H_1`` outside.

The boundary ``rho = a`` is written in terms of the size parameter
``x = k a``. Coefficients are normalised to an incoming amplitude ``a2 = 1``.
Energy density is reported in units of ``|b1|^2 / (4 mu0 c^2)`` and the
Poynting vector in units of ``|b1|^2 / (2 mu0 c)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy import special

from . import specfun
from .errors import DomainError, PrecisionError, SingularSystemError
from .precision import DEFAULT_CONTEXT, PrecisionContext, mp_context


class ModeKind(str, enum.Enum):
    AZIMUTHAL_E = "azimuthal-E"
    AXIAL_E = "axial-E"


@dataclass(frozen=True)
class CylinderGeometry:
    """Infinite cylinder of radius ``radius_a`` in metres."""

    radius_a: float

    def __post_init__(self):
        if not (math.isfinite(self.radius_a) and self.radius_a > 0):
            raise DomainError("radius_a must be positive and finite")

    @classmethod
    def from_microns(cls, radius_um: float) -> "CylinderGeometry":
        return cls(radius_um * 1e-6)

    def size_parameter(self, wavelength_nm: float) -> float:
        """``x = k a = 2 pi a / lambda``."""
        return 2.0 * math.pi * self.radius_a / (wavelength_nm * 1e-9)

    def wavelength_nm(self, x: float) -> float:
        """Vacuum wavelength in nm for the size parameter ``x``."""
        return 2.0 * math.pi * self.radius_a / x * 1e9


@dataclass(frozen=True)
class MediumIndex:
    """Complex refractive index ``eta + i kappa``; ``kappa < 0`` is gain."""

    eta: float
    kappa: float = 0.0

    def __post_init__(self):
        if not self.eta > 0:
            raise DomainError("eta must be positive")
        if not abs(self.kappa) < self.eta:
            raise DomainError("|kappa| must be smaller than eta")

    @property
    def n(self) -> complex:
        return complex(self.eta, self.kappa)


@dataclass(frozen=True)
class ModeIndex:
    nu: int
    q: Optional[int] = None

    def __post_init__(self):
        if self.nu < 0:
            raise DomainError("nu must be >= 0")
        if self.q is not None and self.q < 1:
            raise DomainError("q must be >= 1")


@dataclass(frozen=True)
class CoefficientSet:
    """Matched amplitudes inside (``b1``) and outside (``a1``, ``a2``)."""

    a1: complex
    a2: complex
    b1: complex
    mode_kind: ModeKind
    residual: float = 0.0


@dataclass
class FieldProfile:
    rho_grid: np.ndarray
    u: np.ndarray
    s_phi: np.ndarray
    s_rho: np.ndarray
    theta: np.ndarray
    interior: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.rho_grid)
        if not all(len(a) == n for a in (self.u, self.s_phi, self.s_rho, self.theta)):
            raise ValueError("profile arrays must have equal length")


class Reflection(NamedTuple):
    amplitude: complex
    residual: float
    diverged: bool


@dataclass(frozen=True)
class GridSpec:
    """Uniform radial grid on ``(rho_min, rho_max]`` in metres."""

    rho_max: float
    samples: int
    rho_min: Optional[float] = None

    def grid(self) -> np.ndarray:
        lo = self.rho_min if self.rho_min is not None else self.rho_max / self.samples
        return np.linspace(lo, self.rho_max, self.samples)


# ---------------------------------------------------------------------------
# Bessel data at the boundary


def _is_hw(ctx):
    return ctx.hardware


def _interior(nu, n, x, ctx):
    """``J_nu(n x)`` and ``n J'_nu(n x)/J_nu(n x)``."""
    z = n * x
    if _is_hw(ctx):
        return complex(special.jv(nu, complex(z))), n * specfun.j_logderiv(nu, complex(z))
    mp = mp_context(ctx.mantissa_bits)
    z = mp.mpmathify(n) * mp.mpmathify(x)
    return mp.besselj(nu, z), mp.mpmathify(n) * specfun.j_logderiv(nu, z, ctx)


def _exterior(nu, x, ctx):
    """Hankel data on the real axis: ``H1``, ``H2``, ``H1'/H1``, ``H2'/H2``."""
    if _is_hw(ctx):
        h1 = complex(special.hankel1(nu, x))
        if not (math.isfinite(h1.real) and math.isfinite(h1.imag)):
            raise PrecisionError(f"H1_{nu}({x}) overflows double precision")
        lh = specfun.h1_logderiv(nu, x, ctx)
        return h1, h1.conjugate(), lh, lh.conjugate()
    mp = mp_context(ctx.mantissa_bits)
    x = mp.mpf(x)
    h1 = mp.hankel1(nu, x)
    h2 = mp.conj(h1)
    lh = specfun.h1_logderiv(nu, x, ctx)
    return h1, h2, lh, mp.conj(lh)


def _eps(ctx):
    return 2.0 ** (-ctx.mantissa_bits)


def _cplx(v):
    return complex(v)


def reflection_amplitude(nu, n: MediumIndex, x: float, ctx: PrecisionContext = DEFAULT_CONTEXT) -> Reflection:
    """Reflection amplitude ``R = a1/a2`` of the axial-E mode.

    Written with log-derivatives ``Lj = J'/J`` and ``Lh = H'/H``::

        R = (H2/H1) (Lh2 - n Lj(n x)) / (n Lj(n x) - Lh1)

    The denominator is the mismatch of the singularity condition; when it
    vanishes to working precision the result is flagged ``diverged``.
    """
    if not x > 0:
        raise DomainError("x must be positive")
    nu = specfun._check_order(nu)
    _, nlj = _interior(nu, n.n, x, ctx)
    h1, h2, lh1, lh2 = _exterior(nu, x, ctx)
    den = nlj - lh1
    scale = abs(nlj) + abs(lh1)
    residual = float(abs(den) / abs(lh1))
    if abs(den) <= 8 * _eps(ctx) * scale:
        return Reflection(complex("inf"), residual, True)
    amp = (h2 / h1) * (lh2 - nlj) / den
    amp = _cplx(amp)
    if not (math.isfinite(amp.real) and math.isfinite(amp.imag)):
        return Reflection(complex("inf"), residual, True)
    return Reflection(amp, residual, False)


def reflection_amplitude_azimuthal(n: MediumIndex, x: float, ctx: PrecisionContext = DEFAULT_CONTEXT) -> complex:
    """Reflection amplitude of the azimuthal-E mode.

    Solved directly from continuity of ``E_phi`` and of ``B_z``, which involves
    ``f~(z) = f'(z) + f(z)/z``; independent of :func:`reflection_amplitude`.
    """
    coeffs = match_boundary(ModeKind.AZIMUTHAL_E, 1, n, x, ctx)
    return coeffs.a1 / coeffs.a2


def _tilde(f, fp, z):
    return fp + f / z


def match_boundary(mode_kind, nu, n: MediumIndex, x: float,
                   ctx: PrecisionContext = DEFAULT_CONTEXT) -> CoefficientSet:
    """Solve the two continuity conditions at ``rho = a`` with ``a2 = 1``.

    Raises :class:`SingularSystemError` at a spectral singularity, where the
    2x2 system has no solution with finite ``a1``.
    """
    mode_kind = ModeKind(mode_kind)
    if not x > 0:
        raise DomainError("x must be positive")
    if mode_kind is ModeKind.AZIMUTHAL_E:
        nu = 1
    nu = specfun._check_order(nu)
    nn = n.n
    if _is_hw(ctx):
        z = nn * x
        j = complex(special.jv(nu, z))
        jp = complex(special.jvp(nu, z))
        h1 = complex(special.hankel1(nu, x))
        h2 = complex(special.hankel2(nu, x))
        h1p = complex(special.h1vp(nu, x))
        h2p = complex(special.h2vp(nu, x))
    else:
        mp = mp_context(ctx.mantissa_bits)
        nn = mp.mpmathify(nn)
        x = mp.mpf(x)
        z = nn * x
        j = mp.besselj(nu, z)
        jp = mp.besselj(nu, z, derivative=1)
        h1, h2 = mp.hankel1(nu, x), mp.hankel2(nu, x)
        h1p = (mp.hankel1(nu - 1, x) - mp.hankel1(nu + 1, x)) / 2
        h2p = (mp.hankel2(nu - 1, x) - mp.hankel2(nu + 1, x)) / 2

    if mode_kind is ModeKind.AXIAL_E:
        # rows: E continuity, d/d(k rho) continuity
        c_in = (j, nn * jp)
        c_out1 = (h1, h1p)
        c_out2 = (h2, h2p)
    else:
        c_in = (j, nn * _tilde(j, jp, z))
        c_out1 = (h1, _tilde(h1, h1p, x))
        c_out2 = (h2, _tilde(h2, h2p, x))

    # b1 c_in - a1 c_out1 = a2 c_out2 with a2 = 1
    det = -c_in[0] * c_out1[1] + c_out1[0] * c_in[1]
    scale = abs(c_in[0] * c_out1[1]) + abs(c_out1[0] * c_in[1])
    if abs(det) <= 8 * _eps(ctx) * scale:
        raise SingularSystemError("at-singularity: boundary system is singular")
    b1 = (-c_out2[0] * c_out1[1] + c_out1[0] * c_out2[1]) / det
    a1 = (c_in[0] * c_out2[1] - c_out2[0] * c_in[1]) / det
    res = 0.0
    for r in range(2):
        lhs = b1 * c_in[r]
        rhs = a1 * c_out1[r] + c_out2[r]
        size = max(abs(lhs), abs(a1 * c_out1[r]), abs(c_out2[r]))
        res = max(res, float(abs(lhs - rhs) / size))
    a1, b1 = _cplx(a1), _cplx(b1)
    for v in (a1, b1):
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise PrecisionError("matched coefficients overflow; raise mantissa_bits")
    return CoefficientSet(a1=a1, a2=1.0 + 0j, b1=b1, mode_kind=mode_kind, residual=res)


# ---------------------------------------------------------------------------
# F_pm and theta


def f_plus_minus(nu, zeta, ctx: PrecisionContext = DEFAULT_CONTEXT):
    """``F_pm = J'(zeta)^2 + (1 pm nu^2/zeta^2) J(zeta)^2``."""
    if not zeta > 0:
        raise DomainError("zeta must be positive")
    if _is_hw(ctx):
        j = special.jv(nu, zeta)
        jp = special.jvp(nu, zeta)
        r = (nu / zeta) ** 2
    else:
        mp = mp_context(ctx.mantissa_bits)
        zeta = mp.mpf(zeta)
        j = mp.besselj(nu, zeta)
        jp = mp.besselj(nu, zeta, derivative=1)
        r = mp.mpf(nu) ** 2 / zeta ** 2
    return jp * jp + (1 + r) * j * j, jp * jp + (1 - r) * j * j


def theta_first_order(nu, eta, kappa, zeta, ctx: PrecisionContext = DEFAULT_CONTEXT) -> float:
    """Flux angle on the boundary to first order in ``kappa``.

    ``theta ~ zeta^2 F_-(zeta) kappa / (eta nu J(zeta)^2)``. The expression
    has a pole at the zeros of ``J``; it is not regularised.
    """
    if nu < 1:
        raise DomainError("nu must be >= 1")
    j = special.jv(nu, zeta) if _is_hw(ctx) else mp_context(ctx.mantissa_bits).besselj(nu, zeta)
    if j == 0:
        raise SingularSystemError("theta_first_order has a pole at a zero of J_nu")
    _, fm = f_plus_minus(nu, zeta, ctx)
    return float(zeta * zeta * fm * kappa / (eta * nu * j * j))


def theta_debye(nu, eta, kappa, zeta) -> float:
    """Large-order form ``(zeta^2 kappa/(eta nu)) (sec^2 phi - nu^2/zeta^2)``."""
    _, phi = specfun._alpha_phi(nu, zeta)
    c = math.cos(phi)
    return zeta * zeta * kappa / (eta * nu) * (1.0 / (c * c) - (nu / zeta) ** 2)


def theta_debye_consistent(nu, eta, kappa, zeta) -> float:
    """First-order Debye form with the corrected ``J'`` amplitude.

    ``(zeta^2 kappa/(eta nu)) sin^2(alpha) sec^2(phi)``; this is what
    ``theta_first_order`` tends to as ``nu`` grows.
    """
    alpha, phi = specfun._alpha_phi(nu, zeta)
    c = math.cos(phi)
    return zeta * zeta * kappa / (eta * nu) * math.sin(alpha) ** 2 / (c * c)


def theta_exact(nu, n: MediumIndex, x, ctx: PrecisionContext = DEFAULT_CONTEXT) -> float:
    """Exact boundary flux angle ``-arctan((1/nu) x Im(n J'(n x)/J(n x)))``."""
    if nu < 1:
        raise DomainError("nu must be >= 1")
    _, nlj = _interior(nu, n.n, x, ctx)
    return -math.atan2(float(x * complex(nlj).imag), float(nu))


# ---------------------------------------------------------------------------
# profiles


def _profile_values(coeffs: CoefficientSet, nu, nn, xr, interior, ctx):
    """Normalised ``E/b1`` and ``d(E/b1)/d(k rho)`` at ``k rho = xr``."""
    hw = _is_hw(ctx)
    if interior:
        z = nn * xr
        if hw:
            zz = specfun._hw_arg(z)
            e = complex(special.jv(nu, zz))
            de = nn * complex(special.jvp(nu, zz))
        else:
            mp = mp_context(ctx.mantissa_bits)
            z = mp.mpmathify(nn) * mp.mpf(xr)
            e = mp.besselj(nu, z)
            de = mp.mpmathify(nn) * mp.besselj(nu, z, derivative=1)
        return complex(e), complex(de)
    if hw:
        h1, h2 = complex(special.hankel1(nu, xr)), complex(special.hankel2(nu, xr))
        h1p, h2p = complex(special.h1vp(nu, xr)), complex(special.h2vp(nu, xr))
        b = coeffs.b1
    else:
        mp = mp_context(ctx.mantissa_bits)
        xr = mp.mpf(xr)
        h1, h2 = mp.hankel1(nu, xr), mp.hankel2(nu, xr)
        h1p = (mp.hankel1(nu - 1, xr) - mp.hankel1(nu + 1, xr)) / 2
        h2p = (mp.hankel2(nu - 1, xr) - mp.hankel2(nu + 1, xr)) / 2
        b = mp.mpmathify(coeffs.b1)
    e = (coeffs.a1 * h1 + coeffs.a2 * h2) / b
    de = (coeffs.a1 * h1p + coeffs.a2 * h2p) / b
    return complex(e), complex(de)


def boundary_values(coeffs: CoefficientSet, nu, n: MediumIndex, x: float, side: str,
                    ctx: PrecisionContext = DEFAULT_CONTEXT):
    """``(E, dE/d(k rho))`` at ``rho = a`` from the ``"inside"`` or ``"outside"`` form."""
    if side not in ("inside", "outside"):
        raise ValueError("side must be 'inside' or 'outside'")
    return _profile_values(coeffs, nu, n.n, x, side == "inside", ctx)


def field_profile(coeffs: CoefficientSet, nu, n: MediumIndex, k: float, geometry: CylinderGeometry,
                  grid_spec: Union[GridSpec, Sequence[float], np.ndarray],
                  ctx: PrecisionContext = DEFAULT_CONTEXT) -> FieldProfile:
    """Energy density, Poynting components and flux angle on a radial grid.

    Samples with ``rho <= a`` use the interior Bessel field; samples beyond
    use the full ``a1 H1 + a2 H2`` superposition.
    """
    if coeffs.mode_kind is not ModeKind.AXIAL_E:
        raise ValueError("profiles are defined for the axial-E mode")
    rho = grid_spec.grid() if isinstance(grid_spec, GridSpec) else np.asarray(grid_spec, dtype=float)
    if rho.size == 0 or np.any(rho <= 0):
        raise DomainError("rho grid must be strictly positive (rho = 0 is a coordinate singularity)")
    if np.any(np.diff(rho) <= 0):
        raise ValueError("rho grid must be ascending")
    a = geometry.radius_a
    nn = n.n
    eps_r = (nn * nn).real
    u = np.empty(rho.size)
    s_phi = np.empty(rho.size)
    s_rho = np.empty(rho.size)
    inside = rho <= a
    for i, r in enumerate(rho):
        xr = k * r
        e, de = _profile_values(coeffs, nu, nn, xr, bool(inside[i]), ctx)
        e2 = abs(e) ** 2
        ang = (nu / xr) ** 2
        if inside[i]:
            u[i] = e2 * (eps_r + ang) + abs(de) ** 2
        else:
            u[i] = e2 * (1.0 + ang) + abs(de) ** 2
        s_phi[i] = nu * e2 / xr
        s_rho[i] = (e.conjugate() * de).imag
    theta = -np.arctan2(s_rho, s_phi)
    return FieldProfile(rho, u, s_phi, s_rho, theta, inside)


def theta_crude(nu, eta, kappa) -> float:
    """Large-``nu`` estimate of the flux angle at ``j'_{nu,1}``."""
    c = 1.6 * nu ** (1.0 / 3.0)
    return c / eta * (1.0 + 1.6 * nu ** (-1.0 / 3.0)) * kappa
