"""Spectral singularities of the axial-E gallery modes.

Two routes are provided and kept separate:

* perturbative: the large-order (Debye) form of the singularity condition,
  first order in ``kappa``. The real part fixes ``x`` per radial branch and the
  imaginary part gives ``kappa`` in closed form, evaluated in log space so that
  values such as ``1e-172`` survive;
* exact: damped Newton in ``(x, kappa)`` on

      n J'(n x)/J(n x) - H1'(x)/H1(x) = 0,    n = eta + i kappa,

  with ``x = k a`` real.

Branch ``q`` is the root whose Debye phase ``phi`` lies in
``((q-1) pi, (q-1) pi + pi/2)``, i.e. between the large-order estimates of
``j'_{nu,q}`` and ``j_{nu,q}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, List, NamedTuple, Optional

import numpy as np
from scipy import special
from scipy.optimize import brentq

from . import kernels, specfun
from .errors import (BracketError, ConditionViolation, ConvergenceError, DomainError,
                     NoRootError, PrecisionError, SgmError)
from .fields import CylinderGeometry, MediumIndex, theta_exact
from .precision import DEFAULT_CONTEXT, PrecisionContext, mp_context

LN2 = math.log(2.0)
LN10 = math.log(10.0)

PERTURBATIVE = "perturbative"
EXACT = "exact-refined"


@dataclass(frozen=True)
class SingularityRecord:
    """One spectral singularity ``(nu, q)``.

    ``kappa`` is stored as ``log10(-kappa)`` and the gain coefficient both
    linearly (``g_per_cm``, may underflow to 0) and as ``log10_g``.
    """

    nu: int
    q: int
    eta: float
    radius_a: float
    zeta: float
    x: float
    lambda_nm: float
    log10_neg_kappa: float
    g_per_cm: float
    log10_g: float
    theta: float
    method: str = PERTURBATIVE
    status: str = "ok"

    @property
    def kappa(self) -> float:
        return -10.0 ** self.log10_neg_kappa

    def check(self, rtol: float = 1e-9) -> None:
        """Assert the internal consistency relations of the record."""
        if abs(self.zeta - self.eta * self.x) > 1e-12 * self.zeta:
            raise AssertionError("zeta != eta x")
        lhs = self.lambda_nm * 1e-9 * self.zeta
        rhs = 2 * math.pi * self.radius_a * self.eta
        if abs(lhs - rhs) > rtol * rhs:
            raise AssertionError("lambda zeta != 2 pi a eta")
        lg = math.log10(4 * math.pi) + self.log10_neg_kappa - math.log10(self.lambda_nm * 1e-7)
        if abs(lg - self.log10_g) > rtol * max(1.0, abs(lg)):
            raise AssertionError("g != -4 pi kappa / lambda")


@dataclass(frozen=True)
class SgmSummary:
    nu: int
    q_max: int
    lambda_min: float
    lambda_max: float
    log10_g_min: float

    @property
    def g_min(self) -> float:
        return 10.0 ** self.log10_g_min


@dataclass(frozen=True)
class NogoReport:
    kind: str
    nu: int
    q: int
    zeta: float
    psi: float
    margin: float

    @property
    def excluded(self) -> bool:
        return self.margin > 0


def _make_record(nu, q, eta, geometry, x, log_neg_kappa, theta, method, status="ok"):
    lam = geometry.wavelength_nm(x)
    l10k = log_neg_kappa / LN10
    log10_g = math.log10(4 * math.pi) + l10k - math.log10(lam * 1e-7)
    return SingularityRecord(nu=nu, q=q, eta=eta, radius_a=geometry.radius_a, zeta=eta * x, x=x,
                             lambda_nm=lam, log10_neg_kappa=l10k, g_per_cm=10.0 ** log10_g,
                             log10_g=log10_g, theta=theta, method=method, status=status)


# ---------------------------------------------------------------------------
# perturbative route


def _check_regime(nu, eta):
    if nu < 1:
        raise DomainError("nu must be >= 1")
    if not eta > 1:
        raise ConditionViolation("eta must exceed 1 for gallery singularities")


def branch_function(nu, eta, x):
    """Pole-free large-order singularity condition (real part), vectorised.

    ``tanh(2 psi - ln 2) sinh(beta) cos(phi) + eta sin(alpha) sin(phi)``
    for ``nu/eta < x < nu``.
    """
    x = np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=float)))
    out = np.empty_like(x)
    kernels.branch_function(float(nu), float(eta), x, out)
    return out


def _phi_of_zeta(nu, zeta):
    return specfun._alpha_phi(nu, zeta)[1]


def _zeta_of_phi(nu, phi, zeta_hi):
    """Invert the monotone map ``zeta -> phi`` on ``(nu, zeta_hi]``."""
    lo = nu * (1.0 + 1e-15)
    return brentq(lambda z: _phi_of_zeta(nu, z) - phi, lo, zeta_hi, xtol=1e-14, rtol=1e-15)


def phi_max(nu, eta) -> float:
    """Debye phase at the edge ``x = nu`` of the admissible window."""
    return _phi_of_zeta(nu, eta * nu)


def q_max(nu, eta) -> int:
    """Number of perturbative singularity branches for ``(nu, eta)``."""
    _check_regime(nu, eta)
    return max(0, math.ceil(phi_max(nu, eta) / math.pi))


def branch_bracket(nu, eta, q):
    """``(x_lo, x_hi)`` bracketing branch ``q`` of the perturbative condition."""
    _check_regime(nu, eta)
    qm = q_max(nu, eta)
    if q < 1 or q > qm:
        raise NoRootError(f"q={q} outside 1..{qm} for nu={nu}, eta={eta}")
    zeta_hi = eta * nu
    p_lo = (q - 1) * math.pi
    p_hi = p_lo + 0.5 * math.pi
    z_lo = nu * (1.0 + 1e-15) if q == 1 else _zeta_of_phi(nu, p_lo, zeta_hi)
    pm = phi_max(nu, eta)
    z_hi = zeta_hi if p_hi >= pm else _zeta_of_phi(nu, p_hi, zeta_hi)
    x_lo, x_hi = z_lo / eta, z_hi / eta
    # stay strictly inside x < nu where beta > 0
    x_hi = min(x_hi, nu * (1.0 - 1e-15))
    # keep strictly clear of the alpha = 0 end
    x_lo = max(x_lo, nu / eta * (1.0 + 1e-14))
    return x_lo, x_hi


def perturbative_kappa_log(nu, eta, x) -> float:
    """``ln(-kappa)`` from the imaginary part of the large-order condition.

    ``-kappa = sinh(beta) sech(2 psi - ln 2) cos^2(phi) / (x eta sin^2 alpha)``
    with ``sech(2 psi - ln 2) = e^{2 psi} / (1 + e^{4 psi}/4)``.
    """
    zeta = eta * x
    alpha, phi = specfun._alpha_phi(nu, zeta)
    beta, psi = specfun._beta_psi(nu, x)
    c = math.cos(phi)
    return (math.log(math.sinh(beta) * c * c / (x * eta * math.sin(alpha) ** 2))
            + 2.0 * psi - math.log1p(math.exp(4.0 * psi) / 4.0))


def perturbative_branch(nu, eta, q, geometry: CylinderGeometry,
                        ctx: PrecisionContext = DEFAULT_CONTEXT) -> SingularityRecord:
    """Branch ``q`` from the first-order large-order equations."""
    lo, hi = branch_bracket(nu, eta, q)
    f = lambda x: float(branch_function(nu, eta, x)[0])
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        x = lo
    elif fhi == 0.0:
        x = hi
    elif (flo > 0) == (fhi > 0):
        raise BracketError(f"branch q={q} bracket has no sign change")
    else:
        x = brentq(f, lo, hi, xtol=1e-13, rtol=1e-15, maxiter=max(ctx.max_iter, 200))
    if not (x > 1.0 and eta * x > nu > x):
        raise ConditionViolation("root leaves zeta > nu > x >> 1")
    lk = perturbative_kappa_log(nu, eta, x)
    # theta = (zeta^2 kappa/(eta nu)) (sec^2 phi - nu^2/zeta^2), scaled in logs
    zeta = eta * x
    _, phi = specfun._alpha_phi(nu, zeta)
    bracket = 1.0 / math.cos(phi) ** 2 - (nu / zeta) ** 2
    log_mag = lk + math.log(zeta * zeta / (eta * nu)) + math.log(abs(bracket))
    theta = -math.copysign(math.exp(log_mag), bracket) if log_mag > -745 else -0.0
    return _make_record(nu, q, eta, geometry, x, lk, theta, PERTURBATIVE)


# ---------------------------------------------------------------------------
# exact route


def singularity_residual(nu, eta, kappa, x, ctx: PrecisionContext = DEFAULT_CONTEXT):
    """Mismatch ``n Lj(n x) - Lh(x)`` and its partial derivatives.

    Returns ``(R, dR/dx, dR/dkappa, Lh)``; values are complex (or mpmath
    ``mpc`` above 53 bits).
    """
    if ctx.hardware:
        n = complex(eta, kappa)
        z = n * x
        lj = specfun.j_logderiv(nu, z, ctx)
        lh = specfun.h1_logderiv(nu, x, ctx)
    else:
        mp = mp_context(ctx.mantissa_bits)
        n = mp.mpc(eta, kappa)
        x = mp.mpf(x)
        z = n * x
        lj = specfun.j_logderiv(nu, z, ctx)
        lh = specfun.h1_logderiv(nu, x, ctx)
    ljp = specfun.logderiv_slope(nu, z, lj)
    lhp = specfun.logderiv_slope(nu, x, lh)
    r = n * lj - lh
    rx = n * n * ljp - lhp
    rk = 1j * (lj + z * ljp)
    return r, rx, rk, lh


def _scaled(r, lh):
    return float(abs(r.real) / abs(lh.real)), float(abs(r.imag) / abs(lh.imag))


class FixedIndexRoot(NamedTuple):
    x: float
    kappa: float
    merit: float
    converged: bool
    iterations: int


def refine_fixed_index(nu, eta, x, kappa, ctx: PrecisionContext = DEFAULT_CONTEXT) -> FixedIndexRoot:
    """Damped Newton in ``(x, kappa)`` on the exact condition at fixed ``eta``.

    Convergence is component-wise: ``|Re R| <= tol |Re Lh|`` and
    ``|Im R| <= tol |Im Lh|``, since ``Im Lh`` can be ~1e-170 while
    ``Re Lh`` is O(1). When ``x >> nu`` the real part of ``Lh`` is itself
    tiny and that test sits below rounding, so a full Newton step smaller
    than ``2^(10-bits) x`` (and ``1e3`` times that, relative, in ``kappa``)
    also counts as converged. Steps are halved up to 40 times while the
    scaled residual does not decrease; ``kappa`` is kept negative.
    """
    tol = max(ctx.residual_tol, 64.0 * 2.0 ** (-ctx.mantissa_bits))
    step_tol = 2.0 ** (10 - ctx.mantissa_bits)
    if ctx.hardware:
        num = float
    else:
        num = mp_context(ctx.mantissa_bits).mpf
    x, kap = num(x), num(kappa)
    if not kap < 0:
        raise DomainError("kappa seed must be negative")

    def merit(r, lh):
        return max(_scaled(r, lh))

    r, rx, rk, lh = singularity_residual(nu, eta, kap, x, ctx)
    m = merit(r, lh)
    it = 0
    stalled_at_rounding = False
    while m > tol and it < ctx.max_iter:
        it += 1
        a11, a12, a21, a22 = rx.real, rk.real, rx.imag, rk.imag
        det = a11 * a22 - a12 * a21
        if det == 0:
            break
        dx = (-r.real * a22 + r.imag * a12) / det
        dk = (-r.imag * a11 + r.real * a21) / det
        if abs(dx) <= step_tol * abs(x) and abs(dk) <= 1e3 * step_tol * abs(kap):
            stalled_at_rounding = True
            break
        lam = num(1)
        for _ in range(40):
            xt, kt = x + lam * dx, kap + lam * dk
            if kt < 0 and xt > 0:
                rt, rxt, rkt, lht = singularity_residual(nu, eta, kt, xt, ctx)
                mt = merit(rt, lht)
                if mt < m:
                    break
            lam /= 2
        else:
            break
        x, kap, r, rx, rk, lh, m = xt, kt, rt, rxt, rkt, lht, mt
    return FixedIndexRoot(x, kap, float(m), m <= tol or stalled_at_rounding, it)


def exact_refine(nu, eta, seed: SingularityRecord, geometry: CylinderGeometry,
                 ctx: PrecisionContext = DEFAULT_CONTEXT) -> SingularityRecord:
    """Refine a perturbative ``seed`` on the exact condition.

    The continued-fraction ``J'/J`` keeps ``Im(n x) = kappa x`` at full
    relative precision down to ~1e-300, so 53 bits suffice for every
    representable ``kappa``.
    """
    if seed.log10_neg_kappa < -300:
        raise PrecisionError("kappa x underflows double precision; seed stays perturbative")
    root = refine_fixed_index(nu, eta, seed.x, seed.kappa, ctx)
    best = _exact_record(nu, eta, seed.q, geometry, root.x, root.kappa, ctx,
                         "ok" if root.converged else "not-converged")
    if not root.converged:
        raise ConvergenceError(f"exact refinement of q={seed.q} stalled", best=best, residual=root.merit)
    return best


def real_part_function(nu, eta, x):
    """``eta J'(eta x) - J(eta x) Re(H'/H)(x)``, vectorised and pole free.

    Its zeros are the real part of the exact condition at ``kappa = 0``.
    """
    x = np.asarray(x, dtype=float)
    z = eta * x
    j, jp = special.jv(nu, z), special.jvp(nu, z)
    hj, hjp = special.jv(nu, x), special.jvp(nu, x)
    y, yp = special.yv(nu, x), special.yvp(nu, x)
    r = hj / y
    re_lh = (r * (hjp / y) + yp / y) / (1.0 + r * r)
    return eta * jp - j * re_lh


def real_part_roots(nu, eta, x_lo, x_hi) -> List[float]:
    """All zeros of :func:`real_part_function` in ``[x_lo, x_hi]``.

    Consecutive zeros are at least ``pi/eta`` apart, so a grid of step
    ``pi/(16 eta)`` cannot skip one.
    """
    if not 0 < x_lo < x_hi:
        raise DomainError("need 0 < x_lo < x_hi")
    steps = max(int(math.ceil((x_hi - x_lo) * 16.0 * eta / math.pi)), 2)
    xs = np.linspace(x_lo, x_hi, steps + 1)
    v = real_part_function(nu, eta, xs)
    f = lambda t: float(real_part_function(nu, eta, t))
    roots = []
    for i in np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]:
        roots.append(brentq(f, xs[i], xs[i + 1], xtol=1e-13, rtol=1e-15))
    return roots


def kappa_seed(nu, eta, x, ctx: PrecisionContext = DEFAULT_CONTEXT) -> float:
    """First-order ``kappa`` balancing the imaginary part at a real-part root."""
    r, _, rk, lh = singularity_residual(nu, eta, 0.0, x, ctx)
    return float(-r.imag / rk.imag)


def _exact_record(nu, eta, q, geometry, x, kap, ctx, status):
    x = float(x)
    lk = math.log(-float(kap))
    theta = theta_exact(nu, MediumIndex(eta, float(kap)), x, ctx)
    return _make_record(nu, q, eta, geometry, x, lk, theta, EXACT, status)


def sgm_table(nu, eta, geometry: CylinderGeometry, q_range: Optional[Iterable[int]] = None,
              ctx: PrecisionContext = DEFAULT_CONTEXT, exact: bool = False) -> List[SingularityRecord]:
    """All (or the requested) singularity branches, sorted by ``q``.

    Per-branch failures become rows with a non-``ok`` status and NaN values;
    the table is never aborted.
    """
    _check_regime(nu, eta)
    qs = sorted(set(q_range)) if q_range is not None else range(1, q_max(nu, eta) + 1)
    rows = []
    for q in qs:
        try:
            rec = perturbative_branch(nu, eta, q, geometry, ctx)
        except SgmError as exc:
            rows.append(_failed_row(nu, q, eta, geometry, _status(exc)))
            continue
        if exact:
            try:
                rec = exact_refine(nu, eta, rec, geometry, ctx)
            except PrecisionError:
                rec = replace(rec, status="perturbative-only")
            except ConvergenceError as exc:
                rec = exc.best if exc.best is not None else replace(rec, status="not-converged")
        rows.append(rec)
    return rows


def _status(exc):
    if isinstance(exc, NoRootError):
        return "no-root"
    if isinstance(exc, ConditionViolation):
        return "condition-violated"
    if isinstance(exc, BracketError):
        return "bracket-failure"
    return "error"


def _failed_row(nu, q, eta, geometry, status):
    nan = float("nan")
    return SingularityRecord(nu=nu, q=q, eta=eta, radius_a=geometry.radius_a, zeta=nan, x=nan,
                             lambda_nm=nan, log10_neg_kappa=nan, g_per_cm=nan, log10_g=nan,
                             theta=nan, method=PERTURBATIVE, status=status)


def sgm_summary(nu, eta, geometry: CylinderGeometry, ctx: PrecisionContext = DEFAULT_CONTEXT) -> SgmSummary:
    """Branch count, wavelength span and smallest gain for one ``nu``."""
    rows = [r for r in sgm_table(nu, eta, geometry, ctx=ctx) if r.status == "ok"]
    if not rows:
        raise NoRootError(f"no singularity branches for nu={nu}")
    return SgmSummary(nu=nu, q_max=rows[-1].q, lambda_min=rows[-1].lambda_nm,
                      lambda_max=rows[0].lambda_nm, log10_g_min=min(r.log10_g for r in rows))


def count_branch_roots(nu, eta, samples: int = 400_000) -> int:
    """Sign changes of :func:`branch_function` over ``(nu/eta, nu/1.0001)``."""
    _check_regime(nu, eta)
    xs = np.linspace(nu / eta * (1.0 + 1e-12), nu / 1.0001, samples)
    v = branch_function(nu, eta, xs)
    s = np.sign(v)
    return int(np.count_nonzero(s[:-1] * s[1:] < 0))


# ---------------------------------------------------------------------------
# no-go checks for the classical gallery modes


def wgm_nogo_check(nu, eta, kind, q, ctx: PrecisionContext = DEFAULT_CONTEXT,
                   beta_samples: int = 2001) -> NogoReport:
    """Quantify why modes pinned at ``j'_{nu,q}`` or ``j_{nu,q}`` cannot be singular.

    * ``"WGM'"`` (``zeta = j'_{nu,q}``): the condition would need
      ``psi = ln2/2`` but ``psi <= 0``; the margin is ``ln2/2 - psi``.
    * ``"WGM"`` (``zeta = j_{nu,q}``): the bounded first term
      ``tanh(2 psi - ln 2) sinh(beta)`` cannot cancel ``eta sin(alpha) tan(phi)``;
      the margin is the smallest ``|residual|`` over ``beta`` in
      ``(0, arccosh(eta)]``.
    """
    if nu < 100:
        raise DomainError("no-go analysis needs nu >= 100")
    if kind in ("WGM'", "WGMp", "WGM-prime"):
        zeta = specfun.bessel_jprime_zero(nu, q, ctx)
        x = zeta / eta
        if not x < nu:
            raise ConditionViolation("implied x is not below nu")
        _, psi = specfun._beta_psi(nu, x)
        return NogoReport("WGM'", nu, q, zeta, psi, 0.5 * LN2 - psi)
    if kind != "WGM":
        raise ValueError("kind must be \"WGM'\" or \"WGM\"")
    zeta = specfun.bessel_j_zero(nu, q, ctx)
    alpha, phi = specfun._alpha_phi(nu, zeta)
    demand = eta * math.sin(alpha) * math.tan(phi)
    beta = np.linspace(0.0, math.acosh(eta), beta_samples)[1:]
    psi = nu * (np.tanh(beta) - beta)
    first = np.tanh(2.0 * psi - LN2) * np.sinh(beta)
    margin = float(np.min(np.abs(first + demand)))
    _, psi_x = specfun._beta_psi(nu, zeta / eta) if zeta / eta < nu else (None, 0.0)
    return NogoReport("WGM", nu, q, zeta, psi_x, margin)
