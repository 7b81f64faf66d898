"""Complex resonances and quality factors of the axial-E modes.

At fixed complex index ``n`` the characteristic equation

    F(x) = n J'(n x)/J(n x) - H1'(x)/H1(x) = 0

is solved for complex ``x = k a``. With outgoing ``H1`` and ``e^{-i w t}``
time dependence, decaying modes have ``Im k < 0``; the quality factor is
reported as ``Q = -Re k / Im k`` so that it is positive for them and
diverges at a spectral singularity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

from . import dispersion, singsolve, specfun
from .errors import ConvergenceError, DomainError, PrecisionError, SgmError
from .fields import CylinderGeometry, MediumIndex
from .precision import DEFAULT_CONTEXT, PrecisionContext, mp_context

LADDER = (53, 128, 192, 256, 384)
SEED_OFFSET = 1e-6


@dataclass(frozen=True)
class ResonanceRecord:
    nu: int
    q: Optional[int]
    k_complex: complex
    lambda_nm: float
    Q: float
    Q0: float
    g_used: float
    precision_bits: int
    precision_limited: bool = False
    converged: bool = True
    steps: Tuple[float, ...] = ()
    g_singular: float = float("nan")

    @property
    def x_complex(self) -> complex:
        return self.k_complex


def characteristic(nu, n, x, ctx: PrecisionContext = DEFAULT_CONTEXT):
    """``(F(x), F'(x))`` in log-derivative form at complex ``x``."""
    if ctx.hardware:
        n = complex(n)
        x = complex(x)
    else:
        mp = mp_context(ctx.mantissa_bits)
        n = mp.mpmathify(n)
        x = mp.mpmathify(x)
    z = n * x
    lj = specfun.j_logderiv(nu, z, ctx)
    lh = specfun.h1_logderiv(nu, x, ctx)
    f = n * lj - lh
    fp = n * n * specfun.logderiv_slope(nu, z, lj) - specfun.logderiv_slope(nu, x, lh)
    return f, fp


def _quality(x) -> float:
    im = float(x.imag)
    return math.inf if im == 0.0 else -float(x.real) / im


def complex_resonance(nu, n: MediumIndex, geometry: CylinderGeometry, k_seed: complex,
                      ctx: PrecisionContext = DEFAULT_CONTEXT, q: Optional[int] = None) -> ResonanceRecord:
    """Newton iteration for the complex root nearest ``k_seed`` (in 1/m).

    Convergence is judged component-wise on the step: the real part to
    ``residual_tol`` relative to ``Re x`` and the imaginary part relative to
    ``Im x``, which may be 1e-20 of the real part. When the imaginary step
    stops contracting below ``2**(-bits/2)`` relative, the iterate sits at
    the rounding floor and is accepted.
    """
    a = geometry.radius_a
    x = complex(k_seed) * a
    if not ctx.hardware:
        x = mp_context(ctx.mantissa_bits).mpc(x)
    nn = n.n
    tol = max(ctx.residual_tol, 16.0 * 2.0 ** (-ctx.mantissa_bits))
    f, fp = characteristic(nu, nn, x, ctx)
    steps = []
    converged = False
    prev_im = None
    stalls = 0
    noisy = False
    floor = max(tol, 2.0 ** (-ctx.mantissa_bits / 2))
    for _ in range(ctx.max_iter):
        dx = -f / fp
        lam = 1.0
        for _ in range(40):
            xt = x + lam * dx
            ft, fpt = characteristic(nu, nn, xt, ctx)
            if abs(ft) < abs(f) or abs(lam * dx) <= tol * abs(x):
                break
            lam /= 2
        step = lam * dx
        x, f, fp = xt, ft, fpt
        steps.append(float(abs(step)))
        re_ok = abs(step.real) <= tol * abs(x.real)
        im_step = float(abs(step.imag))
        if re_ok and im_step <= tol * max(abs(x.imag), 1e-300 * abs(x)):
            converged = True
            break
        # once Re x is settled, a non-contracting imaginary step is the rounding floor of Im F
        if re_ok and prev_im is not None and im_step >= 0.5 * prev_im:
            stalls += 1
            if im_step <= floor * abs(x.imag) or stalls >= 3:
                converged = True
                noisy = im_step > floor * abs(x.imag)
                break
        else:
            stalls = 0
        prev_im = im_step if re_ok else None
    xc = complex(x)
    k = xc / a
    ratio = abs(xc.imag / xc.real)
    limited = noisy or ratio <= 2.0 ** (-ctx.mantissa_bits + 8)
    rec = ResonanceRecord(nu=int(nu), q=q, k_complex=k, lambda_nm=2 * math.pi / k.real * 1e9,
                          Q=_quality(x), Q0=float("nan"), g_used=float("nan"),
                          precision_bits=ctx.mantissa_bits, precision_limited=limited,
                          converged=converged, steps=tuple(steps))
    if not converged:
        raise ConvergenceError("complex resonance did not converge", best=rec, residual=float(abs(f)))
    return rec


def resonance_with_escalation(nu, n: MediumIndex, geometry: CylinderGeometry, k_seed: complex,
                              ctx: PrecisionContext = DEFAULT_CONTEXT, ladder: Sequence[int] = LADDER,
                              min_bits: int = 192, q: Optional[int] = None) -> ResonanceRecord:
    """Climb the precision ladder until ``Q`` moves by under 1% at ``>= min_bits``.

    Each rung starts from the previous rung's root. The caller chooses the
    ladder; precision never changes silently inside :func:`complex_resonance`.
    """
    prev = None
    seed = k_seed
    for bits in ladder:
        if bits < ctx.mantissa_bits:
            continue
        rec = complex_resonance(nu, n, geometry, seed, ctx.with_bits(bits), q=q)
        if prev is not None and bits >= min_bits and not rec.precision_limited:
            if abs(rec.Q / prev.Q - 1.0) < 0.01:
                return rec
        prev, seed = rec, rec.k_complex
    if prev is None:
        raise PrecisionError("empty precision ladder")
    return prev


def round_gain(g0: float, g_rounding: float, relative: bool = True) -> float:
    """Round ``g0`` to the nearest multiple of the rounding quantum.

    With ``relative=True`` the quantum is ``g_rounding`` times the leading
    power of ten of ``g0`` (``1e-3`` keeps four significant digits);
    otherwise it is ``g_rounding`` in cm^-1.
    """
    if not g_rounding > 0:
        raise DomainError("g_rounding must be positive")
    if g0 == 0:
        return 0.0
    quantum = g_rounding * 10.0 ** math.floor(math.log10(abs(g0))) if relative else g_rounding
    return round(g0 / quantum) * quantum


def q_factor_table(nu, q_range: Sequence[int], model: dispersion.GainMediumModel, geometry: CylinderGeometry,
                   g_rounding: float, ctx: PrecisionContext = DEFAULT_CONTEXT, relative: bool = True,
                   ladder: Sequence[int] = LADDER, min_bits: int = 192) -> List[ResonanceRecord]:
    """Active and passive quality factors of the singular branches ``q_range``.

    For each branch the singular gain ``g0`` (with dispersion) is rounded,
    the complex resonance is solved at that gain, and the passive ``Q0`` is
    solved at ``n = n0``. Failed rows carry ``converged=False``.
    """
    out = []
    for q in q_range:
        sol, g_r = None, float("nan")
        try:
            seed = singsolve.perturbative_branch(nu, model.n0, q, geometry, ctx)
            sol = dispersion.solve_dispersive(model, nu, geometry, seed.x, seed.kappa, ctx=ctx)
            g_r = round_gain(sol.g0, g_rounding, relative)
            n_active = dispersion.refractive_index(model.with_gain(g_r), sol.lambda_nm)
            k0 = complex(sol.x, -SEED_OFFSET * sol.x) / geometry.radius_a
            act = resonance_with_escalation(nu, n_active, geometry, k0, ctx, ladder, min_bits, q)
            pas = resonance_with_escalation(nu, MediumIndex(model.n0, 0.0), geometry, k0, ctx, ladder,
                                            min_bits, q)
            out.append(replace(act, Q0=pas.Q, g_used=g_r, g_singular=sol.g0,
                               lambda_nm=sol.lambda_nm))
        except SgmError as exc:
            best = getattr(exc, "best", None)
            if isinstance(best, ResonanceRecord) and sol is not None:
                best = replace(best, g_used=g_r, g_singular=sol.g0)
            nan = float("nan")
            out.append(ResonanceRecord(nu=int(nu), q=q, k_complex=complex(nan, nan), lambda_nm=nan, Q=nan,
                                       Q0=nan, g_used=nan, precision_bits=ctx.mantissa_bits,
                                       converged=False) if not isinstance(best, ResonanceRecord) else
                       replace(best, converged=False))
    return out
