"""Two-level gain-medium dispersion coupled to the singularity solver.

The host index ``n0`` is doped with a two-level absorber/emitter of resonance
wavelength ``lambda0`` and reduced linewidth ``gamma_hat``. With
``w = lambda0/lambda`` the permittivity is

    n^2 = n0^2 - wp^2 / (w^2 - 1 + i gamma_hat w),   wp^2 = 2 n0 gamma_hat kappa0,

and to first order in ``kappa0 = -lambda0 g0 / (4 pi)``

    eta = n0 + kappa0 f1(w),   kappa = kappa0 f2(w).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import singsolve
from .errors import ConvergenceError, DomainError, NoRootError, PrecisionError
from .fields import CylinderGeometry, MediumIndex, reflection_amplitude
from .precision import DEFAULT_CONTEXT, PrecisionContext

FIRST_ORDER = "first-order"
FULL = "full"


@dataclass(frozen=True)
class GainMediumModel:
    """Host index plus a homogeneously broadened two-level gain line.

    ``g0`` is the gain coefficient at ``lambda0`` in cm^-1; ``g0_max`` is the
    material cap, only enforced when ``enforce_cap`` is set.
    """

    n0: float
    lambda0_nm: float
    gamma_hat: float
    g0: float = 0.0
    g0_max: float = math.inf
    enforce_cap: bool = False

    def __post_init__(self):
        if not self.n0 > 1:
            raise DomainError("n0 must exceed 1")
        if not self.gamma_hat > 0:
            raise DomainError("gamma_hat must be positive")
        if not self.lambda0_nm > 0:
            raise DomainError("lambda0 must be positive")
        if self.enforce_cap and self.g0 > self.g0_max:
            raise DomainError(f"g0={self.g0} exceeds the cap {self.g0_max}")

    @property
    def kappa0(self) -> float:
        return kappa0_from_gain(self.g0, self.lambda0_nm)

    @property
    def omega_p2(self) -> float:
        """Reduced plasma frequency squared, ``2 n0 gamma_hat kappa0``."""
        return 2.0 * self.n0 * self.gamma_hat * self.kappa0

    def with_gain(self, g0: float) -> "GainMediumModel":
        return replace(self, g0=g0)

    def omega_hat(self, lambda_nm):
        return self.lambda0_nm / np.asarray(lambda_nm, dtype=float)


ROSE_BENGAL = GainMediumModel(n0=1.479, lambda0_nm=549.0, gamma_hat=0.062, g0=0.0, g0_max=5.0)


def kappa0_from_gain(g0, lambda0_nm):
    """``kappa0 = -lambda0 g0 / (4 pi)`` with ``g0`` in cm^-1."""
    return -lambda0_nm * 1e-7 * g0 / (4.0 * math.pi)


def gain_from_kappa0(kappa0, lambda0_nm):
    return -4.0 * math.pi * kappa0 / (lambda0_nm * 1e-7)


def _denominator(w, gh):
    return (1.0 - w * w) ** 2 + gh * gh * w * w


def f1(w, gamma_hat):
    """Dispersive (real-index) line shape; sign of ``1 - w^2``."""
    w = np.asarray(w, dtype=float)
    return gamma_hat * (1.0 - w * w) / _denominator(w, gamma_hat)


def f2(w, gamma_hat):
    """Absorptive line shape; positive, equal to 1 at ``w = 1``."""
    w = np.asarray(w, dtype=float)
    return gamma_hat ** 2 * w / _denominator(w, gamma_hat)


def refractive_index(model: GainMediumModel, lambda_nm: float, order: str = FIRST_ORDER,
                     ctx: PrecisionContext = DEFAULT_CONTEXT) -> MediumIndex:
    """Complex index at vacuum wavelength ``lambda_nm``."""
    if not lambda_nm > 0:
        raise DomainError("wavelength must be positive")
    w = model.lambda0_nm / lambda_nm
    k0 = model.kappa0
    if order == FIRST_ORDER:
        return MediumIndex(model.n0 + k0 * float(f1(w, model.gamma_hat)),
                           k0 * float(f2(w, model.gamma_hat)))
    if order == FULL:
        n = _full_index(model.n0, model.gamma_hat, k0, w)
        return MediumIndex(n.real, n.imag)
    raise ValueError(f"order must be {FIRST_ORDER!r} or {FULL!r}")


def _full_index(n0, gh, kappa0, w):
    eps = n0 * n0 - 2.0 * n0 * gh * kappa0 / (w * w - 1.0 + 1j * gh * w)
    return cmath.sqrt(eps)  # principal branch, Re > 0


def gain_for_kappa(model: GainMediumModel, lambda_nm: float, kappa: float,
                   order: str = FIRST_ORDER) -> Tuple[float, float]:
    """Invert the dispersion law: ``(g0, eta)`` giving ``Im n = kappa`` at ``lambda``."""
    w = model.lambda0_nm / lambda_nm
    gh = model.gamma_hat
    k0 = kappa / float(f2(w, gh))
    if order == FIRST_ORDER:
        return gain_from_kappa0(k0, model.lambda0_nm), model.n0 + k0 * float(f1(w, gh))
    if order != FULL:
        raise ValueError(f"order must be {FIRST_ORDER!r} or {FULL!r}")
    # Im n is monotone in kappa0 near 0; secant from the first-order seed
    h = lambda c: _full_index(model.n0, gh, c, w).imag - kappa
    a, b = k0, k0 * (1.0 + 1e-6) if k0 != 0 else 1e-300
    fa, fb = h(a), h(b)
    for _ in range(60):
        if fb == fa:
            break
        a, fa, b = b, fb, b - fb * (b - a) / (fb - fa)
        fb = h(b)
        if abs(fb) <= 1e-15 * abs(kappa):
            break
    return gain_from_kappa0(b, model.lambda0_nm), _full_index(model.n0, gh, b, w).real


# ---------------------------------------------------------------------------
# dispersive singularities


class DispersiveSingularity(NamedTuple):
    nu: int
    lambda_nm: float
    g0: float
    x: float
    eta: float
    kappa: float
    status: str


def solve_dispersive(model: GainMediumModel, nu, geometry: CylinderGeometry, x_seed: float,
                     kappa_seed: Optional[float] = None, order: str = FIRST_ORDER,
                     ctx: PrecisionContext = DEFAULT_CONTEXT, tol: float = 1e-15,
                     max_outer: int = 30) -> DispersiveSingularity:
    """Spectral singularity with the index following the dispersion law.

    The fixed-index Newton solve is the inner kernel; an outer secant on
    ``eta`` closes the feedback ``eta -> (x, kappa) -> g0 -> eta``. The
    correction to ``eta`` is O(kappa0), so a few outer steps suffice.
    """
    eta = model.n0
    kap = kappa_seed if kappa_seed is not None else singsolve.kappa_seed(nu, eta, x_seed, ctx)
    if not kap < 0:
        raise NoRootError("no gain solution from this seed")
    x = x_seed

    def inner(e, x0, k0):
        root = singsolve.refine_fixed_index(nu, e, x0, k0, ctx)
        if not root.converged:
            raise ConvergenceError("fixed-index refinement failed", best=root, residual=root.merit)
        lam = geometry.wavelength_nm(float(root.x))
        g0, e_new = gain_for_kappa(model, lam, float(root.kappa), order)
        return root, lam, g0, e_new

    root, lam, g0, e_new = inner(eta, x, kap)
    h_prev, eta_prev = e_new - eta, eta
    eta = e_new
    status = "not-converged"
    for _ in range(max_outer):
        root, lam, g0, e_new = inner(eta, float(root.x), float(root.kappa))
        h = e_new - eta
        if abs(h) <= tol * eta:
            status = "ok"
            break
        if h != h_prev:
            eta, eta_prev, h_prev = eta - h * (eta - eta_prev) / (h - h_prev), eta, h
        else:
            eta, eta_prev, h_prev = e_new, eta, h
    return DispersiveSingularity(int(nu), lam, g0, float(root.x), eta, float(root.kappa), status)


def _model_band(model, lo, hi):
    if not (model.lambda0_nm / 2 < lo < hi < 2 * model.lambda0_nm):
        raise DomainError("wavelength window must lie inside (lambda0/2, 2 lambda0)")


def dispersive_singularities(model: GainMediumModel, nu, geometry: CylinderGeometry,
                             lambda_window: Tuple[float, float], order: str = FIRST_ORDER,
                             ctx: PrecisionContext = DEFAULT_CONTEXT) -> List[DispersiveSingularity]:
    """Every ``(lambda, g0)`` singularity of azimuthal order ``nu`` in the window.

    Seeds are the zeros of the pole-free real part at ``eta = n0`` and
    ``kappa = 0``; each is then solved with :func:`solve_dispersive`.
    Rows whose solve fails are kept with a non-``ok`` status.
    """
    lo, hi = lambda_window
    _model_band(model, lo, hi)
    x_lo, x_hi = geometry.size_parameter(hi), geometry.size_parameter(lo)
    seeds = singsolve.real_part_roots(nu, model.n0, x_lo, x_hi)
    out = []
    for xs in seeds:
        try:
            kap = singsolve.kappa_seed(nu, model.n0, xs, ctx)
            if not kap < 0:
                continue
            if kap > -1e-300:
                raise PrecisionError("kappa below double range")
            sol = solve_dispersive(model, nu, geometry, xs, kap, order, ctx)
        except PrecisionError:
            sol = _perturbative_fallback(model, nu, geometry, xs)
        except (ConvergenceError, NoRootError, DomainError):
            lam = geometry.wavelength_nm(xs)
            sol = DispersiveSingularity(int(nu), lam, float("nan"), xs, model.n0, float("nan"), "error")
        if sol.status != "ok" or lo <= sol.lambda_nm <= hi:
            out.append(sol)
    out.sort(key=lambda s: s.lambda_nm)
    return out


def _perturbative_fallback(model, nu, geometry, x):
    """Map a large-order ``kappa`` through ``f2`` when ``kappa`` underflows."""
    eta = model.n0
    lk = singsolve.perturbative_kappa_log(nu, eta, x)
    lam = geometry.wavelength_nm(x)
    w = model.lambda0_nm / lam
    # g0 = -4 pi kappa / (lambda0 f2), in logs; may underflow to 0
    lg = math.log(4 * math.pi) + lk - math.log(model.lambda0_nm * 1e-7 * float(f2(w, model.gamma_hat)))
    return DispersiveSingularity(int(nu), lam, math.exp(lg), x, eta, -math.exp(lk), "perturbative")


def nearest_singularity(model: GainMediumModel, nu, geometry: CylinderGeometry,
                        target_nm: Optional[float] = None, half_width_nm: Optional[float] = None,
                        ctx: PrecisionContext = DEFAULT_CONTEXT) -> DispersiveSingularity:
    """The singularity of order ``nu`` whose wavelength is closest to ``target_nm``."""
    target = model.lambda0_nm if target_nm is None else target_nm
    if half_width_nm is None:
        # two root spacings: d(lambda) = lambda^2 / (2 a n0 sin(alpha)) >= lambda^2/(2 a n0)
        spacing = target ** 2 * 1e-9 / (2.0 * geometry.radius_a * model.n0)
        zeta = model.n0 * geometry.size_parameter(target)
        sin_a = math.sqrt(max(1.0 - (nu / zeta) ** 2, 1e-4)) if zeta > nu else 1e-2
        half_width_nm = max(2.5 * spacing / sin_a, 1e-3)
    rows = dispersive_singularities(model, nu, geometry, (target - half_width_nm, target + half_width_nm),
                                    ctx=ctx)
    rows = [r for r in rows if r.status in ("ok", "perturbative")]
    if not rows:
        raise NoRootError(f"no singularity of order {nu} near {target} nm")
    return min(rows, key=lambda r: abs(r.lambda_nm - target))


def min_gain_at_resonance(model: GainMediumModel, nu_range: Sequence[int], geometry: CylinderGeometry,
                          ctx: PrecisionContext = DEFAULT_CONTEXT) -> List[Tuple[int, float]]:
    """``(nu, g0)`` for the singularity nearest the line centre, per ``nu``."""
    out = []
    for nu in nu_range:
        try:
            out.append((int(nu), nearest_singularity(model, nu, geometry, ctx=ctx).g0))
        except (NoRootError, ConvergenceError):
            out.append((int(nu), float("nan")))
    return out


def radial_min_gain(model: GainMediumModel, radius_a: float, ctx: PrecisionContext = DEFAULT_CONTEXT) -> float:
    """Smallest singular ``g0`` of the azimuthal-E (radial) mode near ``lambda0``.

    The azimuthal-E condition coincides with the axial-E condition at
    ``nu = 1``: the ``f/z`` parts of ``f~ = f' + f/z`` cancel against the
    continuity of the field itself.
    """
    geometry = CylinderGeometry(radius_a)
    lam0 = model.lambda0_nm
    spacing = lam0 ** 2 * 1e-9 / (2.0 * radius_a * model.n0)
    half = max(3.0 * spacing, 1e-4)
    rows = dispersive_singularities(model, 1, geometry, (lam0 - half, lam0 + half), ctx=ctx)
    gains = [r.g0 for r in rows if r.status == "ok" and r.g0 > 0]
    if not gains:
        raise NoRootError("no radial singularity near lambda0")
    return min(gains)


def min_radius_radial(model: GainMediumModel, g0_cap: float, ctx: PrecisionContext = DEFAULT_CONTEXT,
                      bounds_m: Tuple[float, float] = (1e-4, 1e-2), rtol: float = 1e-4) -> float:
    """Smallest radius whose radial mode has a singularity with ``g0 <= g0_cap``.

    Bisection in ``a`` on the predicate "some singularity near ``lambda0``
    needs at most ``g0_cap``".
    """
    if not g0_cap > 0:
        raise DomainError("g0_cap must be positive")
    lo, hi = bounds_m
    ok = lambda a: radial_min_gain(model, a, ctx) <= g0_cap
    if ok(lo):
        return lo
    if not ok(hi):
        raise NoRootError(f"no radius below {hi} m reaches g0 <= {g0_cap}")
    while hi - lo > rtol * hi:
        mid = math.sqrt(lo * hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# reflectance


class ReflectanceSample(NamedTuple):
    lambda_nm: float
    r2: float
    diverged: bool
    kind: str = "grid"


def reflectance(model: GainMediumModel, nu, geometry: CylinderGeometry, lambda_nm: float,
                order: str = FIRST_ORDER, ctx: PrecisionContext = DEFAULT_CONTEXT) -> ReflectanceSample:
    n = refractive_index(model, lambda_nm, order, ctx)
    refl = reflection_amplitude(nu, n, geometry.size_parameter(lambda_nm), ctx)
    if refl.diverged:
        return ReflectanceSample(lambda_nm, math.inf, True)
    return ReflectanceSample(lambda_nm, abs(refl.amplitude) ** 2, False)


def reflectance_spectrum(model: GainMediumModel, nu, g0: float, geometry: CylinderGeometry,
                         lambda_range: Tuple[float, float], samples: int,
                         order: str = FIRST_ORDER,
                         ctx: PrecisionContext = DEFAULT_CONTEXT) -> List[ReflectanceSample]:
    """``|R|^2`` on a uniform wavelength grid at fixed ``g0``."""
    if samples < 2:
        raise ValueError("samples must be >= 2")
    lo, hi = lambda_range
    if not 0 < lo < hi:
        raise DomainError("need 0 < lambda_lo < lambda_hi")
    m = model.with_gain(g0)
    return [reflectance(m, nu, geometry, float(l), order, ctx) for l in np.linspace(lo, hi, samples)]


def refine_peak(model: GainMediumModel, nu, g0: float, geometry: CylinderGeometry,
                lambda_lo: float, lambda_hi: float,
                ctx: PrecisionContext = DEFAULT_CONTEXT) -> ReflectanceSample:
    """Locate the ``|R|^2`` maximum inside ``[lambda_lo, lambda_hi]``.

    The singular peak can be far narrower than any sampling grid, so the
    bracket is first narrowed on a dense grid, then polished.
    """
    m = model.with_gain(g0)
    neg_log = lambda l: -math.log(max(reflectance(m, nu, geometry, l, ctx=ctx).r2, 1e-300))
    lo, hi = lambda_lo, lambda_hi
    # nested grids down to float resolution; a bounded Brent search stops at sqrt(eps) relative,
    # which is wider than the peak
    best = 0.5 * (lo + hi)
    for _ in range(16):
        grid = np.linspace(lo, hi, 41)
        vals = [neg_log(float(l)) for l in grid]
        i = int(np.argmin(vals))
        best = float(grid[i])
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        if grid[1] - grid[0] < 4 * np.spacing(best):
            break
    return reflectance(m, nu, geometry, best, ctx=ctx)._replace(kind="peak")


def spectrum_peaks(model: GainMediumModel, nu, g0: float, geometry: CylinderGeometry,
                   lambda_range: Tuple[float, float], samples: int,
                   ctx: PrecisionContext = DEFAULT_CONTEXT,
                   max_grid_peaks: int = 5) -> List[ReflectanceSample]:
    """Refined ``|R|^2`` maxima in the range, highest first.

    Near a singularity the peak width is ~``lambda/Q`` and falls between
    grid points, so each singular wavelength in the range (and each grid
    local maximum) is refined within one grid step.
    """
    lo, hi = lambda_range
    step = (hi - lo) / (samples - 1)
    seeds = []
    try:
        seeds += [r.lambda_nm for r in dispersive_singularities(model, nu, geometry, (lo, hi), ctx=ctx)
                  if r.status == "ok"]
    except DomainError:
        pass
    grid = reflectance_spectrum(model, nu, g0, geometry, lambda_range, samples, ctx=ctx)
    r2 = np.array([g.r2 for g in grid])
    local = [i for i in range(1, len(grid) - 1) if r2[i] >= r2[i - 1] and r2[i] >= r2[i + 1]]
    seeds += [grid[i].lambda_nm for i in sorted(local, key=lambda i: -r2[i])[:max_grid_peaks]]
    peaks = []
    for s0 in seeds:
        a, b = max(lo, s0 - step), min(hi, s0 + step)
        pk = refine_peak(model, nu, g0, geometry, a, b, ctx)
        peaks.append(pk)
    # seeds that refine onto the same peak are merged, keeping the highest value
    out: List[ReflectanceSample] = []
    for pk in sorted(peaks, key=lambda p: -p.r2):
        if all(abs(pk.lambda_nm - o.lambda_nm) > 1e-6 * pk.lambda_nm for o in out):
            out.append(pk)
    return out
