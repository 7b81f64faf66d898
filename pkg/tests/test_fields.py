import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracle_values import EXACT, REFLECTION
from sgmodes import fields, specfun
from sgmodes.errors import DomainError, SingularSystemError
from sgmodes.fields import (CoefficientSet, CylinderGeometry, GridSpec, MediumIndex, ModeIndex, ModeKind,
                            match_boundary, reflection_amplitude)

NU, ETA = 1000, 1.479
GEO = CylinderGeometry.from_microns(75.0)


def test_type_guards():
    with pytest.raises(DomainError):
        CylinderGeometry(0.0)
    with pytest.raises(DomainError):
        CylinderGeometry(float("inf"))
    with pytest.raises(DomainError):
        MediumIndex(-1.0)
    with pytest.raises(DomainError):
        MediumIndex(1.2, 1.5)
    with pytest.raises(DomainError):
        ModeIndex(-1)
    with pytest.raises(DomainError):
        ModeIndex(3, 0)


def test_geometry_round_trip():
    x = GEO.size_parameter(500.0)
    assert GEO.wavelength_nm(x) == pytest.approx(500.0, rel=1e-15)


def test_reflection_matches_mpmath_oracle():
    r = reflection_amplitude(5, MediumIndex(1.5, -0.01), 7.3)
    assert r.amplitude == pytest.approx(REFLECTION, rel=1e-12)
    assert not r.diverged


@settings(max_examples=100)
@given(nu=st.integers(1, 1500), eta=st.floats(1.2, 2.0), t=st.floats(0.0, 1.0))
def test_unitarity_without_gain(nu, eta, t):
    lo, hi = 0.5 * nu, 1.2 * nu / eta
    x = lo + t * (hi - lo) if hi > lo else lo
    r = reflection_amplitude(nu, MediumIndex(eta, 0.0), max(x, 0.5))
    assert abs(abs(r.amplitude) - 1.0) < 1e-10


def test_unitarity_example():
    assert abs(reflection_amplitude(300, MediumIndex(1.479, 0.0), 250.0).amplitude) == pytest.approx(1.0, abs=1e-10)


@given(eta=st.floats(1.05, 2.5), kappa=st.floats(-0.05, 0.05), x=st.floats(0.3, 60.0))
@settings(max_examples=20)
def test_nu1_reduction_to_azimuthal_formula(eta, kappa, x):
    n = MediumIndex(eta, kappa)
    try:
        az = fields.reflection_amplitude_azimuthal(n, x)
    except SingularSystemError:
        return
    ax = reflection_amplitude(1, n, x).amplitude
    assert abs(ax - az) <= 1e-12 * max(1.0, abs(az))


def _mp_residuals(coeffs, nu, n, x):
    """Continuity residuals by direct substitution in 30-digit arithmetic."""
    with mpmath.workdps(30):
        nn, xx = mpmath.mpc(n.real, n.imag), mpmath.mpf(x)
        a1, a2, b1 = (mpmath.mpc(c.real, c.imag) for c in (coeffs.a1, coeffs.a2, coeffs.b1))
        j, jp = mpmath.besselj(nu, nn * xx), mpmath.besselj(nu, nn * xx, derivative=1)
        h1, h2 = mpmath.hankel1(nu, xx), mpmath.hankel2(nu, xx)
        h1p = (mpmath.hankel1(nu - 1, xx) - mpmath.hankel1(nu + 1, xx)) / 2
        h2p = (mpmath.hankel2(nu - 1, xx) - mpmath.hankel2(nu + 1, xx)) / 2
        r0 = abs(b1 * j - a1 * h1 - a2 * h2) / max(abs(b1 * j), abs(a1 * h1), abs(a2 * h2))
        r1 = abs(b1 * nn * jp - a1 * h1p - a2 * h2p) / max(abs(b1 * nn * jp), abs(a1 * h1p), abs(a2 * h2p))
        return float(r0), float(r1)


def test_boundary_residual_by_substitution():
    n = MediumIndex(1.5, -1e-4)
    c = match_boundary(ModeKind.AXIAL_E, 10, n, 8.0)
    assert c.a2 == 1
    assert c.residual < 1e-12
    assert max(_mp_residuals(c, 10, n.n, 8.0)) < 1e-12


def test_flux_conservation_coefficients():
    for nu, x in ((3, 5.0), (200, 170.0)):
        c = match_boundary(ModeKind.AXIAL_E, nu, MediumIndex(1.4, 0.0), x)
        assert abs(c.a1) == pytest.approx(1.0, abs=1e-10)


def test_near_singular_amplitude_at_own_root():
    x, kappa = EXACT[80]
    c = match_boundary(ModeKind.AXIAL_E, NU, MediumIndex(ETA, kappa * (1 + 1e-9)), x)
    assert abs(c.a1) > 1e6


def test_reflection_blows_up_at_singularity():
    # at the double-precision root the denominator sits at rounding level
    x, kappa = EXACT[80]
    refl = reflection_amplitude(NU, MediumIndex(ETA, kappa), x)
    assert abs(refl.amplitude) > 1e8 or refl.diverged


def test_azimuthal_kind_forces_nu1():
    n = MediumIndex(1.3, -0.01)
    a = match_boundary(ModeKind.AZIMUTHAL_E, 7, n, 4.0)
    b = match_boundary(ModeKind.AZIMUTHAL_E, 1, n, 4.0)
    assert a.a1 == b.a1


def test_f_plus_minus_identity():
    fp, fm = fields.f_plus_minus(NU, 1100.0)
    j = specfun.bessel_j(NU, 1100.0).real
    assert fp - fm == pytest.approx(2 * (NU / 1100.0) ** 2 * j * j, rel=1e-12)


def test_f_plus_maxima_sit_at_jprime_zeros():
    z = np.linspace(1000.0, 1080.0, 16001)
    fp = np.array([fields.f_plus_minus(NU, t)[0] for t in z])
    peaks = [z[i] for i in range(1, len(z) - 1) if fp[i] > fp[i - 1] and fp[i] > fp[i + 1]]
    jp = specfun.bessel_zeros(NU, 6, kind="Jp")
    for q, zq in enumerate(jp):
        assert min(abs(p - zq) for p in peaks) < 0.5, q
    assert z[int(np.argmax(fp))] == pytest.approx(1008.1, abs=0.1)


def test_theta_vanishes_without_gain():
    n = MediumIndex(ETA, 0.0)
    x = 1462.2 / ETA
    c = match_boundary(ModeKind.AXIAL_E, NU, n, x)
    prof = fields.field_profile(c, NU, n, x / GEO.radius_a, GEO, GridSpec(GEO.radius_a, 50))
    assert np.all(prof.theta[prof.interior] == 0.0)
    assert fields.theta_first_order(NU, ETA, 0.0, 1462.2) == 0.0


@pytest.mark.parametrize("kappa", [1e-5, -1e-5, 1e-4, -1e-4])
def test_theta_has_sign_of_kappa(kappa):
    zeta = specfun.bessel_jprime_zero(NU, 1)
    assert math.copysign(1.0, fields.theta_exact(NU, MediumIndex(ETA, kappa), zeta / ETA)) == math.copysign(1.0, kappa)


def test_theta_first_order_matches_profile():
    kappa, zeta = -1e-5, 1462.126
    n = MediumIndex(ETA, kappa)
    x = zeta / ETA
    c = match_boundary(ModeKind.AXIAL_E, NU, n, x)
    prof = fields.field_profile(c, NU, n, x / GEO.radius_a, GEO, [GEO.radius_a])
    t1 = fields.theta_first_order(NU, ETA, kappa, zeta)
    assert prof.theta[0] == pytest.approx(t1, rel=1e-3)
    assert prof.theta[0] == pytest.approx(fields.theta_exact(NU, n, x), rel=1e-9)


def test_theta_first_order_error_is_cubic():
    # theta is odd in kappa, so the first omitted term is kappa^3
    zeta = 1462.126
    ks = np.array([1e-7, 1e-6, 1e-5, 1e-4])
    d = [abs(fields.theta_exact(NU, MediumIndex(ETA, -k), zeta / ETA) - fields.theta_first_order(NU, ETA, -k, zeta))
         for k in ks]
    slope = np.polyfit(np.log(ks), np.log(d), 1)[0]
    assert slope == pytest.approx(3.0, abs=0.1)
    c = np.array(d) / ks ** 3
    assert c.max() / c.min() < 1.01


def test_theta_odd_in_kappa():
    x = 1462.126 / ETA
    a = fields.theta_exact(NU, MediumIndex(ETA, 3e-5), x)
    b = fields.theta_exact(NU, MediumIndex(ETA, -3e-5), x)
    assert a == -b


def test_theta_first_order_pole():
    # the blow-up at J = 0 is not removed; a rounded zero gives a huge value
    z = specfun.bessel_j_zero(NU, 1)
    assert abs(fields.theta_first_order(NU, ETA, -1e-5, z)) > 1e6


def test_crude_estimate():
    zeta = specfun.bessel_jprime_zero(NU, 1)
    exact = fields.theta_exact(NU, MediumIndex(ETA, -1e-3), zeta / ETA)
    assert fields.theta_crude(NU, ETA, -1e-3) == pytest.approx(exact, rel=0.3)


def test_theta_at_singular_branch():
    x, kappa = EXACT[80]
    n = MediumIndex(ETA, kappa)
    theta_a = fields.theta_exact(NU, n, x)
    assert theta_a == pytest.approx(-1.28049e-2, rel=1e-4)
    # literal large-order form at the perturbative root
    assert fields.theta_debye(NU, ETA, -10 ** -4.7126060165044285, ETA * 988.66513002691683) == pytest.approx(
        -1.5464e-2, rel=2e-3)


def _singular_profile(samples=400):
    x, kappa = EXACT[80]
    n = MediumIndex(ETA, kappa * (1 + 1e-7))
    c = match_boundary(ModeKind.AXIAL_E, NU, n, x)
    k = x / GEO.radius_a
    return c, n, x, k


def test_profile_invariants():
    c, n, x, k = _singular_profile()
    prof = fields.field_profile(c, NU, n, k, GEO, GridSpec(1.5 * GEO.radius_a, 301))
    assert np.all(prof.u >= 0)
    # J_1000 underflows near the axis; wherever the field is representable, u is positive
    assert np.all(prof.u[prof.rho_grid > 0.5 * GEO.radius_a] > 0)
    # theta and the radial flux have opposite signs
    mask = np.abs(prof.s_rho) > 0
    assert np.all(np.sign(prof.theta[mask]) == -np.sign(prof.s_rho[mask]))
    np.testing.assert_array_equal(prof.theta, -np.arctan2(prof.s_rho, prof.s_phi))


def test_continuity_at_boundary():
    c, n, x, k = _singular_profile()
    e_in, de_in = fields.boundary_values(c, NU, n, x, "inside")
    e_out, de_out = fields.boundary_values(c, NU, n, x, "outside")
    assert e_out == pytest.approx(e_in, rel=1e-9)
    assert de_out == pytest.approx(de_in, rel=1e-9)
    a = GEO.radius_a
    eps = a * 1e-12
    p = fields.field_profile(c, NU, n, k, GEO, [a, a + eps])
    # fields and flux are continuous; u jumps by (Re n^2 - 1)|E|^2 from the permittivity step
    assert p.s_phi[1] == pytest.approx(p.s_phi[0], rel=1e-8)
    assert p.s_rho[1] == pytest.approx(p.s_rho[0], rel=1e-6)
    jump = ((n.n ** 2).real - 1.0) * abs(e_in) ** 2
    assert p.u[0] - p.u[1] == pytest.approx(jump, rel=1e-6)


def test_profile_rejects_origin():
    c, n, x, k = _singular_profile()
    with pytest.raises(DomainError):
        fields.field_profile(c, NU, n, k, GEO, [0.0, GEO.radius_a])


def test_profile_needs_axial_kind():
    c = CoefficientSet(1, 1, 1, ModeKind.AZIMUTHAL_E)
    with pytest.raises(ValueError):
        fields.field_profile(c, 1, MediumIndex(1.4), 1e4, GEO, [1e-6])
