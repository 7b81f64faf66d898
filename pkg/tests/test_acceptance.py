"""Acceptance suite: one PASS/FAIL line per criterion, printed to the terminal.

Each test prints its verdict (with the compared numbers) before asserting,
so a red criterion still reports what was measured.
"""
import json
import math

import numpy as np
import pytest

from sgmodes import cli, dispersion, resonance, singsolve, specfun
from sgmodes.dispersion import ROSE_BENGAL
from sgmodes.errors import PrecisionError
from sgmodes.fields import CylinderGeometry, MediumIndex, reflection_amplitude

NU, ETA = 1000, 1.479
GEO = CylinderGeometry.from_microns(75.0)

# reference rows: (q, zeta, lambda_nm, g_per_cm, theta)
TAIL_ROWS = [
    (80, 1462.126, 476.642, 5.110, -1.546e-2),
    (81, 1466.506, 475.254, 9.871, -2.980e-2),
    (82, 1470.756, 473.880, 15.273, -4.595e-2),
    (83, 1474.984, 472.522, 16.411, -4.923e-2),
]
# nu: (q_max, lambda_min, lambda_max, g_min)
SUMMARY_ROWS = {
    850: (70, 555.275, 804.615, 1.536e-140),
    1000: (83, 472.522, 685.196, 7.836e-167),
    1150: (95, 410.214, 596.691, 3.477e-193),
}
# labelled q: (lambda_nm, g_per_cm, Q, Q0); the labels sit three above our branch index
QTABLE_ROWS = {
    65: (503.954, 1.190e-11, 1.048e20, 6.738e16),
    66: (502.310, 1.220e-10, 3.103e19, 7.011e15),
    67: (500.683, 1.165e-9, 2.780e18, 7.884e14),
    68: (499.072, 1.033e-8, 2.932e18, 9.490e13),
    69: (497.476, 8.514e-8, 3.560e17, 4.901e13),
    70: (495.897, 6.516e-7, 4.030e16, 6.810e12),
    71: (494.332, 4.627e-6, 1.504e15, 1.018e12),
}
QTABLE_OFFSET = 3


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail, extra=()):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number}: {'PASS' if ok else 'FAIL'}  {detail}")
            for line in extra:
                print(f"    {line}")
        return ok
    return emit


def cli_json(capsys, *argv):
    code = cli.main([*argv, "--format", "json"])
    out, _ = capsys.readouterr()
    return code, json.loads(out)["rows"] if out else []


def rel(a, b):
    return abs(a - b) / abs(b)


def test_criterion_1_exact_tail(capsys, report):
    code, rows = cli_json(capsys, "sgm", "--nu", "1000", "--q-range", "80..83", "--exact")
    lines, ok = [], code == 0
    for r, (q, zeta, lam, g, theta) in zip(rows, TAIL_ROWS):
        checks = (abs(r["zeta"] - zeta) <= 0.05, abs(r["lambda_nm"] - lam) <= 0.05,
                  rel(r["g_per_cm"], g) <= 0.03, rel(r["theta"], theta) <= 0.05)
        ok &= all(checks) and r["method"] == "exact"
        lines.append(f"q={q}: zeta {r['zeta']:.3f}/{zeta}  lambda {r['lambda_nm']:.3f}/{lam}  "
                     f"g {r['g_per_cm']:.3f}/{g}  theta {r['theta']:.4e}/{theta}  {'ok' if all(checks) else 'off'}")
    report(1, ok, "exact rows q=80..83 (zeta 0.05, lambda 0.05 nm, g 3%, theta 5%)", lines)
    assert ok


def test_criterion_2_first_branch(capsys, report):
    code, rows = cli_json(capsys, "sgm", "--nu", "1000", "--q-range", "1..1")
    r = rows[0]
    ok = (code == 0 and abs(r["zeta"] - 1017.171) <= 0.01 and abs(r["lambda_nm"] - 685.196) <= 0.01
          and abs(r["log10_neg_kappa"] + 171.4) <= 1.0)
    report(2, ok, f"q=1: zeta {r['zeta']:.4f}, lambda {r['lambda_nm']:.4f} nm, "
                  f"log10(-kappa) {r['log10_neg_kappa']:.3f}")
    assert ok


def test_criterion_3_summary(capsys, report):
    code, rows = cli_json(capsys, "summary", "--nu-list", "850,1000,1150")
    ok, lines = code == 0, []
    for r in rows:
        qm, lmin, lmax, gmin = SUMMARY_ROWS[r["nu"]]
        checks = (r["q_max"] == qm, abs(r["lambda_min_nm"] - lmin) <= 0.05, abs(r["lambda_max_nm"] - lmax) <= 0.05,
                  abs(r["log10_g_min"] - math.log10(gmin)) <= 1.0)
        ok &= all(checks)
        lines.append(f"nu={r['nu']}: q_max {r['q_max']}/{qm}  lambda_min {r['lambda_min_nm']:.3f}/{lmin}  "
                     f"lambda_max {r['lambda_max_nm']:.3f}/{lmax}  log10 g_min {r['log10_g_min']:.2f}/"
                     f"{math.log10(gmin):.2f}  {'ok' if all(checks) else 'off'}")
    report(3, ok, "q_max exact, lambda range 0.05 nm, log10 g_min 1.0", lines)
    assert ok


def test_criterion_4_zero_structure(report):
    jp = specfun.bessel_zeros(NU, 4, kind="Jp")
    j = specfun.bessel_zeros(NU, 4, kind="J")
    branches = [singsolve.perturbative_branch(NU, ETA, q, GEO) for q in range(1, 5)]
    inter = all(jp[k] < b.zeta < j[k] for k, b in enumerate(branches))
    ok = (abs(jp[0] - 1008.1) <= 0.1 and abs(j[0] - 1018.7) <= 0.1 and abs(branches[0].zeta - 1017.2) <= 0.1
          and inter)
    report(4, ok, f"j'_1 {jp[0]:.3f}, j_1 {j[0]:.3f}, first zeta {branches[0].zeta:.3f}, "
                  f"interlacing q=1..4 {inter}")
    assert ok


def test_criterion_5_radial_bound(capsys, report):
    code, rows = cli_json(capsys, "radial-bound", "--g0-cap", "5")
    a_mm = rows[0]["a_min_mm"]
    ok = code == 0 and abs(a_mm - 3.28) <= 0.1
    report(5, ok, f"a_min = {a_mm:.4f} mm (3.28 +- 0.1)")
    assert ok


def test_criterion_6_dual_lasing(capsys, report):
    targets = {920: (525.945537, 0.131968), 885: (545.633973, 0.132161)}
    ok, lines = True, []
    for nu, (lam, g0) in targets.items():
        code, rows = cli_json(capsys, "dispersive", "--nu", str(nu), "--lambda-window", f"{lam - 1}..{lam + 1}")
        hit = min(rows, key=lambda r: abs(r["lambda_nm"] - lam))
        code2, spectrum = cli_json(capsys, "reflectance", "--nu", str(nu), "--g0", "0.132",
                               "--lambda-range", f"{lam - 1}..{lam + 1}", "--samples", "201")
        peak = max((s for s in spectrum if s["status"] in ("peak", "diverged")),
                   key=lambda s: math.inf if s["status"] == "diverged" else s["r2"])
        checks = (code == code2 == 0, abs(hit["lambda_nm"] - lam) <= 1e-3, abs(hit["g0_per_cm"] - g0) <= 1e-4,
                  abs(peak["lambda_nm"] - lam) <= 1e-3)
        ok &= all(checks)
        lines.append(f"nu={nu}: lambda {hit['lambda_nm']:.6f}/{lam}  g0 {hit['g0_per_cm']:.6f}/{g0}  "
                     f"|R|^2 peak at {peak['lambda_nm']:.6f} ({peak['r2']})")
    report(6, ok, "dispersive singularities and reflectance peaks at g0 = 0.132", lines)
    assert ok


def test_criterion_7_quality_factors(report):
    # solve each branch at the tabulated gain, whose last digit carries the rounding direction
    ok, lines = True, []
    own = resonance.q_factor_table(NU, [q - QTABLE_OFFSET for q in QTABLE_ROWS], ROSE_BENGAL, GEO, 1e-3)
    for (q, (lam, g, big_q, q0)), row in zip(QTABLE_ROWS.items(), own):
        seed = singsolve.perturbative_branch(NU, ETA, q - QTABLE_OFFSET, GEO)
        sol = dispersion.solve_dispersive(ROSE_BENGAL, NU, GEO, seed.x, seed.kappa)
        n = dispersion.refractive_index(ROSE_BENGAL.with_gain(g), sol.lambda_nm)
        act = resonance.resonance_with_escalation(NU, n, GEO, complex(sol.x, -1e-6 * sol.x) / GEO.radius_a)
        checks = (abs(sol.lambda_nm - lam) <= 0.05, rel(sol.g0, g) <= 0.05,
                  abs(math.log10(row.Q0 / q0)) <= 1.0, row.precision_bits >= 192 and act.precision_bits >= 192,
                  abs(math.log10(abs(act.Q) / big_q)) <= 1.0)
        ok &= all(checks)
        lines.append(f"q={q}: lambda {sol.lambda_nm:.3f}/{lam}  g {sol.g0:.4e}/{g:.3e}  Q0 {row.Q0:.3e}/{q0:.3e}  "
                     f"Q {act.Q:.3e}/{big_q:.3e} (own rounding {row.g_used:.3e}: Q {row.Q:.3e})  "
                     f"{'ok' if all(checks) else 'off'}")
    report(7, ok, "lambda 0.05 nm, g 5%, Q0 and |Q| within a decade at >= 192 bits", lines)
    assert ok


def test_criterion_8_min_gain_curve(report):
    curve = dict(dispersion.min_gain_at_resonance(ROSE_BENGAL, [1, 2, 3, 4, 5, 860, 880, 900], GEO))
    plateau = [curve[nu] for nu in range(1, 6)]
    drop = curve[860] / curve[900]
    ok = all(abs(v / 219.0 - 1) <= 0.05 for v in plateau) and drop >= 100
    report(8, ok, f"plateau {min(plateau):.2f}..{max(plateau):.2f} 1/cm, "
                  f"g0(860)/g0(900) = {drop:.3e} (g0(880) = {curve[880]:.3e})")
    assert ok


def _wronskian_ok(rng):
    worst, n = 0.0, 0
    while n < 200:
        nu, z = int(rng.integers(0, 1501)), complex(rng.uniform(0.5, 2500.0), rng.uniform(-2.0, 2.0))
        try:
            if abs(complex(specfun.hankel1(nu, z))) > 1e250:
                continue
        except PrecisionError:
            continue
        worst = max(worst, specfun.wronskian_residual(nu, z))
        n += 1
    return worst


def _unitarity(rng):
    worst = 0.0
    for _ in range(100):
        nu, eta = int(rng.integers(1, 1501)), rng.uniform(1.2, 2.0)
        x = rng.uniform(0.5 * nu, max(0.5 * nu, 1.2 * nu / eta)) or 0.5
        worst = max(worst, abs(abs(reflection_amplitude(nu, MediumIndex(eta, 0.0), max(x, 0.5)).amplitude) - 1))
    return worst


def _no_ss_for_passive():
    xs = singsolve.real_part_roots(NU, ETA, NU / ETA * 1.0001, NU * 0.9999)
    for x in xs:
        floor = specfun.h1_logderiv(NU, x).imag
        for kappa in np.linspace(0.0, 0.05, 26):
            if not singsolve.singularity_residual(NU, ETA, kappa, x)[0].imag <= -floor * (1 - 1e-9) < 0:
                return False
    return True


def _kappa_agreement():
    worst = 0.0
    for nu in (850, 1000, 1150):
        for p, e in zip(singsolve.sgm_table(nu, ETA, GEO), singsolve.sgm_table(nu, ETA, GEO, exact=True)):
            if -p.kappa > 1e-8 and e.method == singsolve.EXACT:
                worst = max(worst, rel(p.kappa, e.kappa))
    return worst


def _fd_derivatives():
    worst = 0.0
    for kind, f in (("J", specfun.bessel_j), ("H1", specfun.hankel1), ("H2", specfun.hankel2)):
        for nu, z in ((0, 2.3), (3, 4.1), (40, 52.0 + 0.5j), (1000, 1400.0)):
            h = 1e-3
            v = [complex(f(nu, z + k * h)) for k in (-2, -1, 1, 2)]
            fd = (v[0] - 8 * v[1] + 8 * v[2] - v[3]) / (12 * h)
            d = complex(specfun.bessel_deriv(kind, nu, z))
            worst = max(worst, abs(d - fd) / max(abs(d), abs(complex(f(nu, z))) / abs(z)))
    return worst


def _record_consistency():
    worst = 0.0
    for rec in singsolve.sgm_table(NU, ETA, GEO) + singsolve.sgm_table(NU, ETA, GEO, [80, 83], exact=True):
        worst = max(worst, rel(rec.lambda_nm * 1e-9 * rec.zeta, 2 * math.pi * GEO.radius_a * ETA),
                    rel(rec.g_per_cm, -4 * math.pi * rec.kappa / (rec.lambda_nm * 1e-7)))
    return worst


def _deterministic(capsys):
    outs = []
    for _ in range(2):
        cli.main(["sgm", "--nu", "1000", "--q-range", "78..83", "--exact"])
        outs.append(capsys.readouterr().out.encode())
    return outs[0] == outs[1] and len(outs[0]) > 0


def test_criterion_9_property_suites(capsys, report):
    rng = np.random.default_rng(20240601)
    wr = _wronskian_ok(rng)
    un = _unitarity(rng)
    noss = _no_ss_for_passive()
    nogo = [singsolve.wgm_nogo_check(nu, ETA, "WGM'", 1) for nu in range(200, 1501, 100)]
    nogo_ok = all(r.psi < 0 < r.margin and r.psi < math.log(2) / 2 for r in nogo)
    kap = _kappa_agreement()
    fd = _fd_derivatives()
    rc = _record_consistency()
    det = _deterministic(capsys)
    subs = [
        ("Wronskian, 200 points", wr < 1e-10, f"worst {wr:.2e}"),
        ("|R| = 1 at kappa = 0, 100 points", un < 1e-10, f"worst {un:.2e}"),
        ("no singularity for kappa >= 0", noss, ""),
        ("WGM' no-go, nu = 200..1500", nogo_ok, f"psi max {max(r.psi for r in nogo):.2f}"),
        ("perturbative vs exact kappa <= 0.5%", kap <= 5e-3, f"worst {kap:.2%}"),
        ("finite-difference derivatives 1e-6", fd < 1e-6, f"worst {fd:.2e}"),
        ("record consistency 1e-9", rc < 1e-9, f"worst {rc:.2e}"),
        ("byte-identical rerun", det, ""),
    ]
    ok = all(s[1] for s in subs)
    report(9, ok, "property suites", [f"{'ok ' if s[1] else 'off'} {s[0]}  {s[2]}" for s in subs])
    assert ok
