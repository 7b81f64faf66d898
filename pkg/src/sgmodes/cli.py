"""Command-line front end.

Every subcommand emits one table (CSV by default, JSON with ``--format
json``) on standard output or ``--out``; diagnostics go to the error stream.
Exit codes: 0 success, 1 usage or configuration error, 2 partial results.

Medium, geometry and precision settings resolve as
flag > ``--config`` file > built-in Rose Bengal defaults.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import dispersion, fields, resonance, singsolve
from .errors import DomainError, SgmError, SingularSystemError
from .fields import CoefficientSet, CylinderGeometry, MediumIndex, ModeKind
from .precision import PrecisionContext

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL = 0, 1, 2

CONFIG_KEYS = ("n0", "lambda0_nm", "gamma_hat", "g0_max_per_cm", "eta", "kappa", "radius_um",
               "mantissa_bits", "residual_tol", "sig_digits")
_INT_KEYS = {"mantissa_bits", "sig_digits"}

DEFAULTS = {
    "n0": dispersion.ROSE_BENGAL.n0,
    "lambda0_nm": dispersion.ROSE_BENGAL.lambda0_nm,
    "gamma_hat": dispersion.ROSE_BENGAL.gamma_hat,
    "g0_max_per_cm": dispersion.ROSE_BENGAL.g0_max,
    "radius_um": 75.0,
    "mantissa_bits": 53,
    "residual_tol": 1e-12,
    "sig_digits": 9,
}

SGM_COLUMNS = ("nu", "q", "zeta", "x", "lambda_nm", "log10_neg_kappa", "g_per_cm", "theta", "method",
               "status")


class UsageError(Exception):
    """Bad flag or configuration; maps to exit code 1."""


# ---------------------------------------------------------------------------
# configuration


def parse_config(text: str) -> Dict[str, float]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out: Dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise UsageError(f"config line {lineno}: unknown key '{key}'")
        try:
            out[key] = int(val) if key in _INT_KEYS else float(val)
        except ValueError:
            raise UsageError(f"config line {lineno}: bad value for '{key}'") from None
    return out


@dataclass
class RunConfig:
    """Resolved settings for one run."""

    values: Dict[str, float]
    fixed_index: bool
    fmt: str = "csv"
    explicit: set = field(default_factory=set)

    @property
    def sig_digits(self) -> int:
        return int(self.values["sig_digits"])

    @property
    def geometry(self) -> CylinderGeometry:
        return CylinderGeometry.from_microns(self.values["radius_um"])

    @property
    def ctx(self) -> PrecisionContext:
        return PrecisionContext(int(self.values["mantissa_bits"]), float(self.values["residual_tol"]))

    @property
    def eta(self) -> float:
        return float(self.values["eta"]) if self.fixed_index else float(self.values["n0"])

    @property
    def model(self) -> dispersion.GainMediumModel:
        if self.fixed_index:
            raise UsageError("this subcommand needs a dispersive medium, not a fixed index (eta, kappa)")
        v = self.values
        return dispersion.GainMediumModel(n0=v["n0"], lambda0_nm=v["lambda0_nm"], gamma_hat=v["gamma_hat"],
                                          g0_max=v["g0_max_per_cm"])


def resolve_config(args: argparse.Namespace) -> RunConfig:
    file_vals: Dict[str, float] = {}
    if args.config is not None:
        try:
            file_vals = parse_config(Path(args.config).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc.strerror}") from None
    flag_vals = {k: getattr(args, k) for k in CONFIG_KEYS if getattr(args, k, None) is not None}
    user = {**file_vals, **flag_vals}
    medium_keys = {"n0", "lambda0_nm", "gamma_hat", "g0_max_per_cm"}
    fixed = "eta" in user or "kappa" in user
    if fixed and medium_keys & user.keys():
        raise UsageError("give either a dispersive medium (n0, lambda0_nm, gamma_hat, g0_max_per_cm) "
                         "or a fixed index (eta, kappa), not both")
    vals = {**DEFAULTS, **user}
    if fixed:
        vals.setdefault("eta", DEFAULTS["n0"])
        vals.setdefault("kappa", 0.0)
    if not vals["radius_um"] > 0:
        raise UsageError("radius_um must be > 0")
    if not 1 <= int(vals["sig_digits"]) <= 17:
        raise UsageError("sig_digits must be in 1..17")
    if int(vals["mantissa_bits"]) < 53:
        raise UsageError("mantissa_bits must be >= 53")
    if not vals["residual_tol"] > 0:
        raise UsageError("residual_tol must be > 0")
    return RunConfig(vals, fixed, args.format, set(user))


# ---------------------------------------------------------------------------
# output


def format_float(v: float, sig: int) -> str:
    """Lowercase scientific notation with ``sig`` significant digits."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.{sig - 1}e}"


def _cell(v, sig):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v, sig)
    return str(v)


@dataclass
class Table:
    columns: Sequence[str]
    rows: List[Sequence] = field(default_factory=list)
    curves: Dict[str, Tuple[Sequence[float], Sequence[float]]] = field(default_factory=dict)
    partial: bool = False

    def to_csv(self, sig: int) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_cell(v, sig) for v in r])
        return buf.getvalue()

    def to_json(self, sig: int) -> str:
        def conv(v):
            if isinstance(v, (bool, np.bool_)):
                return bool(v)
            if isinstance(v, (int, np.integer)):
                return int(v)
            if isinstance(v, (float, np.floating)):
                # non-finite values keep their CSV token; finite ones round-trip through repr
                return float(format_float(v, sig)) if math.isfinite(v) else format_float(v, sig)
            return v
        recs = [{c: conv(v) for c, v in zip(self.columns, r)} for r in self.rows]
        return json.dumps({"columns": list(self.columns), "rows": recs}, indent=1) + "\n"


def write_gnuplot(path: str, curves: Dict[str, Tuple[Sequence[float], Sequence[float]]], sig: int) -> None:
    """One whitespace-separated two-column file per curve.

    A single curve goes to ``path``; several go to ``<stem>.<name><suffix>``.
    """
    p = Path(path)
    for name, (xs, ys) in curves.items():
        target = p if len(curves) == 1 else p.with_name(f"{p.stem}.{name}{p.suffix or '.dat'}")
        lines = [f"# {name}"] + [f"{format_float(x, sig)} {format_float(y, sig)}" for x, y in zip(xs, ys)]
        target.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# flag parsing helpers


def parse_range(text: str, kind=float) -> Tuple:
    """``"A..B"`` to ``(A, B)``."""
    try:
        a, b = text.split("..")
        lo, hi = kind(a), kind(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got '{text}'") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range '{text}'")
    return lo, hi


def _int_range(text):
    return parse_range(text, int)


def _float_range(text):
    return parse_range(text, float)


def _int_list(text):
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from None


def _check_nu(nu):
    if nu < 1:
        raise UsageError("nu must be ≥ 1")


# ---------------------------------------------------------------------------
# subcommands


def cmd_sgm(args, cfg: RunConfig) -> Table:
    _check_nu(args.nu)
    qs = range(args.q_range[0], args.q_range[1] + 1) if args.q_range else None
    if qs is not None and qs.start < 1:
        raise UsageError("q must be ≥ 1")
    try:
        rows = singsolve.sgm_table(args.nu, cfg.eta, cfg.geometry, qs, cfg.ctx, exact=args.exact)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    t = Table(SGM_COLUMNS)
    for r in rows:
        t.rows.append((r.nu, r.q, r.zeta, r.x, r.lambda_nm, r.log10_neg_kappa, r.g_per_cm, r.theta, r.method,
                       r.status))
    ok = [r for r in rows if r.status == "ok"]
    t.curves["log10_g"] = ([r.lambda_nm for r in ok], [r.log10_g for r in ok])
    t.partial = len(ok) < len(rows)
    return t


def cmd_summary(args, cfg: RunConfig) -> Table:
    for nu in args.nu_list:
        _check_nu(nu)
    t = Table(("nu", "q_max", "lambda_min_nm", "lambda_max_nm", "log10_g_min", "status"))
    nan = float("nan")
    for nu in args.nu_list:
        try:
            s = singsolve.sgm_summary(nu, cfg.eta, cfg.geometry, cfg.ctx)
            t.rows.append((s.nu, s.q_max, s.lambda_min, s.lambda_max, s.log10_g_min, "ok"))
        except DomainError as exc:
            raise UsageError(str(exc)) from None
        except SgmError:
            t.rows.append((nu, 0, nan, nan, nan, "error"))
            t.partial = True
    return t


def cmd_dispersive(args, cfg: RunConfig) -> Table:
    _check_nu(args.nu)
    model = cfg.model
    try:
        rows = dispersion.dispersive_singularities(model, args.nu, cfg.geometry, args.lambda_window,
                                                   args.order, cfg.ctx)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    t = Table(("nu", "lambda_nm", "g0_per_cm", "x", "eta", "kappa", "status"))
    for r in rows:
        t.rows.append((r.nu, r.lambda_nm, r.g0, r.x, r.eta, r.kappa, r.status))
    good = [r for r in rows if r.status in ("ok", "perturbative")]
    t.curves["g0"] = ([r.lambda_nm for r in good], [r.g0 for r in good])
    t.partial = len(good) < len(rows)
    return t


def cmd_min_gain(args, cfg: RunConfig) -> Table:
    lo, hi = args.nu_range
    _check_nu(lo)
    model = cfg.model
    t = Table(("nu", "lambda_nm", "g0_per_cm", "status"))
    nan = float("nan")
    for nu in range(lo, hi + 1, args.step):
        try:
            s = dispersion.nearest_singularity(model, nu, cfg.geometry, ctx=cfg.ctx)
            t.rows.append((nu, s.lambda_nm, s.g0, s.status))
        except DomainError as exc:
            raise UsageError(str(exc)) from None
        except SgmError:
            t.rows.append((nu, nan, nan, "no-root"))
            t.partial = True
    good = [r for r in t.rows if r[3] in ("ok", "perturbative")]
    t.curves["g0"] = ([r[0] for r in good], [r[2] for r in good])
    return t


def cmd_reflectance(args, cfg: RunConfig) -> Table:
    _check_nu(args.nu)
    if args.samples < 2:
        raise UsageError("samples must be ≥ 2")
    model = cfg.model
    try:
        grid = dispersion.reflectance_spectrum(model, args.nu, args.g0, cfg.geometry, args.lambda_range,
                                               args.samples, ctx=cfg.ctx)
        peaks = [] if args.no_refine else dispersion.spectrum_peaks(model, args.nu, args.g0, cfg.geometry,
                                                                    args.lambda_range, args.samples, cfg.ctx)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    samples = sorted(grid + peaks, key=lambda s: (s.lambda_nm, s.kind))
    t = Table(("lambda_nm", "r2", "status"))
    for s in samples:
        status = "diverged" if s.diverged else s.kind
        t.rows.append((s.lambda_nm, math.inf if s.diverged else s.r2, status))
    t.curves["r2"] = ([s.lambda_nm for s in grid], [s.r2 for s in grid])
    return t


def cmd_qfactor(args, cfg: RunConfig) -> Table:
    _check_nu(args.nu)
    model = cfg.model
    qs = range(args.q_range[0], args.q_range[1] + 1)
    if not args.g_rounding > 0:
        raise UsageError("g-rounding must be > 0")
    ladder = tuple(args.ladder) if args.ladder else resonance.LADDER
    try:
        recs = resonance.q_factor_table(args.nu, qs, model, cfg.geometry, args.g_rounding, cfg.ctx,
                                        relative=not args.absolute_rounding, ladder=ladder,
                                        min_bits=args.min_bits)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    t = Table(("nu", "q", "lambda_nm", "g_singular_per_cm", "g_used_per_cm", "re_x", "im_x", "Q", "Q0",
               "precision_bits", "precision_limited", "status"))
    a = cfg.geometry.radius_a
    for r in recs:
        x = r.k_complex * a
        status = "ok" if r.converged else "not-converged"
        t.rows.append((r.nu, r.q, r.lambda_nm, r.g_singular, r.g_used, x.real, x.imag, r.Q, r.Q0,
                       r.precision_bits, r.precision_limited, status))
        t.partial |= not r.converged
    t.curves["Q"] = ([r.lambda_nm for r in recs], [abs(r.Q) for r in recs])
    return t


def cmd_radial_bound(args, cfg: RunConfig) -> Table:
    model = cfg.model
    if not args.g0_cap > 0:
        raise UsageError("g0-cap must be > 0")
    a = dispersion.min_radius_radial(model, args.g0_cap, cfg.ctx)
    return Table(("g0_cap_per_cm", "a_min_m", "a_min_mm"), [(args.g0_cap, a, a * 1e3)])


def _coefficients(nu, n: MediumIndex, x, ctx) -> Tuple[CoefficientSet, str]:
    try:
        return fields.match_boundary(ModeKind.AXIAL_E, nu, n, x, ctx), "scattering"
    except SingularSystemError:
        # at a singularity only the outgoing wave survives: a1 = 1, a2 = 0
        from scipy import special
        b1 = complex(special.hankel1(nu, x)) / complex(special.jv(nu, n.n * x))
        return CoefficientSet(1.0 + 0j, 0j, b1, ModeKind.AXIAL_E), "outgoing"


def cmd_profile(args, cfg: RunConfig) -> Table:
    _check_nu(args.nu)
    if args.samples < 2:
        raise UsageError("samples must be ≥ 2")
    eta = cfg.eta
    kappa = args.kappa if args.kappa is not None else float(cfg.values.get("kappa", 0.0))
    try:
        n = MediumIndex(eta, kappa)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    geo = cfg.geometry
    x = args.zeta / eta
    k = x / geo.radius_a
    coeffs, kind = _coefficients(args.nu, n, x, cfg.ctx)
    rho = np.linspace(args.rho_max / args.samples, args.rho_max, args.samples) * geo.radius_a
    prof = fields.field_profile(coeffs, args.nu, n, k, geo, rho, cfg.ctx)
    t = Table(("rho_over_a", "u", "s_phi", "s_rho", "theta", "region"))
    r_a = prof.rho_grid / geo.radius_a
    for i in range(len(r_a)):
        t.rows.append((float(r_a[i]), float(prof.u[i]), float(prof.s_phi[i]), float(prof.s_rho[i]),
                       float(prof.theta[i]), "inside" if prof.interior[i] else "outside"))
    t.curves = {"u": (r_a, prof.u), "theta": (r_a, prof.theta)}
    if kind == "outgoing":
        print("note: parameters sit on a singularity; profile uses the outgoing-only solution", file=sys.stderr)
    return t


def cmd_fplus(args, cfg: RunConfig) -> Table:
    _check_nu(args.nu)
    lo, hi = args.zeta_range
    if not 0 < lo:
        raise UsageError("zeta must be > 0")
    if args.samples < 2:
        raise UsageError("samples must be ≥ 2")
    t = Table(("zeta", "f_plus", "f_minus"))
    for z in np.linspace(lo, hi, args.samples):
        fp, fm = fields.f_plus_minus(args.nu, float(z), cfg.ctx)
        t.rows.append((float(z), float(fp), float(fm)))
    t.curves = {"f_plus": ([r[0] for r in t.rows], [r[1] for r in t.rows]),
                "f_minus": ([r[0] for r in t.rows], [r[2] for r in t.rows])}
    return t


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run settings")
    g.add_argument("--config", metavar="PATH", help="flat 'key = value' settings file")
    g.add_argument("--out", metavar="PATH", help="write the table here instead of stdout")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--gnuplot", metavar="PATH", help="also write two-column data file(s) per curve")
    g.add_argument("--n0", type=float)
    g.add_argument("--lambda0-nm", dest="lambda0_nm", type=float)
    g.add_argument("--gamma-hat", dest="gamma_hat", type=float)
    g.add_argument("--g0-max", dest="g0_max_per_cm", type=float)
    g.add_argument("--eta", type=float)
    g.add_argument("--radius-um", dest="radius_um", type=float)
    g.add_argument("--mantissa-bits", dest="mantissa_bits", type=int)
    g.add_argument("--residual-tol", dest="residual_tol", type=float)
    g.add_argument("--sig-digits", dest="sig_digits", type=int)

    p = _Parser(prog="sgmodes", description="Spectral singularities and gallery modes of a gain cylinder.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sgm", parents=[common], help="singularity table for one nu at fixed index")
    s.add_argument("--nu", type=int, required=True)
    s.add_argument("--q-range", type=_int_range)
    s.add_argument("--exact", action="store_true", help="refine each branch on the full Bessel condition")
    s.set_defaults(func=cmd_sgm)

    s = sub.add_parser("summary", parents=[common], help="branch count, span and minimal gain per nu")
    s.add_argument("--nu-list", type=_int_list, required=True)
    s.set_defaults(func=cmd_summary)

    s = sub.add_parser("dispersive", parents=[common], help="(lambda, g0) singularities with dispersion")
    s.add_argument("--nu", type=int, required=True)
    s.add_argument("--lambda-window", type=_float_range, required=True)
    s.add_argument("--order", choices=(dispersion.FIRST_ORDER, dispersion.FULL), default=dispersion.FIRST_ORDER)
    s.set_defaults(func=cmd_dispersive)

    s = sub.add_parser("min-gain", parents=[common], help="singular g0 nearest the line centre vs nu")
    s.add_argument("--nu-range", type=_int_range, required=True)
    s.add_argument("--step", type=int, default=1)
    s.set_defaults(func=cmd_min_gain)

    s = sub.add_parser("reflectance", parents=[common], help="|R|^2 spectrum at fixed g0")
    s.add_argument("--nu", type=int, required=True)
    s.add_argument("--g0", type=float, required=True)
    s.add_argument("--lambda-range", type=_float_range, required=True)
    s.add_argument("--samples", type=int, default=3001)
    s.add_argument("--no-refine", action="store_true", help="skip the sub-grid peak search")
    s.set_defaults(func=cmd_reflectance)

    s = sub.add_parser("qfactor", parents=[common], help="active and passive Q near singular branches")
    s.add_argument("--nu", type=int, required=True)
    s.add_argument("--q-range", type=_int_range, required=True)
    s.add_argument("--g-rounding", type=float, default=1e-3)
    s.add_argument("--absolute-rounding", action="store_true", help="round g0 to a multiple of R in 1/cm")
    s.add_argument("--ladder", type=_int_list, help="precision rungs in bits, e.g. 53,128,192")
    s.add_argument("--min-bits", type=int, default=192)
    s.set_defaults(func=cmd_qfactor)

    s = sub.add_parser("radial-bound", parents=[common], help="smallest radius for radial lasing")
    s.add_argument("--g0-cap", type=float, default=5.0)
    s.set_defaults(func=cmd_radial_bound)

    s = sub.add_parser("profile", parents=[common], help="energy density and flux angle vs radius")
    s.add_argument("--nu", type=int, required=True)
    s.add_argument("--zeta", type=float, required=True)
    s.add_argument("--kappa", type=float)
    s.add_argument("--samples", type=int, default=400)
    s.add_argument("--rho-max", type=float, default=1.5, help="outer edge in units of the radius")
    s.set_defaults(func=cmd_profile)

    s = sub.add_parser("fplus", parents=[common], help="F+ and F- on a zeta grid")
    s.add_argument("--nu", type=int, required=True)
    s.add_argument("--zeta-range", type=_float_range, required=True)
    s.add_argument("--samples", type=int, default=501)
    s.set_defaults(func=cmd_fplus)
    return p


_NEG_NUMBER = re.compile(r"^-(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?$")


def _join_negative_values(argv: Sequence[str]) -> List[str]:
    """Rewrite ``--flag -1e-5`` as ``--flag=-1e-5``; argparse takes the value for an option."""
    out: List[str] = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NEG_NUMBER.match(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = _join_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
        table = args.func(args, cfg)
    except UsageError as exc:
        print(f"sgmodes: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SgmError as exc:
        print(f"sgmodes: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    sig = cfg.sig_digits
    text = table.to_json(sig) if cfg.fmt == "json" else table.to_csv(sig)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.gnuplot and table.curves:
        write_gnuplot(args.gnuplot, table.curves, sig)
    if table.partial:
        print("sgmodes: some rows did not complete; see the status column", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
