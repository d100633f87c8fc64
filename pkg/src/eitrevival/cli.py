"""Command-line interface: one subcommand per analysis, CSV on stdout.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""
import argparse
import math
import sys

import numpy as np

from . import __version__, kernels
from .config import ConfigError, Settings, load_config, read_curve_csv, write_csv
from .dephasing import (
    CloudGeometry,
    combined_lifetime,
    gradient_from_lifetime,
    gradient_lifetime,
    motional_lifetime,
)
from .estimation import (
    EstimationError,
    NoiseSpec,
    estimate_stray_field,
    fit_curve,
    synthesize_curve,
)
from .interference import (
    CoherenceMatrix,
    DecayEnvelope,
    DiagonalCoherences,
    EnvelopeLaw,
    ModelParams,
    ValidationError,
    revival_times,
)
from .populations import PumpState, SelectivityModel, calibrate_width, pump_distribution
from .scan import Objective, ScanSpec, ScanVariable, optimize_detuning, scan_detuning, scan_field
from .zeeman import DomainError, Scheme

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class NumericalFailure(RuntimeError):
    pass


def _option(parser, flag, key, help, type=None):
    parser.add_argument(flag, dest=key, default=None, type=type, help=f"{help} [{key}]")


def _model_options(p):
    _option(p, "--scheme", "scheme", "unpolarized, sigma_plus or two_level")
    _option(p, "--field", "field.gauss", "magnetic field in G", float)
    _option(p, "--envelope", "envelope.law", "gaussian, exponential or none")
    _option(p, "--tau", "envelope.tau_us", "envelope lifetime in us", float)
    _option(p, "--a0", "amplitude.a0", "initial amplitude A(0)", float)
    _option(p, "--p2", "coherences.p2", "weight of the m=2 coherence (two_level)", float)


def _selectivity_options(p):
    _option(p, "--pump-fraction", "pump.fraction", "fraction pumped into m=3", float)
    _option(p, "--pump-policy", "pump.policy", "all_in_next_lower or uniform_below")
    _option(p, "--width", "sel.width_mhz", "two-photon resonance FWHM in MHz", float)
    _option(p, "--lineshape", "sel.lineshape", "sech, lorentzian or gaussian")
    p.add_argument(
        "--calibrate",
        dest="sel.calibrate",
        action="store_const",
        const="true",
        default=None,
        help="solve the width so that R = 0.25 at 6.5 MHz and 2.6 G [sel.calibrate]",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="eitrevival",
        description="Collapse and revival model for EIT quantum memories in a magnetic field.",
    )
    parser.add_argument("--version", action="store_true", help="print version and model constants")
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key"
    )
    parser.add_argument("--output", "-o", help="write CSV here instead of stdout")
    parser.add_argument("--workers", type=int, default=None, help="threads for scans")
    sub = parser.add_subparsers(dest="command")
    # --output may also follow the subcommand; SUPPRESS keeps the global value otherwise
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", default=argparse.SUPPRESS, help="write CSV here instead of stdout")

    def add(name, help):
        return sub.add_parser(name, help=help, parents=[common])

    p = add("simulate", help="sample the retrieval model, optionally with noise")
    _model_options(p)
    _option(p, "--t-start", "time.start_us", "first storage time in us", float)
    _option(p, "--t-stop", "time.stop_us", "last storage time in us", float)
    _option(p, "--points", "time.points", "number of samples", int)
    _option(p, "--noise-relative", "noise.relative", "noise sd as a fraction of the signal", float)
    _option(p, "--noise-floor", "noise.floor", "constant noise sd", float)
    _option(p, "--seed", "noise.seed", "random seed", int)
    p.add_argument("--with-sigma", action="store_true", help="add a sigma column")

    p = add("revivals", help="list revival times")
    _option(p, "--scheme", "scheme", "unpolarized, sigma_plus or two_level")
    _option(p, "--field", "field.gauss", "magnetic field in G", float)
    _option(p, "--horizon", "time.stop_us", "last time in us", float)

    p = add("fit", help="fit a t_us,amplitude[,sigma] CSV")
    p.add_argument("input", help="curve CSV ('-' for stdin)")
    _option(p, "--scheme", "scheme", "unpolarized, sigma_plus or two_level")
    _option(p, "--envelope", "envelope.law", "gaussian, exponential or none")
    _option(p, "--relative-sigma", "fit.relative_sigma", "weights when the file has no sigma", float)
    _option(p, "--floor-sigma", "fit.floor_sigma", "weights when the file has no sigma", float)
    _option(p, "--seed", "noise.seed", "accepted for interface uniformity; fits are deterministic", int)

    p = add("estimate-stray-field", help="residual field from an unpolarized curve")
    p.add_argument("input", help="curve CSV ('-' for stdin)")
    _option(p, "--envelope", "envelope.law", "gaussian, exponential or none")
    _option(p, "--relative-sigma", "fit.relative_sigma", "weights when the file has no sigma", float)
    _option(p, "--floor-sigma", "fit.floor_sigma", "weights when the file has no sigma", float)

    p = add("scan-detuning", help="extrema versus control detuning")
    _option(p, "--field", "field.gauss", "magnetic field in G", float)
    _option(p, "--lo", "scan.lo", "first detuning in MHz", float)
    _option(p, "--hi", "scan.hi", "last detuning in MHz", float)
    _option(p, "--points", "scan.points", "grid points", int)
    _selectivity_options(p)

    p = add("scan-field", help="extrema versus field at the m=3 resonance")
    _option(p, "--lo", "scan.lo", "first field in G", float)
    _option(p, "--hi", "scan.hi", "last field in G", float)
    _option(p, "--points", "scan.points", "grid points", int)
    _selectivity_options(p)

    p = add("optimize", help="best control detuning")
    _option(p, "--field", "field.gauss", "magnetic field in G", float)
    _option(p, "--objective", "optimize.objective", "minimize_r or maximize_amax")
    _selectivity_options(p)

    p = add("lifetime", help="gradient and motional dephasing estimates")
    _option(p, "--temperature", "cloud.temperature_uk", "cloud temperature in uK", float)
    _option(p, "--rms-size", "cloud.rms_size_cm", "1/e cloud radius in cm", float)
    _option(p, "--angle", "cloud.beam_angle_deg", "angle between beams in degrees", float)
    _option(p, "--gradient", "gradient.mg_per_cm", "field gradient in mG/cm", float)
    _option(p, "--tau", "envelope.tau_us", "measured Gaussian lifetime in us", float)
    _option(p, "--m-f", "gradient.m_f", "m_F of the stored coherence", int)
    return parser


def _overrides(pairs):
    values = {}
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _envelope(cfg):
    law = EnvelopeLaw.parse(cfg.get_str("envelope.law", "gaussian" if "envelope.tau_us" in cfg else "none"))
    if law is EnvelopeLaw.NONE:
        return DecayEnvelope.none()
    return DecayEnvelope(law, cfg.get_float("envelope.tau_us", 440.0))


def _coherences(cfg, scheme):
    if scheme is Scheme.UNPOLARIZED:
        entries = {}
        for key, value in cfg.values.items():
            if key.startswith("coherences.P[") and key.endswith("]"):
                n, m = (int(v) for v in key[len("coherences.P[") : -1].split(","))
                entries[(n, m)] = float(value)
        return CoherenceMatrix.from_entries(entries) if entries else CoherenceMatrix.uniform()
    if scheme is Scheme.TWO_LEVEL:
        return DiagonalCoherences.two_level(cfg.get_float("coherences.p2", 0.07))
    mapping = {m: cfg.get_float(f"coherences.p{m}", 0.0) for m in range(-3, 4)}
    if not any(mapping.values()):
        return DiagonalCoherences.two_level(0.07)
    return DiagonalCoherences.from_mapping(mapping)


def _model(cfg):
    scheme = Scheme.parse(cfg.get_str("scheme", "two_level"))
    return ModelParams(
        scheme,
        _coherences(cfg, scheme),
        cfg.get_float("field.gauss", 1.0),
        _envelope(cfg),
        cfg.get_float("amplitude.a0", 1.0),
        cfg.constants(),
    )


def _pump_and_selectivity(cfg, consts):
    pump = PumpState(cfg.get_float("pump.fraction", 0.8), cfg.get_str("pump.policy", "all_in_next_lower"))
    sel = SelectivityModel(cfg.get_float("sel.width_mhz", 2.0), 0.0, cfg.get_str("sel.lineshape", "sech"))
    if cfg.get_bool("sel.calibrate"):
        width = calibrate_width(pump_distribution(pump), lineshape=sel.lineshape, consts=consts)
        sel = sel.with_width(width)
    return pump, sel


def _read_curve(path):
    if path == "-":
        return read_curve_csv(sys.stdin)
    with open(path, encoding="utf-8", newline="") as fh:
        return read_curve_csv(fh)


def cmd_simulate(cfg, args, out):
    params = _model(cfg)
    t = np.linspace(
        cfg.get_float("time.start_us", 0.0),
        cfg.get_float("time.stop_us", 1000.0),
        cfg.get_int("time.points", 2000),
    )
    noise = NoiseSpec(
        cfg.get_float("noise.relative", 0.0),
        cfg.get_float("noise.floor", 0.0),
        cfg.get_int("noise.seed", 0),
    )
    curve = synthesize_curve(params, t, noise)
    if args.with_sigma and curve.sigma is not None:
        write_csv(out, ["t_us", "amplitude", "sigma"], zip(curve.t, curve.a, curve.sigma))
    else:
        write_csv(out, ["t_us", "amplitude"], zip(curve.t, curve.a))


def cmd_revivals(cfg, args, out):
    times = revival_times(
        cfg.get_float("field.gauss", 1.0),
        Scheme.parse(cfg.get_str("scheme", "two_level")),
        cfg.get_float("time.stop_us", 10.0),
        cfg.constants(),
    )
    write_csv(out, ["k", "t_us"], enumerate(times))


def _fit_rows(fit):
    err = fit.stderr
    rows = [(name, value, err[name]) for name, value in zip(fit.names, fit.values)]
    if fit.params.scheme is Scheme.TWO_LEVEL:
        rows.append(("p3", fit.params.coherences.p(3), err.get("p2")))
    elif fit.params.scheme is Scheme.SIGMA_PLUS:
        rows += [(f"p{m}", fit.params.coherences.p(m), None) for m in range(-3, 4)]
    rows.append(("residual_norm", fit.residual_norm, None))
    rows.append(("converged", fit.converged, None))
    rows.append(("covariance_ok", fit.covariance_ok, None))
    return rows


def cmd_fit(cfg, args, out):
    curve = _read_curve(args.input)
    fit = fit_curve(
        curve,
        Scheme.parse(cfg.get_str("scheme", "two_level")),
        envelope_law=cfg.get_str("envelope.law", "gaussian"),
        relative_sigma=cfg.get_float("fit.relative_sigma", 0.0),
        floor_sigma=cfg.get_float("fit.floor_sigma", 0.0),
        consts=cfg.constants(),
    )
    write_csv(out, ["param", "estimate", "sigma"], _fit_rows(fit))
    if not fit.converged:
        raise NumericalFailure("fit did not converge")
    if not fit.covariance_ok:
        print("eitrevival: warning: uncertainties unreliable (parameter at a bound or singular covariance)", file=sys.stderr)


def cmd_estimate_stray_field(cfg, args, out):
    curve = _read_curve(args.input)
    est = estimate_stray_field(
        curve,
        envelope_law=cfg.get_str("envelope.law", "gaussian"),
        relative_sigma=cfg.get_float("fit.relative_sigma", 0.0),
        floor_sigma=cfg.get_float("fit.floor_sigma", 0.0),
        consts=cfg.constants(),
    )
    rows = [("b_field_gauss", est.b_field, est.sigma)] + _fit_rows(est.fit)[1:]
    write_csv(out, ["param", "estimate", "sigma"], rows)


def _scan_spec(cfg, variable, lo, hi, n):
    consts = cfg.constants()
    pump, sel = _pump_and_selectivity(cfg, consts)
    return ScanSpec(
        variable,
        cfg.get_float("scan.lo", lo),
        cfg.get_float("scan.hi", hi),
        cfg.get_int("scan.points", n),
        pump,
        sel,
        cfg.get_float("field.gauss", 1.0),
        cfg.get_float("amplitude.a0", 1.0),
        None,
        consts,
    )


def _write_rows(out, rows):
    write_csv(out, ["x", "a_max", "a_min", "r"], ((r.x, r.a_max, r.a_min, r.r) for r in rows))


def cmd_scan_detuning(cfg, args, out):
    _write_rows(out, scan_detuning(_scan_spec(cfg, ScanVariable.DETUNING, -2.0, 10.0, 241), args.workers))


def cmd_scan_field(cfg, args, out):
    _write_rows(out, scan_field(_scan_spec(cfg, ScanVariable.FIELD, 0.0, 3.0, 61), args.workers))


def cmd_optimize(cfg, args, out):
    consts = cfg.constants()
    pump, sel = _pump_and_selectivity(cfg, consts)
    best = optimize_detuning(
        cfg.get_float("field.gauss", 1.0),
        pump,
        sel,
        cfg.get_str("optimize.objective", "minimize_r"),
        consts=consts,
        workers=args.workers,
    )
    write_csv(
        out,
        ["quantity", "value"],
        [
            ("detuning_mhz", best.detuning),
            ("value", best.value),
            ("plateau_onset_mhz", best.plateau_onset),
            ("flat", best.flat),
            ("eit_width_mhz", sel.eit_width),
        ],
    )


def cmd_lifetime(cfg, args, out):
    consts = cfg.constants()
    cloud = CloudGeometry(
        cfg.get_float("cloud.temperature_uk", 13.0),
        cfg.get_float("cloud.rms_size_cm", 0.03),
        math.radians(cfg.get_float("cloud.beam_angle_deg", 0.5)),
        cfg.get_float("cloud.wavelength_nm", consts.signal_wavelength),
    )
    m_f = cfg.get_int("gradient.m_f", 3)
    tau_mot = motional_lifetime(cloud, consts)
    rows = [("motional_lifetime_us", tau_mot), ("rms_size_cm_assumed", cloud.rms_size)]
    taus = [tau_mot]
    if "gradient.mg_per_cm" in cfg:
        tau_grad = gradient_lifetime(cfg.get_float("gradient.mg_per_cm"), cloud, m_f, consts)
        rows.append(("gradient_lifetime_us", tau_grad))
        taus.append(tau_grad)
    if "envelope.tau_us" in cfg:
        rows.append(("gradient_mg_per_cm", gradient_from_lifetime(cfg.get_float("envelope.tau_us"), cloud, m_f, consts)))
    rows.append(("combined_lifetime_us", combined_lifetime(*taus)))
    write_csv(out, ["quantity", "value"], rows)


COMMANDS = {
    "simulate": cmd_simulate,
    "revivals": cmd_revivals,
    "fit": cmd_fit,
    "estimate-stray-field": cmd_estimate_stray_field,
    "scan-detuning": cmd_scan_detuning,
    "scan-field": cmd_scan_field,
    "optimize": cmd_optimize,
    "lifetime": cmd_lifetime,
}


def print_version(cfg, out):
    c = cfg.constants()
    out.write(f"eitrevival {__version__} (kernel backend: {kernels.BACKEND})\n")
    out.write(f"g_factor_per_gauss = {c.g_factor_per_gauss} MHz/G\n")
    out.write(f"clock_frequency = {c.clock_frequency} GHz\n")
    out.write(f"cs_mass = {c.cs_mass} kg\n")
    out.write(f"signal_wavelength = {c.signal_wavelength} nm\n")


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        file_values = load_config(args.config) if args.config else {}
        flag_values = {k: v for k, v in vars(args).items() if "." in k or k == "scheme"}
        cfg = Settings(file_values, _overrides(args.set), flag_values)
        out = open(args.output, "w", encoding="utf-8", newline="") if args.output else sys.stdout
        try:
            if args.version:
                print_version(cfg, out)
                return EXIT_OK
            if args.command is None:
                parser.print_usage(sys.stderr)
                return EXIT_USAGE
            COMMANDS[args.command](cfg, args, out)
        finally:
            if args.output:
                out.close()
    except (ConfigError, ValidationError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EstimationError, NumericalFailure, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
