"""Command-line front end.

Subcommands: spectrum, transparency, sweep, validate, params. All numeric
output uses 17 significant digits (round-trip exact for doubles) so runs
can be pinned byte-for-byte.

Exit codes: 0 success, 2 config error, 3 physics error, 4 oracle mismatch.
"""

import argparse
import json
import os
import sys

from . import group_index, oracle, response, sweep as sweep_mod
from .errors import (BudgetExceeded, ConfigError, NonPositiveParameter,
                     NoTransparencyWindow, OmitsimError)
from .model import (DetuningMode, build_params, config_from_dict,
                    params_fingerprint, validate)
from .response import DeltaGrid
from .steady_state import resolve_steady_state

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PHYSICS = 3
EXIT_ORACLE = 4

_CONFIG_ERROR_TYPES = (ConfigError, NonPositiveParameter, BudgetExceeded)

_PARAM_UNITS = {
    "pump_wavelength": "m", "cavity_length": "m",
    "omega1": "rad/s", "omega2": "rad/s", "Q1": "", "Q2": "",
    "m1": "kg", "m2": "kg", "kappa": "rad/s",
    "pump_power": "W", "probe_power": "W",
    "coulomb_lambda": "rad/s/m^2",
    "detuning_value": "rad/s",
    "omega_a": "rad/s", "omega_l": "rad/s",
    "g": "rad/s/m", "gamma1": "rad/s", "gamma2": "rad/s",
    "eps_l": "s^-1 (amplitude)", "eps_s": "s^-1 (amplitude)",
    "spring_denom": "kg rad^2/s^2",
}


def _g17(x):
    return format(x, ".17g")


def _load_doc(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path!r} is not valid JSON: {exc}") from exc


def _apply_overrides(doc, sets):
    """Apply repeatable --set key=value pairs onto a config document.

    Values parse as JSON when possible, else as bare strings. Dotted keys
    address the units block (units.omega1=rad_per_s). Unknown keys are
    rejected downstream by the config parser, never ignored.
    """
    for item in sets or []:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        if "." in key:
            head, _, sub = key.partition(".")
            if head != "units" or not sub:
                raise ConfigError(f"unknown override key {key!r}")
            doc.setdefault("units", {})[sub] = value
        else:
            doc[key] = value
    return doc


def _parse_grid(text) -> DeltaGrid:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must be start:stop:count, got {text!r}")
    try:
        return DeltaGrid(float(parts[0]), float(parts[1]), int(parts[2]))
    except (ValueError, OmitsimError) as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from exc


def _params_from_args(args):
    doc = _apply_overrides(_load_doc(args.config), args.set)
    cfg = config_from_dict(doc)
    p = build_params(cfg)
    report = validate(p)
    for v in report.violations:
        print(f"warning: {v.code}: {v.message}", file=sys.stderr)
    return p


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def run_params(args) -> int:
    p = _params_from_args(args)
    for name in _PARAM_UNITS:
        value = getattr(p, name)
        unit = _PARAM_UNITS[name]
        print(f"{name} = {_g17(value)}{' ' + unit if unit else ''}")
    print(f"detuning_mode = {p.detuning_mode.value}")
    return EXIT_OK


def run_spectrum(args) -> int:
    p = _params_from_args(args)
    s = resolve_steady_state(p, branch=args.branch)
    grid = _parse_grid(args.grid)
    sp = response.spectrum(p, s, grid)

    out = _outdir(args)
    csv_path = os.path.join(out, "spectrum.csv")
    response.write_spectrum_csv(sp, p, csv_path)

    deltas = sp.delta
    try:
        report = group_index.find_transparency_points(
            p, s, window=(float(deltas[0]), float(deltas[-1])))
        minima = report.to_dict()["points"]
    except NoTransparencyWindow:
        minima = []
    summary = {
        "params_hash": params_fingerprint(p, s),
        "grid": {"start": grid.start, "stop": grid.stop,
                 "count": grid.count},
        "n_point_errors": len(sp.errors),
        "minima": minima,
    }
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"spectrum: {len(deltas)} points -> {csv_path}")
    print(f"minima below {group_index.ABSORPTION_THRESHOLD}: {len(minima)}")
    for m in minima:
        print(f"  delta/omega1 = {_g17(m['delta_rad_s'] / p.omega1)}  "
              f"absorption = {_g17(m['absorption'])}  "
              f"slope = {_g17(m['slope_s'])} s  [{m['regime']}]")
    return EXIT_OK


def run_transparency(args) -> int:
    p = _params_from_args(args)
    s = resolve_steady_state(p, branch=args.branch)
    report = group_index.find_transparency_points(p, s)
    out = _outdir(args)
    with open(os.path.join(out, "transparency.json"), "w") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    for pt in report.points:
        print(f"delta/omega1 = {_g17(pt.delta / p.omega1)}  "
              f"absorption = {_g17(pt.absorption)}  "
              f"slope = {_g17(pt.slope)} s  [{pt.regime}]")
    if report.omega_minus is not None:
        print(f"omega_minus/omega1 = {_g17(report.omega_minus / p.omega1)}")
        print(f"omega_plus/omega1  = {_g17(report.omega_plus / p.omega1)}")
    return EXIT_OK


def run_validate(args) -> int:
    p = _params_from_args(args)
    if p.detuning_mode is not DetuningMode.EFFECTIVE_DELTA:
        s = resolve_steady_state(p, branch=args.branch)
        detuning = s.delta_eff
    else:
        detuning = p.detuning_value

    if p.eps_s > 0.1 * p.eps_l:
        print(f"warning: eps_s/eps_l = {p.eps_s / p.eps_l:.3e} is outside "
              "the weak-probe regime; linear-response agreement may break",
              file=sys.stderr)

    k = p.kappa
    w1 = p.omega1
    deltas = [w1 - 2 * k, w1 - 0.5 * k, w1, w1 + 0.5 * k, w1 + 2 * k]
    table = oracle.cross_validate(
        p, detuning, deltas, n_periods=args.n_periods,
        decay_times=args.decay_times)

    rows = []
    worst = 0.0
    failed = not table.passed
    for row in table.rows:
        if row.error is not None:
            print(f"delta/omega1 = {row.delta / w1:.6f}  ERROR {row.error}")
            failed = True
            rows.append({"delta_rad_s": row.delta, "error": row.error})
            continue
        ana = row.a_plus_analytic
        if args.corrupt_a_plus:
            ana = ana * 1.01
        rel = abs(row.a_plus_demod - ana) / abs(ana)
        worst = max(worst, rel)
        if rel >= table.tolerance:
            failed = True
        print(f"delta/omega1 = {row.delta / w1:.6f}  "
              f"rel_error = {rel:.3e}")
        rows.append({"delta_rad_s": row.delta,
                     "a_plus_analytic": [ana.real, ana.imag],
                     "a_plus_demod": [row.a_plus_demod.real,
                                      row.a_plus_demod.imag],
                     "rel_error": rel})
    print(f"max relative error = {worst:.6e} "
          f"(tolerance {table.tolerance:g})")

    out = _outdir(args)
    with open(os.path.join(out, "validation.json"), "w") as fh:
        json.dump({"rows": rows, "max_rel_error": worst,
                   "tolerance": table.tolerance, "passed": not failed},
                  fh, sort_keys=True, indent=2)
        fh.write("\n")
    return EXIT_ORACLE if failed else EXIT_OK


def run_sweep(args) -> int:
    doc = _load_doc(args.config)
    if "base" not in doc:
        raise ConfigError("sweep config must be a plan document with "
                          "'base' and 'axes'")
    doc["base"] = _apply_overrides(doc.get("base", {}), args.set)
    plan = sweep_mod.plan_from_dict(doc)
    record = sweep_mod.execute(plan, workers=args.workers)
    out = _outdir(args)
    sweep_mod.write_run(plan, record, out)
    n_err = sum(1 for pt in record.points if pt.error)
    print(f"sweep: {len(record.points)} points "
          f"({n_err} with captured errors) in "
          f"{record.wall_time_s:.2f} s -> {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="omitsim",
        description="Double-window optomechanical transparency simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, branch=True):
        sp.add_argument("--config", required=True,
                        help="JSON config (or sweep plan) path")
        sp.add_argument("--out", default=".",
                        help="output directory (default: .)")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config entry; repeatable")
        if branch:
            sp.add_argument("--branch", default=None,
                            help="steady-state branch for bare-detuning "
                                 "configs (low_power/middle/high_power)")

    sp = sub.add_parser("spectrum", help="probe-response spectrum CSV")
    common(sp)
    sp.add_argument("--grid", default="0.9:1.1:4001",
                    help="delta grid start:stop:count in omega1 units")
    sp.set_defaults(func=run_spectrum)

    sp = sub.add_parser("transparency",
                        help="locate zero-absorption minima")
    common(sp)
    sp.set_defaults(func=run_transparency)

    sp = sub.add_parser("sweep", help="execute a sweep plan")
    common(sp, branch=False)
    sp.add_argument("--workers", type=int, default=1,
                    help="parallel point workers (default 1)")
    sp.set_defaults(func=run_sweep)

    sp = sub.add_parser("validate",
                        help="time-domain oracle vs analytic response")
    common(sp)
    sp.add_argument("--n-periods", type=int, default=256,
                    help="demodulation window length in beat periods")
    sp.add_argument("--decay-times", type=float, default=12.0,
                    help="transient cut in mechanical decay times")
    sp.add_argument("--corrupt-a-plus", action="store_true",
                    help=argparse.SUPPRESS)
    sp.set_defaults(func=run_validate)

    sp = sub.add_parser("params", help="echo derived model parameters")
    common(sp, branch=False)
    sp.set_defaults(func=run_params)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERROR_TYPES as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OmitsimError as exc:
        print(f"physics error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PHYSICS


if __name__ == "__main__":
    sys.exit(main())
