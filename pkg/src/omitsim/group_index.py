"""Transparency-point location and group-velocity metrics.

The group-velocity figure of merit is the dispersion slope
Im[d eps_R / d delta] (units: seconds) at the zero-absorption minima.
Its sign separates slow light (positive, steep normal dispersion) from
fast light (negative, anomalous dispersion). Only the slope itself is
reported; the absolute group index involves a proportionality constant
the model does not fix, so callers may supply their own scale factor.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoTransparencyWindow, StepTooLarge
from .model import ModelParams, rebuild
from .steady_state import SteadyState, solve_direct
from . import response

REGIME_FAST = "fast"
REGIME_SLOW = "slow"

GROUP_METRIC_CSV_COLUMNS = ("power_W", "omega_minus_rad_s",
                            "omega_plus_rad_s", "metric_minus_s",
                            "metric_plus_s", "regime")

# absorption below this (on the [0, 2] reflection scale) counts as a
# transparency window; the true minima touch zero, this is margin
ABSORPTION_THRESHOLD = 0.1


def dispersion_slope(p: ModelParams, s: SteadyState, delta: float,
                     h: float | None = None) -> float:
    """Im[d eps_R / d delta] by Richardson-extrapolated central difference.

    Default step h = 1e-6*omega1. Raises StepTooLarge when halving the
    step moves the estimate by more than 1e-4 relative, which signals
    spectral structure narrower than h.
    """
    if h is None:
        h = 1e-6 * p.omega1
    if not h > 0.0:
        raise ValueError("h must be > 0")

    def central(step):
        hi = response.eps_r(p, s, delta + step).imag
        lo = response.eps_r(p, s, delta - step).imag
        return (hi - lo) / (2.0 * step)

    d1 = central(h)
    d2 = central(0.5 * h)
    extrap = (4.0 * d2 - d1) / 3.0
    scale = max(abs(extrap), abs(d1), abs(d2))
    if scale > 0.0 and abs(d2 - d1) > 1e-4 * scale:
        raise StepTooLarge(
            f"h={h!r} under-resolves the response near delta={delta!r}: "
            f"half-step estimate moved by {abs(d2 - d1) / scale:.3e} relative")
    return extrap


def _absorption_slope(p, s, delta, h):
    hi = response.eps_r(p, s, delta + h).real
    lo = response.eps_r(p, s, delta - h).real
    return (hi - lo) / (2.0 * h)


@dataclass(frozen=True)
class TransparencyPoint:
    delta: float            # rad/s
    absorption: float       # Re[eps_R] at the minimum
    slope: float            # Im[d eps_R/d delta] at the minimum (s)
    regime: str             # fast (slope<0) or slow (slope>0)


@dataclass(frozen=True)
class TransparencyReport:
    """Zero-absorption minima found in a probe-detuning window.

    ``points`` is ascending in delta. With the Coulomb coupling on and
    double-window parameters there are two; with the coupling off, one.
    omega_minus/omega_plus name the outer pair when at least two exist.
    """

    points: tuple
    window: tuple
    threshold: float

    @property
    def omega_minus(self):
        return self.points[0].delta if len(self.points) >= 2 else None

    @property
    def omega_plus(self):
        return self.points[-1].delta if len(self.points) >= 2 else None

    def to_dict(self):
        return {
            "window_rad_s": list(self.window),
            "threshold": self.threshold,
            "omega_minus_rad_s": self.omega_minus,
            "omega_plus_rad_s": self.omega_plus,
            "points": [
                {"delta_rad_s": pt.delta, "absorption": pt.absorption,
                 "slope_s": pt.slope, "regime": pt.regime}
                for pt in self.points],
        }


def default_window(p: ModelParams) -> tuple:
    """Scan window around the upper-sideband hybridized resonances.

    Nominally omega1 +- 10*kappa, clamped to positive detunings so the
    mirror-image features near -omega1 are not swept up.
    """
    lo = max(p.omega1 - 10.0 * p.kappa, 1e-3 * p.omega1)
    hi = p.omega1 + 10.0 * p.kappa
    return (lo, hi)


def _refine_minimum(p, s, lo, hi, h):
    """Bisect d Re[eps_R]/d delta to floating-point resolution of delta."""
    glo = _absorption_slope(p, s, lo, h)
    ghi = _absorption_slope(p, s, hi, h)
    if glo > 0.0 or ghi < 0.0:
        # bracket does not straddle a minimum cleanly; fall back to center
        return 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        gmid = _absorption_slope(p, s, mid, h)
        if gmid < 0.0:
            lo = mid
        elif gmid > 0.0:
            hi = mid
        else:
            return mid
        if hi - lo <= 4.0 * np.spacing(hi):
            break
    return 0.5 * (lo + hi)


def find_transparency_points(p: ModelParams, s: SteadyState,
                             window: tuple | None = None,
                             coarse_points: int = 2001,
                             threshold: float = ABSORPTION_THRESHOLD
                             ) -> TransparencyReport:
    """Locate the zero-absorption minima of Re[eps_R] in a window.

    Coarse grid scan for interior local minima, derivative bisection on
    each bracket, then keep minima whose absorption beats the threshold.
    Raises NoTransparencyWindow when nothing qualifies.
    """
    if window is None:
        window = default_window(p)
    lo, hi = window
    grid = np.linspace(lo, hi, max(int(coarse_points), 2000))
    absorption = response.eps_r(p, s, grid).real

    interior = np.flatnonzero(
        (absorption[1:-1] < absorption[:-2])
        & (absorption[1:-1] < absorption[2:])) + 1

    h = 1e-3 * (grid[1] - grid[0])
    found = []
    for i in interior:
        delta = _refine_minimum(p, s, grid[i - 1], grid[i + 1], h)
        absn = float(response.eps_r(p, s, delta).real)
        if absn < threshold:
            slope = dispersion_slope(p, s, delta)
            regime = REGIME_FAST if slope < 0.0 else REGIME_SLOW
            found.append(TransparencyPoint(float(delta), absn, float(slope),
                                           regime))
    if not found:
        raise NoTransparencyWindow(
            f"no absorption minimum below {threshold} in "
            f"[{lo!r}, {hi!r}] rad/s")
    found.sort(key=lambda pt: pt.delta)
    return TransparencyReport(tuple(found), (float(lo), float(hi)),
                              float(threshold))


@dataclass(frozen=True)
class GroupMetricPoint:
    """Dispersion-slope metric at one transparency point of one pump power.

    ng_scaled is present only when a caller-supplied proportionality
    constant converts the raw slope into a dimensionless group index,
    ng = 1 + scale*metric.
    """

    pump_power: float
    delta_eval: float
    metric: float
    ng_scaled: float | None = None
    error: str | None = None


def group_metric_sweep(p: ModelParams, detuning: float, powers,
                       ng_scale: float | None = None) -> list:
    """Dispersion slopes at both transparency points across pump powers.

    Powers must be positive and ascending. The steady state and the
    transparency points are recomputed at every power; the window
    locations shift with intracavity intensity. Failures are captured
    per power instead of aborting the sweep.
    """
    powers = [float(w) for w in powers]
    if any(w <= 0.0 for w in powers):
        raise ValueError("powers must be strictly positive")
    if any(b <= a for a, b in zip(powers, powers[1:])):
        raise ValueError("powers must be strictly ascending")

    out = []
    for power in powers:
        try:
            pw = rebuild(p, pump_power=power)
            s = solve_direct(pw, detuning)
            report = find_transparency_points(pw, s)
            pts = (report.points[0], report.points[-1])
        except Exception as exc:  # captured per point, sweep continues
            out.append(GroupMetricPoint(power, math.nan, math.nan,
                                        error=f"{type(exc).__name__}: {exc}"))
            continue
        for pt in pts:
            scaled = None if ng_scale is None else 1.0 + ng_scale * pt.slope
            out.append(GroupMetricPoint(power, pt.delta, pt.slope, scaled))
    return out


def write_group_metric_csv(points, path):
    """Per-power CSV rows pairing the lower and upper transparency points."""
    import csv

    by_power = {}
    for gp in points:
        by_power.setdefault(gp.pump_power, []).append(gp)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GROUP_METRIC_CSV_COLUMNS)
        for power in sorted(by_power):
            pair = sorted(by_power[power], key=lambda gp: gp.delta_eval)
            lo, hi = pair[0], pair[-1]
            if lo.error or hi.error:
                regime = "error"
            elif lo.metric < 0.0 and hi.metric < 0.0:
                regime = REGIME_FAST
            elif lo.metric > 0.0 and hi.metric > 0.0:
                regime = REGIME_SLOW
            else:
                regime = "mixed"
            writer.writerow([
                format(power, ".17g"),
                format(lo.delta_eval, ".17g"),
                format(hi.delta_eval, ".17g"),
                format(lo.metric, ".17g"),
                format(hi.metric, ".17g"),
                regime,
            ])
