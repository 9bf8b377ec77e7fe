"""Weak-probe linear response and reflected-field spectra.

The probe response is the complex upper-sideband amplitude a_plus(delta);
the measurable reflected quadrature is eps_R = 2*kappa*a_plus, whose real
part is absorptive and imaginary part dispersive. All evaluators accept a
scalar probe detuning or an ndarray of detunings; scalar calls raise typed
errors on singular input, array calls capture problems per point so one
pole cannot destroy a long sweep.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams, PolePassage, SingularA, SingularDenominator
from .model import HBAR, ModelParams, params_fingerprint
from .steady_state import SteadyState

SPECTRUM_CSV_COLUMNS = ("delta_rad_s", "delta_over_omega1_minus_1",
                        "re_eps_R", "im_eps_R", "re_a_plus", "im_a_plus")


def mechanical_denominator(p: ModelParams, delta):
    """Effective mechanical response denominator of the coupled resonators.

    m1*(omega1^2 - delta^2 - i*delta*gamma1)
      - (hbar*lambda)^2 / (m2*(omega2^2 - delta^2 - i*delta*gamma2))

    The second mode enters as a separate complex quotient before the
    subtraction; the two terms nearly cancel at the hybridized resonances
    and combining them any other way loses precision exactly where the
    transparency physics lives.
    """
    delta = np.asarray(delta) if isinstance(delta, np.ndarray) else delta
    first = p.m1 * (p.omega1 ** 2 - delta ** 2 - 1j * delta * p.gamma1)
    pole = p.m2 * (p.omega2 ** 2 - delta ** 2 - 1j * delta * p.gamma2)
    if isinstance(delta, np.ndarray):
        with np.errstate(divide="ignore", invalid="ignore"):
            second = (HBAR * p.coulomb_lambda) ** 2 / pole
        return first - second
    if pole == 0.0:
        # reachable only with gamma2 = 0 at delta = +-omega2
        raise PolePassage(f"undamped second mode hit at delta={delta!r}")
    return first - (HBAR * p.coulomb_lambda) ** 2 / pole


def backaction_factor(p: ModelParams, s: SteadyState, delta):
    """Radiation-pressure back-action correction (exactly 1 when the cavity
    is dark or decoupled)."""
    a = mechanical_denominator(p, delta)
    coupling = HBAR * p.g ** 2 * s.n_cav
    if coupling == 0.0:
        return np.ones_like(a) if isinstance(a, np.ndarray) else 1.0 + 0.0j
    if isinstance(a, np.ndarray):
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1.0 + 1j * coupling / (
                a * (p.kappa - 1j * (s.delta_eff + delta)))
    if abs(a) < 1e-30 * p.m1 * p.omega1 ** 2:
        raise SingularA(f"|mechanical denominator| underflow at "
                        f"delta={delta!r}")
    return 1.0 + 1j * coupling / (a * (p.kappa - 1j * (s.delta_eff + delta)))


def response_denominator(p: ModelParams, s: SteadyState, delta):
    """Denominator of the upper-sideband amplitude."""
    coupling = HBAR * p.g ** 2 * s.n_cav
    base = p.kappa + 1j * (s.delta_eff - delta)
    if coupling == 0.0:
        return base
    a = mechanical_denominator(p, delta)
    b = backaction_factor(p, s, delta)
    if isinstance(delta, np.ndarray):
        with np.errstate(divide="ignore", invalid="ignore"):
            return base - 1j * coupling / (a * b)
    return base - 1j * coupling / (a * b)


def a_plus(p: ModelParams, s: SteadyState, delta):
    """Complex upper-sideband amplitude of the intracavity probe response."""
    denom = response_denominator(p, s, delta)
    if isinstance(denom, np.ndarray):
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1.0 / denom
    if denom == 0.0 or not np.isfinite(denom):
        raise SingularDenominator(delta, denom)
    return 1.0 / denom


def eps_r(p: ModelParams, s: SteadyState, delta):
    """Reflected probe quadrature 2*kappa*a_plus.

    Re part = absorption, Im part = dispersion.
    """
    return 2.0 * p.kappa * a_plus(p, s, delta)


def eps_out_plus(p: ModelParams, s: SteadyState, delta):
    """Upper-sideband output field, eps_R - 1."""
    return eps_r(p, s, delta) - 1.0


@dataclass(frozen=True)
class ResponsePoint:
    delta: float
    a_plus: complex
    eps_R: complex

    @property
    def absorption(self):
        return self.eps_R.real

    @property
    def dispersion(self):
        return self.eps_R.imag


@dataclass(frozen=True)
class PointError:
    index: int
    delta: float
    reason: str


@dataclass(frozen=True)
class DeltaGrid:
    """Probe-detuning grid in units of omega1: linspace(start, stop, count).

    Matches the natural x-axis of the reference spectra,
    (delta - omega1)/omega1 = value - 1.
    """

    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise InvalidParams("grid count must be >= 2")
        if not self.start < self.stop:
            raise InvalidParams("grid start must be < stop")

    def to_array(self, p: ModelParams) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count) * p.omega1


@dataclass(eq=False)
class Spectrum:
    """Pointwise probe response on a strictly increasing detuning grid."""

    params_hash: str
    delta: np.ndarray
    a_plus: np.ndarray
    eps_r: np.ndarray
    errors: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if np.any(np.diff(self.delta) <= 0.0):
            raise InvalidParams("spectrum grid must be strictly increasing")

    @property
    def absorption(self) -> np.ndarray:
        return self.eps_r.real

    @property
    def dispersion(self) -> np.ndarray:
        return self.eps_r.imag

    def point(self, i) -> ResponsePoint:
        return ResponsePoint(float(self.delta[i]), complex(self.a_plus[i]),
                             complex(self.eps_r[i]))


def spectrum(p: ModelParams, s: SteadyState, grid) -> Spectrum:
    """Evaluate the reflected-field response over a detuning grid.

    ``grid`` is a DeltaGrid (omega1 units) or an ndarray in rad/s.
    Deterministic; singular points are recorded in ``errors`` with NaN
    values instead of aborting the sweep.
    """
    deltas = grid.to_array(p) if isinstance(grid, DeltaGrid) \
        else np.asarray(grid, dtype=float)
    ap = a_plus(p, s, deltas)
    er = 2.0 * p.kappa * ap
    bad = np.flatnonzero(~np.isfinite(ap))
    errors = tuple(PointError(int(i), float(deltas[i]),
                              "singular response denominator")
                   for i in bad)
    if bad.size:
        ap = ap.copy()
        er = er.copy()
        ap[bad] = np.nan
        er[bad] = np.nan
    return Spectrum(params_fingerprint(p, s), deltas, ap, er, errors)


def write_spectrum_csv(sp: Spectrum, p: ModelParams, path):
    """Spectrum CSV with round-trip-exact (17 significant digit) floats."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SPECTRUM_CSV_COLUMNS)
        for i in range(len(sp.delta)):
            d = sp.delta[i]
            writer.writerow([
                format(d, ".17g"),
                format(d / p.omega1 - 1.0, ".17g"),
                format(sp.eps_r[i].real, ".17g"),
                format(sp.eps_r[i].imag, ".17g"),
                format(sp.a_plus[i].real, ".17g"),
                format(sp.a_plus[i].imag, ".17g"),
            ])
