"""Physical parameter model: raw inputs, derived quantities, validation.

All frequencies are stored and consumed as angular frequencies (rad/s).
Config documents may declare values in "Hz with a 2*pi prefix" via the
``units`` block; conversion happens once, at ingestion, and nothing
downstream ever re-derives a constant.
"""

import enum
import hashlib
import json
import math
from dataclasses import dataclass, fields, replace

from .errors import ConfigError, CoulombOverstrong, NonPositiveParameter

HBAR = 1.054571817e-34   # J s
C_LIGHT = 2.99792458e8   # m/s

# weak-probe watermark: eps_s above this fraction of eps_l is flagged
WEAK_PROBE_RATIO = 1e-2


class DetuningMode(enum.Enum):
    """Which detuning the config's ``detuning_value`` refers to.

    EFFECTIVE_DELTA: the effective pump-cavity detuning, already including
    the static radiation-pressure shift. This is the knob the reference
    figures fix directly.

    BARE_DELTA_A: the bare pump-cavity detuning; the effective detuning
    then follows from the self-consistent steady state.
    """

    EFFECTIVE_DELTA = "effective_delta"
    BARE_DELTA_A = "bare_delta_a"


_UNIT_CHOICES = ("rad_per_s", "hz_times_2pi")
_UNIT_FIELDS = ("omega1", "omega2", "kappa", "detuning_value",
                "coulomb_lambda")


@dataclass(frozen=True)
class RawConfig:
    """User-facing physical inputs, SI with angular frequencies.

    pump_wavelength  pump laser wavelength (m)
    cavity_length    cavity length (m)
    omega1, omega2   mechanical angular frequencies of the two resonators (rad/s)
    Q1, Q2           mechanical quality factors (dimensionless)
    m1, m2           effective masses (kg)
    kappa            cavity amplitude decay rate (rad/s)
    pump_power       pump power (W)
    probe_power      probe power (W)
    coulomb_lambda   Coulomb coupling between the charged resonators (rad/s/m^2)
    detuning_mode    interpretation of detuning_value (see DetuningMode)
    detuning_value   pump-cavity detuning (rad/s; sign free)
    """

    pump_wavelength: float
    cavity_length: float
    omega1: float
    omega2: float
    Q1: float
    Q2: float
    m1: float
    m2: float
    kappa: float
    pump_power: float
    probe_power: float
    coulomb_lambda: float
    detuning_mode: DetuningMode
    detuning_value: float


@dataclass(frozen=True)
class ModelParams:
    """RawConfig plus every derived quantity the formulas consume.

    Derived fields:
      omega_a      cavity (optical) angular frequency 2*pi*c/pump_wavelength
      omega_l      pump angular frequency; set equal to omega_a for
                   amplitude conversion (their difference is ~1e-9 relative)
      g            optomechanical coupling omega_a/cavity_length (rad/s/m)
      gamma1/2     mechanical damping omega_i/Q_i (rad/s)
      eps_l/eps_s  pump/probe drive amplitudes sqrt(2*kappa*P/(hbar*omega_l))
      spring_denom effective spring denominator
                   m1*omega1^2 - hbar^2*lambda^2/(m2*omega2^2); must be > 0
    """

    pump_wavelength: float
    cavity_length: float
    omega1: float
    omega2: float
    Q1: float
    Q2: float
    m1: float
    m2: float
    kappa: float
    pump_power: float
    probe_power: float
    coulomb_lambda: float
    detuning_mode: DetuningMode
    detuning_value: float
    omega_a: float
    omega_l: float
    g: float
    gamma1: float
    gamma2: float
    eps_l: float
    eps_s: float
    spring_denom: float


_POSITIVE_FIELDS = ("pump_wavelength", "cavity_length", "omega1", "omega2",
                    "Q1", "Q2", "m1", "m2", "kappa", "pump_power",
                    "probe_power")


def build_params(cfg: RawConfig) -> ModelParams:
    """Derive all dependent quantities from a validated RawConfig.

    Deterministic and pure: identical configs give bit-identical params.

    Raises NonPositiveParameter for degenerate inputs and CoulombOverstrong
    when the Coulomb coupling exceeds the static-stability limit.
    """
    for name in _POSITIVE_FIELDS:
        value = getattr(cfg, name)
        if not value > 0.0:
            raise NonPositiveParameter(name, value)
    if cfg.coulomb_lambda < 0.0:
        raise NonPositiveParameter("coulomb_lambda", cfg.coulomb_lambda)

    omega_a = 2.0 * math.pi * C_LIGHT / cfg.pump_wavelength
    omega_l = omega_a
    g = omega_a / cfg.cavity_length
    gamma1 = cfg.omega1 / cfg.Q1
    gamma2 = cfg.omega2 / cfg.Q2
    eps_l = math.sqrt(2.0 * cfg.kappa * cfg.pump_power / (HBAR * omega_l))
    eps_s = math.sqrt(2.0 * cfg.kappa * cfg.probe_power / (HBAR * omega_l))
    spring_denom = (cfg.m1 * cfg.omega1 ** 2
                    - (HBAR * cfg.coulomb_lambda) ** 2
                    / (cfg.m2 * cfg.omega2 ** 2))
    if spring_denom <= 0.0:
        raise CoulombOverstrong(
            f"coulomb_lambda={cfg.coulomb_lambda!r} at or beyond the static "
            f"stability limit {critical_coulomb_lambda(cfg):.6e}")

    return ModelParams(
        **{f.name: getattr(cfg, f.name) for f in fields(RawConfig)},
        omega_a=omega_a,
        omega_l=omega_l,
        g=g,
        gamma1=gamma1,
        gamma2=gamma2,
        eps_l=eps_l,
        eps_s=eps_s,
        spring_denom=spring_denom,
    )


def critical_coulomb_lambda(cfg) -> float:
    """Coupling strength at which the static spring denominator hits zero:
    sqrt(m1*m2)*omega1*omega2/hbar."""
    return math.sqrt(cfg.m1 * cfg.m2) * cfg.omega1 * cfg.omega2 / HBAR


def raw_config(p: ModelParams) -> RawConfig:
    """Extract the RawConfig embedded in a ModelParams."""
    return RawConfig(**{f.name: getattr(p, f.name) for f in fields(RawConfig)})


def rebuild(p: ModelParams, **changes) -> ModelParams:
    """Re-derive a ModelParams with some raw fields replaced."""
    return build_params(replace(raw_config(p), **changes))


@dataclass(frozen=True)
class Violation:
    code: str
    field: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self):
        return [v.code for v in self.violations]


def validate(p: ModelParams) -> ValidationReport:
    """Report every violated invariant of a ModelParams; never raises."""
    bad = []
    for name in _POSITIVE_FIELDS + ("g", "gamma1", "gamma2"):
        value = getattr(p, name)
        if not value > 0.0:
            bad.append(Violation("non_positive_parameter", name,
                                 f"{name} must be strictly positive, got "
                                 f"{value!r}"))
    if p.coulomb_lambda < 0.0:
        bad.append(Violation("non_positive_parameter", "coulomb_lambda",
                             "coulomb_lambda must be >= 0, got "
                             f"{p.coulomb_lambda!r}"))
    if p.spring_denom <= 0.0:
        bad.append(Violation(
            "coulomb_overstrong", "coulomb_lambda",
            "effective spring denominator <= 0; static limit is "
            f"{critical_coulomb_lambda(p):.6e}"))
    if p.eps_l > 0.0 and p.eps_s > WEAK_PROBE_RATIO * p.eps_l:
        bad.append(Violation(
            "probe_not_weak", "probe_power",
            f"eps_s/eps_l = {p.eps_s / p.eps_l:.3e} exceeds the weak-probe "
            f"watermark {WEAK_PROBE_RATIO:g}; linear-response validation "
            "assumes a weak probe"))
    return ValidationReport(tuple(bad))


# ---------------------------------------------------------------------------
# config document ingestion

_REQUIRED_KEYS = tuple(f.name for f in fields(RawConfig))


def _apply_units(key, value, unit):
    if unit == "rad_per_s":
        return float(value)
    if unit == "hz_times_2pi":
        return 2.0 * math.pi * float(value)
    raise ConfigError(
        f"units[{key!r}] must be one of {_UNIT_CHOICES}, got {unit!r}")


def parse_detuning_mode(value) -> DetuningMode:
    """Accept 'effective_delta' / 'bare_delta_a' in any common casing."""
    if isinstance(value, DetuningMode):
        return value
    norm = str(value).replace("-", "_").replace(" ", "_").lower()
    for mode in DetuningMode:
        if norm == mode.value or norm == mode.value.replace("_", ""):
            return mode
    raise ConfigError(
        f"detuning_mode must be one of "
        f"{[m.value for m in DetuningMode]}, got {value!r}")


def config_from_dict(doc: dict) -> RawConfig:
    """Build a RawConfig from a flat JSON-compatible document.

    The optional ``units`` block declares, per frequency entry, whether the
    stored number is already angular ("rad_per_s") or must be multiplied by
    2*pi ("hz_times_2pi"). There is no silent unit guessing. Unknown keys
    are rejected, not ignored.
    """
    if not isinstance(doc, dict):
        raise ConfigError(f"config document must be an object, got "
                          f"{type(doc).__name__}")
    units = doc.get("units", {})
    if not isinstance(units, dict):
        raise ConfigError("units block must be an object")
    for key in units:
        if key not in _UNIT_FIELDS:
            raise ConfigError(f"units block names unknown entry {key!r}; "
                              f"allowed: {list(_UNIT_FIELDS)}")

    known = set(_REQUIRED_KEYS) | {"units"}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    missing = sorted(set(_REQUIRED_KEYS) - set(doc))
    if missing:
        raise ConfigError(f"missing config keys: {missing}")

    values = {}
    for key in _REQUIRED_KEYS:
        if key == "detuning_mode":
            values[key] = parse_detuning_mode(doc[key])
            continue
        rawv = doc[key]
        if not isinstance(rawv, (int, float)) or isinstance(rawv, bool):
            raise ConfigError(f"config key {key!r} must be a number, got "
                              f"{rawv!r}")
        if key in _UNIT_FIELDS:
            values[key] = _apply_units(key, rawv,
                                       units.get(key, "rad_per_s"))
        else:
            values[key] = float(rawv)
    return RawConfig(**values)


def load_config(path) -> RawConfig:
    """Load a RawConfig from a JSON file."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def config_to_dict(cfg: RawConfig) -> dict:
    """Flat dict form of a RawConfig, all frequencies in rad/s."""
    out = {}
    for f in fields(RawConfig):
        value = getattr(cfg, f.name)
        out[f.name] = value.value if isinstance(value, DetuningMode) else value
    return out


def params_fingerprint(p: ModelParams, state=None) -> str:
    """Stable hex digest identifying a params (+ optional steady state)."""
    parts = []
    for f in fields(ModelParams):
        value = getattr(p, f.name)
        if isinstance(value, DetuningMode):
            parts.append(value.value)
        else:
            parts.append(float(value).hex())
    if state is not None:
        parts.extend([float(state.q1s).hex(), float(state.q2s).hex(),
                      float(state.a_s.real).hex(),
                      float(state.a_s.imag).hex(),
                      float(state.delta_eff).hex(), state.branch])
    return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]
