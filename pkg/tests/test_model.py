import dataclasses
import math

import pytest

from omitsim import (HBAR, C_LIGHT, ConfigError, CoulombOverstrong,
                     DetuningMode, NonPositiveParameter, build_params,
                     config_from_dict, config_to_dict,
                     critical_coulomb_lambda, validate)

from conftest import PAPER_DOC, paper_raw_config


def test_optical_frequency_and_coupling_from_geometry(paper_params):
    # g follows from the cavity geometry alone: 2*pi*c/(wavelength*length)
    lam_l, d = 1.064e-6, 0.025
    omega_a = 2 * math.pi * C_LIGHT / lam_l
    assert paper_params.omega_a == pytest.approx(omega_a, rel=1e-15)
    assert paper_params.g == pytest.approx(2 * math.pi * C_LIGHT / (lam_l * d),
                                           rel=1e-15)
    assert paper_params.g == pytest.approx(paper_params.omega_a / d,
                                           rel=1e-15)


def test_mechanical_damping_from_quality_factor(paper_params):
    assert paper_params.gamma1 == paper_params.omega1 / 6700.0
    assert paper_params.gamma2 == paper_params.omega2 / 6700.0


def test_spring_denominator_coupling_off():
    p = build_params(paper_raw_config(coulomb_lambda=0.0))
    assert p.spring_denom == p.m1 * p.omega1 ** 2


def test_spring_denominator_paper_values(paper_params):
    # direct arithmetic from the raw numbers; must be positive
    w = 2 * math.pi * 947e3
    m = 1.45e-10
    expected = m * w ** 2 - (HBAR * 8e35) ** 2 / (m * w ** 2)
    assert expected > 0.0
    assert paper_params.spring_denom == pytest.approx(expected, rel=1e-14)
    assert paper_params.spring_denom == pytest.approx(5132.280579701165,
                                                      rel=1e-13)


def test_drive_amplitude_power_scaling(paper_params):
    doubled = build_params(paper_raw_config(pump_power=4e-3))
    assert doubled.eps_l ** 2 / paper_params.eps_l ** 2 == pytest.approx(
        2.0, rel=1e-15)
    assert doubled.eps_l == pytest.approx(math.sqrt(2) * paper_params.eps_l,
                                          rel=1e-15)


def test_build_params_deterministic():
    a = build_params(paper_raw_config())
    b = build_params(paper_raw_config())
    for f in dataclasses.fields(type(a)):
        assert getattr(a, f.name) == getattr(b, f.name)


def test_nonpositive_parameters_rejected():
    with pytest.raises(NonPositiveParameter) as err:
        build_params(paper_raw_config(m1=0.0))
    assert err.value.name == "m1"
    with pytest.raises(NonPositiveParameter):
        build_params(paper_raw_config(pump_power=-1e-3))
    with pytest.raises(NonPositiveParameter):
        build_params(paper_raw_config(coulomb_lambda=-1.0))


def test_coulomb_overstrong_threshold():
    cfg = paper_raw_config()
    crit = critical_coulomb_lambda(cfg)
    # analytically, spring_denom = 0 exactly at sqrt(m1*m2)*w1*w2/hbar
    assert crit == pytest.approx(
        math.sqrt(cfg.m1 * cfg.m2) * cfg.omega1 * cfg.omega2 / HBAR,
        rel=1e-15)
    build_params(paper_raw_config(coulomb_lambda=0.999 * crit))
    with pytest.raises(CoulombOverstrong):
        build_params(paper_raw_config(coulomb_lambda=1.001 * crit))


def test_validate_paper_parameters_clean(paper_params):
    assert validate(paper_params).ok


def test_validate_reports_violations(paper_params):
    bad = dataclasses.replace(paper_params, m1=0.0)
    report = validate(bad)
    assert not report.ok
    assert "non_positive_parameter" in report.codes()
    assert any(v.field == "m1" for v in report.violations)

    over = dataclasses.replace(paper_params, spring_denom=-1.0)
    assert "coulomb_overstrong" in validate(over).codes()

    loud_probe = dataclasses.replace(paper_params,
                                     eps_s=0.5 * paper_params.eps_l)
    assert "probe_not_weak" in validate(loud_probe).codes()


# --------------------------------------------------------------------------
# config ingestion


def test_config_document_roundtrip(paper_params):
    cfg = config_from_dict(PAPER_DOC)
    p = build_params(cfg)
    assert p.omega1 == paper_params.omega1
    assert p.kappa == paper_params.kappa
    assert p.eps_l == paper_params.eps_l
    assert cfg.detuning_mode is DetuningMode.EFFECTIVE_DELTA

    flat = config_to_dict(cfg)
    assert flat["omega1"] == pytest.approx(2 * math.pi * 947e3, rel=1e-15)
    assert flat["detuning_mode"] == "effective_delta"


def test_config_units_explicit_rad_per_s():
    doc = dict(PAPER_DOC)
    doc["omega1"] = 2 * math.pi * 947e3
    doc["units"] = dict(PAPER_DOC["units"], omega1="rad_per_s")
    cfg = config_from_dict(doc)
    assert cfg.omega1 == pytest.approx(2 * math.pi * 947e3, rel=1e-15)


def test_config_rejects_unknown_keys():
    doc = dict(PAPER_DOC, extra_knob=1.0)
    with pytest.raises(ConfigError, match="unknown config keys"):
        config_from_dict(doc)


def test_config_rejects_missing_keys():
    doc = dict(PAPER_DOC)
    del doc["kappa"]
    with pytest.raises(ConfigError, match="missing config keys"):
        config_from_dict(doc)


def test_config_rejects_bad_units():
    doc = dict(PAPER_DOC)
    doc["units"] = dict(PAPER_DOC["units"], omega1="megahertz")
    with pytest.raises(ConfigError, match="units"):
        config_from_dict(doc)
    doc["units"] = dict(PAPER_DOC["units"], pump_power="rad_per_s")
    with pytest.raises(ConfigError, match="unknown entry"):
        config_from_dict(doc)


def test_config_rejects_bad_detuning_mode():
    doc = dict(PAPER_DOC, detuning_mode="sideways")
    with pytest.raises(ConfigError, match="detuning_mode"):
        config_from_dict(doc)


def test_detuning_mode_accepts_alternate_spellings():
    for spelling in ("EffectiveDelta", "effective_delta", "EFFECTIVE_DELTA"):
        doc = dict(PAPER_DOC, detuning_mode=spelling)
        assert config_from_dict(doc).detuning_mode is \
            DetuningMode.EFFECTIVE_DELTA
    doc = dict(PAPER_DOC, detuning_mode="BareDeltaA")
    assert config_from_dict(doc).detuning_mode is DetuningMode.BARE_DELTA_A
