import dataclasses
import math

import numpy as np
import pytest

from omitsim import (HBAR, DeltaGrid, InvalidParams, PolePassage,
                     a_plus, backaction_factor, eps_out_plus, eps_r,
                     mechanical_denominator, rebuild, response_denominator,
                     solve_direct, spectrum, write_spectrum_csv)
from omitsim.response import SPECTRUM_CSV_COLUMNS

from conftest import paper_raw_config


def bare(paper_params):
    """Cavity decoupled from the mechanics."""
    return dataclasses.replace(paper_params, g=0.0)


# --------------------------------------------------------------------------
# mechanical denominator


def test_mech_denominator_static_uncoupled(paper_params):
    p0 = dataclasses.replace(paper_params, coulomb_lambda=0.0)
    assert mechanical_denominator(p0, 0.0) == p0.m1 * p0.omega1 ** 2


def test_mech_denominator_purely_imaginary_on_resonance(paper_params):
    # at delta = omega1 = omega2 both real parts cancel identically,
    # leaving -i*(m1*w1*g1 + (hbar*lambda)^2/(m2*w2*g2))
    p = paper_params
    a = mechanical_denominator(p, p.omega1)
    expected_im = -(p.m1 * p.omega1 * p.gamma1
                    + (HBAR * p.coulomb_lambda) ** 2
                    / (p.m2 * p.omega2 * p.gamma2))
    scale = abs(expected_im)
    assert abs(a.real) < 1e-12 * scale
    assert a.imag == pytest.approx(expected_im, rel=1e-12)


def test_mech_denominator_dual_path(paper_params):
    # independent re-implementation with a different evaluation order:
    # fully expanded first term, manual complex quotient for the second
    p = paper_params
    delta = 1.001 * p.omega1
    t1 = complex(p.m1 * p.omega1 ** 2 - p.m1 * delta ** 2,
                 -p.m1 * delta * p.gamma1)
    dre = p.m2 * (p.omega2 ** 2 - delta ** 2)
    dim = -p.m2 * delta * p.gamma2
    mag2 = dre * dre + dim * dim
    hl2 = (HBAR * p.coulomb_lambda) ** 2
    t2 = complex(hl2 * dre / mag2, -hl2 * dim / mag2)
    alt = t1 - t2

    lib = mechanical_denominator(p, delta)
    assert lib == pytest.approx(alt, rel=1e-12)
    # frozen from the first verified run
    assert lib == pytest.approx(678.7655043199338 - 52.21342688489031j,
                                rel=1e-13)


def test_mech_denominator_pole_passage(paper_params):
    p = dataclasses.replace(paper_params, gamma2=0.0)
    with pytest.raises(PolePassage):
        mechanical_denominator(p, p.omega2)
    # any damping removes the pole
    mechanical_denominator(paper_params, paper_params.omega2)


# --------------------------------------------------------------------------
# back-action factor


def test_backaction_unity_when_dark_or_decoupled(paper_params, paper_state):
    dark = dataclasses.replace(paper_state, n_cav=0.0)
    assert backaction_factor(paper_params, dark, paper_params.omega1) == 1.0
    s0 = solve_direct(bare(paper_params), paper_params.omega1)
    assert backaction_factor(bare(paper_params), s0,
                             paper_params.omega1) == 1.0


def test_backaction_paper_fixture(paper_params, paper_state):
    p, s = paper_params, paper_state
    b = backaction_factor(p, s, p.omega1)
    assert abs(b - 1.0) > 1e-3
    # independent order: real/imag split of the quotient
    # i*coupling/den = coupling*(den.imag + i*den.real)/|den|^2
    a = mechanical_denominator(p, p.omega1)
    den = a * complex(p.kappa, -(s.delta_eff + p.omega1))
    coupling = HBAR * p.g ** 2 * s.n_cav
    alt = 1.0 + complex(coupling * den.imag / abs(den) ** 2,
                        coupling * den.real / abs(den) ** 2)
    assert b == pytest.approx(alt, rel=1e-12)
    assert b == pytest.approx(
        0.9995832332878333 - 0.003671423966715284j, rel=1e-13)


# --------------------------------------------------------------------------
# sideband amplitude and reflected field


def test_bare_cavity_lorentzian(paper_params):
    p0 = bare(paper_params)
    delta_eff = p0.omega1
    s0 = solve_direct(p0, delta_eff)
    for delta in (0.3 * p0.omega1, p0.omega1, 2.1 * p0.omega1):
        expected = 1.0 / (p0.kappa + 1j * (delta_eff - delta))
        assert a_plus(p0, s0, delta) == expected
    assert a_plus(p0, s0, delta_eff) == pytest.approx(1.0 / p0.kappa,
                                                      rel=1e-15)
    # full reflection quadrature on resonance, decay off resonance
    assert eps_r(p0, s0, delta_eff) == pytest.approx(2.0, abs=1e-14)
    assert eps_out_plus(p0, s0, delta_eff) == pytest.approx(1.0, abs=1e-14)
    assert abs(eps_r(p0, s0, delta_eff + 300 * p0.kappa)) < 0.01


def test_undriven_gives_bare_lorentzian_everywhere(paper_params):
    p = dataclasses.replace(paper_params, eps_l=0.0)
    s = solve_direct(p, p.omega1)
    deltas = DeltaGrid(0.9, 1.1, 101).to_array(p)
    ap = a_plus(p, s, deltas)
    assert np.array_equal(ap, 1.0 / (p.kappa + 1j * (p.omega1 - deltas)))


def single_mode_reference(p, s, delta):
    """Independently coded single-resonator transparency response."""
    a0 = p.m1 * (p.omega1 ** 2 - delta ** 2 - 1j * delta * p.gamma1)
    beta = HBAR * p.g ** 2 * s.n_cav
    b0 = 1.0 + 1j * beta / (a0 * (p.kappa - 1j * (s.delta_eff + delta)))
    return 1.0 / (p.kappa + 1j * (s.delta_eff - delta)
                  - 1j * beta / (a0 * b0))


def test_coupling_off_reduces_to_single_mode(paper_params):
    p0 = dataclasses.replace(paper_params, coulomb_lambda=0.0,
                             spring_denom=paper_params.m1
                             * paper_params.omega1 ** 2)
    s = solve_direct(p0, p0.omega1)
    for delta in np.linspace(0.9, 1.1, 41) * p0.omega1:
        ref = single_mode_reference(p0, s, delta)
        assert a_plus(p0, s, delta) == pytest.approx(ref, rel=1e-12)


def test_coupling_continuity_toward_zero(paper_params):
    # pointwise approach to the single-mode response as lambda -> 0
    s = solve_direct(paper_params, paper_params.omega1)
    delta = 1.003 * paper_params.omega1
    ref = single_mode_reference(paper_params, s, delta)
    gap_prev = None
    for lam in (1e34, 1e33, 1e32):
        p = rebuild(paper_params, coulomb_lambda=lam)
        sl = solve_direct(p, p.omega1)
        gap = abs(a_plus(p, sl, delta) - single_mode_reference(p, sl, delta))
        if gap_prev is not None:
            assert gap < gap_prev
        gap_prev = gap
    assert gap / abs(ref) < 1e-6


def test_reflected_field_is_2kappa_a_plus(paper_params, paper_state):
    p, s = paper_params, paper_state
    for delta in (0.95 * p.omega1, p.omega1, 1.05 * p.omega1):
        assert eps_r(p, s, delta) == 2.0 * p.kappa * a_plus(p, s, delta)


def test_denominator_identity(paper_params, paper_state):
    # eps_R * denominator == 2*kappa exactly, across the grid and across
    # random parameter draws
    p, s = paper_params, paper_state
    deltas = DeltaGrid(0.9, 1.1, 201).to_array(p)
    product = eps_r(p, s, deltas) * response_denominator(p, s, deltas)
    assert np.allclose(product, 2.0 * p.kappa, rtol=1e-12, atol=0.0)

    rng = np.random.default_rng(7)
    for _ in range(5):
        pr = rebuild(paper_params,
                     pump_power=float(rng.uniform(0.2e-3, 8e-3)),
                     coulomb_lambda=float(rng.uniform(0.0, 2e36)))
        sr = solve_direct(pr, float(rng.uniform(-1.5, 1.5)) * pr.omega1)
        d = float(rng.uniform(0.8, 1.2)) * pr.omega1
        assert eps_r(pr, sr, d) * response_denominator(pr, sr, d) == \
            pytest.approx(2.0 * pr.kappa, rel=1e-12)


def test_paper_fixture_values(paper_params, paper_state):
    ap = a_plus(paper_params, paper_state, paper_params.omega1)
    assert ap == pytest.approx(
        7.16765230963801e-07 - 8.354097816368296e-11j, rel=1e-13)


# --------------------------------------------------------------------------
# spectra


def test_spectrum_double_window(paper_params, paper_state):
    sp = spectrum(paper_params, paper_state, DeltaGrid(0.9, 1.1, 4001))
    absn = sp.absorption
    mins = [i for i in range(1, len(absn) - 1)
            if absn[i] < absn[i - 1] and absn[i] < absn[i + 1]
            and absn[i] < 0.05]
    assert len(mins) == 2
    assert not sp.errors


def test_spectrum_single_window_coupling_off(paper_params):
    p0 = rebuild(paper_params, coulomb_lambda=0.0)
    s0 = solve_direct(p0, p0.omega1)
    sp = spectrum(p0, s0, DeltaGrid(0.9, 1.1, 4001))
    absn = sp.absorption
    mins = [i for i in range(1, len(absn) - 1)
            if absn[i] < absn[i - 1] and absn[i] < absn[i + 1]
            and absn[i] < 0.05]
    assert len(mins) == 1


def _minima_gap(p):
    s = solve_direct(p, p.omega1)
    sp = spectrum(p, s, DeltaGrid(0.9, 1.1, 4001))
    absn = sp.absorption
    mins = [sp.delta[i] for i in range(1, len(absn) - 1)
            if absn[i] < absn[i - 1] and absn[i] < absn[i + 1]
            and absn[i] < 0.05]
    assert len(mins) == 2
    return mins[1] - mins[0]


def test_spectrum_gap_grows_with_coupling(paper_params):
    gap1 = _minima_gap(paper_params)
    gap2 = _minima_gap(rebuild(paper_params, coulomb_lambda=2 * 8e35))
    assert gap2 > gap1


def test_spectrum_passivity_bounds(paper_params):
    # empirical bound on the reflection quadrature over the figure grid
    for detuning in (paper_params.omega1, -paper_params.omega1):
        s = solve_direct(paper_params, detuning)
        sp = spectrum(paper_params, s, DeltaGrid(0.9, 1.1, 4001))
        assert sp.absorption.min() >= -0.05
        assert sp.absorption.max() <= 2.05


def test_spectrum_per_point_error_capture(paper_params):
    # undamped second mode puts a true pole at delta = omega2; the sweep
    # must record it and keep going
    p = dataclasses.replace(paper_params, gamma2=0.0)
    s = solve_direct(p, p.omega1)
    deltas = np.array([0.999 * p.omega2, p.omega2, 1.001 * p.omega2])
    sp = spectrum(p, s, deltas)
    assert len(sp.errors) == 1
    assert sp.errors[0].index == 1
    assert np.isnan(sp.eps_r[1])
    assert np.isfinite(sp.eps_r[0]) and np.isfinite(sp.eps_r[2])


def test_spectrum_grid_validation(paper_params, paper_state):
    with pytest.raises(InvalidParams):
        spectrum(paper_params, paper_state,
                 np.array([1.0, 2.0, 2.0]) * paper_params.omega1)
    with pytest.raises(InvalidParams):
        DeltaGrid(1.1, 0.9, 100)
    with pytest.raises(InvalidParams):
        DeltaGrid(0.9, 1.1, 1)


def test_spectrum_point_view(paper_params, paper_state):
    sp = spectrum(paper_params, paper_state, DeltaGrid(0.95, 1.05, 11))
    pt = sp.point(5)
    assert pt.eps_R == 2.0 * paper_params.kappa * pt.a_plus
    assert pt.absorption == pt.eps_R.real
    assert pt.dispersion == pt.eps_R.imag


def test_spectrum_csv_format(tmp_path, paper_params, paper_state):
    sp = spectrum(paper_params, paper_state, DeltaGrid(0.99, 1.01, 21))
    path1 = tmp_path / "a.csv"
    path2 = tmp_path / "b.csv"
    write_spectrum_csv(sp, paper_params, path1)
    write_spectrum_csv(sp, paper_params, path2)
    header = path1.read_text().splitlines()[0]
    assert header == ",".join(SPECTRUM_CSV_COLUMNS)
    assert header == ("delta_rad_s,delta_over_omega1_minus_1,"
                      "re_eps_R,im_eps_R,re_a_plus,im_a_plus")
    assert path1.read_bytes() == path2.read_bytes()
    # round-trip-exact floats
    row = path1.read_text().splitlines()[1].split(",")
    assert float(row[0]) == sp.delta[0]
    assert float(row[2]) == sp.eps_r[0].real
