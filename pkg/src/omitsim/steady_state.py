"""Steady-state mean values of the driven, Coulomb-coupled cavity.

Two solve modes exist because the effective detuning is implicit: the
static radiation-pressure displacement shifts the detuning that produced
it. ``solve_direct`` treats the effective detuning as the prescribed knob
(the way the reference spectra are parameterized); ``solve_selfconsistent``
starts from the bare detuning and exposes the full one-or-three-solution
bistability structure.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousBranch, InvalidParams, NoConvergence
from .model import HBAR, DetuningMode, ModelParams

BRANCH_LOW = "low_power"
BRANCH_MIDDLE = "middle"
BRANCH_HIGH = "high_power"

# static (slope-test) stability only; no dynamical Routh-Hurwitz analysis
STABILITY_BASIS = "static_slope_test"


@dataclass(frozen=True)
class SteadyState:
    """DC mean values: mirror/resonator displacements and cavity field.

    q1s, q2s    static displacements (m); q2s = -hbar*lambda*q1s/(m2*omega2^2)
    p1s, p2s    static momenta, exactly zero
    a_s         complex intracavity amplitude
    n_cav       |a_s|^2
    delta_eff   effective pump-cavity detuning (rad/s)
    branch      low_power / middle / high_power
    stable      static slope-test stability (see stability_basis)
    """

    q1s: float
    q2s: float
    p1s: float
    p2s: float
    a_s: complex
    n_cav: float
    delta_eff: float
    branch: str
    stable: bool
    stability_basis: str = STABILITY_BASIS


def _check_params(p: ModelParams):
    if p.spring_denom <= 0.0:
        raise InvalidParams("spring_denom <= 0: no stable static equilibrium")
    if p.kappa <= 0.0:
        raise InvalidParams("kappa must be strictly positive")


def _state_from_ncav(p: ModelParams, n_cav, delta_eff, branch, stable):
    q1s = HBAR * p.g * n_cav / p.spring_denom
    q2s = -HBAR * p.coulomb_lambda * q1s / (p.m2 * p.omega2 ** 2)
    a_s = p.eps_l / (1j * delta_eff + p.kappa)
    return SteadyState(q1s=q1s, q2s=q2s, p1s=0.0, p2s=0.0, a_s=a_s,
                       n_cav=n_cav, delta_eff=delta_eff, branch=branch,
                       stable=stable)


def solve_direct(p: ModelParams, Delta: float) -> SteadyState:
    """Steady state with the effective detuning prescribed directly.

    No root finding is involved: a_s = eps_l/(i*Delta + kappa) and the
    displacements follow from the static force balance.
    """
    _check_params(p)
    n_cav = p.eps_l ** 2 / (Delta ** 2 + p.kappa ** 2)
    return _state_from_ncav(p, n_cav, Delta, BRANCH_LOW, True)


def _cubic_residual(p, Delta_a, x):
    c = HBAR * p.g ** 2 / p.spring_denom
    return x * ((Delta_a - c * x) ** 2 + p.kappa ** 2) - p.eps_l ** 2


def _cubic_slope(p, Delta_a, x):
    c = HBAR * p.g ** 2 / p.spring_denom
    d = Delta_a - c * x
    return d ** 2 + p.kappa ** 2 - 2.0 * c * x * d


def solve_selfconsistent(p: ModelParams, Delta_a: float) -> list:
    """All real steady states for a prescribed bare detuning.

    Solves x*((Delta_a - c*x)^2 + kappa^2) = eps_l^2 in x = n_cav >= 0 with
    c = hbar*g^2/spring_denom (a cubic; one or three admissible roots).
    Roots come from the companion matrix, then one Newton polish each to a
    relative residual below 1e-12. Branches are labeled by ascending x and
    stability is the sign of the residual slope.
    """
    _check_params(p)
    c = HBAR * p.g ** 2 / p.spring_denom
    e2 = p.eps_l ** 2

    if e2 == 0.0:
        return [_state_from_ncav(p, 0.0, Delta_a, BRANCH_LOW, True)]

    if c == 0.0:
        # decoupled cavity: the equation is linear in x
        x = e2 / (Delta_a ** 2 + p.kappa ** 2)
        return [_state_from_ncav(p, x, Delta_a, BRANCH_LOW, True)]

    # c^2 x^3 - 2 Delta_a c x^2 + (Delta_a^2 + kappa^2) x - eps_l^2 = 0
    coeffs = np.array([c * c, -2.0 * Delta_a * c,
                       Delta_a ** 2 + p.kappa ** 2, -e2])
    roots = np.roots(coeffs)

    real_roots = []
    scale = max(abs(r) for r in roots)
    for r in roots:
        if abs(r.imag) <= 1e-8 * scale and r.real > 0.0:
            real_roots.append(float(r.real))

    polished = []
    for x in sorted(real_roots):
        for _ in range(50):
            f = _cubic_residual(p, Delta_a, x)
            fp = _cubic_slope(p, Delta_a, x)
            if fp == 0.0:
                break
            step = f / fp
            x_new = x - step
            if x_new <= 0.0:
                x_new = 0.5 * x
            if abs(x_new - x) <= 1e-15 * abs(x_new):
                x = x_new
                break
            x = x_new
        if abs(_cubic_residual(p, Delta_a, x)) > 1e-12 * e2:
            raise NoConvergence(
                f"root polish stalled at x={x!r} for Delta_a={Delta_a!r}")
        polished.append(x)

    # drop near-degenerate duplicates the companion matrix may split
    unique = []
    for x in polished:
        if not unique or abs(x - unique[-1]) > 1e-9 * abs(x):
            unique.append(x)

    labels = {1: [BRANCH_LOW], 3: [BRANCH_LOW, BRANCH_MIDDLE, BRANCH_HIGH]}
    if len(unique) == 2:
        # tangency corner: treat as low + high
        names = [BRANCH_LOW, BRANCH_HIGH]
    else:
        names = labels.get(len(unique))
        if names is None:
            raise NoConvergence(
                f"expected 1-3 admissible roots, found {len(unique)}")

    states = []
    for x, name in zip(unique, names):
        stable = _cubic_slope(p, Delta_a, x) > 0.0
        delta_eff = Delta_a - c * x
        states.append(_state_from_ncav(p, x, delta_eff, name, stable))
    return states


def default_branch(states) -> SteadyState:
    """Branch continuously connected to the low-power solution."""
    return states[0]


def resolve_steady_state(p: ModelParams, branch: str | None = None
                         ) -> SteadyState:
    """Steady state implied by the params' own detuning declaration.

    Effective-detuning configs use the direct solver; bare-detuning configs
    use the self-consistent one. Multi-stable bare configs require an
    explicit branch name.
    """
    if p.detuning_mode is DetuningMode.EFFECTIVE_DELTA:
        return solve_direct(p, p.detuning_value)
    states = solve_selfconsistent(p, p.detuning_value)
    if branch is None:
        if len(states) > 1:
            raise AmbiguousBranch(
                f"{len(states)} steady-state branches at "
                f"Delta_a={p.detuning_value!r}; pass branch= one of "
                f"{[s.branch for s in states]}")
        return states[0]
    for s in states:
        if s.branch == branch:
            return s
    raise AmbiguousBranch(
        f"no branch {branch!r}; available: {[s.branch for s in states]}")


def steady_residual(p: ModelParams, s: SteadyState) -> float:
    """Max normalized residual of the five mean-value equations of motion
    evaluated at a candidate steady state with the probe off.

    Each equation's residual is scaled by its dominant term magnitude, so a
    valid state returns < 1e-10 regardless of units. An all-zero undriven
    state returns exactly 0.
    """
    lam = p.coulomb_lambda
    terms1 = (-p.m1 * p.omega1 ** 2 * s.q1s,
              -HBAR * lam * s.q2s,
              HBAR * p.g * abs(s.a_s) ** 2,
              -p.gamma1 * s.p1s)
    terms2 = (-p.m2 * p.omega2 ** 2 * s.q2s,
              -HBAR * lam * s.q1s,
              -p.gamma2 * s.p2s)
    # the bare detuning consistent with this state's effective detuning
    delta_a = s.delta_eff + p.g * s.q1s
    cav = -(p.kappa + 1j * (delta_a - p.g * s.q1s)) * s.a_s + p.eps_l

    def _norm(value, scales):
        scale = max(scales)
        return abs(value) / scale if scale > 0.0 else 0.0

    r_q1 = _norm(s.p1s / p.m1, (abs(s.p1s / p.m1), p.omega1 * abs(s.q1s)))
    r_p1 = _norm(sum(terms1), tuple(abs(t) for t in terms1))
    r_q2 = _norm(s.p2s / p.m2, (abs(s.p2s / p.m2), p.omega2 * abs(s.q2s)))
    r_p2 = _norm(sum(terms2), tuple(abs(t) for t in terms2))
    r_a = _norm(cav, (abs((p.kappa + 1j * s.delta_eff) * s.a_s), p.eps_l))
    return max(r_q1, r_p1, r_q2, r_p2, r_a)
