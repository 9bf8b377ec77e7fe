"""Double-window optomechanically induced transparency simulator.

A driven optical cavity whose movable end mirror is Coulomb-coupled to a
second charged nanoresonator splits the usual single transparency window
of the probe response into two. This package computes the steady states,
the complex probe-response spectra, the zero-absorption transparency
points with their slow/fast-light dispersion slopes, and independently
cross-checks the analytic response against a time-domain integration of
the full mean-value dynamics.
"""

__version__ = "0.1.0"

from .errors import (AmbiguousBranch, BudgetExceeded, ConfigError,
                     CoulombOverstrong, Divergence, InsufficientSpan,
                     InvalidParams, NoConvergence, NonPositiveParameter,
                     NoTransparencyWindow, OmitsimError, PolePassage,
                     ShapeMismatch, SingularA, SingularDenominator,
                     StepFailure, StepTooLarge)
from .model import (HBAR, C_LIGHT, DetuningMode, ModelParams, RawConfig,
                    ValidationReport, build_params, config_from_dict,
                    config_to_dict, critical_coulomb_lambda, load_config,
                    params_fingerprint, raw_config, rebuild, validate)
from .steady_state import (SteadyState, default_branch, resolve_steady_state,
                           solve_direct, solve_selfconsistent,
                           steady_residual)
from .response import (DeltaGrid, ResponsePoint, Spectrum, a_plus,
                       backaction_factor, eps_out_plus, eps_r,
                       mechanical_denominator, response_denominator,
                       spectrum, write_spectrum_csv)
from .group_index import (GroupMetricPoint, TransparencyPoint,
                          TransparencyReport, dispersion_slope,
                          find_transparency_points, group_metric_sweep,
                          write_group_metric_csv)
from .oracle import (DemodResult, Trajectory, TrajectoryMeta,
                     ValidationTable, cross_validate, demodulate,
                     integrate_mean_dynamics, write_trajectory_csv)
from .sweep import (DiffReport, RunRecord, SweepAxis, SweepPlan,
                    diff_records, execute, plan_from_dict, plan_to_dict,
                    write_run)
