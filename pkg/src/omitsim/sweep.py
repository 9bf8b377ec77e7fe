"""Multi-axis parameter scans with reproducible, diffable run records.

A sweep plan is a base config plus up to three declared axes (pump power,
Coulomb coupling, detuning). Execution order is row-major over the axes
as declared, results are merged by point index, and every per-point
failure is captured inline so pathological corners never abort a run.
Replaying an identical plan yields identical numerical content.
"""

import hashlib
import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import group_index, response
from .errors import BudgetExceeded, ConfigError, ShapeMismatch
from .model import (RawConfig, build_params, config_from_dict,
                    config_to_dict)
from .response import DeltaGrid
from .steady_state import resolve_steady_state

AXIS_NAMES = ("pump_power", "coulomb_lambda", "detuning_value")
OUTPUT_NAMES = ("spectrum", "transparency", "group_metric")
DEFAULT_BUDGET = 100_000


@dataclass(frozen=True)
class SweepAxis:
    name: str
    start: float
    stop: float
    count: int
    scale: str = "linear"

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise ConfigError(f"axis name must be one of {AXIS_NAMES}, "
                              f"got {self.name!r}")
        if self.count < 1:
            raise ConfigError("axis count must be >= 1")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"axis scale must be linear or log, got "
                              f"{self.scale!r}")
        if self.scale == "log" and (self.start <= 0 or self.stop <= 0):
            raise ConfigError("log axes need positive endpoints")

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([float(self.start)])
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class SweepPlan:
    base: RawConfig
    axes: tuple
    outputs: tuple = ()
    spectrum_grid: DeltaGrid = field(
        default_factory=lambda: DeltaGrid(0.9, 1.1, 4001))
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if not self.axes:
            raise ConfigError("plan needs at least one axis")
        if len(self.axes) > 3:
            raise ConfigError("at most three axes")
        names = [ax.name for ax in self.axes]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate axis names: {names}")
        for out in self.outputs:
            if out not in OUTPUT_NAMES:
                raise ConfigError(f"output must be one of {OUTPUT_NAMES}, "
                                  f"got {out!r}")

    @property
    def n_points(self) -> int:
        n = 1
        for ax in self.axes:
            n *= ax.count
        return n


def plan_to_dict(plan: SweepPlan) -> dict:
    return {
        "base": config_to_dict(plan.base),
        "axes": [{"name": ax.name, "start": ax.start, "stop": ax.stop,
                  "count": ax.count, "scale": ax.scale}
                 for ax in plan.axes],
        "outputs": list(plan.outputs),
        "spectrum_grid": {"start": plan.spectrum_grid.start,
                          "stop": plan.spectrum_grid.stop,
                          "count": plan.spectrum_grid.count},
        "budget": plan.budget,
    }


def plan_from_dict(doc: dict) -> SweepPlan:
    known = {"base", "axes", "outputs", "spectrum_grid", "budget"}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown plan keys: {unknown}")
    if "base" not in doc or "axes" not in doc:
        raise ConfigError("plan needs 'base' and 'axes'")
    axes = []
    for ad in doc["axes"]:
        extra = sorted(set(ad) - {"name", "start", "stop", "count", "scale"})
        if extra:
            raise ConfigError(f"unknown axis keys: {extra}")
        axes.append(SweepAxis(ad["name"], float(ad["start"]),
                              float(ad["stop"]), int(ad["count"]),
                              ad.get("scale", "linear")))
    grid_doc = doc.get("spectrum_grid", {})
    grid = DeltaGrid(float(grid_doc.get("start", 0.9)),
                     float(grid_doc.get("stop", 1.1)),
                     int(grid_doc.get("count", 4001)))
    return SweepPlan(base=config_from_dict(doc["base"]), axes=tuple(axes),
                     outputs=tuple(doc.get("outputs", [])),
                     spectrum_grid=grid,
                     budget=int(doc.get("budget", DEFAULT_BUDGET)))


def plan_hash(plan: SweepPlan) -> str:
    blob = json.dumps(plan_to_dict(plan), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class PointRecord:
    index: int
    overrides: dict
    steady: dict | None
    outputs: dict
    error: str | None = None

    def to_dict(self):
        return {"index": self.index, "overrides": self.overrides,
                "steady": self.steady, "outputs": self.outputs,
                "error": self.error}


@dataclass(eq=False)
class RunRecord:
    plan_hash: str
    code_version: str
    points: tuple
    wall_time_s: float
    spectra: dict = field(default_factory=dict, repr=False)

    def to_dict(self, include_wall_time=True):
        out = {
            "plan_hash": self.plan_hash,
            "code_version": self.code_version,
            "points": [pt.to_dict() for pt in self.points],
        }
        if include_wall_time:
            out["wall_time_s"] = self.wall_time_s
        return out


def _spectrum_digest(sp) -> str:
    rows = []
    for i in range(len(sp.delta)):
        rows.append(",".join([
            format(sp.delta[i], ".17g"),
            format(sp.eps_r[i].real, ".17g"),
            format(sp.eps_r[i].imag, ".17g"),
            format(sp.a_plus[i].real, ".17g"),
            format(sp.a_plus[i].imag, ".17g")]))
    return hashlib.sha256("\n".join(rows).encode()).hexdigest()[:16]


def _grid_minima(sp, threshold):
    absn = sp.absorption
    idx = np.flatnonzero((absn[1:-1] < absn[:-2])
                         & (absn[1:-1] < absn[2:])) + 1
    idx = [int(i) for i in idx if absn[i] < threshold]
    return [{"delta_rad_s": float(sp.delta[i]),
             "absorption": float(absn[i])} for i in idx]


def _transparency_dict(report):
    pts = report.points
    lo, hi = pts[0], pts[-1]
    if all(pt.slope < 0.0 for pt in pts):
        regime = group_index.REGIME_FAST
    elif all(pt.slope > 0.0 for pt in pts):
        regime = group_index.REGIME_SLOW
    else:
        regime = "mixed"
    return {
        "n_points": len(pts),
        "omega_minus_rad_s": lo.delta,
        "omega_plus_rad_s": hi.delta,
        "absorption_minus": lo.absorption,
        "absorption_plus": hi.absorption,
        "slope_minus_s": lo.slope,
        "slope_plus_s": hi.slope,
        "regime": regime,
    }


def _eval_point(plan: SweepPlan, index: int, overrides: dict):
    spectrum_obj = None
    try:
        cfg = replace(plan.base, **overrides)
        p = build_params(cfg)
        s = resolve_steady_state(p)
    except Exception as exc:
        return PointRecord(index, overrides, None, {},
                           f"{type(exc).__name__}: {exc}"), None

    steady = {"q1s": s.q1s, "q2s": s.q2s, "n_cav": s.n_cav,
              "delta_eff": s.delta_eff, "branch": s.branch,
              "stable": s.stable}
    outputs = {}
    error = None
    for out in plan.outputs:
        try:
            if out == "spectrum":
                sp = response.spectrum(p, s, plan.spectrum_grid)
                spectrum_obj = sp
                outputs["spectrum"] = {
                    "n_grid": len(sp.delta),
                    "n_point_errors": len(sp.errors),
                    "sha256": _spectrum_digest(sp),
                    "minima": _grid_minima(
                        sp, group_index.ABSORPTION_THRESHOLD),
                }
            elif out == "transparency":
                report = group_index.find_transparency_points(p, s)
                outputs["transparency"] = _transparency_dict(report)
            elif out == "group_metric":
                report = group_index.find_transparency_points(p, s)
                d = _transparency_dict(report)
                outputs["group_metric"] = {
                    "power_W": p.pump_power,
                    "omega_minus_rad_s": d["omega_minus_rad_s"],
                    "omega_plus_rad_s": d["omega_plus_rad_s"],
                    "metric_minus_s": d["slope_minus_s"],
                    "metric_plus_s": d["slope_plus_s"],
                    "regime": d["regime"],
                }
        except Exception as exc:
            outputs[out] = None
            error = f"{out}: {type(exc).__name__}: {exc}"
    return PointRecord(index, overrides, steady, outputs, error), spectrum_obj


def execute(plan: SweepPlan, workers: int = 1) -> RunRecord:
    """Run every grid point of a plan; pure function of (plan, code).

    Points evaluate independently (optionally in threads) and merge in
    row-major declaration order, so parallel and serial runs produce
    identical records.
    """
    if plan.n_points > plan.budget:
        raise BudgetExceeded(f"{plan.n_points} points exceed the budget "
                             f"of {plan.budget}")
    from . import __version__

    t0 = time.perf_counter()
    axis_values = [ax.values() for ax in plan.axes]
    names = [ax.name for ax in plan.axes]
    tasks = []
    for index, combo in enumerate(itertools.product(*axis_values)):
        tasks.append((index, {n: float(v) for n, v in zip(names, combo)}))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda t: _eval_point(plan, t[0], t[1]), tasks))
    else:
        results = [_eval_point(plan, i, ov) for i, ov in tasks]

    points = []
    spectra = {}
    for rec, sp in results:
        points.append(rec)
        if sp is not None:
            spectra[rec.index] = sp
    points.sort(key=lambda r: r.index)
    return RunRecord(plan_hash=plan_hash(plan), code_version=__version__,
                     points=tuple(points),
                     wall_time_s=time.perf_counter() - t0,
                     spectra=spectra)


# ---------------------------------------------------------------------------
# persistence

def write_run(plan: SweepPlan, record: RunRecord, outdir):
    """Persist plan.json, record.json and one CSV per requested output."""
    import csv
    import os

    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "plan.json"), "w") as fh:
        json.dump(plan_to_dict(plan), fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(os.path.join(outdir, "record.json"), "w") as fh:
        json.dump(record.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")

    axis_names = [ax.name for ax in plan.axes]

    if "spectrum" in plan.outputs:
        path = os.path.join(outdir, "spectrum.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("point_index",) + response.SPECTRUM_CSV_COLUMNS)
            for rec in record.points:
                sp = record.spectra.get(rec.index)
                if sp is None:
                    continue
                p = build_params(replace(plan.base, **rec.overrides))
                for i in range(len(sp.delta)):
                    writer.writerow([
                        rec.index,
                        format(sp.delta[i], ".17g"),
                        format(sp.delta[i] / p.omega1 - 1.0, ".17g"),
                        format(sp.eps_r[i].real, ".17g"),
                        format(sp.eps_r[i].imag, ".17g"),
                        format(sp.a_plus[i].real, ".17g"),
                        format(sp.a_plus[i].imag, ".17g")])

    for out, csv_name in (("transparency", "transparency.csv"),
                          ("group_metric", "group_metric.csv")):
        if out not in plan.outputs:
            continue
        path = os.path.join(outdir, csv_name)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if out == "transparency":
                cols = ("point_index", *axis_names, "omega_minus_rad_s",
                        "omega_plus_rad_s", "absorption_minus",
                        "absorption_plus", "slope_minus_s", "slope_plus_s",
                        "regime")
            else:
                cols = ("point_index", *axis_names,
                        *group_index.GROUP_METRIC_CSV_COLUMNS)
            writer.writerow(cols)
            for rec in record.points:
                data = rec.outputs.get(out)
                row = [rec.index] + [format(rec.overrides[n], ".17g")
                                     for n in axis_names]
                if data is None:
                    writer.writerow(row + ["error"] * (len(cols) - len(row)))
                    continue
                if out == "transparency":
                    row += [format(data[k], ".17g") for k in
                            ("omega_minus_rad_s", "omega_plus_rad_s",
                             "absorption_minus", "absorption_plus",
                             "slope_minus_s", "slope_plus_s")]
                else:
                    row += [format(data[k], ".17g") for k in
                            ("power_W", "omega_minus_rad_s",
                             "omega_plus_rad_s", "metric_minus_s",
                             "metric_plus_s")]
                row.append(data["regime"])
                writer.writerow(row)


# ---------------------------------------------------------------------------
# record diffing

@dataclass(frozen=True)
class DiffEntry:
    path: str
    a: object
    b: object


@dataclass(frozen=True)
class DiffReport:
    entries: tuple

    @property
    def empty(self) -> bool:
        return not self.entries

    def paths(self):
        return [e.path for e in self.entries]


def _walk_diff(a, b, path, out, rtol, atol):
    if isinstance(a, dict) and isinstance(b, dict):
        if set(a) != set(b):
            raise ShapeMismatch(f"{path or '<root>'}: key sets differ "
                                f"({sorted(a)} vs {sorted(b)})")
        for key in sorted(a):
            _walk_diff(a[key], b[key], f"{path}.{key}" if path else key,
                       out, rtol, atol)
        return
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        if len(a) != len(b):
            raise ShapeMismatch(f"{path}: lengths differ "
                                f"({len(a)} vs {len(b)})")
        for i, (x, y) in enumerate(zip(a, b)):
            _walk_diff(x, y, f"{path}[{i}]", out, rtol, atol)
        return
    num = (int, float)
    if isinstance(a, num) and isinstance(b, num) \
            and not isinstance(a, bool) and not isinstance(b, bool):
        fa, fb = float(a), float(b)
        if math.isnan(fa) and math.isnan(fb):
            return
        if not math.isclose(fa, fb, rel_tol=rtol, abs_tol=atol):
            out.append(DiffEntry(path, a, b))
        return
    if type(a) is not type(b):
        raise ShapeMismatch(f"{path}: type mismatch "
                            f"({type(a).__name__} vs {type(b).__name__})")
    if a != b:
        out.append(DiffEntry(path, a, b))


def diff_records(a: RunRecord, b: RunRecord, rtol: float = 0.0,
                 atol: float = 0.0) -> DiffReport:
    """Fieldwise numeric diff of two run records.

    Wall time is excluded (it is not numerical content). Raises
    ShapeMismatch when the records are not structurally comparable.
    """
    da = a.to_dict(include_wall_time=False) if isinstance(a, RunRecord) else a
    db = b.to_dict(include_wall_time=False) if isinstance(b, RunRecord) else b
    da = {k: v for k, v in da.items() if k != "wall_time_s"}
    db = {k: v for k, v in db.items() if k != "wall_time_s"}
    out = []
    _walk_diff(da, db, "", out, rtol, atol)
    return DiffReport(tuple(out))
