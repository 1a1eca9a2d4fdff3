# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Derivative-free calibration of reduced-model parameters against probe series.

Compass search in parameter space scaled to [0, 1] by the bounds: poll +step
then -step along each parameter in declaration order, move to the first
improving point, otherwise shrink the step. Every trial point is clipped to
the bounds.

Assumptions:
- The objective is a sum of squared probe residuals and may run a full
  simulation per evaluation
- Evaluations are cached on the parameter vector quantized to 1e-10 in
  scaled space; cached points do not count against the budget
- With several workers a batch of polls is evaluated concurrently, but the
  accepted point is always the first improvement in poll order
"""
from __future__ import annotations

import copy
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from vdatherm.contract.loader import parse_config, set_path
from vdatherm.contract.models import CalibrationModel
from vdatherm.logging_config import get_logger
from vdatherm.materials import MaterialTable
from vdatherm.outputs import ProbeSeries
from vdatherm.solver.driver import run

logger = get_logger(__name__)

_CACHE_GRID = 1e-10

Objective = Callable[[Mapping[str, float]], float]


class CalibrationError(RuntimeError):
    """Raised when a calibration cannot start or its inputs are invalid."""


class MetricsError(ValueError):
    """Raised when two series cannot be compared."""


@dataclass(frozen=True)
class FreeParameter:
    name: str
    lower: float
    upper: float
    initial: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise CalibrationError(f"{self.name}: bounds must be finite")
        if not self.lower < self.upper:
            raise CalibrationError(f"{self.name}: lower bound must be below upper bound")
        if not self.lower <= self.initial <= self.upper:
            raise CalibrationError(f"{self.name}: initial value outside bounds")

    def to_unit(self, value: float) -> float:
        return (value - self.lower) / (self.upper - self.lower)

    def from_unit(self, u: float) -> float:
        return self.lower + u * (self.upper - self.lower)


@dataclass
class CalibrationProblem:
    parameters: Sequence[FreeParameter]
    objective: Objective
    calibration_probes: Sequence[str] = ()
    validation_probes: Sequence[str] = ()

    def __post_init__(self) -> None:
        if not self.parameters:
            raise CalibrationError("at least one free parameter is required")
        names = [p.name for p in self.parameters]
        if len(set(names)) != len(names):
            raise CalibrationError("parameter names must be unique")
        if set(self.calibration_probes) & set(self.validation_probes):
            raise CalibrationError("calibration and validation probes must be disjoint")

    def values(self, u: np.ndarray) -> dict[str, float]:
        return {p.name: p.from_unit(float(x)) for p, x in zip(self.parameters, u)}


@dataclass(frozen=True)
class TraceEntry:
    index: int
    parameters: dict[str, float]
    objective: float
    status: str


@dataclass
class CalibrationResult:
    best: dict[str, float]
    objective: float
    initial_objective: float
    evaluations: int
    step: float
    converged: bool
    trace: list[TraceEntry] = field(default_factory=list)

    def trace_frame(self) -> pd.DataFrame:
        rows = [
            {"eval": e.index, **e.parameters, "objective": e.objective, "status": e.status}
            for e in self.trace
        ]
        return pd.DataFrame(rows)


class _Evaluator:
    def __init__(self, problem: CalibrationProblem, workers: int) -> None:
        self.problem = problem
        self.workers = max(1, workers)
        self.cache: dict[tuple[int, ...], float] = {}
        self.trace: list[TraceEntry] = []

    @staticmethod
    def key(u: np.ndarray) -> tuple[int, ...]:
        return tuple(int(v) for v in np.round(u / _CACHE_GRID))

    def _call(self, u: np.ndarray) -> tuple[float, str]:
        try:
            value = float(self.problem.objective(self.problem.values(u)))
        except Exception as exc:  # noqa: BLE001 - any failure is a non-improving poll
            logger.warning("objective_failed", parameters=self.problem.values(u), error=str(exc))
            return math.inf, "failed"
        if not math.isfinite(value):
            return math.inf, "failed"
        return value, "ok"

    def evaluate(self, points: Sequence[np.ndarray]) -> list[float]:
        fresh = []
        for u in points:
            k = self.key(u)
            if k not in self.cache and k not in (self.key(p) for p in fresh):
                fresh.append(u)
        if self.workers > 1 and len(fresh) > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                results = list(pool.map(self._call, fresh))
        else:
            results = [self._call(u) for u in fresh]
        for u, (value, status) in zip(fresh, results):
            self.cache[self.key(u)] = value
            entry = TraceEntry(len(self.trace), self.problem.values(u), value, status)
            self.trace.append(entry)
            logger.info("objective_evaluated", eval=entry.index, objective=value, **entry.parameters)
        return [self.cache[self.key(u)] for u in points]

    def is_cached(self, u: np.ndarray) -> bool:
        return self.key(u) in self.cache


def pattern_search(
    problem: CalibrationProblem,
    step0: float = 0.25,
    shrink: float = 0.5,
    tol: float = 1e-3,
    max_evals: int = 200,
    workers: int = 1,
) -> CalibrationResult:
    """Minimize the problem objective by compass search.

    Args:
        problem: parameters with bounds and the objective
        step0: initial step as a fraction of each parameter range
        shrink: step reduction factor after an unsuccessful poll
        tol: stop once the step falls below this fraction of the range
        max_evals: budget of objective evaluations
        workers: concurrent evaluations per poll batch

    Raises:
        CalibrationError: on invalid settings or a failing initial point.
    """
    if step0 <= 0.0 or not 0.0 < shrink < 1.0 or tol <= 0.0 or max_evals < 1:
        raise CalibrationError("need step0 > 0, 0 < shrink < 1, tol > 0 and max_evals >= 1")
    evaluator = _Evaluator(problem, workers)
    u = np.array([p.to_unit(p.initial) for p in problem.parameters])
    f0 = evaluator.evaluate([u])[0]
    if not math.isfinite(f0):
        raise CalibrationError("objective evaluation failed at the initial point")
    best = f0
    step = step0
    n = len(problem.parameters)

    def budget_left() -> int:
        return max_evals - len(evaluator.trace)

    while step >= tol and budget_left() > 0:
        polls = []
        for i in range(n):
            for sign in (1.0, -1.0):
                cand = u.copy()
                cand[i] = np.clip(cand[i] + sign * step, 0.0, 1.0)
                if cand[i] != u[i]:
                    polls.append(cand)
        moved = False
        start = 0
        while start < len(polls) and not moved:
            batch = []
            room = budget_left()
            while start < len(polls) and len(batch) < evaluator.workers:
                if not evaluator.is_cached(polls[start]):
                    if room == 0:
                        break
                    room -= 1
                batch.append(polls[start])
                start += 1
            if not batch:
                break
            for cand, value in zip(batch, evaluator.evaluate(batch)):
                if value < best:
                    u, best, moved = cand, value, True
                    break
        if not moved:
            if start < len(polls):
                break
            step *= shrink
        logger.debug("poll_finished", step=step, objective=best, moved=moved)

    result = CalibrationResult(
        best=problem.values(u),
        objective=best,
        initial_objective=f0,
        evaluations=len(evaluator.trace),
        step=step,
        converged=step < tol,
        trace=evaluator.trace,
    )
    logger.info(
        "calibration_finished",
        evaluations=result.evaluations,
        objective=best,
        converged=result.converged,
        **result.best,
    )
    return result


@dataclass(frozen=True)
class Metrics:
    mae: float
    mre: float
    samples: int
    excluded: int = 0


def _window_mask(times: np.ndarray, window: Optional[tuple[float, float]]) -> np.ndarray:
    if window is None:
        return np.ones(times.size, dtype=bool)
    return (times >= window[0]) & (times <= window[1])


def channel_metrics(
    times: np.ndarray,
    values: np.ndarray,
    ref_times: np.ndarray,
    ref_values: np.ndarray,
    window: Optional[tuple[float, float]] = None,
) -> Metrics:
    """MAE (degC) and MRE (%) of one series against a reference.

    The reference is interpolated linearly at the simulated times inside the
    window and the reference time range. Samples with a 0 degC reference are
    left out of the MRE.

    Raises:
        MetricsError: if no sample remains.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    rt = np.asarray(ref_times, dtype=float)
    rv = np.asarray(ref_values, dtype=float)
    if rt.size == 0 or t.size == 0:
        raise MetricsError("empty series")
    mask = _window_mask(t, window) & (t >= rt[0]) & (t <= rt[-1])
    if not mask.any():
        raise MetricsError("series do not overlap inside the window")
    ref = np.interp(t[mask], rt, rv)
    diff = np.abs(v[mask] - ref)
    nonzero = ref != 0.0
    excluded = int((~nonzero).sum())
    if excluded:
        logger.warning("zero_reference_excluded", samples=excluded)
    mre = float(np.mean(diff[nonzero] / np.abs(ref[nonzero])) * 100.0) if nonzero.any() else math.nan
    return Metrics(float(diff.mean()), mre, int(mask.sum()), excluded)


def error_metrics(
    simulated: ProbeSeries,
    reference: ProbeSeries,
    window: Optional[tuple[float, float]] = None,
    channels: Optional[Sequence[str]] = None,
) -> dict[str, Metrics]:
    """Per-channel metrics over the channels both series share.

    Raises:
        MetricsError: if the series share no channel or a channel has no overlap.
    """
    names = list(channels) if channels is not None else [
        n for n in simulated.names if n in reference.names
    ]
    if not names:
        raise MetricsError("series share no probe channel")
    return {
        name: channel_metrics(
            simulated.times, simulated.channel(name), reference.times, reference.channel(name), window
        )
        for name in names
    }


def metrics_frame(metrics: Mapping[str, Metrics]) -> pd.DataFrame:
    return pd.DataFrame(
        [{"channel": k, "mae": m.mae, "mre": m.mre, "samples": m.samples} for k, m in metrics.items()]
    )


def series_objective(
    simulated: ProbeSeries,
    reference: ProbeSeries,
    probes: Sequence[str],
    window: Optional[tuple[float, float]] = None,
) -> float:
    """Sum of squared residuals over the calibration probes."""
    total = 0.0
    for name in probes:
        t = simulated.times
        mask = _window_mask(t, window) & (t >= reference.times[0]) & (t <= reference.times[-1])
        if not mask.any():
            raise MetricsError(f"probe {name}: no sample inside the window")
        ref = np.interp(t[mask], reference.times, reference.channel(name))
        total += float(np.sum((simulated.channel(name)[mask] - ref) ** 2))
    return total


def rule_of_thumb_htc(
    powder: MaterialTable,
    thickness: float,
    temperature_range: tuple[float, float] = (200.0, 400.0),
    samples: int = 201,
) -> float:
    """Initial equivalent HTC guess: mean of k_pwd(T) / s over a temperature range.

    The (min, max) of k_pwd(T) / s over the same range is logged with it.
    """
    values = _htc_samples(powder, thickness, temperature_range, samples)
    mean = float(np.mean(values))
    logger.info(
        "rule_of_thumb_htc",
        thickness_m=thickness,
        temperature_range=list(temperature_range),
        htc=mean,
        htc_min=float(values.min()),
        htc_max=float(values.max()),
    )
    return mean


def rule_of_thumb_htc_range(
    powder: MaterialTable,
    thickness: float,
    temperature_range: tuple[float, float] = (200.0, 400.0),
    samples: int = 201,
) -> tuple[float, float]:
    """(min, max) of k_pwd(T) / s over a temperature range, W/(m^2 degC)."""
    values = _htc_samples(powder, thickness, temperature_range, samples)
    return float(values.min()), float(values.max())


def _htc_samples(
    powder: MaterialTable, thickness: float, temperature_range: tuple[float, float], samples: int
) -> np.ndarray:
    if thickness <= 0.0:
        raise CalibrationError("thickness must be positive")
    if samples < 2 or temperature_range[1] <= temperature_range[0]:
        raise CalibrationError("need an increasing temperature range and at least two samples")
    material = powder.as_phase("powder") if powder.powder is not None else powder
    temps = np.linspace(temperature_range[0], temperature_range[1], samples)
    return np.asarray(material.conductivity(temps), dtype=float) / thickness


def config_objective(
    document: Mapping[str, Any],
    calibration: CalibrationModel,
    reference: ProbeSeries,
    threads: int = 1,
) -> Objective:
    """Objective that runs the simulation of `document` with the trial parameters applied."""
    base = copy.deepcopy(dict(document))
    base.pop("calibration", None)

    def objective(values: Mapping[str, float]) -> float:
        doc = copy.deepcopy(base)
        for path, value in values.items():
            set_path(doc, path, value)
        result = run(parse_config(doc), threads=threads)
        return series_objective(result.probes, reference, calibration.calibration_probes, calibration.window)

    return objective


@dataclass
class ConfigCalibration:
    result: CalibrationResult
    overlay: dict[str, float]
    validation: dict[str, Metrics]


def calibrate_config(
    document: Mapping[str, Any],
    calibration: CalibrationModel,
    reference: ProbeSeries,
    threads: int = 1,
    workers: int = 1,
) -> ConfigCalibration:
    """Fit the calibration block of a config and score the held-out probes."""
    problem = CalibrationProblem(
        [FreeParameter(p.path, p.lower, p.upper, p.initial) for p in calibration.parameters],
        config_objective(document, calibration, reference, threads),
        calibration.calibration_probes,
        calibration.validation_probes,
    )
    result = pattern_search(
        problem, calibration.step0, calibration.shrink, calibration.tol, calibration.max_evals, workers
    )
    validation: dict[str, Metrics] = {}
    if calibration.validation_probes:
        doc = copy.deepcopy(dict(document))
        doc.pop("calibration", None)
        for path, value in result.best.items():
            set_path(doc, path, value)
        fitted = run(parse_config(doc), threads=threads)
        validation = error_metrics(
            fitted.probes, reference, calibration.window, calibration.validation_probes
        )
    return ConfigCalibration(result, dict(result.best), validation)
