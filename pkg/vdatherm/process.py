# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Process schedule: alternating printing and cooling steps, then a cooldown ramp.

Assumptions:
- Layer indices count from 0; layer 0 is the first (odd) layer of the build
- A printing step lasts the scanning time of one layer and deposits eta * W
  uniformly over the layer lump being built
- A cooling step lasts the recoating time and carries no source
- Cooldown steps grow geometrically up to a simulated-time horizon; the driver
  may stop earlier once the build is close to ambient
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from vdatherm.contract.models import ProcessModel


class ScheduleError(ValueError):
    """Raised when schedule inputs are out of range."""


class StepKind(str, Enum):
    PRINTING = "printing"
    COOLING = "cooling"
    FINAL_COOLDOWN = "final_cooldown"


@dataclass(frozen=True)
class Step:
    kind: StepKind
    dt: float
    layer: Optional[int] = None
    power: float = 0.0
    absorption: float = 1.0

    @property
    def absorbed_power(self) -> float:
        return self.absorption * self.power if self.kind is StepKind.PRINTING else 0.0


@dataclass(frozen=True)
class CooldownRamp:
    first_dt: float
    growth: float = 1.5
    horizon: float = 0.0
    tolerance: float = 1.0
    ambient: float = 20.0

    def step_sizes(self) -> list[float]:
        sizes: list[float] = []
        total = 0.0
        dt = self.first_dt
        while total < self.horizon * (1.0 - 1e-12):
            dt_i = min(dt, self.horizon - total)
            sizes.append(dt_i)
            total += dt_i
            dt *= self.growth
        return sizes


@dataclass(frozen=True)
class ProcessSchedule:
    steps: tuple[Step, ...]
    cooldown: Optional[CooldownRamp] = None

    def __iter__(self) -> Iterator[Step]:
        return iter(self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def total_duration(self) -> float:
        return float(sum(step.dt for step in self.steps))

    @property
    def printing_duration(self) -> float:
        return float(sum(s.dt for s in self.steps if s.kind is not StepKind.FINAL_COOLDOWN))

    def count(self, kind: StepKind) -> int:
        return sum(1 for step in self.steps if step.kind is kind)


class TimeTable:
    """A value that varies linearly in time between (time_s, value) points."""

    def __init__(self, points: Sequence[Sequence[float]]) -> None:
        data = np.asarray(points, dtype=float)
        if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] == 0:
            raise ScheduleError("time table needs (time, value) pairs")
        if np.any(np.diff(data[:, 0]) <= 0.0):
            raise ScheduleError("time table times must be strictly increasing")
        self.times = data[:, 0]
        self.values = data[:, 1]

    @classmethod
    def constant(cls, value: float) -> TimeTable:
        return cls([(0.0, value)])

    @classmethod
    def coerce(cls, value: Union[float, Sequence[Sequence[float]], TimeTable]) -> TimeTable:
        if isinstance(value, TimeTable):
            return value
        if isinstance(value, (int, float)):
            return cls.constant(float(value))
        return cls(value)

    def __call__(self, time: float) -> float:
        return float(np.interp(time, self.times, self.values))

    @property
    def extremes(self) -> tuple[float, float]:
        return float(self.values.min()), float(self.values.max())


def scan_time_from_speed(area: float, speed: float, hatch: float) -> float:
    """Layer scanning time area / (speed * hatch)."""
    if area <= 0.0 or speed <= 0.0 or hatch <= 0.0:
        raise ScheduleError("area, speed and hatch must be positive")
    return area / (speed * hatch)


def build_schedule(
    n_layers: int,
    scan_time: float,
    recoat_time: Union[float, tuple[float, float]],
    power: float,
    absorption: float,
    cooldown: Optional[CooldownRamp] = None,
) -> ProcessSchedule:
    """Alternate one printing and one cooling step per layer, then cool down.

    Args:
        n_layers: number of deposited layers (>= 1)
        scan_time: printing step length, s
        recoat_time: cooling step length, or (odd layers, even layers)
        power: laser power W, >= 0
        absorption: eta in (0, 1]
        cooldown: optional final ramp

    Raises:
        ScheduleError: on out-of-range inputs.
    """
    if n_layers < 1:
        raise ScheduleError("at least one layer is required")
    if scan_time <= 0.0:
        raise ScheduleError("scan time must be positive")
    odd, even = recoat_time if isinstance(recoat_time, tuple) else (recoat_time, recoat_time)
    if odd <= 0.0 or even <= 0.0:
        raise ScheduleError("recoat times must be positive")
    if power < 0.0:
        raise ScheduleError("power must be non-negative")
    if not 0.0 < absorption <= 1.0:
        raise ScheduleError("absorption must lie in (0, 1]")

    steps: list[Step] = []
    for layer in range(n_layers):
        steps.append(Step(StepKind.PRINTING, scan_time, layer, power, absorption))
        recoat = odd if layer % 2 == 0 else even
        steps.append(Step(StepKind.COOLING, recoat, layer, 0.0, absorption))
    if cooldown is not None:
        if cooldown.first_dt <= 0.0 or cooldown.growth < 1.0:
            raise ScheduleError("cooldown needs a positive first step and growth >= 1")
        for dt in cooldown.step_sizes():
            steps.append(Step(StepKind.FINAL_COOLDOWN, dt, None, 0.0, absorption))
    return ProcessSchedule(tuple(steps), cooldown)


def schedule_from_config(process: ProcessModel, n_layers: int, layer_area: float) -> ProcessSchedule:
    """Build the schedule described by a config process block."""
    if process.scan_time is not None:
        scan = process.scan_time
    elif process.scan_speed is None or process.hatch_spacing is None:
        raise ScheduleError("give scan_time, or scan_speed together with hatch_spacing")
    else:
        scan = scan_time_from_speed(layer_area, process.scan_speed, process.hatch_spacing)
    cd = process.cooldown
    ramp = CooldownRamp(
        first_dt=cd.first_dt,
        growth=cd.growth,
        horizon=cd.horizon,
        tolerance=cd.tolerance,
        ambient=process.initial_temperature if cd.ambient is None else cd.ambient,
    )
    recoat = process.recoat_time
    return build_schedule(
        n_layers,
        scan,
        tuple(recoat) if isinstance(recoat, (tuple, list)) else float(recoat),
        process.power,
        process.absorption,
        ramp if cd.horizon > 0.0 else None,
    )


def source_density(step: Step, pool_volume: float) -> float:
    """Uniform volumetric source eta * W / V_pool over the layer, W/m^3.

    Cooling and cooldown steps return 0.

    Raises:
        ScheduleError: if the layer volume is not positive.
    """
    if step.kind is not StepKind.PRINTING:
        return 0.0
    if pool_volume <= 0.0:
        raise ScheduleError("layer volume must be positive")
    return step.absorbed_power / pool_volume
