# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Time stepping of a build: activation, step solves, probes, ledger and outputs.

Assumptions:
- A lump of layers is activated with the first physical layer it contains;
  each physical layer then deposits its energy over the whole lump
- Newly active nodes start at the initial temperature
- Probes are read on the full grid (inactive nodes hold the initial
  temperature); the series starts with a t = 0 row
- The final cooldown stops early once max T - ambient <= tolerance
"""
from __future__ import annotations

import time as _time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from vdatherm.contract.models import SimulationConfig
from vdatherm.logging_config import bind_context, clear_context, get_logger
from vdatherm.materials import MaterialTable
from vdatherm.mesh import VARIANT_FACE_LABELS, Region, StructuredMesh, activate_layer, build_mesh
from vdatherm.outputs import ProbeSeries, ledger_frame, write_frame, write_json, write_probes, write_vtk
from vdatherm.process import StepKind, schedule_from_config, source_density
from vdatherm.solver.assembly import Assembler, energy_balance, face_temperatures
from vdatherm.solver.fields import (
    BoundaryCondition,
    HeatSource,
    SolverError,
    ThermalField,
    conditions_from_config,
    region_materials,
)
from vdatherm.solver.linear import SolverOptions, picard_iterate
from vdatherm.version import build_info

logger = get_logger(__name__)


@dataclass(frozen=True)
class StepRecord:
    index: int
    kind: str
    time: float
    dt: float
    picard_iterations: int
    linear_iterations: int
    energy: dict


class ThermalSolver:
    """Transient solver bound to one mesh, its materials and its boundary conditions."""

    def __init__(
        self,
        mesh: StructuredMesh,
        materials: Mapping[Region, MaterialTable],
        conditions: Sequence[BoundaryCondition],
        initial_temperature: float = 20.0,
        options: SolverOptions = SolverOptions(),
        threads: int = 1,
        probes: Sequence[tuple[str, tuple[float, float, float]]] = (),
    ) -> None:
        self.mesh = mesh
        self.options = options
        self.conditions = list(conditions)
        self.initial_temperature = float(initial_temperature)
        self.field = ThermalField.uniform(mesh.n_nodes, initial_temperature)
        self.assembler = Assembler(mesh, materials, self.conditions, threads)
        self.labels = [label.key for label in VARIANT_FACE_LABELS[mesh.variant]]
        self.probe_names = [name for name, _ in probes]
        located = [mesh.locate(position) for _, position in probes]
        self._probe_nodes = np.array([nodes for _, nodes, _ in located]).reshape(-1, 8)
        self._probe_weights = np.array([w for _, _, w in located]).reshape(-1, 8)

    def close(self) -> None:
        self.assembler.close()

    @property
    def n_dofs(self) -> int:
        return self.assembler.context.n_dofs

    def activate(self, layer: int) -> np.ndarray:
        new = activate_layer(self.mesh, layer)
        self.assembler.refresh()
        return new

    def active_temperatures(self) -> np.ndarray:
        return self.field.temperatures[self.assembler.context.dofs]

    def probe_values(self) -> np.ndarray:
        return (self.field.temperatures[self._probe_nodes] * self._probe_weights).sum(axis=1)

    def advance(self, dt: float, source: Optional[HeatSource] = None, kind: str = "step") -> StepRecord:
        """Solve one backward-Euler step and advance the VDA walls.

        Raises:
            SolverError: on any assembly, wall or solve failure, with step context.
        """
        step = self.field.step + 1
        t_new = self.field.time + dt
        ctx = self.assembler.context
        x_prev = self.field.temperatures[ctx.dofs].copy()
        try:
            walls = self.assembler.wall_coefficients(dt)
            result = picard_iterate(
                lambda x_star: self.assembler.assemble(x_star, x_prev, dt, t_new, source, walls),
                x_prev,
                self.options,
                nonlinear=self.assembler.nonlinear,
            )
            for bc in self.conditions:
                if bc.vda is None:
                    continue
                t_points = face_temperatures(ctx.faces[bc.target], result.x)
                if bc.vda.points_per_face == 1:
                    t_points = t_points.mean(axis=1, keepdims=True)
                bc.vda.advance(t_points)
        except SolverError as exc:
            raise exc.at(step, t_new) from exc
        except ValueError as exc:
            raise SolverError(str(exc), step, t_new) from exc

        self.field.temperatures[ctx.dofs] = result.x
        self.field.time = t_new
        self.field.step = step
        energy = energy_balance(result.system, result.x, x_prev)
        logger.debug(
            "step_solved",
            step=step,
            time_s=t_new,
            kind=kind,
            picard_iterations=result.iterations,
            cg_iterations=result.linear_iterations,
            energy_residual=energy["residual"],
        )
        return StepRecord(step, kind, t_new, dt, result.iterations, result.linear_iterations, energy)


@dataclass
class RunResult:
    probes: ProbeSeries
    ledger: pd.DataFrame
    summary: dict
    field: ThermalField
    records: list[StepRecord] = field(default_factory=list)


def solver_from_config(config: SimulationConfig, threads: int = 1) -> ThermalSolver:
    mesh = build_mesh(config.geometry, config.mesh_variant)
    return ThermalSolver(
        mesh,
        region_materials(config),
        conditions_from_config(config),
        config.process.initial_temperature,
        SolverOptions.from_model(config.solver),
        threads,
        [(p.name, p.position) for p in config.probes],
    )


def run(
    config: SimulationConfig,
    threads: int = 1,
    output_dir: Optional[Path | str] = None,
    run_id: Optional[str] = None,
) -> RunResult:
    """Simulate the whole schedule of `config`.

    Args:
        config: validated simulation config
        threads: cap on intra-step parallelism
        output_dir: where to write probes, ledger, snapshots and summary;
            nothing is written when None
        run_id: identifier bound to every log entry of the run

    Raises:
        SolverError: with step and time context.
    """
    started = _time.perf_counter()
    bind_context(run_id=run_id or uuid.uuid4().hex[:12], variant=config.variant)
    out = Path(output_dir) if output_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    try:
        solver = solver_from_config(config, threads)
        try:
            return _run(config, solver, out, started)
        finally:
            solver.close()
    finally:
        clear_context()


def _run(config: SimulationConfig, solver: ThermalSolver, out: Optional[Path], started: float) -> RunResult:
    mesh = solver.mesh
    part = config.geometry.part
    (fx, fy) = part.footprint(0)
    schedule = schedule_from_config(config.process, part.n_layers, (fx[1] - fx[0]) * (fy[1] - fy[0]))
    logger.info(
        "schedule_built",
        steps=len(schedule),
        printing=schedule.count(StepKind.PRINTING),
        cooling=schedule.count(StepKind.COOLING),
        cooldown=schedule.count(StepKind.FINAL_COOLDOWN),
        duration_s=schedule.total_duration,
    )
    interval = config.output.snapshot_interval

    rows = [[0.0, *solver.probe_values()]]
    ledger_rows = []
    records: list[StepRecord] = []
    peak = solver.initial_temperature
    max_dofs = 0
    worst_residual = 0.0
    ramp = schedule.cooldown

    for step in schedule:
        source = None
        if step.kind is StepKind.PRINTING:
            if step.layer is None:
                step_no, now = solver.field.step + 1, solver.field.time
                raise SolverError("printing step has no layer", step_no, now)
            lump = step.layer // part.layers_per_lump
            if step.layer % part.layers_per_lump == 0:
                solver.activate(lump)
            cells = mesh.layer_cells(lump, Region.PART)
            volume = float(mesh.volumes[cells].sum())
            source = HeatSource(cells, source_density(step, volume))
        record = solver.advance(step.dt, source, step.kind.value)
        records.append(record)
        max_dofs = max(max_dofs, solver.n_dofs)
        active = solver.active_temperatures()
        peak = max(peak, float(active.max()))
        scale = max(abs(record.energy["input"]), abs(record.energy["stored"]), 1.0)
        worst_residual = max(worst_residual, abs(record.energy["residual"]) / scale)
        rows.append([record.time, *solver.probe_values()])
        ledger_rows.append({"time": record.time, **record.energy})
        if out is not None and interval and record.index % interval == 0:
            write_vtk(out / f"snapshot_{record.index:06d}.vtk", mesh, solver.field.temperatures,
                      title=f"t={record.time:.6g} s")
        if step.kind is StepKind.FINAL_COOLDOWN and ramp is not None:
            if float(active.max()) - ramp.ambient <= ramp.tolerance:
                logger.info("cooldown_reached", time_s=record.time, max_temperature=float(active.max()))
                break

    probes = ProbeSeries.from_rows(solver.probe_names, rows)
    ledger = ledger_frame(ledger_rows, solver.labels)
    summary = {
        **build_info(),
        "variant": config.variant,
        "dofs": solver.n_dofs,
        "max_dofs": max_dofs,
        "steps": len(records),
        "simulated_time_s": solver.field.time,
        "wall_clock_s": _time.perf_counter() - started,
        "peak_temperature": peak,
        "max_relative_energy_residual": worst_residual,
        "picard_iterations": int(sum(r.picard_iterations for r in records)),
        "linear_iterations": int(sum(r.linear_iterations for r in records)),
        "mesh": mesh.summary(),
    }
    if out is not None:
        write_probes(probes, out / config.output.probes_file)
        write_frame(ledger, out / config.output.ledger_file)
        write_json(summary, out / config.output.summary_file)
    logger.info(
        "run_finished",
        dofs=summary["dofs"],
        steps=summary["steps"],
        wall_clock_s=round(summary["wall_clock_s"], 3),
        peak_temperature=peak,
    )
    return RunResult(probes, ledger, summary, solver.field, records)
