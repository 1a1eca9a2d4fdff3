# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Transient nonlinear heat conduction on the active build domain.
"""
from vdatherm.solver.assembly import Assembler, LinearSystem, energy_balance
from vdatherm.solver.driver import RunResult, StepRecord, ThermalSolver, run, solver_from_config
from vdatherm.solver.fields import (
    BcKind,
    BoundaryCondition,
    HeatSource,
    SolverError,
    ThermalField,
    radiation_coefficient,
)
from vdatherm.solver.linear import SolverOptions, picard_iterate, solve_step

__all__ = [
    "Assembler",
    "BcKind",
    "BoundaryCondition",
    "HeatSource",
    "LinearSystem",
    "RunResult",
    "SolverError",
    "SolverOptions",
    "StepRecord",
    "ThermalField",
    "ThermalSolver",
    "energy_balance",
    "picard_iterate",
    "radiation_coefficient",
    "run",
    "solve_step",
]
