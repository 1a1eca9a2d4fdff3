# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Temperature field, boundary conditions and heat sources of the 3D problem.

Assumptions:
- The field stores one temperature per grid node, active or not; inactive
  nodes hold the initial temperature until their cells are born
- Several conditions may target the same label; Robin terms add up
- A label with no condition is insulated
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Optional, Union

import numpy as np
from numpy.typing import ArrayLike

from vdatherm.contract.models import BoundaryConditionModel, SimulationConfig
from vdatherm.materials import KELVIN_OFFSET, STEFAN_BOLTZMANN, MaterialTable, material_from_model
from vdatherm.mesh import Region
from vdatherm.process import TimeTable
from vdatherm.vda import VdaBoundary, VdaParams, geometric_factors


class SolverError(RuntimeError):
    """Raised when a step cannot be assembled or solved; carries step context."""

    def __init__(self, message: str, step: Optional[int] = None, time_s: Optional[float] = None) -> None:
        self.step = step
        self.time_s = time_s
        context = "" if step is None else f" (step {step}, t={time_s:.6g} s)"
        super().__init__(message + context)

    def at(self, step: int, time_s: float) -> SolverError:
        """Same error with step context attached."""
        if self.step is not None:
            return self
        base = self.args[0] if self.args else ""
        return SolverError(base, step, time_s)


@dataclass
class ThermalField:
    temperatures: np.ndarray
    time: float = 0.0
    step: int = 0

    @classmethod
    def uniform(cls, n_nodes: int, value: float) -> ThermalField:
        return cls(np.full(n_nodes, float(value)))

    def __post_init__(self) -> None:
        self.temperatures = np.asarray(self.temperatures, dtype=float)
        if not np.all(np.isfinite(self.temperatures)):
            raise ValueError("temperature field must be finite")


class BcKind(str, Enum):
    NEWTON = "newton"
    RADIATION = "radiation"
    VDA = "vda"
    DIRICHLET = "dirichlet"


@dataclass
class BoundaryCondition:
    """One condition on one boundary label.

    `newton` conditions may carry an emissivity, in which case linearized
    radiation to the same ambient is added.
    """

    target: str
    kind: BcKind
    h: float = 0.0
    ambient: TimeTable = field(default_factory=lambda: TimeTable.constant(20.0))
    emissivity: float = 0.0
    value: Optional[TimeTable] = None
    vda: Optional[VdaBoundary] = None

    def __post_init__(self) -> None:
        self.kind = BcKind(self.kind)
        self.ambient = TimeTable.coerce(self.ambient)
        if self.value is not None:
            self.value = TimeTable.coerce(self.value)
        if self.h < 0.0:
            raise ValueError(f"{self.target}: h must be non-negative")
        if not 0.0 <= self.emissivity <= 1.0:
            raise ValueError(f"{self.target}: emissivity must lie in [0, 1]")
        if self.kind is BcKind.DIRICHLET and self.value is None:
            raise ValueError(f"{self.target}: dirichlet condition needs a value")
        if self.kind is BcKind.VDA and self.vda is None:
            raise ValueError(f"{self.target}: vda condition needs a wall")

    @property
    def is_robin(self) -> bool:
        return self.kind in (BcKind.NEWTON, BcKind.RADIATION, BcKind.VDA)

    @property
    def radiates(self) -> bool:
        return self.kind in (BcKind.NEWTON, BcKind.RADIATION) and self.emissivity > 0.0


def radiation_coefficient(emissivity: float, temperature: ArrayLike, ambient: ArrayLike) -> np.ndarray | float:
    """Linearized radiation coefficient eps*sigma*(T^2 + Ta^2)*(T + Ta), Kelvin inside.

    With it, eps*sigma*(T_K^4 - Ta_K^4) = h_rad * (T - Ta) exactly.
    """
    t = np.asarray(temperature, dtype=float) + KELVIN_OFFSET
    ta = np.asarray(ambient, dtype=float) + KELVIN_OFFSET
    result = emissivity * STEFAN_BOLTZMANN * (t**2 + ta**2) * (t + ta)
    return float(result) if np.ndim(result) == 0 else result


SourceDensity = Union[float, Callable[[np.ndarray, float], np.ndarray]]


@dataclass(frozen=True)
class HeatSource:
    """Volumetric source over a set of cells.

    `density` is a constant (W/m^3) or a function of Gauss point coordinates
    (cells, 8, 3) and time returning (cells, 8).
    """

    cells: np.ndarray
    density: SourceDensity

    def evaluate(self, points: np.ndarray, time: float) -> np.ndarray:
        if callable(self.density):
            return np.asarray(self.density(points, time), dtype=float)
        return np.full(points.shape[:2], float(self.density))


def region_materials(config: SimulationConfig) -> dict[Region, MaterialTable]:
    """Material of each meshed region; the bed takes the powder phase."""
    tables = {name: material_from_model(name, m) for name, m in config.materials.items()}
    out = {Region.PART: tables[config.regions.part]}
    if config.mesh_variant != "P":
        out[Region.BASE] = tables[config.regions.base]
    if config.mesh_variant == "HF":
        if config.regions.bed is None:
            raise SolverError("variant HF needs a bed material")
        out[Region.BED] = tables[config.regions.bed].as_phase("powder")
    return out


def condition_from_model(
    model: BoundaryConditionModel, materials: Mapping[str, MaterialTable]
) -> BoundaryCondition:
    wall = None
    if model.vda is not None:
        v = model.vda
        f_volume, f_surface = geometric_factors(v.shape, v.radius, v.thickness)
        params = VdaParams(
            thickness=v.thickness,
            h_sp=v.h_sp,
            h_pp=v.h_pp,
            far_temperature=v.far_temperature,
            f_volume=v.f_volume if v.f_volume is not None else f_volume,
            f_surface=v.f_surface if v.f_surface is not None else f_surface,
            variant=v.variant,
            n_elements=v.n_elements,
            order=v.order,
            dirichlet=v.dirichlet,
        )
        wall = VdaBoundary(
            params, materials[v.material].as_phase(v.phase), v.evaluation, v.face_averaged
        )
    return BoundaryCondition(
        target=model.target,
        kind=BcKind(model.kind),
        h=model.h,
        ambient=TimeTable.coerce(model.ambient),
        emissivity=model.emissivity,
        value=TimeTable.coerce(model.value) if model.value is not None else None,
        vda=wall,
    )


def conditions_from_config(config: SimulationConfig) -> list[BoundaryCondition]:
    tables = {name: material_from_model(name, m) for name, m in config.materials.items()}
    return [condition_from_model(bc, tables) for bc in config.boundary_conditions]
