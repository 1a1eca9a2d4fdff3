# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Temperature-dependent material properties.

A material is a set of breakpoint tables (density, specific heat,
conductivity) for the bulk metal, optionally with a powder block from which
the powder-state properties are derived.

Assumptions:
- Temperatures are in degC everywhere; Kelvin only inside the radiative
  conductivity term
- Tables interpolate linearly and clamp outside their range
- Objects are immutable once built and safe to share between threads
- All evaluation is vectorized: scalars in, floats out; arrays in, arrays out
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike

from vdatherm.contract.models import MaterialModel

STEFAN_BOLTZMANN = 5.67e-8
KELVIN_OFFSET = 273.15

Phase = Literal["bulk", "powder"]


class MaterialError(ValueError):
    """Raised when a property table or powder definition is invalid."""


@dataclass(frozen=True, eq=False)
class PropertyTable:
    """Piecewise-linear property of temperature, clamped at both ends."""

    temperatures: np.ndarray
    values: np.ndarray
    name: str = "property"

    def __post_init__(self) -> None:
        t = np.asarray(self.temperatures, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if t.size == 0:
            raise MaterialError(f"{self.name}: at least one breakpoint is required")
        if t.shape != v.shape:
            raise MaterialError(f"{self.name}: temperatures and values differ in length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise MaterialError(f"{self.name}: breakpoints must be finite")
        if np.any(np.diff(t) <= 0.0):
            raise MaterialError(f"{self.name}: temperatures must be strictly increasing")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "temperatures", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_breakpoints(
        cls,
        breakpoints: Sequence[Sequence[float]],
        name: str = "property",
        positive: bool = True,
    ) -> PropertyTable:
        """Build a table from (temperature, value) pairs.

        Raises:
            MaterialError: if the pairs are malformed, or non-positive when
                `positive` is set (density, specific heat, conductivity).
        """
        pairs = np.asarray(breakpoints, dtype=float)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise MaterialError(f"{name}: breakpoints must be (temperature, value) pairs")
        table = cls(pairs[:, 0], pairs[:, 1], name=name)
        if positive and np.any(table.values <= 0.0):
            raise MaterialError(f"{name}: values must be strictly positive")
        return table

    @classmethod
    def constant(cls, value: float, name: str = "property") -> PropertyTable:
        return cls.from_breakpoints([(20.0, value)], name=name)

    def breakpoints(self) -> list[tuple[float, float]]:
        return [(float(t), float(v)) for t, v in zip(self.temperatures, self.values)]

    def __call__(self, temperature: ArrayLike) -> np.ndarray | float:
        return interpolate(self, temperature)


def interpolate(table: PropertyTable, temperature: ArrayLike) -> np.ndarray | float:
    """Evaluate `table` at `temperature` (degC).

    Raises:
        MaterialError: on non-finite temperatures.
    """
    t = np.asarray(temperature, dtype=float)
    if not np.all(np.isfinite(t)):
        raise MaterialError(f"{table.name}: non-finite temperature")
    result = np.interp(t, table.temperatures, table.values)
    return float(result) if result.ndim == 0 else result


def powder_density(solid_density: ArrayLike, porosity: float) -> np.ndarray | float:
    """Apparent density of a powder bed: rho_solid * (1 - porosity)."""
    _check_porosity(porosity)
    rho = np.asarray(solid_density, dtype=float)
    if np.any(rho <= 0.0):
        raise MaterialError("solid density must be positive")
    result = rho * (1.0 - porosity)
    return float(result) if result.ndim == 0 else result


def radiative_conductivity(temperature: ArrayLike, particle_diameter: float) -> np.ndarray:
    """Inter-particle radiation contribution (4/3) sigma T_K^3 D."""
    t_k = np.asarray(temperature, dtype=float) + KELVIN_OFFSET
    return (4.0 / 3.0) * STEFAN_BOLTZMANN * t_k**3 * particle_diameter


def powder_conductivity(
    solid_conductivity: ArrayLike,
    gas_conductivity: ArrayLike,
    porosity: float,
    particle_diameter: float,
    temperature: ArrayLike,
) -> np.ndarray | float:
    """Effective conductivity of a bed of spherical particles in a gas.

    Args:
        solid_conductivity: bulk conductivity at `temperature`, W/(m degC)
        gas_conductivity: conductivity of the filling gas, W/(m degC)
        porosity: void fraction in (0, 1)
        particle_diameter: mean particle diameter, m
        temperature: degC

    Raises:
        MaterialError: if k_gas >= k_solid or any input is non-positive.
    """
    _check_porosity(porosity)
    k_s = np.asarray(solid_conductivity, dtype=float)
    k_g = np.asarray(gas_conductivity, dtype=float)
    if particle_diameter <= 0.0:
        raise MaterialError("particle diameter must be positive")
    if np.any(k_g <= 0.0) or np.any(k_s <= 0.0):
        raise MaterialError("conductivities must be positive")
    if np.any(k_g >= k_s):
        raise MaterialError("gas conductivity must be below solid conductivity")

    k_rad = radiative_conductivity(temperature, particle_diameter)
    root = np.sqrt(1.0 - porosity)
    contrast = 2.0 / (1.0 - k_g / k_s)
    ratio = (
        (1.0 - root) * (1.0 + porosity * k_rad / k_g)
        + root * contrast * (contrast * np.log(k_s / k_g) - 1.0)
        + root * k_rad / k_g
    )
    result = k_g * ratio
    return float(result) if result.ndim == 0 else result


def _check_porosity(porosity: float) -> None:
    if not 0.0 < porosity < 1.0:
        raise MaterialError(f"porosity must lie in (0, 1), got {porosity}")


@dataclass(frozen=True, eq=False)
class PowderSpec:
    """Powder-bed description attached to a bulk material.

    Either `conductivity` (an explicit table) or `gas_conductivity` (for the
    mixture rule) must be given; an explicit table wins.
    """

    porosity: float
    particle_diameter: float
    gas_conductivity: Optional[PropertyTable] = None
    conductivity: Optional[PropertyTable] = None

    @property
    def stefan_boltzmann(self) -> float:
        return STEFAN_BOLTZMANN

    def __post_init__(self) -> None:
        _check_porosity(self.porosity)
        if self.particle_diameter <= 0.0:
            raise MaterialError("particle diameter must be positive")
        if self.gas_conductivity is None and self.conductivity is None:
            raise MaterialError("powder needs a gas conductivity or an explicit conductivity table")


@dataclass(frozen=True, eq=False)
class MaterialTable:
    """Density, specific heat and conductivity of one phase of a named material."""

    name: str
    density_table: PropertyTable
    specific_heat_table: PropertyTable
    conductivity_table: PropertyTable
    powder: Optional[PowderSpec] = None
    phase: Phase = "bulk"

    def __post_init__(self) -> None:
        if self.phase == "powder" and self.powder is None:
            raise MaterialError(f"{self.name}: no powder block defined")

    def as_phase(self, phase: Phase) -> MaterialTable:
        """Return the same material in the requested phase."""
        if phase == self.phase:
            return self
        return replace(self, phase=phase)

    def _powder(self) -> PowderSpec:
        if self.powder is None:
            raise MaterialError(f"{self.name}: no powder block defined")
        return self.powder

    def density(self, temperature: ArrayLike) -> np.ndarray | float:
        rho = interpolate(self.density_table, temperature)
        if self.phase == "powder":
            return powder_density(rho, self._powder().porosity)
        return rho

    def specific_heat(self, temperature: ArrayLike) -> np.ndarray | float:
        # Powder keeps the bulk specific heat
        return interpolate(self.specific_heat_table, temperature)

    def conductivity(self, temperature: ArrayLike) -> np.ndarray | float:
        if self.phase == "bulk":
            return interpolate(self.conductivity_table, temperature)
        powder = self._powder()
        if powder.conductivity is not None:
            return interpolate(powder.conductivity, temperature)
        if powder.gas_conductivity is None:
            raise MaterialError(f"{self.name}: powder needs a gas conductivity")
        return powder_conductivity(
            interpolate(self.conductivity_table, temperature),
            interpolate(powder.gas_conductivity, temperature),
            powder.porosity,
            powder.particle_diameter,
            temperature,
        )

    def capacity(self, temperature: ArrayLike) -> np.ndarray | float:
        """Volumetric heat capacity rho * c, J/(m^3 degC)."""
        return np.multiply(self.density(temperature), self.specific_heat(temperature))

    @property
    def is_temperature_dependent(self) -> bool:
        tables = [self.density_table, self.specific_heat_table, self.conductivity_table]
        if self.phase == "powder" and self.powder is not None:
            if self.powder.conductivity is not None:
                tables[2] = self.powder.conductivity
            else:
                # radiative term varies with temperature
                return True
        return any(np.ptp(t.values) > 0.0 for t in tables)


def material_from_model(name: str, model: MaterialModel) -> MaterialTable:
    """Build the bulk-phase table of a config material block."""
    powder = None
    if model.powder is not None:
        p = model.powder
        powder = PowderSpec(
            porosity=p.porosity,
            particle_diameter=p.particle_diameter,
            gas_conductivity=(
                PropertyTable.from_breakpoints(p.gas_conductivity, f"{name}.powder.gas_conductivity")
                if p.gas_conductivity is not None else None
            ),
            conductivity=(
                PropertyTable.from_breakpoints(p.conductivity, f"{name}.powder.conductivity")
                if p.conductivity is not None else None
            ),
        )
    return MaterialTable(
        name=name,
        density_table=PropertyTable.from_breakpoints(model.density, f"{name}.density"),
        specific_heat_table=PropertyTable.from_breakpoints(model.specific_heat, f"{name}.specific_heat"),
        conductivity_table=PropertyTable.from_breakpoints(model.conductivity, f"{name}.conductivity"),
        powder=powder,
    )
