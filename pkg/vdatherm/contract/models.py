# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Simulation config contract models. See docs/CONFIG.md.

Design notes for contributors:
- Every block uses `extra="forbid"`: a misspelt key is a validation error,
  never a silently ignored setting.
- Lengths are metres, temperatures degC, times seconds, powers watts.
- A temperature or ambient value is either a number or a time table of
  (time_s, value) pairs interpolated linearly in time.
- Cross-references (materials named by regions and VDA blocks, probe names
  used by calibration) are checked in `SimulationConfig._check_references`.
"""
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

SCHEMA_VERSION = "1.0"

Breakpoints = list[tuple[float, float]]
TimeValue = Union[float, list[tuple[float, float]]]
Pair = tuple[float, float]

ModelVariant = Literal["HF", "HTC-PP", "VDA-PP", "VDA-P"]
FaceLabelName = Literal[
    "air_part", "air_bed", "lat_bed", "lat_base", "down", "bed_part", "bed_base", "base_part"
]

# Labels each model variant exposes on its active boundary
VARIANT_LABELS: dict[str, tuple[str, ...]] = {
    "HF": ("air_part", "air_bed", "lat_bed", "lat_base", "down"),
    "HTC-PP": ("air_part", "bed_part", "bed_base", "lat_base", "down"),
    "VDA-PP": ("air_part", "bed_part", "bed_base", "lat_base", "down"),
    "VDA-P": ("air_part", "bed_part", "base_part"),
}

MESH_VARIANT: dict[str, str] = {"HF": "HF", "HTC-PP": "PP", "VDA-PP": "PP", "VDA-P": "P"}


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PowderModel(_Block):
    porosity: float = Field(gt=0.0, lt=1.0)
    particle_diameter: float = Field(gt=0.0)
    gas_conductivity: Optional[Breakpoints] = None
    conductivity: Optional[Breakpoints] = None

    @model_validator(mode="after")
    def _check(self) -> "PowderModel":
        if self.gas_conductivity is None and self.conductivity is None:
            raise ValueError("powder needs gas_conductivity or conductivity")
        return self


class MaterialModel(_Block):
    density: Breakpoints = Field(min_length=1)
    specific_heat: Breakpoints = Field(min_length=1)
    conductivity: Breakpoints = Field(min_length=1)
    powder: Optional[PowderModel] = None


class PlateModel(_Block):
    x: Pair
    y: Pair
    thickness: float = Field(gt=0.0)

    @model_validator(mode="after")
    def _check(self) -> "PlateModel":
        if self.x[0] >= self.x[1] or self.y[0] >= self.y[1]:
            raise ValueError("plate bounds must be (lower, upper) with lower < upper")
        return self


class PartModel(_Block):
    """Stack of axis-aligned rectangular footprints, one per layer lump."""

    footprint_x: Pair
    footprint_y: Pair
    layer_thickness: float = Field(gt=0.0)
    n_layers: int = Field(ge=0)
    layers_per_lump: int = Field(default=1, ge=1)
    # Stair-step offset of each lump footprint relative to the one below
    shift_per_lump: Pair = (0.0, 0.0)

    @model_validator(mode="after")
    def _check(self) -> "PartModel":
        if self.footprint_x[0] >= self.footprint_x[1] or self.footprint_y[0] >= self.footprint_y[1]:
            raise ValueError("footprint bounds must be (lower, upper) with lower < upper")
        return self

    @property
    def height(self) -> float:
        return self.n_layers * self.layer_thickness

    @property
    def n_lumps(self) -> int:
        return self.n_layers // self.layers_per_lump

    def footprint(self, lump: int) -> tuple[Pair, Pair]:
        sx, sy = self.shift_per_lump
        fx = (self.footprint_x[0] + lump * sx, self.footprint_x[1] + lump * sx)
        fy = (self.footprint_y[0] + lump * sy, self.footprint_y[1] + lump * sy)
        return fx, fy


class ResolutionModel(_Block):
    part_xy: float = Field(gt=0.0)
    grading_ratio: float = Field(default=1.5, ge=1.0)
    max_xy: Optional[float] = Field(default=None, gt=0.0)
    plate_dz: Optional[float] = Field(default=None, gt=0.0)
    plate_max_dz: Optional[float] = Field(default=None, gt=0.0)


class GeometryModel(_Block):
    plate: PlateModel
    part: PartModel
    resolution: ResolutionModel


class RegionsModel(_Block):
    """Material names per region; the bed uses the powder phase of its material."""

    part: str
    base: str
    bed: Optional[str] = None


class CooldownModel(_Block):
    first_dt: float = Field(default=10.0, gt=0.0)
    growth: float = Field(default=1.5, ge=1.0)
    horizon: float = Field(default=0.0, ge=0.0)
    tolerance: float = Field(default=1.0, gt=0.0)
    ambient: Optional[float] = None


class ProcessModel(_Block):
    power: float = Field(ge=0.0)
    absorption: float = Field(gt=0.0, le=1.0)
    scan_time: Optional[float] = Field(default=None, gt=0.0)
    scan_speed: Optional[float] = Field(default=None, gt=0.0)
    hatch_spacing: Optional[float] = Field(default=None, gt=0.0)
    # One value, or (odd layers, even layers) counting layers from 1
    recoat_time: Union[float, Pair]
    initial_temperature: float = 20.0
    cooldown: CooldownModel = Field(default_factory=CooldownModel)

    @model_validator(mode="after")
    def _check(self) -> "ProcessModel":
        if self.scan_time is None and (self.scan_speed is None or self.hatch_spacing is None):
            raise ValueError("give scan_time, or scan_speed together with hatch_spacing")
        recoat = self.recoat_time if isinstance(self.recoat_time, tuple) else (self.recoat_time,)
        if any(r <= 0.0 for r in recoat):
            raise ValueError("recoat times must be positive")
        return self


class VdaModel(_Block):
    variant: Literal["1E-Q1", "2E-Q1", "1E-Q2", "1E-Q1-D", "GENERAL"] = "1E-Q1-D"
    thickness: float = Field(gt=0.0)
    h_sp: float = Field(default=0.0, ge=0.0)
    h_pp: float = Field(default=0.0, ge=0.0)
    far_temperature: float = 20.0
    material: str
    phase: Literal["bulk", "powder"] = "powder"
    shape: Literal["plane", "cylinder", "sphere"] = "plane"
    radius: Optional[float] = Field(default=None, gt=0.0)
    f_volume: Optional[float] = Field(default=None, gt=0.0)
    f_surface: Optional[float] = Field(default=None, gt=0.0)
    n_elements: int = Field(default=1, ge=1)
    order: Literal[1, 2] = 1
    dirichlet: bool = False
    evaluation: Literal["closed_form", "condensed"] = "closed_form"
    face_averaged: bool = False

    @model_validator(mode="after")
    def _check(self) -> "VdaModel":
        contact = self.variant != "1E-Q1-D" and not (self.variant == "GENERAL" and self.dirichlet)
        if contact and (self.h_sp <= 0.0 or self.h_pp <= 0.0):
            raise ValueError(f"variant {self.variant} needs positive h_sp and h_pp")
        if self.shape != "plane" and self.radius is None:
            raise ValueError(f"shape {self.shape} needs a radius")
        if self.variant == "GENERAL" and self.evaluation == "closed_form":
            self.evaluation = "condensed"
        return self


class BoundaryConditionModel(_Block):
    target: FaceLabelName
    kind: Literal["newton", "radiation", "vda", "dirichlet"]
    h: float = Field(default=0.0, ge=0.0)
    ambient: TimeValue = 20.0
    emissivity: float = Field(default=0.0, ge=0.0, le=1.0)
    value: Optional[TimeValue] = None
    vda: Optional[VdaModel] = None

    @model_validator(mode="after")
    def _check(self) -> "BoundaryConditionModel":
        if self.kind == "vda" and self.vda is None:
            raise ValueError(f"vda condition on {self.target} needs a vda block")
        if self.kind != "vda" and self.vda is not None:
            raise ValueError(f"{self.kind} condition on {self.target} cannot carry a vda block")
        if self.kind == "dirichlet" and self.value is None:
            raise ValueError(f"dirichlet condition on {self.target} needs a value")
        for table in (self.ambient, self.value):
            if isinstance(table, list):
                times = [t for t, _ in table]
                if not table or any(b <= a for a, b in zip(times, times[1:])):
                    raise ValueError("time tables must be non-empty and strictly increasing")
        return self


class ProbeModel(_Block):
    name: str = Field(min_length=1, pattern=r"^[A-Za-z0-9_.\-]+$")
    position: tuple[float, float, float]


class OutputModel(_Block):
    directory: Optional[str] = None
    snapshot_interval: int = Field(default=0, ge=0)
    probes_file: str = "probes.csv"
    ledger_file: str = "energy.csv"
    summary_file: str = "summary.json"


class SolverModel(_Block):
    linear_solver: Literal["cg", "direct"] = "cg"
    cg_rtol: float = Field(default=1e-9, gt=0.0)
    picard_tol: float = Field(default=1e-6, gt=0.0)
    picard_max_iterations: int = Field(default=25, ge=1)


class CalibrationParameterModel(_Block):
    # Dotted path into the config document, e.g. "boundary_conditions.1.h"
    path: str
    lower: float
    upper: float
    initial: float

    @model_validator(mode="after")
    def _check(self) -> "CalibrationParameterModel":
        if not self.lower < self.upper:
            raise ValueError(f"{self.path}: lower bound must be below upper bound")
        if not self.lower <= self.initial <= self.upper:
            raise ValueError(f"{self.path}: initial value outside bounds")
        return self


class CalibrationModel(_Block):
    reference: str
    parameters: list[CalibrationParameterModel] = Field(min_length=1)
    calibration_probes: list[str] = Field(min_length=1)
    validation_probes: list[str] = []
    window: Optional[Pair] = None
    step0: float = Field(default=0.25, gt=0.0)
    shrink: float = Field(default=0.5, gt=0.0, lt=1.0)
    tol: float = Field(default=1e-3, gt=0.0)
    max_evals: int = Field(default=200, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "CalibrationModel":
        if set(self.calibration_probes) & set(self.validation_probes):
            raise ValueError("calibration and validation probes must be disjoint")
        return self


class SimulationConfig(_Block):
    schema_version: str = SCHEMA_VERSION
    variant: ModelVariant
    geometry: GeometryModel
    materials: dict[str, MaterialModel]
    regions: RegionsModel
    process: ProcessModel
    boundary_conditions: list[BoundaryConditionModel] = []
    probes: list[ProbeModel] = []
    output: OutputModel = Field(default_factory=OutputModel)
    solver: SolverModel = Field(default_factory=SolverModel)
    calibration: Optional[CalibrationModel] = None

    @property
    def mesh_variant(self) -> str:
        return MESH_VARIANT[self.variant]

    @model_validator(mode="after")
    def _check_references(self) -> "SimulationConfig":
        needed = {"regions.part": self.regions.part, "regions.base": self.regions.base}
        if self.variant == "HF":
            if self.regions.bed is None:
                raise ValueError("variant HF needs regions.bed")
            needed["regions.bed"] = self.regions.bed
        for i, bc in enumerate(self.boundary_conditions):
            if bc.vda is not None:
                needed[f"boundary_conditions.{i}.vda.material"] = bc.vda.material
        for where, name in needed.items():
            if name not in self.materials:
                raise ValueError(f"{where}: unknown material {name!r}")
        if self.variant == "HF" and self.materials[self.regions.bed].powder is None:  # type: ignore[index]
            raise ValueError(f"material {self.regions.bed!r} has no powder block for the bed")
        for bc in self.boundary_conditions:
            if bc.vda is not None and bc.vda.phase == "powder":
                if self.materials[bc.vda.material].powder is None:
                    raise ValueError(f"material {bc.vda.material!r} has no powder block")

        allowed = VARIANT_LABELS[self.variant]
        for bc in self.boundary_conditions:
            if bc.target not in allowed:
                raise ValueError(f"variant {self.variant} has no {bc.target} boundary")
        kinds = {bc.kind for bc in self.boundary_conditions}
        if self.variant.startswith("VDA") and "vda" not in kinds:
            raise ValueError(f"variant {self.variant} needs at least one vda condition")
        if self.variant in ("HF", "HTC-PP") and "vda" in kinds:
            raise ValueError(f"variant {self.variant} does not take vda conditions")

        names = [p.name for p in self.probes]
        if len(names) != len(set(names)):
            raise ValueError("probe names must be unique")
        for probe in self.probes:
            if not self._inside_final_volume(probe.position):
                raise ValueError(f"probe {probe.name} lies outside the final part/base volume")
        if self.calibration is not None:
            used = self.calibration.calibration_probes + self.calibration.validation_probes
            missing = [n for n in used if n not in names]
            if missing:
                raise ValueError(f"calibration refers to unknown probes {missing}")
        return self

    def _inside_final_volume(self, point: tuple[float, float, float]) -> bool:
        x, y, z = point
        part = self.geometry.part
        plate = self.geometry.plate
        eps = 1e-12
        if self.mesh_variant != "P":
            in_plate = plate.x[0] - eps <= x <= plate.x[1] + eps and plate.y[0] - eps <= y <= plate.y[1] + eps
            if in_plate and -plate.thickness - eps <= z <= eps:
                return True
        if part.n_lumps == 0:
            return False
        lump_h = part.height / part.n_lumps
        lump = min(max(int(z // lump_h), 0), part.n_lumps - 1) if z >= -eps else -1
        if lump < 0 or z > part.height + eps:
            return False
        candidates = {lump}
        # a point on a lump interface belongs to both lumps
        if abs(z - lump * lump_h) <= eps and lump > 0:
            candidates.add(lump - 1)
        for idx in candidates:
            fx, fy = part.footprint(idx)
            if fx[0] - eps <= x <= fx[1] + eps and fy[0] - eps <= y <= fy[1] + eps:
                return True
        return False
