# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Structured hexahedral mesh of the build volume.

The grid is a tensor product of x, y and z node coordinates. Cells carry a
region (part, base, bed or void) and an activation flag; part and bed cells
belong to a layer lump and are switched on lump by lump.

Assumptions:
- Cell index is i + nx * (j + ny * k); node index is i + (nx+1) * (j + (ny+1) * k)
- Local hex node b sits at offsets (b & 1, b >> 1 & 1, b >> 2 & 1)
- Local faces are ordered -x, +x, -y, +y, -z, +z
- The plate top is z = 0; the part grows towards +z
- The boundary set is kept sorted by face key (cell * 6 + face)
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

import numpy as np

from vdatherm.contract.models import GeometryModel
from vdatherm.logging_config import get_logger

logger = get_logger(__name__)


class MeshError(ValueError):
    """Raised when a mesh cannot be built or is used inconsistently."""


class ActivationError(MeshError):
    """Raised when layers are activated out of order or twice."""


class Region(IntEnum):
    VOID = 0
    PART = 1
    BASE = 2
    BED = 3


class FaceLabel(IntEnum):
    AIR_PART = 0
    AIR_BED = 1
    LAT_BED = 2
    LAT_BASE = 3
    DOWN = 4
    BED_PART = 5
    BED_BASE = 6
    BASE_PART = 7

    @property
    def key(self) -> str:
        return self.name.lower()


MESH_VARIANTS = ("HF", "PP", "P")

VARIANT_FACE_LABELS: dict[str, tuple[FaceLabel, ...]] = {
    "HF": (FaceLabel.AIR_PART, FaceLabel.AIR_BED, FaceLabel.LAT_BED, FaceLabel.LAT_BASE,
           FaceLabel.DOWN),
    "PP": (FaceLabel.AIR_PART, FaceLabel.BED_PART, FaceLabel.BED_BASE, FaceLabel.LAT_BASE,
           FaceLabel.DOWN),
    "P": (FaceLabel.AIR_PART, FaceLabel.BED_PART, FaceLabel.BASE_PART),
}

FACE_NODES = np.array(
    [[0, 2, 4, 6], [1, 3, 5, 7], [0, 1, 4, 5], [2, 3, 6, 7], [0, 1, 2, 3], [4, 5, 6, 7]]
)
FACE_NORMALS = np.array(
    [[-1, 0, 0], [1, 0, 0], [0, -1, 0], [0, 1, 0], [0, 0, -1], [0, 0, 1]], dtype=float
)
LOCAL_OFFSETS = np.array([[b & 1, (b >> 1) & 1, (b >> 2) & 1] for b in range(8)])

_Z_TOL = 1e-12


@dataclass(frozen=True)
class BoundaryFaceSet:
    """Boundary faces sharing one label."""

    label: str
    cells: np.ndarray
    faces: np.ndarray
    areas: np.ndarray
    normals: np.ndarray

    @property
    def keys(self) -> np.ndarray:
        return self.cells * 6 + self.faces

    def __len__(self) -> int:
        return int(self.cells.size)


class StructuredMesh:
    """Axis-aligned hexahedral grid with regions, layers and activation state.

    Only `active`, the layer counter and the boundary set change after
    construction, and only through `activate_layer`.
    """

    def __init__(
        self,
        x_coords: np.ndarray,
        y_coords: np.ndarray,
        z_coords: np.ndarray,
        region: np.ndarray,
        layer_index: np.ndarray,
        variant: str = "PP",
    ) -> None:
        coords = [np.asarray(c, dtype=float) for c in (x_coords, y_coords, z_coords)]
        for axis, c in zip("xyz", coords):
            if c.ndim != 1 or c.size < 2:
                raise MeshError(f"{axis} coordinates need at least two nodes")
            if np.any(np.diff(c) <= 0.0):
                raise MeshError(f"{axis} coordinates must be strictly increasing")
        self.x, self.y, self.z = coords
        self.shape = (self.x.size - 1, self.y.size - 1, self.z.size - 1)
        self.n_cells = int(np.prod(self.shape))
        self.region = np.asarray(region, dtype=np.int8).ravel()
        self.layer_index = np.asarray(layer_index, dtype=np.int64).ravel()
        if self.region.size != self.n_cells or self.layer_index.size != self.n_cells:
            raise MeshError("region and layer arrays must have one entry per cell")

        layered = np.isin(self.region, (Region.PART, Region.BED))
        if np.any(self.layer_index[layered] < 0):
            raise MeshError("every part and bed cell needs a layer index")
        self.n_layers = int(self.layer_index[layered].max() + 1) if layered.any() else 0

        nx, ny, _ = self.shape
        cells = np.arange(self.n_cells)
        self.i = cells % nx
        self.j = (cells // nx) % ny
        self.k = cells // (nx * ny)
        self.dx = np.diff(self.x)[self.i]
        self.dy = np.diff(self.y)[self.j]
        self.dz = np.diff(self.z)[self.k]
        self.cell_nodes = self.node_index(
            self.i[:, None] + LOCAL_OFFSETS[:, 0],
            self.j[:, None] + LOCAL_OFFSETS[:, 1],
            self.k[:, None] + LOCAL_OFFSETS[:, 2],
        )
        part_or_bed_k = self.k[layered]
        self.part_base_k = int(part_or_bed_k.min()) if part_or_bed_k.size else self.shape[2]

        self.variant = variant
        self.active = self.region == Region.BASE
        self.next_layer = 0
        self.build_height = float(self.z[self.part_base_k])
        _check_variant(self, variant)
        self._face_keys, self._face_labels = _classify_cells(self, np.flatnonzero(self.active))

    # -- indexing -----------------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return (self.shape[0] + 1) * (self.shape[1] + 1) * (self.shape[2] + 1)

    def node_index(self, i: np.ndarray, j: np.ndarray, k: np.ndarray) -> np.ndarray:
        nx, ny, _ = self.shape
        return i + (nx + 1) * (j + (ny + 1) * k)

    def cell_index(self, i: np.ndarray, j: np.ndarray, k: np.ndarray) -> np.ndarray:
        nx, ny, _ = self.shape
        return i + nx * (j + ny * k)

    def node_coordinates(self) -> np.ndarray:
        zz, yy, xx = np.meshgrid(self.z, self.y, self.x, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])

    @property
    def volumes(self) -> np.ndarray:
        return self.dx * self.dy * self.dz

    def layer_cells(self, layer: int, region: Region = Region.PART) -> np.ndarray:
        return np.flatnonzero((self.layer_index == layer) & (self.region == region))

    def active_nodes(self) -> np.ndarray:
        return np.unique(self.cell_nodes[self.active])

    # -- boundary -----------------------------------------------------------------

    @property
    def face_keys(self) -> np.ndarray:
        return self._face_keys

    @property
    def face_labels(self) -> np.ndarray:
        return self._face_labels

    def face_set(self, label: FaceLabel) -> BoundaryFaceSet:
        keys = self._face_keys[self._face_labels == label]
        return _face_set(self, label, keys)

    def boundary(self) -> list[BoundaryFaceSet]:
        """Current boundary faces grouped by the labels of the mesh variant."""
        return [self.face_set(label) for label in VARIANT_FACE_LABELS[self.variant]]

    # -- queries ------------------------------------------------------------------

    def locate(self, point: tuple[float, float, float]) -> tuple[int, np.ndarray, np.ndarray]:
        """Containing cell, its 8 node ids and trilinear weights for `point`.

        Raises:
            MeshError: if the point is outside the grid.
        """
        idx = []
        local = []
        for value, coords in zip(point, (self.x, self.y, self.z)):
            span = coords[-1] - coords[0]
            if value < coords[0] - 1e-9 * span or value > coords[-1] + 1e-9 * span:
                raise MeshError(f"point {point} lies outside the mesh")
            c = int(np.clip(np.searchsorted(coords, value, side="right") - 1, 0, coords.size - 2))
            idx.append(c)
            local.append(np.clip((value - coords[c]) / (coords[c + 1] - coords[c]), 0.0, 1.0))
        cell = int(self.cell_index(*(np.array([v]) for v in idx))[0])
        xi = np.array(local)
        weights = np.prod(np.where(LOCAL_OFFSETS == 1, xi, 1.0 - xi), axis=1)
        return cell, self.cell_nodes[cell].copy(), weights

    def summary(self) -> dict:
        """Element and node counts reported after construction and in run summaries."""
        counts = {r.name.lower(): int(np.count_nonzero(self.region == r)) for r in Region}
        return {
            "variant": self.variant,
            "grid": list(self.shape),
            "cells": self.n_cells,
            "nodes": self.n_nodes,
            "part_cells": counts["part"],
            "base_cells": counts["base"],
            "bed_cells": counts["bed"],
            "void_cells": counts["void"],
            "layers": self.n_layers,
            "active_cells": int(np.count_nonzero(self.active)),
            "active_nodes": int(self.active_nodes().size) if self.active.any() else 0,
        }


def _check_variant(mesh: StructuredMesh, variant: str) -> None:
    if variant not in MESH_VARIANTS:
        raise MeshError(f"unknown mesh variant {variant!r}")
    has_bed = bool(np.any(mesh.region == Region.BED))
    has_base = bool(np.any(mesh.region == Region.BASE))
    if variant == "HF" and not (has_bed and has_base):
        raise MeshError("variant HF needs base and bed regions")
    if variant == "PP" and (has_bed or not has_base):
        raise MeshError("variant PP needs a base region and no bed region")
    if variant == "P" and (has_bed or has_base):
        raise MeshError("variant P has neither base nor bed regions")


def _face_set(mesh: StructuredMesh, label: FaceLabel, keys: np.ndarray) -> BoundaryFaceSet:
    cells = keys // 6
    faces = keys % 6
    axis = faces // 2
    sizes = np.column_stack([mesh.dx[cells], mesh.dy[cells], mesh.dz[cells]])
    areas = np.prod(sizes, axis=1) / sizes[np.arange(cells.size), axis] if cells.size else np.zeros(0)
    return BoundaryFaceSet(
        label=label.key,
        cells=cells,
        faces=faces,
        areas=areas,
        normals=FACE_NORMALS[faces],
    )


def _classify_cells(
    mesh: StructuredMesh, cells: np.ndarray, variant: Optional[str] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Exposed faces of the given active cells and their labels, sorted by key."""
    variant = variant or mesh.variant
    if cells.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int8)
    ijk = (mesh.i[cells], mesh.j[cells], mesh.k[cells])
    out_keys = []
    out_labels = []
    for face in range(6):
        axis, step = face // 2, (1 if face % 2 else -1)
        moved = [a.copy() for a in ijk]
        moved[axis] = moved[axis] + step
        inside = (moved[axis] >= 0) & (moved[axis] < mesh.shape[axis])
        moved[axis] = np.clip(moved[axis], 0, mesh.shape[axis] - 1)
        neighbor = mesh.cell_index(*moved)
        exposed = ~inside | ~mesh.active[neighbor]
        sel = cells[exposed]
        out_keys.append(sel * 6 + face)
        out_labels.append(_label(mesh, sel, face, variant))
    keys = np.concatenate(out_keys)
    labels = np.concatenate(out_labels)
    order = np.argsort(keys, kind="stable")
    return keys[order], labels[order]


def _label(mesh: StructuredMesh, cells: np.ndarray, face: int, variant: str) -> np.ndarray:
    region = mesh.region[cells]
    labels = np.full(cells.size, -1, dtype=np.int8)
    top, bottom = face == 5, face == 4
    hf = variant == "HF"

    part = region == Region.PART
    if hf:
        labels[part] = FaceLabel.AIR_PART if top else FaceLabel.LAT_BED
    elif top:
        at_build_top = np.abs(mesh.z[mesh.k[cells] + 1] - mesh.build_height) <= _Z_TOL
        labels[part] = np.where(at_build_top[part], FaceLabel.AIR_PART, FaceLabel.BED_PART)
    elif bottom and variant == "P":
        on_plate = mesh.k[cells] == mesh.part_base_k
        labels[part] = np.where(on_plate[part], FaceLabel.BASE_PART, FaceLabel.BED_PART)
    else:
        labels[part] = FaceLabel.BED_PART

    bed = region == Region.BED
    labels[bed] = FaceLabel.AIR_BED if top else (FaceLabel.DOWN if bottom else FaceLabel.LAT_BED)

    base = region == Region.BASE
    if top:
        labels[base] = FaceLabel.AIR_BED if hf else FaceLabel.BED_BASE
    else:
        labels[base] = FaceLabel.DOWN if bottom else FaceLabel.LAT_BASE
    return labels


def classify_boundary(mesh: StructuredMesh, variant: Optional[str] = None) -> list[BoundaryFaceSet]:
    """Label every boundary face of the current active domain from scratch.

    Args:
        mesh: built mesh in any activation state
        variant: HF, PP or P; defaults to the mesh's own variant

    The mesh is only read.

    Raises:
        MeshError: if the variant requests a region the mesh lacks.
    """
    variant = variant or mesh.variant
    _check_variant(mesh, variant)
    keys, labels = _classify_cells(mesh, np.flatnonzero(mesh.active), variant)
    return [_face_set(mesh, label, keys[labels == label]) for label in VARIANT_FACE_LABELS[variant]]


def activate_layer(mesh: StructuredMesh, layer: int) -> np.ndarray:
    """Switch on the part (and, for HF, bed) cells of `layer`.

    The boundary set is updated locally: faces of the new cells, of their
    neighbors and of the previous top surface are reclassified.

    Returns:
        np.ndarray: ids of the newly active cells

    Raises:
        ActivationError: on double activation or a gap in the sequence.
    """
    if layer < mesh.next_layer:
        raise ActivationError(f"layer {layer} is already active")
    if layer > mesh.next_layer:
        raise ActivationError(f"layer {layer} activated before layer {mesh.next_layer}")
    if layer >= mesh.n_layers:
        raise ActivationError(f"layer {layer} does not exist (mesh has {mesh.n_layers})")

    new = np.flatnonzero(
        (mesh.layer_index == layer)
        & np.isin(mesh.region, (Region.PART, Region.BED))
        & ~mesh.active
    )
    old_top = mesh._face_keys[mesh._face_labels == FaceLabel.AIR_PART] // 6

    mesh.active[new] = True
    mesh.next_layer = layer + 1
    part_new = new[mesh.region[new] == Region.PART]
    if part_new.size:
        mesh.build_height = max(mesh.build_height, float(mesh.z[mesh.k[part_new] + 1].max()))

    neighbors = []
    for face in range(6):
        axis, step = face // 2, (1 if face % 2 else -1)
        moved = [mesh.i[new], mesh.j[new], mesh.k[new]]
        moved[axis] = moved[axis] + step
        inside = (moved[axis] >= 0) & (moved[axis] < mesh.shape[axis])
        neighbors.append(mesh.cell_index(*(m[inside] for m in moved)))
    affected = np.unique(np.concatenate([new, old_top, *neighbors]))
    affected = affected[mesh.active[affected]]

    keep = ~np.isin(mesh._face_keys // 6, affected)
    fresh_keys, fresh_labels = _classify_cells(mesh, affected)
    keys = np.concatenate([mesh._face_keys[keep], fresh_keys])
    labels = np.concatenate([mesh._face_labels[keep], fresh_labels])
    order = np.argsort(keys, kind="stable")
    mesh._face_keys, mesh._face_labels = keys[order], labels[order]
    return new


def _graded_sizes(length: float, first: float, ratio: float, max_size: Optional[float]) -> np.ndarray:
    """Cell sizes growing geometrically from `first`, rescaled to cover `length`."""
    if length <= 1e-12:
        return np.zeros(0)
    cap = max_size if max_size is not None else np.inf
    sizes = []
    size = min(first, cap)
    total = 0.0
    while total < length * (1.0 - 1e-12):
        sizes.append(size)
        total += size
        size = min(size * ratio, cap)
    return np.asarray(sizes) * (length / total)


def _axis_coordinates(
    lo: float, hi: float, box: tuple[float, float], h: float, ratio: float,
    max_size: Optional[float], graded: bool,
) -> np.ndarray:
    n = max(1, int(round((hi - lo) / h)))
    fine = np.linspace(lo, hi, n + 1)
    if not graded:
        return fine
    step = (hi - lo) / n
    left = _graded_sizes(lo - box[0], step * ratio, ratio, max_size)
    right = _graded_sizes(box[1] - hi, step * ratio, ratio, max_size)
    left_nodes = lo - np.cumsum(left)[::-1]
    right_nodes = hi + np.cumsum(right)
    if left.size:
        left_nodes[0] = box[0]
    if right.size:
        right_nodes[-1] = box[1]
    return np.concatenate([left_nodes, fine, right_nodes])


def _snap(coords: np.ndarray, value: float) -> int:
    return int(np.argmin(np.abs(coords - value)))


def build_mesh(geometry: GeometryModel, variant: str) -> StructuredMesh:
    """Build the structured mesh for a part on a plate.

    Args:
        geometry: plate box, part footprints and resolution
        variant: HF (part, plate and bed), PP (part and plate) or P (part only)

    Returns:
        StructuredMesh: base cells active, part/bed cells waiting for activation

    Raises:
        MeshError: zero layers, a lump thickness not dividing the part height,
            or a footprint outside the plate.
    """
    if variant not in MESH_VARIANTS:
        raise MeshError(f"unknown mesh variant {variant!r}")
    part, plate, res = geometry.part, geometry.plate, geometry.resolution
    if part.n_layers == 0:
        raise MeshError("part has zero layers")
    if part.n_layers % part.layers_per_lump:
        raise MeshError(
            f"layer lump of {part.layers_per_lump} layers does not divide "
            f"{part.n_layers} layers of the part height"
        )
    n_lumps = part.n_lumps
    footprints = [part.footprint(lump) for lump in range(n_lumps)]
    eps = 1e-9
    for lump, (fx, fy) in enumerate(footprints):
        if (fx[0] < plate.x[0] - eps or fx[1] > plate.x[1] + eps
                or fy[0] < plate.y[0] - eps or fy[1] > plate.y[1] + eps):
            raise MeshError(f"footprint of lump {lump} exceeds the plate bounds")

    graded = variant != "P"
    lo_x = min(fx[0] for fx, _ in footprints)
    hi_x = max(fx[1] for fx, _ in footprints)
    lo_y = min(fy[0] for _, fy in footprints)
    hi_y = max(fy[1] for _, fy in footprints)
    x = _axis_coordinates(lo_x, hi_x, plate.x, res.part_xy, res.grading_ratio, res.max_xy, graded)
    y = _axis_coordinates(lo_y, hi_y, plate.y, res.part_xy, res.grading_ratio, res.max_xy, graded)

    z_part = np.linspace(0.0, part.height, n_lumps + 1)
    if graded:
        dz = _graded_sizes(
            plate.thickness, res.plate_dz or res.part_xy, res.grading_ratio, res.plate_max_dz
        )
        z_plate = -np.cumsum(dz)[::-1]
        z_plate[0] = -plate.thickness
        z = np.concatenate([z_plate, z_part])
    else:
        z = z_part
    k0 = z.size - 1 - n_lumps

    nx, ny, nz = x.size - 1, y.size - 1, z.size - 1
    region = np.full((nz, ny, nx), Region.VOID, dtype=np.int8)
    layer = np.full((nz, ny, nx), -1, dtype=np.int64)
    region[:k0] = Region.BASE
    for lump, (fx, fy) in enumerate(footprints):
        i0, i1 = _snap(x, fx[0]), _snap(x, fx[1])
        j0, j1 = _snap(y, fy[0]), _snap(y, fy[1])
        if i1 <= i0 or j1 <= j0:
            raise MeshError(f"footprint of lump {lump} collapses on the grid")
        kk = k0 + lump
        if variant == "HF":
            region[kk] = Region.BED
        region[kk, j0:j1, i0:i1] = Region.PART
        layer[kk] = np.where(region[kk] != Region.VOID, lump, -1)

    mesh = StructuredMesh(x, y, z, region.ravel(), layer.ravel(), variant=variant)
    logger.info("mesh_built", **mesh.summary())
    return mesh
