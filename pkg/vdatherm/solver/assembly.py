# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Backward-Euler system assembly on the active domain.

For a step of length dt the system over active nodes is

    (M/dt + K + H) T = M/dt T_prev + F + g

with M the lumped capacity, K the conduction matrix (trilinear hexahedra,
2x2x2 Gauss points), H and g the Robin terms of the boundary faces (2x2 Gauss
points per face) and F the volumetric source. Capacity, conductivity and
radiation coefficients are evaluated at the previous Picard iterate; VDA
coefficients come from the stored wall state and are fixed for the step.

Assumptions:
- Cells are axis-aligned boxes, so element matrices reduce to three scaled
  reference matrices per Gauss point
- Element chunks are processed in a fixed order and concatenated, so the
  assembled matrix does not depend on the thread count
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from vdatherm.logging_config import get_logger
from vdatherm.materials import MaterialTable
from vdatherm.mesh import FACE_NODES, LOCAL_OFFSETS, VARIANT_FACE_LABELS, Region, StructuredMesh
from vdatherm.solver.fields import (
    BcKind,
    BoundaryCondition,
    HeatSource,
    SolverError,
    radiation_coefficient,
)
from vdatherm.vda import RobinCoefficients

logger = get_logger(__name__)

_GAUSS = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


def _reference_data() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Gauss point q sits at the same offsets as local node q
    xi = _GAUSS[LOCAL_OFFSETS]                                  # (8q, 3)
    own = np.where(LOCAL_OFFSETS[None, :, :] == 1, xi[:, None, :], 1.0 - xi[:, None, :])
    shape = own.prod(axis=2)                                    # (8q, 8b)
    sign = np.where(LOCAL_OFFSETS == 1, 1.0, -1.0)              # (8b, 3)
    grads = np.empty((3, 8, 8))
    for a in range(3):
        others = [c for c in range(3) if c != a]
        grads[a] = sign[None, :, a] * own[:, :, others[0]] * own[:, :, others[1]]
    outer = np.einsum("aqi,aqj->aqij", grads, grads).reshape(3, 8, 64)
    return xi, shape, outer


GAUSS_POINTS, SHAPE, GRAD_OUTER = _reference_data()

# Face Gauss points (a, b) in the face's two tangential axes; face nodes of
# FACE_NODES sit at (0,0), (1,0), (0,1), (1,1) in the same axes.
_FACE_XI = np.array([[_GAUSS[0], _GAUSS[0]], [_GAUSS[1], _GAUSS[0]],
                     [_GAUSS[0], _GAUSS[1]], [_GAUSS[1], _GAUSS[1]]])
_FACE_OFF = np.array([[0, 0], [1, 0], [0, 1], [1, 1]])
FACE_SHAPE = np.where(_FACE_OFF[None] == 1, _FACE_XI[:, None], 1.0 - _FACE_XI[:, None]).prod(axis=2)
FACE_OUTER = np.einsum("pi,pj->pij", FACE_SHAPE, FACE_SHAPE).reshape(4, 16)


@dataclass(frozen=True)
class FaceData:
    label: str
    keys: np.ndarray
    areas: np.ndarray
    dofs: np.ndarray    # (faces, 4) local dof ids

    def __len__(self) -> int:
        return int(self.keys.size)


@dataclass
class AssemblyContext:
    """Index maps of one activation state."""

    cells: np.ndarray
    dofs: np.ndarray
    local: np.ndarray
    cell_dofs: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    faces: dict[str, FaceData]

    @property
    def n_dofs(self) -> int:
        return int(self.dofs.size)


def build_context(mesh: StructuredMesh) -> AssemblyContext:
    """Local numbering of the active nodes and boundary faces of `mesh`."""
    cells = np.flatnonzero(mesh.active)
    dofs = mesh.active_nodes()
    local = np.full(mesh.n_nodes, -1, dtype=np.int64)
    local[dofs] = np.arange(dofs.size)
    cell_dofs = local[mesh.cell_nodes[cells]]
    rows = np.repeat(cell_dofs, 8, axis=1).ravel()
    cols = np.tile(cell_dofs, (1, 8)).ravel()
    faces = {}
    for face_set in mesh.boundary():
        nodes = mesh.cell_nodes[face_set.cells[:, None], FACE_NODES[face_set.faces]]
        faces[face_set.label] = FaceData(face_set.label, face_set.keys, face_set.areas, local[nodes])
    return AssemblyContext(cells, dofs, local, cell_dofs, rows, cols, faces)


@dataclass
class RobinTerm:
    """Robin coefficients of one condition at the face Gauss points of its label."""

    label: str
    faces: FaceData
    h: np.ndarray        # (faces, 4)
    t_loss: np.ndarray   # (faces, 4)


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    mass: np.ndarray
    source: np.ndarray
    dt: float
    dirichlet_dofs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    dirichlet_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dirichlet_labels: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=object))
    robin: list[RobinTerm] = field(default_factory=list)

    @property
    def n(self) -> int:
        return int(self.rhs.size)


def face_temperatures(faces: FaceData, x: np.ndarray) -> np.ndarray:
    """Temperature at the 2x2 Gauss points of each face, (faces, 4)."""
    return x[faces.dofs] @ FACE_SHAPE.T


class Assembler:
    """Builds step systems for the current activation state of a mesh."""

    def __init__(
        self,
        mesh: StructuredMesh,
        materials: Mapping[Region, MaterialTable],
        conditions: Sequence[BoundaryCondition],
        threads: int = 1,
    ) -> None:
        self.mesh = mesh
        self.materials = dict(materials)
        self.conditions = list(conditions)
        self.threads = max(1, int(threads))
        self._pool = ThreadPoolExecutor(self.threads) if self.threads > 1 else None
        labels = {label.key for label in VARIANT_FACE_LABELS[mesh.variant]}
        for bc in self.conditions:
            if bc.target not in labels:
                raise ValueError(f"mesh variant {mesh.variant} has no {bc.target} boundary")
        covered = {bc.target for bc in self.conditions}
        uncovered = sorted(labels - covered)
        if uncovered:
            logger.warning("insulated_labels", labels=uncovered)
        self.context: Optional[AssemblyContext] = None
        self.refresh()

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def refresh(self) -> AssemblyContext:
        """Rebuild index maps after activation and carry VDA state over."""
        self.context = build_context(self.mesh)
        for bc in self.conditions:
            if bc.vda is not None:
                bc.vda.sync(self.context.faces[bc.target].keys)
        return self.context

    @property
    def nonlinear(self) -> bool:
        """True when any coefficient depends on the current temperature."""
        if any(bc.radiates for bc in self.conditions):
            return True
        return any(m.is_temperature_dependent for m in self.materials.values())

    # -- elements -----------------------------------------------------------------

    def _element_chunk(self, idx: np.ndarray, t_cell: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        mesh = self.mesh
        cells = self.context.cells[idx]
        dx, dy, dz = mesh.dx[cells], mesh.dy[cells], mesh.dz[cells]
        vol = dx * dy * dz
        t_q = t_cell @ SHAPE.T
        k_q = np.empty_like(t_q)
        c_q = np.empty_like(t_q)
        regions = mesh.region[cells]
        for region in np.unique(regions):
            sel = regions == region
            table = self.materials[Region(int(region))]
            k_q[sel] = table.conductivity(t_q[sel])
            c_q[sel] = table.capacity(t_q[sel])
        ke = ((k_q * (dy * dz / dx / 8.0)[:, None]) @ GRAD_OUTER[0]
              + (k_q * (dx * dz / dy / 8.0)[:, None]) @ GRAD_OUTER[1]
              + (k_q * (dx * dy / dz / 8.0)[:, None]) @ GRAD_OUTER[2])
        me = (c_q * (vol / 8.0)[:, None]) @ SHAPE
        return ke, me

    def _elements(self, t_cell: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = t_cell.shape[0]
        chunks = np.array_split(np.arange(n), min(self.threads, n))
        if self._pool is None or len(chunks) == 1:
            return self._element_chunk(np.arange(n), t_cell)
        parts = list(self._pool.map(lambda c: self._element_chunk(c, t_cell[c]), chunks))
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    def gauss_coordinates(self, cells: np.ndarray) -> np.ndarray:
        mesh = self.mesh
        origin = np.column_stack([mesh.x[mesh.i[cells]], mesh.y[mesh.j[cells]], mesh.z[mesh.k[cells]]])
        size = np.column_stack([mesh.dx[cells], mesh.dy[cells], mesh.dz[cells]])
        return origin[:, None, :] + GAUSS_POINTS[None] * size[:, None, :]

    def _source(self, source: Optional[HeatSource], time: float) -> np.ndarray:
        ctx = self.context
        out = np.zeros(ctx.n_dofs)
        if source is None:
            return out
        pos = np.full(self.mesh.n_cells, -1, dtype=np.int64)
        pos[ctx.cells] = np.arange(ctx.cells.size)
        cells = np.asarray(source.cells)
        cells = cells[pos[cells] >= 0]
        if cells.size == 0:
            return out
        density = source.evaluate(self.gauss_coordinates(cells), time)
        vol = self.mesh.volumes[cells]
        fe = (density * (vol / 8.0)[:, None]) @ SHAPE
        np.add.at(out, ctx.cell_dofs[pos[cells]], fe)
        return out

    # -- boundary -----------------------------------------------------------------

    def wall_coefficients(self, dt: float) -> dict[int, RobinCoefficients]:
        """VDA coefficients of the step, keyed by condition index."""
        return {
            i: bc.vda.coefficients(dt)
            for i, bc in enumerate(self.conditions)
            if bc.kind is BcKind.VDA and bc.vda is not None
        }

    def _robin_terms(
        self, x: np.ndarray, time: float, walls: Mapping[int, RobinCoefficients]
    ) -> list[RobinTerm]:
        terms = []
        for i, bc in enumerate(self.conditions):
            if not bc.is_robin:
                continue
            faces = self.context.faces[bc.target]
            shape = (len(faces), 4)
            if bc.kind is BcKind.VDA:
                coeffs = walls[i]
                h = np.broadcast_to(coeffs.h_loss, shape).copy()
                t_loss = np.broadcast_to(coeffs.t_loss, shape).copy()
            else:
                ambient = bc.ambient(time)
                h = np.full(shape, bc.h if bc.kind is BcKind.NEWTON else 0.0)
                if bc.radiates:
                    h = h + radiation_coefficient(bc.emissivity, face_temperatures(faces, x), ambient)
                t_loss = np.full(shape, ambient)
            terms.append(RobinTerm(bc.target, faces, h, t_loss))
        return terms

    def _dirichlet(self, time: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        values: dict[int, float] = {}
        labels: dict[int, str] = {}
        for bc in self.conditions:
            if bc.kind is not BcKind.DIRICHLET:
                continue
            if bc.value is None:
                raise SolverError(f"{bc.target}: dirichlet condition has no value")
            value = bc.value(time)
            for dof in np.unique(self.context.faces[bc.target].dofs):
                values[int(dof)] = value
                labels.setdefault(int(dof), bc.target)
        dofs = np.array(sorted(values), dtype=np.int64)
        return (
            dofs,
            np.array([values[d] for d in dofs], dtype=float),
            np.array([labels[d] for d in dofs], dtype=object),
        )

    # -- system -------------------------------------------------------------------

    def assemble(
        self,
        x_star: np.ndarray,
        x_prev: np.ndarray,
        dt: float,
        time: float,
        source: Optional[HeatSource] = None,
        walls: Optional[Mapping[int, RobinCoefficients]] = None,
    ) -> LinearSystem:
        """System for the step ending at `time`, properties taken at `x_star`.

        Args:
            x_star: previous Picard iterate on the active dofs
            x_prev: temperatures at the start of the step on the active dofs
            dt: step length, s
            time: end-of-step time, s (ambient and Dirichlet tables)
            source: volumetric heat source
            walls: VDA coefficients of the step from `wall_coefficients`
        """
        if dt <= 0.0:
            raise ValueError("time step must be positive")
        ctx = self.context
        n = ctx.n_dofs
        if n == 0:
            raise SolverError("active domain is empty")
        ke, me = self._elements(x_star[ctx.cell_dofs])
        mass = np.bincount(ctx.cell_dofs.ravel(), weights=me.ravel(), minlength=n)
        robin = self._robin_terms(x_star, time, walls or {})

        source_vec = self._source(source, time)
        rows = [ctx.rows]
        cols = [ctx.cols]
        data = [ke.ravel()]
        rhs = mass / dt * x_prev + source_vec
        for term in robin:
            if len(term.faces) == 0:
                continue
            w = term.h * (term.faces.areas / 4.0)[:, None]
            data.append((w @ FACE_OUTER).ravel())
            rows.append(np.repeat(term.faces.dofs, 4, axis=1).ravel())
            cols.append(np.tile(term.faces.dofs, (1, 4)).ravel())
            np.add.at(rhs, term.faces.dofs, (w * term.t_loss) @ FACE_SHAPE)
        matrix = sp.csr_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        )
        matrix = (matrix + sp.diags(mass / dt)).tocsr()
        d_dofs, d_values, d_labels = self._dirichlet(time)
        return LinearSystem(matrix, rhs, mass, source_vec, dt, d_dofs, d_values, d_labels, robin)


def energy_balance(system: LinearSystem, x: np.ndarray, x_prev: np.ndarray) -> dict[str, float]:
    """Step energy terms in J: input, boundary loss per label, stored change, residual.

    Boundary losses are positive when heat leaves the domain.
    """
    dt = system.dt
    e_input = dt * float(system.source.sum())
    losses: dict[str, float] = {}
    for term in system.robin:
        if len(term.faces) == 0:
            losses.setdefault(term.label, 0.0)
            continue
        w = term.h * (term.faces.areas / 4.0)[:, None]
        flux = w * (face_temperatures(term.faces, x) - term.t_loss)
        losses[term.label] = losses.get(term.label, 0.0) + dt * float(flux.sum())
    if system.dirichlet_dofs.size:
        reaction = system.matrix[system.dirichlet_dofs] @ x - system.rhs[system.dirichlet_dofs]
        for label in dict.fromkeys(system.dirichlet_labels):
            sel = system.dirichlet_labels == label
            losses[label] = losses.get(label, 0.0) - dt * float(reaction[sel].sum())
    stored = float(np.dot(system.mass, x - x_prev))
    residual = e_input - sum(losses.values()) - stored
    return {"input": e_input, "boundary": losses, "stored": stored, "residual": residual}
