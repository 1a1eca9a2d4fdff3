# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Virtual Domain Approximation kernel.

An excluded region (powder bed or build plate) is replaced, at every boundary
integration point, by a 1D wall of thickness s discretized with lagrangian
elements and a lumped mass. The wall touches the solid through a contact
coefficient h_sp and a far medium at T0 through h_pp (contact variants), or
is pinned to the solid and to T0 at its two ends (Dirichlet variants).
Eliminating the wall unknowns turns the wall into a Robin condition

    q = h_loss * (T_solid - T_loss)

whose coefficients depend only on the stored wall temperatures of the
previous step. After the 3D solve, the wall is advanced with the new solid
temperature.

Wall node 0 faces the solid, the last node faces the far medium. All
operations are vectorized over a leading axis of points.

Assumptions:
- Wall properties are frozen within a step at the mean of the stored wall
  temperatures of each point
- F_volume scales the wall capacity and conductivity; F_surface scales the
  condensed h_loss
- A new wall starts uniformly at T0
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Literal, Optional

import numpy as np
from numpy.typing import ArrayLike

from vdatherm.materials import MaterialTable


class VdaError(ValueError):
    """Raised on invalid wall parameters or a singular wall system."""


class VdaVariant(str, Enum):
    E1_Q1 = "1E-Q1"
    E2_Q1 = "2E-Q1"
    E1_Q2 = "1E-Q2"
    E1_Q1_D = "1E-Q1-D"
    GENERAL = "GENERAL"


# (elements, order, dirichlet ends)
_NAMED = {
    VdaVariant.E1_Q1: (1, 1, False),
    VdaVariant.E2_Q1: (2, 1, False),
    VdaVariant.E1_Q2: (1, 2, False),
    VdaVariant.E1_Q1_D: (1, 1, True),
}


@dataclass(frozen=True)
class VdaParams:
    """Wall definition shared by every integration point of a reduced interface."""

    thickness: float
    h_sp: float = 0.0
    h_pp: float = 0.0
    far_temperature: float = 20.0
    f_volume: float = 1.0
    f_surface: float = 1.0
    variant: VdaVariant = VdaVariant.E1_Q1_D
    n_elements: int = 1
    order: int = 1
    dirichlet: bool = False

    def __post_init__(self) -> None:
        variant = VdaVariant(self.variant)
        object.__setattr__(self, "variant", variant)
        if variant in _NAMED:
            n_el, order, dirichlet = _NAMED[variant]
            object.__setattr__(self, "n_elements", n_el)
            object.__setattr__(self, "order", order)
            object.__setattr__(self, "dirichlet", dirichlet)
        if self.thickness <= 0.0:
            raise VdaError("wall thickness must be positive")
        if self.n_elements < 1 or self.order not in (1, 2):
            raise VdaError("wall needs >= 1 element of order 1 or 2")
        if self.is_contact and (self.h_sp <= 0.0 or self.h_pp <= 0.0):
            raise VdaError(f"{variant.value} needs positive h_sp and h_pp")
        if self.f_volume <= 0.0 or self.f_surface <= 0.0:
            raise VdaError("correction factors must be positive")

    @property
    def is_contact(self) -> bool:
        return not self.dirichlet

    @property
    def n_nodes(self) -> int:
        return self.n_elements * self.order + 1


@dataclass(frozen=True)
class RobinCoefficients:
    h_loss: np.ndarray
    t_loss: np.ndarray

    def flux(self, t_solid: ArrayLike) -> np.ndarray:
        """Heat flux leaving the solid, W/m^2."""
        return self.h_loss * (np.asarray(t_solid, dtype=float) - self.t_loss)


@lru_cache(maxsize=64)
def _unit_matrices(n_elements: int, order: int, thickness: float) -> tuple[np.ndarray, np.ndarray]:
    """Lumped mass diagonal and stiffness of the wall for unit rho*c and k."""
    he = thickness / n_elements
    if order == 1:
        ke = np.array([[1.0, -1.0], [-1.0, 1.0]]) / he
        me = np.array([0.5, 0.5]) * he
    else:
        ke = np.array([[7.0, -8.0, 1.0], [-8.0, 16.0, -8.0], [1.0, -8.0, 7.0]]) / (3.0 * he)
        # row sums of the consistent quadratic mass
        me = np.array([1.0, 4.0, 1.0]) * he / 6.0
    n = n_elements * order + 1
    mass = np.zeros(n)
    stiff = np.zeros((n, n))
    for e in range(n_elements):
        sl = slice(e * order, e * order + order + 1)
        mass[sl] += me
        stiff[sl, sl] += ke
    mass.setflags(write=False)
    stiff.setflags(write=False)
    return mass, stiff


def wall_matrices(
    params: VdaParams, dt: float, capacity: ArrayLike, conductivity: ArrayLike
) -> tuple[np.ndarray, np.ndarray]:
    """Lumped mass and conduction matrices of the wall at each point.

    Args:
        params: wall definition
        dt: time step, s (checked only; the matrices do not include 1/dt)
        capacity: rho*c per point, J/(m^3 degC)
        conductivity: k per point, W/(m degC)

    Returns:
        (M, K): arrays of shape (points, n, n), per unit area

    Raises:
        VdaError: on non-positive dt or properties.
    """
    if dt <= 0.0:
        raise VdaError("time step must be positive")
    cap = np.atleast_1d(np.asarray(capacity, dtype=float)) * params.f_volume
    k = np.atleast_1d(np.asarray(conductivity, dtype=float)) * params.f_volume
    if np.any(cap <= 0.0) or np.any(k <= 0.0) or not (np.all(np.isfinite(cap)) and np.all(np.isfinite(k))):
        raise VdaError("wall properties must be positive and finite")
    mass, stiff = _unit_matrices(params.n_elements, params.order, params.thickness)
    M = cap[:, None, None] * np.diag(mass)
    K = k[:, None, None] * stiff
    return M, K


def wall_numbers(
    params: VdaParams, dt: float, capacity: ArrayLike, conductivity: ArrayLike
) -> tuple[np.ndarray, np.ndarray]:
    """m = rho*c*s/dt and k_hat = k/s with F_volume applied."""
    cap = np.asarray(capacity, dtype=float) * params.f_volume
    k = np.asarray(conductivity, dtype=float) * params.f_volume
    return cap * params.thickness / dt, k / params.thickness


def _solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise VdaError("singular wall system (check dt and wall properties)") from exc


def _system(M: np.ndarray, K: np.ndarray, dt: float, state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    A = M / dt + K
    b = np.einsum("pii,pi->pi", M, state) / dt
    return A, b


def _check_state(M: np.ndarray, state: ArrayLike) -> np.ndarray:
    s = np.asarray(state, dtype=float)
    if s.ndim == 1:
        s = np.broadcast_to(s, (M.shape[0], s.size))
    if s.shape != M.shape[:2]:
        raise VdaError(f"state shape {s.shape} does not match wall of {M.shape[1]} nodes")
    return s


def _finish(
    h_loss: np.ndarray, h_t: np.ndarray, f_surface: float, rows: Optional[int] = None
) -> RobinCoefficients:
    if rows is not None:
        h_loss = np.broadcast_to(h_loss, (rows,)).copy()
        h_t = np.broadcast_to(h_t, (rows,)).copy()
    if not (np.all(np.isfinite(h_loss)) and np.all(np.isfinite(h_t))) or np.any(h_loss <= 0.0):
        raise VdaError("condensed coefficients are not finite and positive")
    return RobinCoefficients(h_loss * f_surface, h_t / h_loss)


def condense(
    M: np.ndarray, K: np.ndarray, params: VdaParams, dt: float, state: ArrayLike
) -> RobinCoefficients:
    """Statically condense the wall into (h_loss, T_loss) per point.

    Contact walls eliminate every wall node; Dirichlet walls eliminate the
    interior nodes with the solid-side node tied to the solid and the far
    node held at T0.
    """
    s = _check_state(M, state)
    A, b = _system(M, K, dt, s)
    t0 = params.far_temperature
    n = params.n_nodes
    if params.is_contact:
        A22 = A.copy()
        A22[:, 0, 0] += params.h_sp
        A22[:, -1, -1] += params.h_pp
        b2 = b.copy()
        b2[:, -1] += params.h_pp * t0
        rhs = np.zeros((A.shape[0], n, 2))
        rhs[:, 0, 0] = 1.0
        rhs[:, :, 1] = b2
        X = _solve(A22, rhs)
        h_loss = params.h_sp - params.h_sp**2 * X[:, 0, 0]
        h_t = params.h_sp * X[:, 0, 1]
        return _finish(h_loss, h_t, params.f_surface)

    h_loss = A[:, 0, 0].copy()
    h_t = b[:, 0] - A[:, 0, -1] * t0
    if n > 2:
        inner = slice(1, n - 1)
        A_ii = A[:, inner, inner]
        rhs = np.stack([A[:, inner, 0], b[:, inner] - A[:, inner, -1] * t0], axis=-1)
        X = _solve(A_ii, rhs)
        a0i = A[:, 0, inner]
        h_loss -= np.einsum("pi,pi->p", a0i, X[..., 0])
        h_t -= np.einsum("pi,pi->p", a0i, X[..., 1])
    return _finish(h_loss, h_t, params.f_surface)


def closed_form(
    variant: VdaVariant | str,
    m: ArrayLike,
    k_hat: ArrayLike,
    h_sp: float,
    h_pp: float,
    state: ArrayLike,
    far_temperature: float,
    f_surface: float = 1.0,
) -> RobinCoefficients:
    """Explicit condensed coefficients of the named wall discretizations.

    `state` holds the stored wall temperatures, solid side first: two columns
    for 1E-Q1 and 1E-Q1-D, three (solid side, middle, far side) for 2E-Q1 and
    1E-Q2. For 1E-Q1-D the first column is the previous solid temperature.
    """
    variant = VdaVariant(variant)
    m = np.asarray(m, dtype=float)
    k = np.asarray(k_hat, dtype=float)
    s = np.atleast_2d(np.asarray(state, dtype=float))
    hs, hp, t0 = h_sp, h_pp, far_temperature
    if not (np.all(np.isfinite(m)) and np.all(np.isfinite(k)) and np.all(np.isfinite(s))):
        raise VdaError("closed form needs finite inputs")

    if variant is VdaVariant.E1_Q1_D:
        h_loss = 0.5 * m + k
        h_t = 0.5 * m * s[:, 0] + k * t0
        h_loss = np.asarray(h_loss, dtype=float)
        return _finish(h_loss, np.asarray(h_t, dtype=float), f_surface, s.shape[0])

    if variant is VdaVariant.E1_Q1:
        t_sp, t_pp = s[:, 0], s[:, 1]
        den = 4 * (hs + hp + m) * k + (4 * hs + 2 * m) * hp + 2 * m * hs + m**2
        num_h = hs * (4 * (hp + m) * k + 2 * m * hp + m**2)
        num_t = (4 * hs * hp * k * t0 + 2 * m * hs * k * t_pp
                 + (2 * k + 2 * hp + m) * m * hs * t_sp)
    elif variant is VdaVariant.E2_Q1:
        t_sp, t_m, t_pp = s[:, 0], s[:, 1], s[:, 2]
        den = (128 * (hs + hp + m) * k**2
               + ((128 * hs + 64 * m) * hp + 64 * m * hs + 24 * m**2) * k
               + (16 * m * hs + 4 * m**2) * hp + 4 * m**2 * hs + m**3)
        num_h = hs * (128 * (hp + m) * k**2 + (64 * hp + 24 * m) * m * k + 4 * m**2 * hp + m**3)
        num_t = (128 * hs * hp * k**2 * t0
                 + 32 * m * hs * k**2 * t_pp
                 + (64 * m * hs * k**2 + (32 * m * hs * hp + 8 * m**2 * hs) * k) * t_m
                 + (32 * m * hs * k**2 + (32 * m * hs * hp + 16 * m**2 * hs) * k
                    + 4 * m**2 * hs * hp + m**3 * hs) * t_sp)
    elif variant is VdaVariant.E1_Q2:
        t_sp, t_m, t_pp = s[:, 0], s[:, 1], s[:, 2]
        den = (288 * (hs + hp + m) * k**2
               + ((288 * hs + 132 * m) * hp + 132 * m * hs + 36 * m**2) * k
               + (36 * m * hs + 6 * m**2) * hp + 6 * m**2 * hs + m**3)
        num_h = hs * (288 * (hp + m) * k**2 + (132 * hp + 36 * m) * m * k + 6 * m**2 * hp + m**3)
        num_t = ((288 * k**2 - 12 * m * k) * hs * hp * t0
                 + (48 * m * hs * k**2 - 2 * m**2 * hs * k) * t_pp
                 + (192 * m * hs * k**2 + (96 * m * hs * hp + 16 * m**2 * hs) * k) * t_m
                 + (48 * m * hs * k**2 + (48 * m * hs * hp + 22 * m**2 * hs) * k
                    + 6 * m**2 * hs * hp + m**3 * hs) * t_sp)
    else:
        raise VdaError(f"no closed form for {variant.value}")
    return _finish(
        np.asarray(num_h / den, dtype=float), np.asarray(num_t / den, dtype=float), f_surface, s.shape[0]
    )


def advance_state(
    M: np.ndarray,
    K: np.ndarray,
    params: VdaParams,
    dt: float,
    state: ArrayLike,
    t_solid: ArrayLike,
) -> np.ndarray:
    """Wall temperatures at the new step given the solved solid temperature."""
    s = _check_state(M, state)
    A, b = _system(M, K, dt, s)
    t_s = np.broadcast_to(np.asarray(t_solid, dtype=float), (A.shape[0],))
    t0 = params.far_temperature
    n = params.n_nodes
    if params.is_contact:
        A[:, 0, 0] += params.h_sp
        A[:, -1, -1] += params.h_pp
        b[:, 0] += params.h_sp * t_s
        b[:, -1] += params.h_pp * t0
        return _solve(A, b[..., None])[..., 0]

    new = np.empty_like(s)
    new[:, 0] = t_s
    new[:, -1] = t0
    if n > 2:
        inner = slice(1, n - 1)
        rhs = b[:, inner] - A[:, inner, 0] * t_s[:, None] - A[:, inner, -1] * t0
        new[:, inner] = _solve(A[:, inner, inner], rhs[..., None])[..., 0]
    return new


def geometric_factors(
    shape: Literal["plane", "cylinder", "sphere"], radius: Optional[float], thickness: float
) -> tuple[float, float]:
    """(F_volume, F_surface) of a wall wrapped around a convex body of radius R."""
    s = thickness
    if s <= 0.0:
        raise VdaError("wall thickness must be positive")
    if shape == "plane":
        return 1.0, 1.0
    if radius is None or radius <= 0.0:
        raise VdaError(f"{shape} needs a positive radius")
    r = radius
    if shape == "cylinder":
        return ((r + s) ** 2 - r**2) / (2.0 * r * s), (r + s) / r
    if shape == "sphere":
        return ((r + s) ** 3 - r**3) / (3.0 * r**2 * s), (r + s) ** 2 / r**2
    raise VdaError(f"unknown shape {shape!r}")


@dataclass
class VdaWallState:
    """Stored wall temperatures of every boundary integration point.

    `keys` are the sorted face keys (cell * 6 + face) the points belong to;
    `temperatures` has shape (faces, points per face, wall nodes).
    """

    keys: np.ndarray
    temperatures: np.ndarray

    @classmethod
    def initial(cls, keys: np.ndarray, points_per_face: int, params: VdaParams) -> VdaWallState:
        temps = np.full((keys.size, points_per_face, params.n_nodes), params.far_temperature)
        return cls(np.asarray(keys, dtype=np.int64), temps)

    def resync(self, keys: np.ndarray, params: VdaParams) -> VdaWallState:
        """Carry state over to a new face set; new faces start at T0."""
        keys = np.asarray(keys, dtype=np.int64)
        fresh = VdaWallState.initial(keys, self.temperatures.shape[1], params)
        if self.keys.size and keys.size:
            pos = np.clip(np.searchsorted(self.keys, keys), 0, self.keys.size - 1)
            found = self.keys[pos] == keys
            fresh.temperatures[found] = self.temperatures[pos[found]]
        return fresh


class VdaBoundary:
    """A reduced interface: wall parameters, wall material and per-point state."""

    def __init__(
        self,
        params: VdaParams,
        material: MaterialTable,
        evaluation: Literal["closed_form", "condensed"] = "closed_form",
        face_averaged: bool = False,
    ) -> None:
        if evaluation == "closed_form" and params.variant is VdaVariant.GENERAL:
            evaluation = "condensed"
        self.params = params
        self.material = material
        self.evaluation = evaluation
        self.points_per_face = 1 if face_averaged else 4
        self.state = VdaWallState.initial(np.zeros(0, dtype=np.int64), self.points_per_face, params)
        self._matrices: Optional[tuple[np.ndarray, np.ndarray, float]] = None

    def sync(self, keys: np.ndarray) -> None:
        self.state = self.state.resync(keys, self.params)
        self._matrices = None

    def coefficients(self, dt: float) -> RobinCoefficients:
        """(h_loss, T_loss) of shape (faces, points per face) for a step of length dt."""
        temps = self.state.temperatures
        n_faces, n_pts, n_nodes = temps.shape
        flat = temps.reshape(-1, n_nodes)
        if flat.shape[0] == 0:
            self._matrices = (np.zeros((0, n_nodes, n_nodes)), np.zeros((0, n_nodes, n_nodes)), dt)
            empty = np.zeros((n_faces, n_pts))
            return RobinCoefficients(empty, empty.copy())
        mean = flat.mean(axis=1)
        capacity = self.material.capacity(mean)
        conductivity = self.material.conductivity(mean)
        M, K = wall_matrices(self.params, dt, capacity, conductivity)
        self._matrices = (M, K, dt)
        if self.evaluation == "closed_form":
            m, k_hat = wall_numbers(self.params, dt, capacity, conductivity)
            coeffs = closed_form(
                self.params.variant, m, k_hat, self.params.h_sp, self.params.h_pp,
                flat, self.params.far_temperature, self.params.f_surface,
            )
        else:
            coeffs = condense(M, K, self.params, dt, flat)
        return RobinCoefficients(
            coeffs.h_loss.reshape(n_faces, n_pts), coeffs.t_loss.reshape(n_faces, n_pts)
        )

    def advance(self, t_solid: np.ndarray) -> None:
        """Store the wall temperatures reached with the solved solid temperature."""
        if self._matrices is None:
            raise VdaError("coefficients must be evaluated before advancing the wall")
        M, K, dt = self._matrices
        temps = self.state.temperatures
        if temps.size:
            flat = temps.reshape(-1, temps.shape[2])
            new = advance_state(M, K, self.params, dt, flat, np.asarray(t_solid).ravel())
            self.state.temperatures = new.reshape(temps.shape)
        self._matrices = None
