# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Pytest configuration and shared fixtures.

Assumptions:
- Unit tests build meshes and materials by hand; integration tests go
  through config documents (tests/fixtures/configs.py)
- Every test gets fresh objects; nothing mutable is shared between tests
- Log context is cleared after each test so bound run ids do not leak
"""
import numpy as np
import pytest
from hypothesis import settings

from tests.fixtures.configs import small_document
from vdatherm.logging_config import clear_context
from vdatherm.materials import MaterialTable, PowderSpec, PropertyTable
from vdatherm.mesh import Region, StructuredMesh, activate_layer

# first examples pay for lazy imports inside the tests
settings.register_profile("vdatherm", deadline=None)
settings.load_profile("vdatherm")


@pytest.fixture(autouse=True)
def _clear_log_context():
    yield
    clear_context()


def constant_material(rho: float = 7900.0, c: float = 500.0, k: float = 15.0,
                      name: str = "steel", k_powder: float = 0.3) -> MaterialTable:
    return MaterialTable(
        name=name,
        density_table=PropertyTable.constant(rho, "density"),
        specific_heat_table=PropertyTable.constant(c, "specific_heat"),
        conductivity_table=PropertyTable.constant(k, "conductivity"),
        powder=PowderSpec(0.46, 4e-5, conductivity=PropertyTable.constant(k_powder, "k_powder")),
    )


def column_mesh(n_cells: int, length: float, width: float = 1e-3, active: bool = True) -> StructuredMesh:
    """1 x 1 x N column of part cells (variant P), one layer per cell.

    With `active` every layer is switched on, bottom to top.
    """
    z = np.linspace(0.0, length, n_cells + 1)
    mesh = StructuredMesh(
        np.array([0.0, width]),
        np.array([0.0, width]),
        z,
        np.full(n_cells, Region.PART),
        np.arange(n_cells),
        variant="P",
    )
    if active:
        for layer in range(n_cells):
            activate_layer(mesh, layer)
    return mesh


@pytest.fixture
def steel() -> MaterialTable:
    return constant_material()


@pytest.fixture
def ti64_powder() -> MaterialTable:
    """Ti64 with the tabulated powder conductivity used by the scaled MCAM configs."""
    k_powder = PropertyTable.from_breakpoints(
        [(20.0, 0.288), (200.0, 0.407), (300.0, 0.466), (400.0, 0.52), (500.0, 0.573),
         (600.0, 0.63), (700.0, 0.684), (800.0, 0.746), (900.0, 0.808), (1100.0, 0.904),
         (1227.0, 0.976), (1500.0, 1.115), (1600.0, 1.168), (1660.0, 1.252)],
        "ti64.powder.conductivity",
    )
    return MaterialTable(
        name="ti64",
        density_table=PropertyTable.from_breakpoints([(20.0, 4420.0), (1600.0, 4150.0)]),
        specific_heat_table=PropertyTable.from_breakpoints([(20.0, 546.0), (1600.0, 831.0)]),
        conductivity_table=PropertyTable.from_breakpoints([(20.0, 7.0), (1600.0, 25.0)]),
        powder=PowderSpec(0.46, 4e-5, conductivity=k_powder),
        phase="powder",
    )


@pytest.fixture
def document():
    """Factory for small config documents: document(variant="HF", power=0.0, ...)."""
    return small_document
