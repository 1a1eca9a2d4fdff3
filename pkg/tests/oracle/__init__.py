# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only
"""
Brute-force reference implementations used only by the test suite.

Assumptions:
- Nothing here imports vdatherm.vda or vdatherm.solver; every matrix is
  rebuilt from shape functions and quadrature
- Speed does not matter; clarity and independence do
"""
from tests.oracle.powder import powder_conductivity_reference
from tests.oracle.slab import slab_analytic
from tests.oracle.wall import WallSolution, wall_direct_solve, wall_matrices_reference

__all__ = [
    "WallSolution",
    "powder_conductivity_reference",
    "slab_analytic",
    "wall_direct_solve",
    "wall_matrices_reference",
]
