# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only
"""Scalar, term-by-term effective conductivity of a bed of spherical particles."""
import math

SIGMA = 5.67e-8


def powder_conductivity_reference(
    k_solid: float, k_gas: float, porosity: float, diameter: float, temperature_c: float
) -> float:
    k_rad = 4.0 / 3.0 * SIGMA * (temperature_c + 273.15) ** 3 * diameter
    a = 1.0 - math.sqrt(1.0 - porosity)
    b = math.sqrt(1.0 - porosity)
    c = 2.0 / (1.0 - k_gas / k_solid)

    first = a * (1.0 + porosity * k_rad / k_gas)
    second = b * c * (c * math.log(k_solid / k_gas) - 1.0)
    third = b * k_rad / k_gas
    return k_gas * (first + second + third)
