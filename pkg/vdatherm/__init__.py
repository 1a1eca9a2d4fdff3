# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
vdatherm - part-scale thermal simulation of powder-bed fusion builds.

The powder bed and the build plate can be replaced by a Virtual Domain
Approximation: a 1D transient wall per boundary integration point, condensed
into a temperature-dependent Robin condition.
"""
from vdatherm.version import __version__

__all__ = ["__version__"]
