# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only
"""Single source of truth for the build identity stamped into run summaries."""
import platform

import numpy as np
import scipy

__version__ = "0.1.0"


def build_info() -> dict:
    """Version of the package and of the numerical stack that produced a run.

    Bit-identical probe files are only promised for the same numpy/scipy pair,
    so both are recorded next to the package version.
    """
    return {
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }
