# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only
"""Simulation config contract: pydantic models and the JSON loader."""
from vdatherm.contract.loader import (
    ConfigError,
    ConfigVersionError,
    apply_overrides,
    dump_config,
    load_config,
    parse_config,
)
from vdatherm.contract.models import SCHEMA_VERSION, SimulationConfig

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "ConfigVersionError",
    "SimulationConfig",
    "apply_overrides",
    "dump_config",
    "load_config",
    "parse_config",
]
