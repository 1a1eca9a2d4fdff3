# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Runtime settings for vdatherm.

Simulation inputs live in the JSON config file (see vdatherm.contract); this
module only holds process-wide knobs read from the environment.
"""
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Settings loaded from VDATHERM_* environment variables.

    Assumptions:
    - Environment variables override defaults
    - CLI flags override settings for a single invocation
    - Console logging is the default for interactive runs
    """

    # Logging
    log_level: str = "INFO"
    log_json: bool = False

    # Intra-step parallelism (element assembly chunks, calibration polls)
    threads: int = Field(default=1, ge=1)

    # Where outputs go when the config file does not name a directory
    output_dir: str = "./vdatherm_out"

    model_config = SettingsConfigDict(
        env_prefix="VDATHERM_",
        env_file=".env",
        case_sensitive=False,
    )


settings = Settings()
