# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""Integration-test fixtures.

`write_config` turns a raw document into a config file on disk, so tests can
drive the same CLI and loader a user would. `cube_runs` runs the scaled cube
once per session for the slow acceptance tests.
"""
import json
from pathlib import Path

import pytest

from tests.fixtures.configs import load_example, with_changes


@pytest.fixture
def write_config(tmp_path):
    def _write(document: dict, name: str = "config.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(document, indent=2))
        return path

    return _write


def _timed_run(document: dict):
    from vdatherm.contract import parse_config
    from vdatherm.solver import run

    return run(parse_config(document), threads=1)


@pytest.fixture(scope="session")
def cube_runs():
    """HF and VDA-PP runs of the scaled cube, keyed by label.

    VDA-PP is run with the 1E-Q1-D wall of the example config and with the
    1E-Q2 and 2E-Q1 contact walls on the part/bed interface.
    """
    hf = load_example("cube_hf.json")
    pp = load_example("cube_vda_pp.json")
    contact = {"h_sp": 1e5, "h_pp": 1e5}
    runs = {"HF": _timed_run(hf), "VDA-PP": _timed_run(pp)}
    for variant in ("1E-Q2", "2E-Q1"):
        wall = dict(pp["boundary_conditions"][1]["vda"], variant=variant, **contact)
        runs[f"VDA-PP/{variant}"] = _timed_run(with_changes(pp, boundary_conditions__1__vda=wall))
    return runs
