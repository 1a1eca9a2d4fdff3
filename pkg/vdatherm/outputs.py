# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Result files: probe series, energy ledger, snapshots, summaries and overlays.

Assumptions:
- Probe CSV header is `time_s,<probe names...>`, one row per step, written
  with full double precision so that identical runs give identical files
- Snapshots are legacy ASCII VTK STRUCTURED_GRID files; point order is the
  node order of the mesh (x fastest), cell order likewise
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from vdatherm.mesh import StructuredMesh

PathLike = Union[str, Path]

TIME_COLUMN = "time_s"
FLOAT_FORMAT = "%.17g"


class ProbeSeries:
    """Temperature histories of named probes sharing one time axis."""

    def __init__(self, times: Sequence[float], values: Mapping[str, Sequence[float]]) -> None:
        t = np.asarray(times, dtype=float)
        frame = pd.DataFrame({name: np.asarray(v, dtype=float) for name, v in values.items()})
        if len(frame) != t.size and len(values):
            raise ValueError("every probe needs one value per time")
        frame.insert(0, TIME_COLUMN, t)
        if t.size > 1 and np.any(np.diff(t) < 0.0):
            raise ValueError("probe times must be non-decreasing")
        self.frame = frame

    @classmethod
    def from_rows(cls, names: Sequence[str], rows: Iterable[Sequence[float]]) -> ProbeSeries:
        data = np.asarray(list(rows), dtype=float).reshape(-1, len(names) + 1)
        return cls(data[:, 0], {name: data[:, i + 1] for i, name in enumerate(names)})

    @property
    def names(self) -> list[str]:
        return [c for c in self.frame.columns if c != TIME_COLUMN]

    @property
    def times(self) -> np.ndarray:
        return self.frame[TIME_COLUMN].to_numpy()

    def channel(self, name: str) -> np.ndarray:
        if name not in self.frame.columns or name == TIME_COLUMN:
            raise KeyError(f"no probe named {name!r}")
        return self.frame[name].to_numpy()

    def select(self, names: Sequence[str]) -> ProbeSeries:
        return ProbeSeries(self.times, {n: self.channel(n) for n in names})

    def __len__(self) -> int:
        return len(self.frame)


def write_probes(series: ProbeSeries, path: PathLike) -> Path:
    path = Path(path)
    series.frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_probes(path: PathLike) -> ProbeSeries:
    """Read a probe CSV.

    Raises:
        ValueError: if the first column is not `time_s`.
    """
    frame = pd.read_csv(path, float_precision="round_trip")
    if frame.columns.empty or frame.columns[0] != TIME_COLUMN:
        raise ValueError(f"{path}: first column must be {TIME_COLUMN!r}")
    return ProbeSeries(
        frame[TIME_COLUMN].to_numpy(),
        {name: frame[name].to_numpy() for name in frame.columns[1:]},
    )


def ledger_frame(rows: Sequence[Mapping[str, Any]], labels: Sequence[str]) -> pd.DataFrame:
    """Energy ledger with columns time, E_input, E_<label>..., E_stored, residual."""
    columns = ["time", "E_input", *[f"E_{label}" for label in labels], "E_stored", "residual"]
    records = []
    for row in rows:
        boundary = row["boundary"]
        records.append(
            [row["time"], row["input"], *[boundary.get(label, 0.0) for label in labels],
             row["stored"], row["residual"]]
        )
    return pd.DataFrame(records, columns=columns)


def write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def write_vtk(
    path: PathLike,
    mesh: StructuredMesh,
    temperatures: Optional[np.ndarray] = None,
    title: str = "vdatherm snapshot",
) -> Path:
    """Write the grid, point temperatures and cell region/activation flags."""
    path = Path(path)
    nx, ny, nz = mesh.shape
    points = mesh.node_coordinates()
    with path.open("w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{title[:255]}\n")
        fh.write("ASCII\n")
        fh.write("DATASET STRUCTURED_GRID\n")
        fh.write(f"DIMENSIONS {nx + 1} {ny + 1} {nz + 1}\n")
        fh.write(f"POINTS {points.shape[0]} double\n")
        np.savetxt(fh, points, fmt="%.17g")
        if temperatures is not None:
            fh.write(f"POINT_DATA {points.shape[0]}\n")
            fh.write("SCALARS temperature double 1\nLOOKUP_TABLE default\n")
            np.savetxt(fh, np.asarray(temperatures, dtype=float), fmt="%.17g")
        fh.write(f"CELL_DATA {mesh.n_cells}\n")
        fh.write("SCALARS region int 1\nLOOKUP_TABLE default\n")
        np.savetxt(fh, mesh.region.astype(int), fmt="%d")
        fh.write("SCALARS active int 1\nLOOKUP_TABLE default\n")
        np.savetxt(fh, mesh.active.astype(int), fmt="%d")
    return path


def export_mesh(mesh: StructuredMesh, path: PathLike) -> Path:
    """Snapshot file of the mesh alone (no temperatures)."""
    return write_vtk(path, mesh, None, title=f"vdatherm mesh {mesh.variant}")


def write_json(data: Mapping[str, Any], path: PathLike) -> Path:
    path = Path(path)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def read_json(path: PathLike) -> dict[str, Any]:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return data
