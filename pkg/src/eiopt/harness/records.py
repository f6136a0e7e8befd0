"""Per-step run records and their CSV/JSON serialisation."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

#: Regret may dip this far below zero when ``min f`` is only grid-estimated.
GRID_MIN_TOL = 1e-6


@dataclass(frozen=True)
class RegretRecord:
    """Everything observed during one trial, one row per step.

    ``rec_values[i]`` is ``f`` at the recommendation after ``i + 1``
    observations and ``regret = rec_values - min_value``.
    """

    points: np.ndarray
    values: np.ndarray
    rec_values: np.ndarray
    min_value: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "rec_values", np.asarray(self.rec_values, dtype=float))
        if not len(pts) == len(self.values) == len(self.rec_values):
            raise ValueError("per-step arrays must have equal length")

    def __len__(self):
        return len(self.values)

    @property
    def steps(self) -> np.ndarray:
        return np.arange(1, len(self) + 1)

    @property
    def running_best(self) -> np.ndarray:
        return np.minimum.accumulate(self.values)

    @property
    def regret(self) -> np.ndarray:
        return self.rec_values - self.min_value

    def check(self, tol: float = GRID_MIN_TOL) -> None:
        """Assert the structural invariants of a finished run."""
        if np.any(np.diff(self.running_best) > 0):
            raise AssertionError("running best increased")
        if np.any(self.regret < -tol):
            raise AssertionError(f"negative regret {self.regret.min():.3g}")

    def __eq__(self, other):
        if not isinstance(other, RegretRecord):
            return NotImplemented
        return (
            np.array_equal(self.points, other.points)
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.rec_values, other.rec_values)
            and self.min_value == other.min_value
            and self.metadata == other.metadata
        )

    # -- serialisation --------------------------------------------------------

    def write(self, csv_path) -> Path:
        """Write the CSV and a ``.json`` metadata sidecar next to it."""
        csv_path = Path(csv_path)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        d = self.points.shape[1]
        header = ["n"] + [f"x{j}" for j in range(d)] + ["z", "best_z", "rec_value", "regret"]
        with csv_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            best, regret = self.running_best, self.regret
            for i in range(len(self)):
                row = [*self.points[i], self.values[i], best[i], self.rec_values[i], regret[i]]
                # repr of a Python float round-trips exactly.
                writer.writerow([i + 1, *(repr(float(v)) for v in row)])
        sidecar = {"min_value": self.min_value, "metadata": self.metadata}
        csv_path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
        return csv_path

    @classmethod
    def read(cls, csv_path) -> "RegretRecord":
        csv_path = Path(csv_path)
        with csv_path.open(newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
        xcols = [i for i, h in enumerate(header) if h.startswith("x")]
        col = {h: i for i, h in enumerate(header)}
        sidecar_path = csv_path.with_suffix(".json")
        sidecar = json.loads(sidecar_path.read_text()) if sidecar_path.exists() else {}
        min_value = sidecar.get("min_value")
        if min_value is None:
            min_value = float(body[0, col["rec_value"]] - body[0, col["regret"]]) if len(body) else 0.0
        return cls(body[:, xcols], body[:, col["z"]], body[:, col["rec_value"]], float(min_value),
                   sidecar.get("metadata", {}))


@dataclass(frozen=True)
class MeshStats:
    """Mesh norm of the first ``n`` design points, for ``n = 1, 2, ...``."""

    mesh: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mesh", np.asarray(self.mesh, dtype=float))

    @property
    def steps(self) -> np.ndarray:
        return np.arange(1, len(self.mesh) + 1)
