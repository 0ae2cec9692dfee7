"""CSV export of trajectories."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .simulate import Trajectory


def csv_header(traj: Trajectory) -> list[str]:
    n_ag = traj.n_agents
    obs = "xhat" if traj.kind == "full" else "v"
    cols = ["t", "sigma"]
    for name, arr in (("x", traj.states), (obs, traj.observer_states), ("u", traj.controls), ("w", traj.disturbance)):
        cols += [f"{name}[{i + 1}][{k + 1}]" for i in range(n_ag) for k in range(arr.shape[2])]
    return cols


def write_csv(traj: Trajectory, path, stride: int = 1) -> Path:
    """One row per grid point (every ``stride``-th), topology index 1-based, 17 significant digits."""
    path = Path(path)
    T = traj.times.size
    body = np.hstack([
        traj.times[:, None],
        (traj.sigma + 1)[:, None].astype(float),
        traj.states.reshape(T, -1),
        traj.observer_states.reshape(T, -1),
        traj.controls.reshape(T, -1),
        traj.disturbance.reshape(T, -1),
    ])[::stride]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_header(traj))
        for row in body:
            writer.writerow([str(int(row[1])) if i == 1 else f"{v:.17g}" for i, v in enumerate(row)])
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)
