"""File formats for benchmark runs: CSVs with a schema comment, summary JSON.

Every CSV starts with a `# schema_version=1` comment line followed by a
header row; readers validate the version so stale files fail loudly.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..errors import InputError
from .dynamics import ToyTrajectory

SCHEMA_VERSION = 1
_COMMENT = f"# schema_version={SCHEMA_VERSION}"


def _open_csv(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path.open("w", newline="")


def _check_version(line: str, path):
    if line.strip() != _COMMENT:
        raise InputError(f"{path}: missing or mismatched schema comment line")


def write_trajectory_csv(path, trajectory: ToyTrajectory):
    with _open_csv(path) as fh:
        fh.write(_COMMENT + "\n")
        writer = csv.writer(fh)
        writer.writerow(["step", "theta", "state_0", "state_1", "obs_0", "obs_1"])
        for t in range(trajectory.thetas.shape[0]):
            writer.writerow([
                t + 1, repr(float(trajectory.thetas[t])),
                repr(float(trajectory.states[t, 0])), repr(float(trajectory.states[t, 1])),
                repr(float(trajectory.observations[t, 0])),
                repr(float(trajectory.observations[t, 1])),
            ])


def read_trajectory_csv(path) -> ToyTrajectory:
    path = Path(path)
    with path.open() as fh:
        _check_version(fh.readline(), path)
        reader = csv.DictReader(fh)
        thetas, states, obs = [], [], []
        for row in reader:
            thetas.append(float(row["theta"]))
            states.append([float(row["state_0"]), float(row["state_1"])])
            obs.append([float(row["obs_0"]), float(row["obs_1"])])
    return ToyTrajectory(
        thetas=np.array(thetas), states=np.array(states), observations=np.array(obs)
    )


def write_steps_csv(path, rows: list[dict]):
    """rows: the benchmark rows payload (one dict per filter step)."""
    with _open_csv(path) as fh:
        fh.write(_COMMENT + "\n")
        writer = csv.writer(fh)
        writer.writerow([
            "seed", "step", "mode", "decoded_0", "decoded_1",
            "converged", "sum_beta_plus", "wall_us", "sq_error",
        ])
        for row in rows:
            writer.writerow([
                row["seed"], row["step"], row["mode"],
                repr(float(row["decoded"][0])), repr(float(row["decoded"][1])),
                int(row["converged"]),
                "" if row["sum_beta_plus"] is None else repr(float(row["sum_beta_plus"])),
                repr(float(row["wall_us"])), repr(float(row["sq_error"])),
            ])


def write_per_step_mse_csv(path, per_step_mse: dict):
    algorithms = list(per_step_mse)
    with _open_csv(path) as fh:
        fh.write(_COMMENT + "\n")
        writer = csv.writer(fh)
        writer.writerow(["step"] + algorithms)
        length = max(len(v) for v in per_step_mse.values())
        for t in range(length):
            writer.writerow(
                [t + 1] + [repr(float(per_step_mse[a][t])) for a in algorithms]
            )


def read_per_step_mse_csv(path) -> dict[str, np.ndarray]:
    path = Path(path)
    with path.open() as fh:
        _check_version(fh.readline(), path)
        reader = csv.DictReader(fh)
        columns: dict[str, list[float]] = {}
        for row in reader:
            for key, value in row.items():
                if key == "step":
                    continue
                columns.setdefault(key, []).append(float(value))
    return {k: np.array(v) for k, v in columns.items()}


def write_summary_json(path, summary_doc: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary_doc, indent=2) + "\n")


def read_summary_json(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise InputError(f"{path}: unsupported schema_version {doc.get('schema_version')}")
    return doc


def write_report_json(path, report: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=2) + "\n")
