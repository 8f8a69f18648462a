"""CSV export of per-round records, JSON export of summaries, and readers for both."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .metrics import Summary
from .runner import RunLog

BASE_COLUMNS_HEAD = ["run_id", "t", "policy"]
BASE_COLUMNS_TAIL = ["y", "expected_reward", "tag", "beta_t", "lambda_min", "gate_k", "safe_set_size",
                     "violation", "margin", "cum_regret", "n_conservative"]


def csv_columns(d: int) -> list[str]:
    return BASE_COLUMNS_HEAD + [f"action_{i}" for i in range(d)] + BASE_COLUMNS_TAIL


def _open_for_write(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path.open("w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def export_csv(logs: Sequence[RunLog], path: str | Path, run_ids: Sequence | None = None) -> Path:
    """One row per (run, round); rounds are numbered from 1 and floats use ``repr``."""
    path = Path(path)
    if not logs:
        raise ValueError("no runs to export")
    d = logs[0].actions.shape[1]
    run_ids = [log.seed for log in logs] if run_ids is None else list(run_ids)
    with _open_for_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(csv_columns(d))
        for rid, log in zip(run_ids, logs):
            cum_r = log.cum_regret
            cum_c = log.cum_conservative
            for t in range(log.T):
                writer.writerow(
                    [rid, t + 1, log.policy]
                    + [repr(float(v)) for v in log.actions[t]]
                    + [repr(float(log.y[t])), repr(float(log.expected_reward[t])), log.tag[t],
                       repr(float(log.beta[t])), repr(float(log.lambda_min[t])), repr(float(log.gate[t])),
                       int(log.safe_set_size[t]), int(log.violation[t]), repr(float(log.margin[t])),
                       repr(float(cum_r[t])), int(cum_c[t])]
                )
    return path


def export_json(summary: Summary, path: str | Path) -> Path:
    path = Path(path)
    with _open_for_write(path) as fh:
        json.dump(summary.to_json(), fh, indent=2, sort_keys=False)
        fh.write("\n")
    return path


def read_csv(path: str | Path) -> dict:
    """Per-run column arrays keyed by ``(run_id, policy)``, in file order."""
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    runs: dict = {}
    with fh:
        reader = csv.DictReader(fh)
        for row in reader:
            key = (row["run_id"], row["policy"])
            runs.setdefault(key, []).append(row)
    out = {}
    for key, rows in runs.items():
        out[key] = {
            "t": np.array([int(r["t"]) for r in rows]),
            "cum_regret": np.array([float(r["cum_regret"]) for r in rows]),
            "n_conservative": np.array([int(r["n_conservative"]) for r in rows]),
            "violation": np.array([r["violation"] == "1" for r in rows]),
            "expected_reward": np.array([float(r["expected_reward"]) for r in rows]),
            "tag": np.array([r["tag"] for r in rows]),
        }
    return out


def aggregate_csv(path: str | Path) -> dict:
    """Mean/std curves recomputed from an exported CSV (same fold as :func:`aggregate`)."""
    runs = list(read_csv(path).values())
    regret = np.stack([r["cum_regret"] for r in runs])
    ntc = np.stack([r["n_conservative"] for r in runs]).astype(float)
    return {
        "n_runs": len(runs),
        "T": regret.shape[1],
        "mean_regret": regret.mean(axis=0),
        "std_regret": regret.std(axis=0),
        "mean_ntc": ntc.mean(axis=0),
        "violation_run_fraction": float(np.mean([r["violation"].any() for r in runs])),
    }


def read_json(path: str | Path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
