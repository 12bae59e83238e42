"""
Trajectory records and their on-disk form.

One run writes one JSON-lines file, one record per line, fields in a fixed
order. The run directory also holds a manifest with the resolved config.
"""

import json
import os
from pathlib import Path
from typing import Dict, Iterator, List, Literal, Optional

import pandas as pd
from pydantic import BaseModel, ConfigDict

from config import MANIFEST_NAME

RECORD_FIELDS = [
    "event",
    "sim_time",
    "cum_budget",
    "sh_run",
    "stage",
    "budget",
    "config_id",
    "loss",
    "provenance",
    "regret",
]


class TrajectoryRecord(BaseModel):
    # +inf losses are written as Infinity, which json.loads reads back
    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    event: Literal["eval_end", "incumbent"]
    sim_time: float
    cum_budget: float
    sh_run: int
    stage: int
    budget: float
    config_id: int
    loss: float
    provenance: Literal["random", "model"]
    regret: Optional[float] = None


class Trajectory:
    """Ordered event log of one optimizer run."""

    def __init__(self, records: Optional[List[TrajectoryRecord]] = None):
        self.records: List[TrajectoryRecord] = list(records or [])

    def append(self, record: TrajectoryRecord):
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TrajectoryRecord]:
        return iter(self.records)

    def evaluations(self) -> List[TrajectoryRecord]:
        return [r for r in self.records if r.event == "eval_end"]

    def incumbents(self) -> List[TrajectoryRecord]:
        return [r for r in self.records if r.event == "incumbent"]

    def final_incumbent(self) -> Optional[TrajectoryRecord]:
        incumbents = self.incumbents()
        return incumbents[-1] if incumbents else None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.model_dump() for r in self.records], columns=RECORD_FIELDS)

    def to_jsonl(self) -> str:
        return "".join(r.model_dump_json() + "\n" for r in self.records)


def write_trajectory(path: Path, trajectory: Trajectory) -> Path:
    """Write atomically so an interrupted batch never leaves a half file that resume would skip."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    with open(tmp_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(trajectory.to_jsonl())
    os.replace(tmp_path, path)
    return path


def read_trajectory(path: Path) -> Trajectory:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Trajectory file not found at {path}")
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                records.append(TrajectoryRecord.model_validate(json.loads(line)))
            except ValueError as e:
                raise ValueError(f"{path}:{line_no}: malformed record ({e})") from e
    return Trajectory(records)


def write_manifest(run_dir: Path, manifest: Dict) -> Path:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    path = run_dir / MANIFEST_NAME
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def read_manifest(run_dir: Path) -> Dict:
    path = Path(run_dir) / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"No {MANIFEST_NAME} in {run_dir}")
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def trajectory_files(run_dir: Path) -> List[Path]:
    return sorted(Path(run_dir).glob("seed_*.jsonl"))
