"""File formats: interaction CSV, snapshot CSV, split JSON, result JSON.

All readers validate and reject malformed data instead of coercing it.
Formats are versioned where they carry structure (schema_version in JSON
documents); snapshots serialize probabilities with 6 decimal digits, so a
write/read round trip is exact to 5e-7.
"""

from __future__ import annotations

import csv
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .core import Interaction, InteractionLog, LearnerSplit, Snapshot
from .criteria import FitnessReport
from .search import SearchResult

INTERACTION_HEADER = ["learner_id", "question_id", "correct", "order"]
SCHEMA_VERSION = 1


def read_interactions(path: str | Path) -> InteractionLog:
    """Parse an interaction CSV; raises with a line number on bad rows."""
    records: list[Interaction] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != INTERACTION_HEADER:
            raise ValueError(
                f"bad header: expected {','.join(INTERACTION_HEADER)}"
            )
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ValueError(f"malformed row: expected 4 fields (line {line})")
            learner_id, question_id, correct, order = row
            if correct not in ("0", "1"):
                raise ValueError(f"correct must be 0 or 1 (line {line})")
            try:
                order_val = int(order)
            except ValueError:
                raise ValueError(f"order must be an integer (line {line})") from None
            if order_val < 0:
                raise ValueError(f"order must be non-negative (line {line})")
            records.append(
                Interaction(learner_id, question_id, correct == "1", order_val)
            )
    return InteractionLog(tuple(records))


def write_interactions(log: InteractionLog, path: str | Path) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(INTERACTION_HEADER)
        for rec in log.records:
            writer.writerow(
                [rec.learner_id, rec.question_id, int(rec.correct), rec.order]
            )


def write_snapshot(snapshot: Snapshot, path: str | Path) -> None:
    """Snapshot CSV: header `question_id,<learner ids>`, one question per
    row, probabilities with 6 decimal places."""
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("question_id," + ",".join(snapshot.learner_ids) + "\n")
        for qid, row in zip(snapshot.question_ids, snapshot.values):
            fh.write(qid + "," + ",".join(f"{v:.6f}" for v in row) + "\n")


def read_snapshot(path: str | Path) -> Snapshot:
    """Parse a snapshot CSV; rejects ragged rows and out-of-range values,
    naming the offending cell."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "question_id" or len(header) < 2:
            raise ValueError("bad header: expected question_id,<learner ids>")
        learner_ids = tuple(header[1:])
        question_ids: list[str] = []
        rows: list[list[float]] = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"ragged row: expected {len(header)} fields, "
                    f"got {len(row)} (line {line})"
                )
            question_ids.append(row[0])
            parsed: list[float] = []
            for col, cell in enumerate(row[1:]):
                try:
                    value = float(cell)
                except ValueError:
                    raise ValueError(
                        f"non-numeric value {cell!r} at line {line}, "
                        f"learner {learner_ids[col]!r}"
                    ) from None
                if not 0.0 <= value <= 1.0 or not np.isfinite(value):
                    raise ValueError(
                        f"value {cell} out of range [0, 1] at line {line}, "
                        f"learner {learner_ids[col]!r}"
                    )
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise ValueError("snapshot file has no data rows")
    return Snapshot(
        values=np.asarray(rows), question_ids=tuple(question_ids), learner_ids=learner_ids
    )


def write_split(split: LearnerSplit, path: str | Path) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "seed": split.seed,
        "ratio": split.ratio,
        "train": list(split.train),
        "test": list(split.test),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_split(path: str | Path) -> LearnerSplit:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return LearnerSplit(
        train=tuple(int(x) for x in doc["train"]),
        test=tuple(int(x) for x in doc["test"]),
        seed=int(doc["seed"]),
        ratio=float(doc["ratio"]),
    )


def report_dict(report: FitnessReport) -> dict[str, float]:
    return {
        "rmse": report.rmse,
        "std": report.std,
        "fitness": report.fitness,
        "lambda": report.lam,
    }


def result_record(
    result: SearchResult,
    *,
    question_ids: Sequence[str],
    train_report: FitnessReport,
    test_report: FitnessReport,
    config: dict[str, Any],
) -> dict[str, Any]:
    """Assemble the result document for one search run.

    ``config`` must contain everything needed to reproduce the run,
    including the seed and the calibrated lambda.
    """
    return {
        "schema_version": SCHEMA_VERSION,
        "algorithm": result.algorithm,
        "config": dict(config),
        "selected_questions": [question_ids[g] for g in result.best.genes],
        "train": report_dict(train_report),
        "test": report_dict(test_report),
        "history": [list(entry) for entry in result.history],
        "evaluations": result.evaluations,
    }


def write_result(
    result: SearchResult,
    *,
    question_ids: Sequence[str],
    train_report: FitnessReport,
    test_report: FitnessReport,
    config: dict[str, Any],
    path: str | Path,
) -> None:
    doc = result_record(
        result,
        question_ids=question_ids,
        train_report=train_report,
        test_report=test_report,
        config=config,
    )
    doc["created_at"] = datetime.now(timezone.utc).isoformat()
    write_json(doc, path)


def write_json(doc: dict[str, Any], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
