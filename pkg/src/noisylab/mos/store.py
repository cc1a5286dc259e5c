"""Append-only persistence for studies and the judge registry.

Layout under the store root:

    judges.jsonl                       one registration event per line
    studies/<study_id>/events.jsonl    study_created first, then commands

Every mutation is serialized through one lock and lands as a JSON line, so
a store reopened on the same directory replays to identical state and any
report can be audited from the raw log.
"""
from __future__ import annotations

import json
import re
import secrets
import threading
import time
from pathlib import Path

from .model import (
    Assignment,
    QualificationResult,
    RatingOutcome,
    StudyDef,
    StudyError,
    StudyState,
    study_from_dict,
    study_to_dict,
)

_ID_RE = re.compile(r"^[A-Za-z0-9_.-]{1,64}$")


class UnknownStudyError(StudyError):
    pass


class UnknownJudgeError(StudyError):
    pass


class DuplicateStudyError(StudyError):
    pass


def _jsonl(event: dict) -> str:
    return json.dumps(event, sort_keys=True, separators=(",", ":")) + "\n"


class StudyStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        (self.root / "studies").mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._states: dict[str, StudyState] = {}
        self._judges: set[str] = set()
        self._load()

    # -- loading -------------------------------------------------------------

    def _load(self) -> None:
        registry = self.root / "judges.jsonl"
        if registry.is_file():
            with registry.open(encoding="utf-8") as f:
                for line in f:
                    if line.strip():
                        self._judges.add(json.loads(line)["judge_id"])
        for events_path in sorted((self.root / "studies").glob("*/events.jsonl")):
            with events_path.open(encoding="utf-8") as f:
                lines = [json.loads(line) for line in f if line.strip()]
            if not lines or lines[0].get("event") != "study_created":
                raise StudyError(f"{events_path}: log does not start with study_created")
            state = StudyState(study_from_dict(lines[0]["study"]))
            for event in lines[1:]:
                state.apply(event)
            self._states[state.study.study_id] = state

    # -- registry ------------------------------------------------------------

    def register_judge(self, judge_id: str | None = None) -> str:
        with self._lock:
            if judge_id is None:
                judge_id = "j" + secrets.token_hex(6)
            elif not _ID_RE.match(judge_id):
                raise StudyError(f"invalid judge id {judge_id!r}")
            if judge_id not in self._judges:
                with (self.root / "judges.jsonl").open("a", encoding="utf-8") as f:
                    f.write(_jsonl({
                        "event": "judge_registered",
                        "judge_id": judge_id,
                        "registered_at": time.time(),
                    }))
                self._judges.add(judge_id)
            return judge_id

    def is_registered(self, judge_id: str) -> bool:
        return judge_id in self._judges

    def _require_judge(self, judge_id: str) -> None:
        if judge_id not in self._judges:
            raise UnknownJudgeError(f"judge {judge_id!r} is not registered")

    # -- studies ---------------------------------------------------------------

    def create_study(self, study: StudyDef) -> StudyState:
        with self._lock:
            if study.study_id in self._states:
                raise DuplicateStudyError(f"study {study.study_id!r} already exists")
            if not _ID_RE.match(study.study_id):
                raise StudyError(f"invalid study id {study.study_id!r}")
            study_dir = self.root / "studies" / study.study_id
            study_dir.mkdir(parents=True, exist_ok=True)
            with (study_dir / "events.jsonl").open("a", encoding="utf-8") as f:
                f.write(_jsonl({
                    "event": "study_created",
                    "study": study_to_dict(study),
                    "created_at": time.time(),
                }))
            state = StudyState(study)
            self._states[study.study_id] = state
            return state

    def study(self, study_id: str) -> StudyState:
        try:
            return self._states[study_id]
        except KeyError:
            raise UnknownStudyError(f"study {study_id!r} does not exist") from None

    def study_ids(self) -> list[str]:
        return sorted(self._states)

    def _append(self, study_id: str, events: list[dict]) -> None:
        path = self.root / "studies" / study_id / "events.jsonl"
        with path.open("a", encoding="utf-8") as f:
            f.writelines(_jsonl(e) for e in events)

    # -- commands --------------------------------------------------------------

    def next_assignment(self, study_id: str, judge_id: str) -> Assignment:
        with self._lock:
            self._require_judge(judge_id)
            return self.study(study_id).next_assignment(judge_id)

    def submit_rating(
        self, study_id: str, judge_id: str, clip_id: str, score: int
    ) -> RatingOutcome:
        with self._lock:
            self._require_judge(judge_id)
            state = self.study(study_id)
            events, outcome = state.command_submit_rating(
                judge_id, clip_id, score, time.time()
            )
            self._append(study_id, events)
            return outcome

    def submit_qualification(
        self, study_id: str, judge_id: str, answers: dict[str, int]
    ) -> QualificationResult:
        with self._lock:
            self._require_judge(judge_id)
            state = self.study(study_id)
            events, result = state.command_submit_qualification(
                judge_id, answers, time.time()
            )
            self._append(study_id, events)
            return result
