"""Domain model for the crowdsourced listening-test service.

A study is a fixed set of rateable clips (condition x noise type), a short
training playlist, and a qualification set with expected answers. Judges
move new -> trained -> qualified, can be blocked from trained (two failed
qualification attempts) or from qualified (spam detection), and a blocked
judge's ratings are excluded retroactively.

All state changes are expressed as events (plain dicts); `StudyState.apply`
is the only mutation path, so replaying a study's event log reconstructs
the exact state and therefore the exact report.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

QUALIFICATION_PASS_NUM = 4  # pass when right/total >= 4/5 (80%)
QUALIFICATION_PASS_DEN = 5
MAX_QUALIFICATION_ATTEMPTS = 2
HISTOGRAM_BIN_WIDTH = 0.25
HISTOGRAM_BINS = 16  # [1, 5] at 0.25 steps
DEFAULT_REFERENCE_ANCHORS = (2.45, 2.45)


class StudyError(Exception):
    pass


class StudyDefinitionError(StudyError):
    pass


class UnknownClipError(StudyError):
    pass


class InvalidScoreError(StudyError):
    pass


class DuplicateRatingError(StudyError):
    pass


class PhaseError(StudyError):
    """Raised when an action is not legal in the judge's current phase."""


class IncompleteAnswersError(StudyError):
    pass


class EmptyStudyError(StudyError):
    pass


class MissingAnchorError(StudyError):
    pass


class DegenerateAnchorsError(StudyError):
    pass


class Phase(str, Enum):
    NEW = "new"
    TRAINED = "trained"
    QUALIFIED = "qualified"
    BLOCKED = "blocked"


@dataclass(frozen=True)
class RateableClip:
    clip_id: str
    condition: str
    noise_type: str
    path: str


@dataclass(frozen=True)
class TrainingClip:
    clip_id: str
    path: str


@dataclass(frozen=True)
class QualificationClip:
    clip_id: str
    expected: int  # 1 (very degraded) or 5 (clean)
    path: str

    def __post_init__(self):
        if self.expected not in (1, 5):
            raise StudyDefinitionError(
                f"qualification clip {self.clip_id!r}: expected score must be 1 or 5"
            )


@dataclass(frozen=True)
class StudyConfig:
    ratings_per_clip_target: int = 10
    spam_window: int = 20
    spam_threshold: float = 1.5
    anchor_conditions: tuple[str, str] = ("Noisy", "Wiener")
    reference_anchors: tuple[float, float] = DEFAULT_REFERENCE_ANCHORS

    def __post_init__(self):
        if self.ratings_per_clip_target < 1:
            raise StudyDefinitionError("ratings_per_clip_target must be >= 1")
        if self.spam_window < 1:
            raise StudyDefinitionError("spam_window must be >= 1")
        if self.spam_threshold <= 0:
            raise StudyDefinitionError("spam_threshold must be positive")


@dataclass(frozen=True)
class StudyDef:
    study_id: str
    clips: tuple[RateableClip, ...]
    training: tuple[TrainingClip, ...]
    qualification: tuple[QualificationClip, ...]
    config: StudyConfig = StudyConfig()

    def __post_init__(self):
        if not self.clips:
            raise StudyDefinitionError("a study needs at least one rateable clip")
        for clip in self.clips:
            if not clip.condition:
                raise StudyDefinitionError(f"clip {clip.clip_id!r} has an empty condition")
        ids = [c.clip_id for c in self.clips]
        train_ids = [c.clip_id for c in self.training]
        qual_ids = [c.clip_id for c in self.qualification]
        all_ids = ids + train_ids + qual_ids
        if len(set(all_ids)) != len(all_ids):
            dupes = sorted({i for i in all_ids if all_ids.count(i) > 1})
            raise StudyDefinitionError(
                f"duplicate or overlapping clip ids across rated, training and "
                f"qualification sets: {', '.join(dupes)}"
            )

    @property
    def rated_ids(self) -> frozenset[str]:
        return frozenset(c.clip_id for c in self.clips)

    def clip(self, clip_id: str) -> RateableClip:
        for c in self.clips:
            if c.clip_id == clip_id:
                return c
        raise UnknownClipError(clip_id)


@dataclass
class JudgeState:
    judge_id: str
    phase: Phase = Phase.NEW
    qualification_attempts: int = 0
    qualification_score: float | None = None
    ratings_submitted: int = 0  # accepted rate-phase ratings, exclusions included
    training_done: set[str] = field(default_factory=set)


@dataclass(frozen=True)
class Rating:
    rating_id: str
    judge_id: str
    clip_id: str
    score: int
    submitted_at: float
    phase_at_submit: str  # "training" or "rate"


@dataclass(frozen=True)
class Assignment:
    phase: str  # training | qualification | rate | done | blocked
    clip_id: str | None = None
    path: str | None = None


@dataclass(frozen=True)
class SpamCheckResult:
    status: str  # ok | flagged | blocked
    mean_abs_deviation: float | None
    n_deviations: int


@dataclass(frozen=True)
class QualificationResult:
    passed: bool
    right_fraction: float
    attempt: int
    phase: Phase


@dataclass(frozen=True)
class RatingOutcome:
    rating: Rating
    judge_phase: Phase
    spam: SpamCheckResult | None  # only evaluated for rate-phase ratings


@dataclass(frozen=True)
class ClipMos:
    clip_id: str
    condition: str
    noise_type: str
    mos: float | None
    n_ratings: int
    below_target: bool


@dataclass(frozen=True)
class ConditionMos:
    condition: str
    mos: float
    ci95: float | None  # undefined for a single-clip condition
    n_clips: int


@dataclass(frozen=True)
class ConditionNoiseMos:
    condition: str
    noise_type: str
    mos: float
    n_clips: int


@dataclass(frozen=True)
class NormalizedConditionMos:
    condition: str
    mos: float


@dataclass(frozen=True)
class MosReport:
    study_id: str
    clips: tuple[ClipMos, ...]
    conditions: tuple[ConditionMos, ...]
    histograms: tuple[tuple[str, tuple[int, ...]], ...]  # per condition, 16 bins
    by_noise_type: tuple[ConditionNoiseMos, ...]

    def condition(self, name: str) -> ConditionMos:
        for c in self.conditions:
            if c.condition == name:
                return c
        raise MissingAnchorError(f"condition {name!r} absent from the report")


class StudyState:
    """In-memory state of one study, mutated exclusively through `apply`."""

    def __init__(self, study: StudyDef):
        self.study = study
        self.judges: dict[str, JudgeState] = {}
        self.ratings: list[Rating] = []
        self._by_judge: dict[str, dict[str, Rating]] = {}
        self._included_counts: dict[str, int] = {c.clip_id: 0 for c in study.clips}
        self._qual_cursor: dict[str, int] = {}  # transient, not replayed

    # -- derived views ----------------------------------------------------

    def judge(self, judge_id: str) -> JudgeState:
        if judge_id not in self.judges:
            self.judges[judge_id] = JudgeState(judge_id)
        return self.judges[judge_id]

    def _phase_of(self, judge_id: str) -> Phase:
        judge = self.judges.get(judge_id)
        if judge is None:
            judge = JudgeState(judge_id)
        if judge.phase is Phase.NEW and self._training_complete(judge):
            return Phase.TRAINED
        return judge.phase

    def _training_complete(self, judge: JudgeState) -> bool:
        return {c.clip_id for c in self.study.training} <= judge.training_done

    def is_included(self, rating: Rating) -> bool:
        if rating.phase_at_submit != "rate":
            return False
        judge = self.judges.get(rating.judge_id)
        return judge is not None and judge.phase is not Phase.BLOCKED

    def included_ratings(self) -> list[Rating]:
        return [r for r in self.ratings if self.is_included(r)]

    def included_count(self, clip_id: str) -> int:
        return self._included_counts[clip_id]

    def rating_of(self, judge_id: str, clip_id: str) -> Rating | None:
        return self._by_judge.get(judge_id, {}).get(clip_id)

    def _recount(self) -> None:
        counts = {c.clip_id: 0 for c in self.study.clips}
        for r in self.ratings:
            if self.is_included(r):
                counts[r.clip_id] += 1
        self._included_counts = counts

    # -- event application (the single mutation path) ----------------------

    def apply(self, event: Mapping) -> None:
        kind = event["event"]
        if kind == "rating_submitted":
            rating = Rating(
                rating_id=event["rating_id"],
                judge_id=event["judge_id"],
                clip_id=event["clip_id"],
                score=int(event["score"]),
                submitted_at=float(event["submitted_at"]),
                phase_at_submit=event["phase"],
            )
            self.ratings.append(rating)
            self._by_judge.setdefault(rating.judge_id, {})[rating.clip_id] = rating
            judge = self.judge(rating.judge_id)
            if rating.phase_at_submit == "training":
                judge.training_done.add(rating.clip_id)
                if judge.phase is Phase.NEW and self._training_complete(judge):
                    judge.phase = Phase.TRAINED
            else:
                judge.ratings_submitted += 1
                self._included_counts[rating.clip_id] += 1
        elif kind == "qualification_submitted":
            judge = self.judge(event["judge_id"])
            judge.qualification_attempts = int(event["attempt"])
            judge.qualification_score = float(event["right_fraction"])
            if event["passed"]:
                judge.phase = Phase.QUALIFIED
        elif kind == "judge_blocked":
            judge = self.judge(event["judge_id"])
            judge.phase = Phase.BLOCKED
            self._recount()
        else:
            raise StudyError(f"unknown event kind {kind!r}")

    # -- commands: validate, build events, apply them ----------------------

    def next_rating_id(self) -> str:
        return f"r{len(self.ratings) + 1:06d}"

    def command_submit_rating(
        self, judge_id: str, clip_id: str, score: int, now: float
    ) -> tuple[list[dict], RatingOutcome]:
        if not isinstance(score, int) or isinstance(score, bool) or not 1 <= score <= 5:
            raise InvalidScoreError(f"score must be an integer in 1..5, got {score!r}")
        phase = self._phase_of(judge_id)
        if phase is Phase.BLOCKED:
            raise PhaseError("judge is blocked")
        prior = self._by_judge.get(judge_id, {}).get(clip_id)
        if prior is not None:
            raise DuplicateRatingError(
                f"judge {judge_id!r} already rated clip {clip_id!r} "
                f"with score {prior.score}"
            )

        if phase is Phase.NEW:
            if clip_id not in {c.clip_id for c in self.study.training}:
                raise UnknownClipError(
                    f"{clip_id!r} is not a training clip; training must finish first"
                )
            rating_phase = "training"
        elif phase is Phase.TRAINED:
            raise PhaseError("qualification pending; answers go through the qualification flow")
        else:
            if clip_id not in self.study.rated_ids:
                raise UnknownClipError(f"{clip_id!r} is not a rateable clip of this study")
            rating_phase = "rate"

        events = [{
            "event": "rating_submitted",
            "rating_id": self.next_rating_id(),
            "judge_id": judge_id,
            "clip_id": clip_id,
            "score": score,
            "phase": rating_phase,
            "submitted_at": now,
        }]
        self.apply(events[0])

        spam = None
        if rating_phase == "rate":
            spam = self.spam_check(judge_id)
            if spam.status == "blocked":
                block = {
                    "event": "judge_blocked",
                    "judge_id": judge_id,
                    "reason": "spam",
                    "mean_abs_deviation": spam.mean_abs_deviation,
                    "at": now,
                }
                events.append(block)
                self.apply(block)

        outcome = RatingOutcome(
            rating=self.ratings[-1], judge_phase=self.judges[judge_id].phase, spam=spam
        )
        return events, outcome

    def command_submit_qualification(
        self, judge_id: str, answers: Mapping[str, int], now: float
    ) -> tuple[list[dict], QualificationResult]:
        phase = self._phase_of(judge_id)
        if phase is Phase.BLOCKED:
            raise PhaseError("judge is blocked")
        if phase is Phase.QUALIFIED:
            raise PhaseError("judge is already qualified")
        if phase is Phase.NEW:
            raise PhaseError("training must be completed before qualification")

        expected = {c.clip_id: c.expected for c in self.study.qualification}
        missing = sorted(set(expected) - set(answers))
        if missing:
            raise IncompleteAnswersError(f"missing answers for: {', '.join(missing)}")
        extra = sorted(set(answers) - set(expected))
        if extra:
            raise IncompleteAnswersError(f"answers for unknown clips: {', '.join(extra)}")
        for clip_id, score in answers.items():
            if not isinstance(score, int) or isinstance(score, bool) or not 1 <= score <= 5:
                raise InvalidScoreError(f"answer for {clip_id!r} must be an integer in 1..5")

        right = sum(
            1
            for clip_id, want in expected.items()
            if (want == 5 and answers[clip_id] >= 4) or (want == 1 and answers[clip_id] <= 2)
        )
        total = len(expected)
        passed = right * QUALIFICATION_PASS_DEN >= total * QUALIFICATION_PASS_NUM
        attempt = (self.judges.get(judge_id) or JudgeState(judge_id)).qualification_attempts + 1

        events = [{
            "event": "qualification_submitted",
            "judge_id": judge_id,
            "answers": sorted(answers.items()),
            "right_fraction": right / total,
            "passed": passed,
            "attempt": attempt,
            "submitted_at": now,
        }]
        self.apply(events[0])
        if not passed and attempt >= MAX_QUALIFICATION_ATTEMPTS:
            block = {
                "event": "judge_blocked",
                "judge_id": judge_id,
                "reason": "qualification",
                "mean_abs_deviation": None,
                "at": now,
            }
            events.append(block)
            self.apply(block)
        result = QualificationResult(
            passed=passed,
            right_fraction=right / total,
            attempt=attempt,
            phase=self.judges[judge_id].phase,
        )
        return events, result

    # -- assignment (read-only apart from a transient qualification cursor) -

    def next_assignment(self, judge_id: str) -> Assignment:
        phase = self._phase_of(judge_id)
        if phase is Phase.BLOCKED:
            return Assignment("blocked")
        if phase is Phase.NEW:
            # training incomplete by definition of the derived phase
            done = self.judges.get(judge_id, JudgeState(judge_id)).training_done
            pending = next(c for c in self.study.training if c.clip_id not in done)
            return Assignment("training", pending.clip_id, pending.path)
        if phase is Phase.TRAINED:
            cursor = self._qual_cursor.get(judge_id, 0)
            clip = self.study.qualification[cursor % len(self.study.qualification)]
            self._qual_cursor[judge_id] = cursor + 1
            return Assignment("qualification", clip.clip_id, clip.path)
        rated_by_judge = set(self._by_judge.get(judge_id, {}))
        target = self.study.config.ratings_per_clip_target
        eligible = [
            c for c in self.study.clips
            if c.clip_id not in rated_by_judge
            and self._included_counts[c.clip_id] < target
        ]
        if not eligible:
            return Assignment("done")
        best = min(eligible, key=lambda c: (self._included_counts[c.clip_id], c.clip_id))
        return Assignment("rate", best.clip_id, best.path)

    # -- spam control -------------------------------------------------------

    def judge_deviations(self, judge_id: str) -> list[float]:
        """Signed deviations of the judge's included ratings from peer means.

        Only ratings on clips carrying at least 3 other included ratings
        count; deviations are evaluated against the current state, oldest
        first.
        """
        deviations = []
        for rating in self.ratings:
            if rating.judge_id != judge_id or not self.is_included(rating):
                continue
            others = [
                r.score
                for r in self.ratings
                if r.clip_id == rating.clip_id
                and r.judge_id != judge_id
                and self.is_included(r)
            ]
            if len(others) >= 3:
                deviations.append(rating.score - math.fsum(others) / len(others))
        return deviations

    def spam_check(self, judge_id: str) -> SpamCheckResult:
        judge = self.judges.get(judge_id)
        if judge is not None and judge.phase is Phase.BLOCKED:
            return SpamCheckResult("blocked", None, 0)
        window = self.study.config.spam_window
        deviations = self.judge_deviations(judge_id)
        recent = deviations[-window:]
        if not recent:
            return SpamCheckResult("ok", None, 0)
        mean_abs = math.fsum(abs(d) for d in recent) / len(recent)
        if mean_abs > self.study.config.spam_threshold:
            status = "blocked" if len(recent) >= window else "flagged"
        else:
            status = "ok"
        return SpamCheckResult(status, mean_abs, len(recent))


# -- aggregation -----------------------------------------------------------


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def _sample_sd(values: Sequence[float]) -> float:
    m = _mean(values)
    return math.sqrt(math.fsum((v - m) ** 2 for v in values) / (len(values) - 1))


def aggregate_mos(state: StudyState) -> MosReport:
    """Per-clip, per-condition, histogram and noise-type MOS over included ratings."""
    study = state.study
    scores_by_clip: dict[str, list[int]] = {c.clip_id: [] for c in study.clips}
    for rating in state.ratings:
        if state.is_included(rating):
            scores_by_clip[rating.clip_id].append(rating.score)
    if all(not s for s in scores_by_clip.values()):
        raise EmptyStudyError(f"study {study.study_id!r} has no included ratings")

    target = study.config.ratings_per_clip_target
    clip_rows = []
    for clip in sorted(study.clips, key=lambda c: c.clip_id):
        scores = scores_by_clip[clip.clip_id]
        mos = _mean(scores) if scores else None
        clip_rows.append(
            ClipMos(
                clip_id=clip.clip_id,
                condition=clip.condition,
                noise_type=clip.noise_type,
                mos=mos,
                n_ratings=len(scores),
                below_target=len(scores) < target,
            )
        )

    per_condition: dict[str, list[float]] = {}
    per_pair: dict[tuple[str, str], list[float]] = {}
    for row in clip_rows:
        if row.mos is None:
            continue
        per_condition.setdefault(row.condition, []).append(row.mos)
        per_pair.setdefault((row.condition, row.noise_type), []).append(row.mos)

    conditions = tuple(
        ConditionMos(
            condition=name,
            mos=_mean(values),
            ci95=(1.96 * _sample_sd(values) / math.sqrt(len(values)))
            if len(values) >= 2
            else None,
            n_clips=len(values),
        )
        for name, values in sorted(per_condition.items())
    )
    histograms = tuple(
        (name, _histogram(values)) for name, values in sorted(per_condition.items())
    )
    by_noise = tuple(
        ConditionNoiseMos(condition=c, noise_type=n, mos=_mean(v), n_clips=len(v))
        for (c, n), v in sorted(per_pair.items())
    )
    return MosReport(
        study_id=study.study_id,
        clips=tuple(clip_rows),
        conditions=conditions,
        histograms=histograms,
        by_noise_type=by_noise,
    )


def _histogram(values: Iterable[float]) -> tuple[int, ...]:
    counts = [0] * HISTOGRAM_BINS
    for v in values:
        index = min(int((v - 1.0) / HISTOGRAM_BIN_WIDTH), HISTOGRAM_BINS - 1)
        counts[index] += 1
    return tuple(counts)


# -- anchor normalization ----------------------------------------------------


def measured_anchors(report: MosReport, anchor_conditions: tuple[str, str]) -> tuple[float, float]:
    """MOS of the two anchor conditions, raising when either is absent."""
    return (
        report.condition(anchor_conditions[0]).mos,
        report.condition(anchor_conditions[1]).mos,
    )


def normalize_to_reference(
    report: MosReport,
    measured: tuple[float, float],
    reference: tuple[float, float] = DEFAULT_REFERENCE_ANCHORS,
) -> tuple[NormalizedConditionMos, ...]:
    """Affine-map condition MOS so the two anchors land on their reference values.

    A two-point fit is exact when both pairs differ. Equal reference anchors
    make the system singular; the fallback pins the slope to 1 and shifts by
    the difference of anchor means, which is the least-squares solution with
    unit slope. Equal measured anchors with distinct references admit no
    affine map at all. Outputs are clamped to the 1..5 scale.
    """
    x1, x2 = measured
    y1, y2 = reference
    if y1 == y2:
        a = 1.0
        b = (y1 + y2) / 2.0 - (x1 + x2) / 2.0
    elif x1 == x2:
        raise DegenerateAnchorsError(
            "measured anchors are equal but reference anchors differ; "
            "no affine map can separate them"
        )
    else:
        a = (y2 - y1) / (x2 - x1)
        b = y1 - a * x1
    return tuple(
        NormalizedConditionMos(c.condition, min(5.0, max(1.0, a * c.mos + b)))
        for c in report.conditions
    )


# -- study construction ------------------------------------------------------


def expand_conditions(
    noisy_clips: Sequence[tuple[str, str, str]],
    condition_files: Mapping[str, Mapping[str, str]],
    noisy_condition: str = "Noisy",
) -> list[RateableClip]:
    """Build the rateable set from noisy clips plus per-condition file maps.

    noisy_clips rows are (clip_id, noise_type, path). condition_files maps a
    condition name to {clip_id: path} for the processed version of each clip.
    Every condition must cover every clip; the rateable id is
    "<clip_id>__<condition>".
    """
    items = []
    for clip_id, noise_type, path in noisy_clips:
        items.append(
            RateableClip(f"{clip_id}__{noisy_condition}", noisy_condition, noise_type, path)
        )
        for condition, files in sorted(condition_files.items()):
            if clip_id not in files:
                raise StudyDefinitionError(
                    f"condition {condition!r} has no file for clip {clip_id!r}"
                )
            items.append(
                RateableClip(
                    f"{clip_id}__{condition}", condition, noise_type, files[clip_id]
                )
            )
    return items


def build_study(
    study_id: str,
    clips: Sequence[RateableClip],
    training: Sequence[TrainingClip],
    qualification: Sequence[QualificationClip],
    config: StudyConfig = StudyConfig(),
    check_files: bool = True,
) -> StudyDef:
    """Validate and assemble a study definition.

    Requires at least 2 qualification clips and, when check_files is set,
    that every referenced audio file exists.
    """
    if len(qualification) < 2:
        raise StudyDefinitionError("a study needs at least 2 qualification clips")
    study = StudyDef(
        study_id=study_id,
        clips=tuple(clips),
        training=tuple(training),
        qualification=tuple(qualification),
        config=config,
    )
    if check_files:
        missing = [
            c.path
            for group in (study.clips, study.training, study.qualification)
            for c in group
            if not Path(c.path).is_file()
        ]
        if missing:
            raise StudyDefinitionError(
                "missing audio files: " + ", ".join(sorted(missing)[:5])
                + ("..." if len(missing) > 5 else "")
            )
    return study


# -- (de)serialization of the study definition -------------------------------


def study_to_dict(study: StudyDef) -> dict:
    return {
        "study_id": study.study_id,
        "clips": [
            {"clip_id": c.clip_id, "condition": c.condition,
             "noise_type": c.noise_type, "path": c.path}
            for c in study.clips
        ],
        "training": [{"clip_id": c.clip_id, "path": c.path} for c in study.training],
        "qualification": [
            {"clip_id": c.clip_id, "expected": c.expected, "path": c.path}
            for c in study.qualification
        ],
        "config": {
            "ratings_per_clip_target": study.config.ratings_per_clip_target,
            "spam_window": study.config.spam_window,
            "spam_threshold": study.config.spam_threshold,
            "anchor_conditions": list(study.config.anchor_conditions),
            "reference_anchors": list(study.config.reference_anchors),
        },
    }


def study_from_dict(data: Mapping) -> StudyDef:
    try:
        config_data = data.get("config", {})
        config = StudyConfig(
            ratings_per_clip_target=int(config_data.get("ratings_per_clip_target", 10)),
            spam_window=int(config_data.get("spam_window", 20)),
            spam_threshold=float(config_data.get("spam_threshold", 1.5)),
            anchor_conditions=tuple(config_data.get("anchor_conditions", ("Noisy", "Wiener"))),
            reference_anchors=tuple(
                float(v) for v in config_data.get("reference_anchors", DEFAULT_REFERENCE_ANCHORS)
            ),
        )
        return StudyDef(
            study_id=str(data["study_id"]),
            clips=tuple(
                RateableClip(str(c["clip_id"]), str(c["condition"]),
                             str(c["noise_type"]), str(c["path"]))
                for c in data["clips"]
            ),
            training=tuple(
                TrainingClip(str(c["clip_id"]), str(c["path"])) for c in data.get("training", [])
            ),
            qualification=tuple(
                QualificationClip(str(c["clip_id"]), int(c["expected"]), str(c["path"]))
                for c in data["qualification"]
            ),
            config=config,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise StudyDefinitionError(f"malformed study definition: {exc}") from exc
