"""Crowdsourced listening-test service: domain model, store, and HTTP API."""
from .model import (
    Assignment,
    ClipMos,
    ConditionMos,
    ConditionNoiseMos,
    DegenerateAnchorsError,
    DuplicateRatingError,
    EmptyStudyError,
    IncompleteAnswersError,
    InvalidScoreError,
    JudgeState,
    MissingAnchorError,
    MosReport,
    NormalizedConditionMos,
    Phase,
    PhaseError,
    QualificationClip,
    QualificationResult,
    RateableClip,
    Rating,
    RatingOutcome,
    SpamCheckResult,
    StudyConfig,
    StudyDef,
    StudyDefinitionError,
    StudyError,
    StudyState,
    TrainingClip,
    UnknownClipError,
    aggregate_mos,
    build_study,
    expand_conditions,
    measured_anchors,
    normalize_to_reference,
    study_from_dict,
    study_to_dict,
)
from .store import (
    DuplicateStudyError,
    StudyStore,
    UnknownJudgeError,
    UnknownStudyError,
)

__all__ = [name for name in dir() if not name.startswith("_")]
