"""HTTP + JSON API over the study store.

Endpoints (all JSON unless noted):

    POST /api/v1/studies                  create a study from a definition
    POST /api/v1/judges                   register, returns a judge id
    GET  /api/v1/studies/{id}/next        next assignment or phase directive
    POST /api/v1/studies/{id}/ratings     submit one rating (idempotent)
    POST /api/v1/studies/{id}/qualification  submit the full answer set
    GET  /api/v1/studies/{id}/report      aggregated report (JSON or CSV)
    GET  /api/v1/studies/{id}/judges      per-judge progress counts
    GET  /clips/{clip_token}              WAV bytes for an assigned clip

Clip tokens are minted per assignment, unguessable, and scoped to one
study; rating submissions reference the token, never a raw file path.
"""
from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass

from fastapi import FastAPI, HTTPException, Query, Request, Response
from fastapi.responses import FileResponse, PlainTextResponse
from pydantic import BaseModel

from .model import (
    DuplicateRatingError,
    EmptyStudyError,
    IncompleteAnswersError,
    InvalidScoreError,
    MissingAnchorError,
    PhaseError,
    StudyDefinitionError,
    StudyError,
    UnknownClipError,
    aggregate_mos,
    build_study,
    measured_anchors,
    normalize_to_reference,
    study_from_dict,
)
from .render import flat_csv, report_json_bytes
from .store import (
    DuplicateStudyError,
    StudyStore,
    UnknownJudgeError,
    UnknownStudyError,
)


@dataclass(frozen=True)
class _TokenInfo:
    study_id: str
    judge_id: str
    clip_id: str
    phase: str
    path: str


class _ClipTokens:
    """In-flight assignment tokens. Transient by design: a restart only
    forces judges to ask for their next assignment again."""

    def __init__(self):
        self._lock = threading.Lock()
        self._tokens: dict[str, _TokenInfo] = {}
        self._by_assignment: dict[tuple[str, str, str], str] = {}

    def mint(self, info: _TokenInfo) -> str:
        key = (info.study_id, info.judge_id, info.clip_id)
        with self._lock:
            existing = self._by_assignment.get(key)
            if existing is not None:
                return existing
            token = secrets.token_urlsafe(16)
            self._tokens[token] = info
            self._by_assignment[key] = token
            return token

    def resolve(self, token: str) -> _TokenInfo | None:
        with self._lock:
            return self._tokens.get(token)


class RatingBody(BaseModel):
    judge: str
    clip_token: str
    score: int


class AnswerItem(BaseModel):
    clip_id: str
    score: int


class QualificationBody(BaseModel):
    judge: str
    answers: list[AnswerItem]


class JudgeBody(BaseModel):
    judge_id: str | None = None


_ERROR_STATUS = [
    (UnknownStudyError, 404),
    (UnknownJudgeError, 403),
    (UnknownClipError, 404),
    (InvalidScoreError, 422),
    (IncompleteAnswersError, 422),
    (PhaseError, 409),
    (DuplicateStudyError, 409),
    (MissingAnchorError, 409),
    (EmptyStudyError, 409),
    (StudyDefinitionError, 422),
]


def _raise_http(exc: StudyError):
    for cls, status in _ERROR_STATUS:
        if isinstance(exc, cls):
            raise HTTPException(status_code=status, detail=str(exc)) from exc
    raise HTTPException(status_code=400, detail=str(exc)) from exc


def create_app(store: StudyStore, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="listening-test service", docs_url=None, redoc_url=None)
    tokens = _ClipTokens()

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.post("/api/v1/studies", status_code=201)
    async def create_study(request: Request):
        data = await request.json()
        if not isinstance(data, dict):
            raise HTTPException(status_code=422, detail="study definition must be an object")
        if "study_id" not in data:
            data = {**data, "study_id": "s" + secrets.token_hex(4)}
        try:
            study = study_from_dict(data)
            study = build_study(
                study.study_id, study.clips, study.training,
                study.qualification, study.config,
            )
            store.create_study(study)
        except StudyError as exc:
            _raise_http(exc)
        return {"study_id": study.study_id, "n_clips": len(study.clips)}

    @app.post("/api/v1/judges", status_code=201)
    def register_judge(body: JudgeBody | None = None):
        try:
            judge_id = store.register_judge(body.judge_id if body else None)
        except StudyError as exc:
            _raise_http(exc)
        return {"judge_id": judge_id}

    @app.get("/api/v1/studies/{study_id}/next")
    def next_assignment(study_id: str, judge: str = Query(...)):
        try:
            assignment = store.next_assignment(study_id, judge)
        except StudyError as exc:
            _raise_http(exc)
        payload = {"phase": assignment.phase}
        if assignment.clip_id is not None:
            token = tokens.mint(_TokenInfo(
                study_id=study_id,
                judge_id=judge,
                clip_id=assignment.clip_id,
                phase=assignment.phase,
                path=assignment.path,
            ))
            payload.update(
                clip_id=assignment.clip_id,
                clip_token=token,
                clip_url=f"/clips/{token}",
            )
        return payload

    @app.post("/api/v1/studies/{study_id}/ratings")
    def submit_rating(study_id: str, body: RatingBody, response: Response):
        info = tokens.resolve(body.clip_token)
        if info is None or info.study_id != study_id:
            raise HTTPException(status_code=404, detail="unknown clip token")
        if info.judge_id != body.judge:
            raise HTTPException(
                status_code=403, detail="clip token belongs to a different judge"
            )
        try:
            outcome = store.submit_rating(study_id, body.judge, info.clip_id, body.score)
        except DuplicateRatingError:
            prior = store.study(study_id).rating_of(body.judge, info.clip_id)
            if prior is not None and prior.score == body.score:
                response.status_code = 200
                return {
                    "status": "duplicate",
                    "rating_id": prior.rating_id,
                    "clip_id": info.clip_id,
                }
            raise HTTPException(
                status_code=409,
                detail="clip already rated by this judge with a different score",
            ) from None
        except StudyError as exc:
            _raise_http(exc)
        response.status_code = 201
        return {
            "status": "accepted",
            "rating_id": outcome.rating.rating_id,
            "clip_id": info.clip_id,
            "judge_phase": outcome.judge_phase.value,
            "spam_status": outcome.spam.status if outcome.spam else None,
        }

    @app.post("/api/v1/studies/{study_id}/qualification")
    def submit_qualification(study_id: str, body: QualificationBody):
        answers = {item.clip_id: item.score for item in body.answers}
        if len(answers) != len(body.answers):
            raise HTTPException(status_code=422, detail="duplicate clip_id in answers")
        try:
            result = store.submit_qualification(study_id, body.judge, answers)
        except StudyError as exc:
            _raise_http(exc)
        return {
            "pass": result.passed,
            "score": result.right_fraction,
            "attempt": result.attempt,
            "judge_phase": result.phase.value,
        }

    @app.get("/api/v1/studies/{study_id}/report")
    def report(study_id: str, normalize: str | None = None, format: str = "json"):
        try:
            state = store.study(study_id)
            mos_report = aggregate_mos(state)
            normalized = None
            if normalize == "anchors":
                config = state.study.config
                measured = measured_anchors(mos_report, config.anchor_conditions)
                normalized = normalize_to_reference(
                    mos_report, measured, config.reference_anchors
                )
        except StudyError as exc:
            _raise_http(exc)
        if format == "csv":
            return PlainTextResponse(
                flat_csv(mos_report, normalized), media_type="text/csv"
            )
        return Response(
            content=report_json_bytes(mos_report, normalized),
            media_type="application/json",
        )

    @app.get("/api/v1/studies/{study_id}/judges")
    def judges(study_id: str):
        try:
            state = store.study(study_id)
        except StudyError as exc:
            _raise_http(exc)
        rows = []
        for judge_id in sorted(state.judges):
            judge = state.judges[judge_id]
            rows.append({
                "judge_id": judge_id,
                "phase": judge.phase.value,
                "ratings_submitted": judge.ratings_submitted,
                "ratings_included": sum(
                    1 for r in state.ratings
                    if r.judge_id == judge_id and state.is_included(r)
                ),
                "qualification_attempts": judge.qualification_attempts,
                "qualification_score": judge.qualification_score,
            })
        return {"judges": rows}

    @app.get("/clips/{clip_token}")
    def clip_bytes(clip_token: str):
        info = tokens.resolve(clip_token)
        if info is None:
            raise HTTPException(status_code=404, detail="unknown clip token")
        return FileResponse(info.path, media_type="audio/wav")

    return app


def run_server(
    data_dir: str,
    host: str = "127.0.0.1",
    port: int = 8000,
    ui_dir: str | None = None,
) -> None:
    import uvicorn

    uvicorn.run(
        create_app(StudyStore(data_dir), ui_dir=ui_dir),
        host=host, port=port, log_level="warning",
    )
