"""Acceptance suite: one test per shipped guarantee, at the stated tolerance.

Run `pytest tests/test_acceptance.py -v` for one pass/fail line per guarantee.
Each test is self-contained and exercises the public surface only; the heavier
fixtures (a 700-clip balanced corpus, a live HTTP server with 20 concurrent
judges) are what the guarantees are stated against, so no scaled-down stand-ins.
"""
import hashlib
import json
import math
import threading
import time
from collections import defaultdict
from types import SimpleNamespace

import httpx
import numpy as np
import pytest
import uvicorn

from noisylab.audio import AudioClip, measure_rms_dbfs, read_wav, write_wav
from noisylab.corpus import SynthesisConfig, scan_sources, synthesize_corpus
from noisylab.metrics import pearson_correlation
from noisylab.mos.model import (
    ConditionMos,
    MosReport,
    Phase,
    QualificationClip,
    RateableClip,
    StudyConfig,
    StudyDef,
    StudyState,
    TrainingClip,
    aggregate_mos,
    measured_anchors,
    normalize_to_reference,
)
from noisylab.mos.render import report_json_bytes
from noisylab.mos.server import create_app
from noisylab.mos.store import StudyStore
from noisylab.wiener import (
    StftConfig,
    WienerParams,
    enhance,
    istft,
    stft,
    wiener_gain,
    wiener_gain_law,
)
from noisylab.wiener import NoiseTracker

from conftest import build_source_dirs, speech_like

RATE = 16000


# -- shared corpus: 2 speakers x 5 sentences x 14 noise types x 5 SNRs ---------


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    root = tmp_path_factory.mktemp("sweep")
    clean, noise = build_source_dirs(
        root,
        n_speakers=2,
        utts_per_speaker=5,
        utt_len_s=0.5,
        n_noise_types=14,
        recs_per_type=1,
        rec_len_s=1.0,
        seed=11,
    )
    inventory = scan_sources(clean, noise)
    config = SynthesisConfig(
        total_clips=700,
        snr_levels_db=(0.0, 5.0, 10.0, 15.0, 20.0),
        seed=42,
        clip_length_s=0.6,
    )
    out = root / "corpus"
    started = time.monotonic()
    records, manifest = synthesize_corpus(inventory, config, out)
    elapsed = time.monotonic() - started
    return SimpleNamespace(records=records, out=out, elapsed=elapsed)


def test_primary_augmentation_arithmetic(sweep):
    # 2 speakers x 5 sentences x 14 noise types x 5 SNRs
    assert len(sweep.records) == 700

    # cells are visited round-robin, so each (speaker, noise, snr) cell holds 5
    # rows and the k-th row of every cell shares the speaker's k-th segment
    cells = defaultdict(list)
    for r in sorted(sweep.records, key=lambda r: r.clip_id):
        cells[(r.speaker_id, r.noise_type, r.snr_db)].append(r)
    assert len(cells) == 2 * 14 * 5
    assert all(len(rows) == 5 for rows in cells.values())

    segments = defaultdict(list)
    for rows in cells.values():
        for ordinal, r in enumerate(rows):
            segments[(r.speaker_id, ordinal)].append(r)
    assert len(segments) == 10
    assert all(len(rows) == 70 for rows in segments.values())
    for rows in segments.values():
        assert {(r.noise_type, r.snr_db) for r in rows} == {
            (n, s) for n in {r.noise_type for r in sweep.records}
            for s in (0.0, 5.0, 10.0, 15.0, 20.0)
        }
        # reuse is physical: all 70 mixtures share one clean segment
        # (byte-comparable here because nothing triggered the peak rescale)
        assert all(r.post_mix_gain == 1.0 for r in rows)
        digests = {
            hashlib.sha256((sweep.out / r.clean_path).read_bytes()).hexdigest()
            for r in rows
        }
        assert len(digests) == 1
    assert sweep.elapsed < 60.0
    print(f"[PASS] augmentation arithmetic: 700 rows, reuse factor 70, "
          f"synthesized in {sweep.elapsed:.1f}s")


def test_primary_snr_fidelity(sweep):
    assert len(sweep.records) >= 500
    assert {r.snr_db for r in sweep.records} == {0.0, 5.0, 10.0, 15.0, 20.0}
    worst_snr = 0.0
    worst_level = 0.0
    for r in sweep.records:
        clean = read_wav(sweep.out / r.clean_path)
        noise = read_wav(sweep.out / r.noise_path)
        measured = 10.0 * math.log10(
            float(np.sum(clean.samples**2)) / float(np.sum(noise.samples**2))
        )
        worst_snr = max(worst_snr, abs(measured - r.snr_db))
        worst_level = max(worst_level, abs(measure_rms_dbfs(clean) - (-25.0)))
    assert worst_snr <= 0.05
    assert worst_level <= 0.1
    print(f"[PASS] SNR fidelity: {len(sweep.records)} triplets, max |SNR error| "
          f"{worst_snr:.4f} dB, max |level error| {worst_level:.4f} dB")


def test_primary_additivity(sweep):
    bound = 2.0 / 32768.0
    worst = 0.0
    for r in sweep.records:
        noisy = read_wav(sweep.out / r.noisy_path).samples
        clean = read_wav(sweep.out / r.clean_path).samples
        noise = read_wav(sweep.out / r.noise_path).samples
        worst = max(worst, float(np.max(np.abs(noisy - clean - noise))))
    assert worst <= bound
    print(f"[PASS] additivity: max |noisy-clean-noise| = {worst * 32768:.3f}/32768")


def test_primary_determinism(tmp_path):
    clean, noise = build_source_dirs(
        tmp_path, n_speakers=2, utts_per_speaker=2, n_noise_types=4,
        recs_per_type=1, seed=3,
    )
    inventory = scan_sources(clean, noise)
    config = SynthesisConfig(
        total_clips=80, snr_levels_db=(0.0, 10.0), seed=9, clip_length_s=0.6
    )

    outputs = {}
    for name, workers in (("a", 1), ("b", 1), ("par", 3)):
        out = tmp_path / name
        records, manifest = synthesize_corpus(inventory, config, out, workers=workers)
        files = {
            str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()
        }
        outputs[name] = files
    assert outputs["a"] == outputs["b"]
    assert outputs["a"] == outputs["par"]
    n_files = len(outputs["a"])
    print(f"[PASS] determinism: {n_files} files byte-identical across reruns "
          f"and a 3-worker pool")


def test_primary_stft_identity():
    rng = np.random.default_rng(5)
    x = speech_like(rng, 2 * RATE)
    cfg = StftConfig()
    spectra = stft(AudioClip(x, RATE), cfg)
    spectra = spectra * np.ones_like(spectra)  # the gain=1 enhancement path
    y = istft(spectra, cfg, length=len(x), sample_rate_hz=RATE).samples
    frame = cfg.frame_length(RATE)
    interior = slice(frame, len(x) - frame)
    rel = float(
        np.linalg.norm(y[interior] - x[interior]) / np.linalg.norm(x[interior])
    )
    assert rel <= 1e-6
    print(f"[PASS] analysis/resynthesis identity: interior relative L2 {rel:.2e}")


def test_primary_wiener_gain_law():
    grid = np.round(np.arange(0.0, 10.05, 0.1), 10)
    ps, pn = np.meshgrid(grid, grid)
    law = wiener_gain_law(ps, pn)
    denom = ps + pn
    mask = denom > 0
    expected = ps[mask] / denom[mask]
    worst = float(np.max(np.abs(law[mask] - expected)))
    assert worst <= 1e-12
    assert np.all(law[~mask] == 0.0)

    # the full gain path must land in [floor, 1] over the same grid
    params = WienerParams()
    floor_violations = 0
    for noise_power in grid:
        tracker = NoiseTracker.fresh(len(grid))
        tracker.noise_psd = np.full(len(grid), noise_power)
        spectrum = np.sqrt(grid + noise_power).astype(complex)
        gains = wiener_gain(spectrum, tracker, params)
        if not (np.all(gains >= params.gain_floor) and np.all(gains <= 1.0)):
            floor_violations += 1
    assert floor_violations == 0
    print(f"[PASS] suppression gain law: max |H - Ps/(Ps+Pn)| = {worst:.2e} "
          f"over a {grid.size}x{grid.size} grid; floored gains stay in "
          f"[{params.gain_floor:.4f}, 1]")


def _output_snr_db(enhanced: np.ndarray, clean: np.ndarray) -> float:
    err = enhanced - clean
    return 10.0 * math.log10(float(np.sum(clean**2)) / float(np.sum(err**2)))


def test_primary_wiener_efficacy():
    rng = np.random.default_rng(7)
    speech = speech_like(rng, 10 * RATE)
    noise = rng.normal(0.0, 1.0, 10 * RATE)
    snr_in = 5.0
    # scale noise for an exact 5 dB mixture
    noise *= math.sqrt(float(np.sum(speech**2)) / float(np.sum(noise**2))) \
        / 10.0 ** (snr_in / 20.0)
    noisy = speech + noise

    enhanced = enhance(AudioClip(noisy, RATE)).samples
    gain = _output_snr_db(enhanced, speech) - snr_in
    assert gain >= 3.0

    # clean input: a short near-silent lead-in gives the tracker its noise floor
    lead = rng.normal(0.0, 1e-7, int(0.2 * RATE))
    clean_clip = np.concatenate([lead, speech])
    out = enhance(AudioClip(clean_clip, RATE)).samples
    degradation = float(np.linalg.norm(out - clean_clip) / np.linalg.norm(clean_clip))
    assert degradation <= 0.05
    print(f"[PASS] enhancer efficacy: +{gain:.2f} dB on a 5 dB stationary mixture; "
          f"clean-input degradation {degradation:.4f} relative L2")


def test_primary_pearson_correctness():
    rng = np.random.default_rng(13)
    x = rng.normal(0, 1, 40)
    y = rng.normal(0, 1, 40)
    assert abs(pearson_correlation(x, x) - 1.0) <= 1e-12
    assert abs(pearson_correlation(x, -x) + 1.0) <= 1e-12
    base = pearson_correlation(x, y)
    assert abs(pearson_correlation(3.7 * x - 2.1, y) - base) <= 1e-12
    assert abs(pearson_correlation(x, 0.5 * y + 11.0) - base) <= 1e-12
    # [DERIVED] cov=1.25, sd_x=sd_y=sqrt(5)/2 (ddof=1) -> r = 1.25/1.5625... = 0.8
    hand = pearson_correlation(np.array([1.0, 2, 3, 4]), np.array([1.0, 3, 2, 4]))
    assert abs(hand - 0.8) <= 1e-12
    print(f"[PASS] pearson correctness: identity/sign/affine within 1e-12, "
          f"hand case = {hand}")


# -- MOS aggregation against an independent brute-force oracle -----------------


def _oracle_report(events, study):
    """Recompute the full report straight from the raw event list."""
    blocked = {e["judge_id"] for e in events if e["event"] == "judge_blocked"}
    by_clip = defaultdict(list)
    for e in events:
        if (
            e["event"] == "rating_submitted"
            and e["phase"] == "rate"
            and e["judge_id"] not in blocked
        ):
            by_clip[e["clip_id"]].append(e["score"])

    clips = {}
    per_condition = defaultdict(list)
    per_pair = defaultdict(list)
    for clip in sorted(study.clips, key=lambda c: c.clip_id):
        scores = by_clip.get(clip.clip_id, [])
        mos = math.fsum(scores) / len(scores) if scores else None
        clips[clip.clip_id] = (mos, len(scores))
        if mos is not None:
            per_condition[clip.condition].append(mos)
            per_pair[(clip.condition, clip.noise_type)].append(mos)

    conditions = {}
    histograms = {}
    for name, values in per_condition.items():
        mean = math.fsum(values) / len(values)
        if len(values) >= 2:
            sd = math.sqrt(
                math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
            )
            ci = 1.96 * sd / math.sqrt(len(values))
        else:
            ci = None
        conditions[name] = (mean, ci, len(values))
        counts = [0] * 16
        for v in values:
            counts[min(int((v - 1.0) / 0.25), 15)] += 1
        histograms[name] = tuple(counts)
    pairs = {
        key: (math.fsum(v) / len(v), len(v)) for key, v in per_pair.items()
    }
    return clips, conditions, histograms, pairs


def _assert_report_matches_oracle(report, oracle):
    clips, conditions, histograms, pairs = oracle
    assert {c.clip_id: (c.mos, c.n_ratings) for c in report.clips} == clips
    assert {
        c.condition: (c.mos, c.ci95, c.n_clips) for c in report.conditions
    } == conditions
    assert dict(report.histograms) == histograms
    assert {
        (r.condition, r.noise_type): (r.mos, r.n_clips) for r in report.by_noise_type
    } == pairs


def test_primary_mos_aggregation_oracle():
    clips = tuple(
        RateableClip(
            f"c{i:02d}",
            ("Noisy", "Wiener")[i % 2],
            ("babble", "car", "street")[i % 3],
            f"c{i:02d}.wav",
        )
        for i in range(50)
    )
    study = StudyDef(
        study_id="oracle",
        clips=clips,
        training=(),
        qualification=(
            QualificationClip("q5", 5, "q5.wav"),
            QualificationClip("q1", 1, "q1.wav"),
        ),
    )
    state = StudyState(study)
    rng = np.random.default_rng(21)
    events = []

    def emit(event):
        events.append(event)
        state.apply(event)

    now = 0.0
    for j in range(10):
        judge = f"j{j}"
        emit({
            "event": "qualification_submitted", "judge_id": judge,
            "attempt": 1, "right_fraction": 1.0, "passed": True, "at": now,
        })
        for clip in clips:
            now += 1.0
            emit({
                "event": "rating_submitted",
                "rating_id": state.next_rating_id(),
                "judge_id": judge,
                "clip_id": clip.clip_id,
                "score": int(rng.integers(1, 6)),
                "submitted_at": now,
                "phase": "rate",
            })

    report = aggregate_mos(state)
    assert all(c.n_ratings == 10 for c in report.clips)
    _assert_report_matches_oracle(report, _oracle_report(events, study))

    # blocking one judge must retroactively exclude exactly their ratings
    before = {c.clip_id: c.n_ratings for c in report.clips}
    emit({"event": "judge_blocked", "judge_id": "j3"})
    after_report = aggregate_mos(state)
    after = {c.clip_id: c.n_ratings for c in after_report.clips}
    assert all(before[cid] - after[cid] == 1 for cid in before)
    _assert_report_matches_oracle(after_report, _oracle_report(events, study))
    print("[PASS] aggregation oracle: 500 ratings reproduced exactly; "
          "blocking j3 removed exactly 50 ratings")


def _qual_study(n_qual=10, training=(), **config):
    qual = tuple(
        QualificationClip(f"q{i}", 5 if i % 2 == 0 else 1, f"q{i}.wav")
        for i in range(n_qual)
    )
    return StudyDef(
        study_id="gate",
        clips=(RateableClip("c0", "Noisy", "babble", "c0.wav"),),
        training=tuple(training),
        qualification=qual,
        config=StudyConfig(**config) if config else StudyConfig(),
    )


def _answers(study, n_right):
    answers = {}
    for i, q in enumerate(study.qualification):
        if i < n_right:
            answers[q.clip_id] = q.expected
        else:
            answers[q.clip_id] = 1 if q.expected == 5 else 5
    return answers


def test_primary_qualification_gate_and_lifecycle():
    # 8/10 right passes, 7/10 fails
    state = StudyState(_qual_study())
    _, result = state.command_submit_qualification("pass8", _answers(state.study, 8), 0.0)
    assert result.passed and result.right_fraction == 0.8
    assert state.judge("pass8").phase is Phase.QUALIFIED
    _, result = state.command_submit_qualification("fail7", _answers(state.study, 7), 1.0)
    assert not result.passed and result.right_fraction == 0.7

    # full walk: new -> trained -> qualified
    study = _qual_study(training=(TrainingClip("t0", "t0.wav"), TrainingClip("t1", "t1.wav")))
    state = StudyState(study)
    judge = "walker"
    assert state._phase_of(judge) is Phase.NEW
    state.command_submit_rating(judge, "t0", 3, 0.0)
    assert state.judge(judge).phase is Phase.NEW
    state.command_submit_rating(judge, "t1", 3, 1.0)
    assert state.judge(judge).phase is Phase.TRAINED
    state.command_submit_qualification(judge, _answers(study, 10), 2.0)
    assert state.judge(judge).phase is Phase.QUALIFIED
    assert state.next_assignment(judge).phase == "rate"

    # blocked path 1: two failed qualification attempts
    state = StudyState(_qual_study())
    state.command_submit_qualification("cheat", _answers(state.study, 0), 0.0)
    _, result = state.command_submit_qualification("cheat", _answers(state.study, 0), 1.0)
    assert result.phase is Phase.BLOCKED
    assert state.next_assignment("cheat").phase == "blocked"

    # blocked path 2: sustained deviation from peer consensus
    clips = tuple(RateableClip(f"c{i}", "Noisy", "babble", f"c{i}.wav") for i in range(8))
    study = StudyDef(
        study_id="spam",
        clips=clips,
        training=(),
        qualification=(
            QualificationClip("q5", 5, "q5.wav"),
            QualificationClip("q1", 1, "q1.wav"),
        ),
        config=StudyConfig(spam_window=4, spam_threshold=1.5),
    )
    state = StudyState(study)
    now = 0.0
    for judge in ("p1", "p2", "p3", "spammer"):
        state.command_submit_qualification(
            judge, {"q5": 5, "q1": 1}, now
        )
    for clip in clips:
        for judge, score in (("p1", 1), ("p2", 2), ("p3", 1)):
            now += 1
            state.command_submit_rating(judge, clip.clip_id, score, now)
    outcome = None
    for clip in clips[:4]:
        now += 1
        _, outcome = state.command_submit_rating("spammer", clip.clip_id, 5, now)
    assert outcome.spam.status == "blocked"
    assert state.judge("spammer").phase is Phase.BLOCKED
    print("[PASS] qualification gate: 8/10 pass, 7/10 fail; lifecycle "
          "new->trained->qualified; blocked via retry and via spam")


def test_primary_normalization():
    conditions = tuple(
        ConditionMos(name, mos, None, 1)
        for name, mos in (
            ("Clean", 4.9), ("DNN-A", 3.0), ("Noisy", 2.5), ("Wiener", 4.5),
        )
    )
    report = MosReport("norm", (), conditions, (), ())
    measured = measured_anchors(report, ("Noisy", "Wiener"))
    assert measured == (2.5, 4.5)

    reference = (2.0, 3.0)
    normalized = {
        n.condition: n.mos
        for n in normalize_to_reference(report, measured, reference)
    }
    # oracle: solve [[x1, 1], [x2, 1]] [a, b]^T = [y1, y2]^T
    a, b = np.linalg.solve(
        np.array([[measured[0], 1.0], [measured[1], 1.0]]), np.array(reference)
    )
    assert abs(a - 0.5) <= 1e-12 and abs(b - 0.75) <= 1e-12
    for cond in conditions:
        expected = min(5.0, max(1.0, a * cond.mos + b))
        assert abs(normalized[cond.condition] - expected) <= 1e-12

    # equal reference anchors: offset-only fallback, ranking preserved
    shifted = {
        n.condition: n.mos
        for n in normalize_to_reference(report, measured, (2.45, 2.45))
    }
    offset = 2.45 - (2.5 + 4.5) / 2.0
    for cond in conditions:
        assert abs(shifted[cond.condition] - (cond.mos + offset)) <= 1e-12
    rank = lambda d: sorted(d, key=d.get)
    assert rank(shifted) == rank({c.condition: c.mos for c in conditions})
    print(f"[PASS] anchor normalization: affine fit a={a}, b={b} matches the "
          f"2x2 solve; equal-anchor fallback shifts by {offset} and keeps ranking")


# -- live service under concurrent judges --------------------------------------


def _start_server(app):
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 15.0
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    return server, thread, port


def _score_for(clip_id: str) -> int:
    return int(clip_id[1:4]) % 5 + 1


def _judge_session(base_url: str, study_id: str) -> str:
    with httpx.Client(base_url=base_url, timeout=30.0) as client:
        judge = client.post("/api/v1/judges").json()["judge_id"]
        while True:
            r = client.get(
                f"/api/v1/studies/{study_id}/next", params={"judge": judge}
            )
            assert r.status_code == 200, r.text
            a = r.json()
            if a["phase"] == "training":
                r = client.post(
                    f"/api/v1/studies/{study_id}/ratings",
                    json={"judge": judge, "clip_token": a["clip_token"], "score": 3},
                )
                assert r.status_code == 201, r.text
            elif a["phase"] == "qualification":
                r = client.post(
                    f"/api/v1/studies/{study_id}/qualification",
                    json={
                        "judge": judge,
                        "answers": [
                            {"clip_id": "q_hi", "score": 5},
                            {"clip_id": "q_lo", "score": 1},
                        ],
                    },
                )
                assert r.status_code == 200 and r.json()["pass"], r.text
            elif a["phase"] == "rate":
                r = client.post(
                    f"/api/v1/studies/{study_id}/ratings",
                    json={
                        "judge": judge,
                        "clip_token": a["clip_token"],
                        "score": _score_for(a["clip_id"]),
                    },
                )
                assert r.status_code == 201, r.text
            elif a["phase"] == "done":
                return judge
            else:
                raise AssertionError(f"unexpected phase for an honest judge: {a}")


def test_primary_service_api_concurrent_study(tmp_path):
    media = tmp_path / "media"
    media.mkdir()
    rng = np.random.default_rng(31)
    wavs = []
    for i in range(4):
        p = media / f"m{i}.wav"
        write_wav(AudioClip(0.3 * speech_like(rng, 3200), RATE), p)
        wavs.append(str(p))

    n_clips, n_judges, target = 100, 20, 10
    definition = {
        "study_id": "load",
        "clips": [
            {
                "clip_id": f"c{i:03d}",
                "condition": ("Noisy", "Wiener")[i % 2],
                "noise_type": ("babble", "car", "street", "cafe")[i % 4],
                "path": wavs[i % 4],
            }
            for i in range(n_clips)
        ],
        "training": [{"clip_id": "t0", "path": wavs[0]}],
        "qualification": [
            {"clip_id": "q_hi", "expected": 5, "path": wavs[1]},
            {"clip_id": "q_lo", "expected": 1, "path": wavs[2]},
        ],
        "config": {"ratings_per_clip_target": target},
    }

    store = StudyStore(tmp_path / "data")
    server, thread, port = _start_server(create_app(store))
    base = f"http://127.0.0.1:{port}"
    try:
        r = httpx.post(f"{base}/api/v1/studies", json=definition, timeout=30.0)
        assert r.status_code == 201, r.text

        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=n_judges) as pool:
            judges = list(
                pool.map(lambda _: _judge_session(base, "load"), range(n_judges))
            )
        assert len(set(judges)) == n_judges

        report_resp = httpx.get(
            f"{base}/api/v1/studies/load/report", timeout=30.0
        )
        assert report_resp.status_code == 200
    finally:
        server.should_exit = True
        thread.join(timeout=10.0)

    report = json.loads(report_resp.content)
    assert all(c["n_ratings"] >= target for c in report["clips"])
    assert not any(c["below_target"] for c in report["clips"])

    events = [
        json.loads(line)
        for line in (tmp_path / "data/studies/load/events.jsonl").read_text().splitlines()
    ]
    ratings = [e for e in events if e["event"] == "rating_submitted"]
    pairs = [(e["judge_id"], e["clip_id"]) for e in ratings]
    assert len(pairs) == len(set(pairs))  # zero duplicate (judge, clip)

    qualified_at = {}
    for i, e in enumerate(events):
        if e["event"] == "qualification_submitted" and e["passed"]:
            qualified_at.setdefault(e["judge_id"], i)
    for i, e in enumerate(events):
        if e["event"] == "rating_submitted" and e["phase"] == "rate":
            assert qualified_at.get(e["judge_id"], len(events)) < i

    # a cold replay of the event log must reproduce the report byte for byte
    replayed = StudyStore(tmp_path / "data")
    assert report_json_bytes(aggregate_mos(replayed.study("load"))) == report_resp.content
    n_rate = sum(1 for e in ratings if e["phase"] == "rate")
    print(f"[PASS] service API: {n_judges} concurrent judges, {n_rate} included "
          f"ratings over {n_clips} clips, no duplicates, replay byte-identical")
