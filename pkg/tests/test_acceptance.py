"""End-to-end checks of the package's contract, one verdict line per check.

Each test prints PASS/FAIL with a short label so a full run reads as a
checklist. The checks here are intentionally heavier than the unit tests:
randomized cross-checks against oracles, determinism over many replays,
and a real server process that gets killed and restarted.
"""

import contextlib
import dataclasses
import json
import random
import signal
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import httpx
import pytest
from fastapi.testclient import TestClient

from conftest import FIXTURES, SCRIPTED_LINES
from oracles import fk_raw, oracle_match, random_graded_text, random_pattern, random_tokens
from sophie.config import Config
from sophie.dialogue import DialogueEngine
from sophie.patterns import match
from sophie.report import QuestionKind, compute_report, detect_questions, report_to_json
from sophie.service import create_app
from sophie.textmetrics import (
    EMPATHY_CLOUD_CAP,
    HEDGE_CLOUD_CAP,
    Lexicon,
    LexiconKind,
    SentimentTrajectory,
    empathy_metrics,
    hedge_metrics,
    reading_grade,
    sentiment_score,
    sentiment_trajectory,
    trajectory_distance,
)
from sophie.transcript import Speaker, parse_transcript, serialize_transcript

from test_report import CLOSED_QUESTIONS, OPEN_QUESTIONS


@contextlib.contextmanager
def verdict(capfd, label: str):
    try:
        yield
    except BaseException:
        with capfd.disabled():
            print(f"FAIL  {label}", flush=True)
        raise
    with capfd.disabled():
        print(f"PASS  {label}", flush=True)


# ---------------------------------------------------------------------------
# Reading grade


def test_reading_grade_formula(capfd):
    with verdict(capfd, "reading grade: fixed point and 100-text formula cross-check"):
        assert abs(reading_grade("The cancer has spread.").raw - 0.72) < 1e-6
        rng = random.Random(1234)
        for _ in range(100):
            text, words, sentences, syllables = random_graded_text(rng)
            expected = fk_raw(words, sentences, syllables)
            assert abs(reading_grade(text).raw - expected) < 1e-9


# ---------------------------------------------------------------------------
# Question classification


def test_question_classification(capfd, sample_excerpt_path):
    with verdict(capfd, "questions: fixture questions open, 20 labeled sentences 20/20"):
        transcript = parse_transcript(sample_excerpt_path.read_text())
        fixture_questions = [
            q
            for turn in transcript.by_speaker(Speaker.CLINICIAN)
            for q in detect_questions(turn.text)
        ]
        assert len(fixture_questions) == 2
        assert all(kind is QuestionKind.OPEN for _, kind in fixture_questions)

        for text in OPEN_QUESTIONS:
            found = detect_questions(text)
            assert found and found[0][1] is QuestionKind.OPEN, text
        for text in CLOSED_QUESTIONS:
            found = detect_questions(text)
            assert found and found[0][1] is QuestionKind.CLOSED, text
        assert len(OPEN_QUESTIONS) == len(CLOSED_QUESTIONS) == 10


# ---------------------------------------------------------------------------
# Matcher vs oracle


def test_matcher_against_oracle_10000(capfd):
    with verdict(capfd, "matcher: 10,000 random patterns agree with brute force in <60s"):
        rng = random.Random(31337)
        started = time.monotonic()
        for _ in range(10_000):
            pattern = random_pattern(rng, max_elements=6)
            tokens = random_tokens(rng, max_len=8)
            assert match(pattern, tokens) == oracle_match(pattern, tokens)
        assert time.monotonic() - started < 60.0


# ---------------------------------------------------------------------------
# Scripted dialogue

MILESTONES = [
    "the news is bad",
    "sophie asked what the prognosis means for her",
    "sophie expressed anxiety about her condition",
    "the user asked what worries sophie about the future",
]


def _replay(engine):
    state, _ = engine.start_session("lung-cancer-prognosis")
    for line in SCRIPTED_LINES:
        engine.process_user_turn(state, line)
    transcript = engine.end_session(state)
    return state, transcript


def _is_subsequence(needle, haystack):
    it = iter(haystack)
    return all(item in it for item in needle)


def test_scripted_dialogue_deterministic(capfd, content):
    with verdict(capfd, "dialogue: scripted session shape, milestones, 100 replays identical"):
        engine = DialogueEngine(content.schemas, content.trees)
        state, transcript = _replay(engine)

        assert len(transcript.turns) == 6
        assert [t.speaker for t in transcript.turns] == [
            Speaker.PATIENT,
            Speaker.CLINICIAN,
        ] * 3
        gists = [gist for _, gist in state.gist_history]
        assert _is_subsequence(MILESTONES, gists)

        reference = serialize_transcript(transcript)
        for _ in range(100):
            _, again = _replay(engine)
            assert serialize_transcript(again) == reference


# ---------------------------------------------------------------------------
# Report slots and annotations


def test_report_slots_and_annotations(capfd, content, lexicons, cfg, sample_excerpt_path):
    with verdict(capfd, "report: all nine metric slots filled, annotation counts exact"):
        document = json.loads(sample_excerpt_path.read_text())
        step = 10_000
        for i, turn in enumerate(document["turns"]):
            turn["start_ms"] = i * step
            turn["end_ms"] = i * step + 9_000
        lecture_text = (
            "We will start chemotherapy and radiation on alternating weeks and "
            "monitor the treatment plan closely as we go. "
        ) * 4
        n = len(document["turns"])
        document["turns"].append(
            {"speaker": "clinician", "text": lecture_text.strip(),
             "start_ms": n * step, "end_ms": n * step + 31_000}
        )
        transcript = parse_transcript(json.dumps(document))
        report = compute_report(transcript, lexicons, content.trees, cfg)

        # the nine feedback slots, all computed
        assert isinstance(report["empower"]["questions_asked"], int)      # 1 questions
        assert isinstance(report["empower"]["open_questions"], int)
        assert isinstance(report["empower"]["clinician_time_ms"], int)    # 2 talk share
        assert isinstance(report["empower"]["patient_time_ms"], int)
        assert report["empower"]["lecture_turn_indices"] == [6]           # 3 lecturing
        assert isinstance(report["explicit"]["hedge_percentage"], float)  # 4 hedges
        assert isinstance(report["explicit"]["hedge_cloud"], list)
        assert isinstance(report["explicit"]["speaking_rate_wpm"], float) # 5 pace
        assert isinstance(report["explicit"]["reading_raw"], float)       # 6 readability
        assert isinstance(report["explicit"]["reading_display"], int)
        assert isinstance(report["empathize"]["pronoun_percentage"], float)  # 7 pronouns
        assert isinstance(report["empathize"]["empathy_average"], float)  # 8 empathy
        assert isinstance(report["empathize"]["empathy_cloud"], list)
        assert isinstance(report["empathize"]["trajectory_clinician"], list)  # 9 sentiment
        assert isinstance(report["empathize"]["trajectory_patient"], list)
        assert isinstance(report["empathize"]["trajectory_ideal"], list)
        assert isinstance(report["empathize"]["trajectory_distance"], float)

        question_annotations = [a for a in report["annotations"] if a["kind"] == "question"]
        lecture_annotations = [a for a in report["annotations"] if a["kind"] == "lecture"]
        assert [a["turn_index"] for a in question_annotations] == [3, 5]
        assert [a["turn_index"] for a in lecture_annotations] == [6]


# ---------------------------------------------------------------------------
# Sentiment bounds and cloud caps


def test_sentiment_bounds_and_cloud_caps(capfd, lexicons):
    with verdict(capfd, "sentiment in [-1,1] on 10,000 fuzz inputs; cloud caps hold"):
        rng = random.Random(777)
        vocab = list(lexicons.sentiment.entries)[:50] + [
            "not", "no", "never", "don't", "?", "zzz", "table",
        ]
        for _ in range(10_000):
            tokens = [rng.choice(vocab) for _ in range(rng.randint(0, 30))]
            assert -1.0 <= sentiment_score(tokens, lexicons.sentiment) <= 1.0

        hedge_words = [f"hedge{i}" for i in range(24)]
        hedge_lexicon = Lexicon.word_set(LexiconKind.HEDGE_SET, hedge_words)
        hedged = hedge_metrics(hedge_words + ["plain", "words"], hedge_lexicon)
        assert len(set(hedge_words)) >= 20
        assert len(hedged.cloud.entries) == HEDGE_CLOUD_CAP

        empathy_words = sorted(lexicons.empathy.entries)[:22]
        assert len(empathy_words) >= 20
        felt = empathy_metrics(empathy_words, lexicons.empathy)
        assert len(felt.cloud.entries) == EMPATHY_CLOUD_CAP


# ---------------------------------------------------------------------------
# Trajectory distance


def test_trajectory_distance_properties(capfd, lexicons, cfg):
    with verdict(capfd, "trajectory distance: zero, offset, and shape ordering"):
        flat = SentimentTrajectory(bins=tuple([0.25] * 10))
        assert trajectory_distance(flat, flat) == 0.0

        shifted = SentimentTrajectory(bins=tuple([0.25 + 0.2] * 10))
        assert abs(trajectory_distance(flat, shifted) - 0.2) < 1e-9

        fixture = parse_transcript(
            (FIXTURES / "trajectory_high_low_high.json").read_text()
        )
        ideal = SentimentTrajectory(bins=cfg.ideal_trajectory)
        arc = sentiment_trajectory(fixture, Speaker.CLINICIAN, lexicons.sentiment)
        reversed_arc = SentimentTrajectory(bins=tuple(reversed(arc.bins)))
        d_arc = trajectory_distance(arc, ideal)
        d_reversed = trajectory_distance(reversed_arc, ideal)
        assert d_arc < d_reversed


# ---------------------------------------------------------------------------
# Byte-identical reports across surfaces


def test_reports_byte_identical_across_surfaces(capfd, cfg, tmp_path, sample_excerpt_path):
    with verdict(capfd, "one serialization: session end == analyze == CLI, byte for byte"):
        service_cfg = dataclasses.replace(cfg, data_dir=tmp_path / "data")
        with TestClient(create_app(service_cfg)) as client:
            created = client.post("/api/sessions", json={"schema_id": "lung-cancer-prognosis"})
            session_id = created.json()["session_id"]
            body = created.json()
            for line in SCRIPTED_LINES:
                body = client.post(
                    f"/api/sessions/{session_id}/turns", json={"text": line}
                ).json()
            ended = client.post(f"/api/sessions/{session_id}/end").json()
            session_bytes = client.get(f"/api/reports/{ended['report_id']}").content

            document = json.dumps(
                {"turns": [{"speaker": t["speaker"], "text": t["text"]} for t in body["turns"]]}
            )
            analyzed = client.post(
                "/api/analyze", content=document,
                headers={"content-type": "application/json"},
            ).json()
            analyze_bytes = client.get(f"/api/reports/{analyzed['report_id']}").content
            assert session_bytes == analyze_bytes

            fixture_analyzed = client.post(
                "/api/analyze", content=sample_excerpt_path.read_text(),
                headers={"content-type": "application/json"},
            ).json()
            service_fixture_bytes = client.get(
                f"/api/reports/{fixture_analyzed['report_id']}"
            ).content

        cli = subprocess.run(
            [sys.executable, "-m", "sophie.cli", "analyze", str(sample_excerpt_path)],
            capture_output=True,
            timeout=60,
        )
        assert cli.returncode == 0, cli.stderr.decode()
        assert cli.stdout == service_fixture_bytes


# ---------------------------------------------------------------------------
# Live service: concurrency and restart durability


def _wait_ready(base_url: str, deadline_s: float = 15.0) -> None:
    deadline = time.monotonic() + deadline_s
    while True:
        try:
            if httpx.get(f"{base_url}/healthz", timeout=1.0).status_code == 200:
                return
        except OSError:
            pass
        if time.monotonic() > deadline:
            raise TimeoutError(f"service at {base_url} never became ready")
        time.sleep(0.05)


def _spawn_server(data_dir) -> tuple:
    proc = subprocess.Popen(
        [sys.executable, "-m", "sophie.cli", "serve", "--port", "0",
         "--data-dir", str(data_dir)],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )
    banner = proc.stdout.readline().strip()
    port = int(banner.rsplit(":", 1)[1])
    base_url = f"http://127.0.0.1:{port}"
    _wait_ready(base_url)
    return proc, base_url


def _scripted_over_http(base_url: str):
    with httpx.Client(base_url=base_url, timeout=10.0) as client:
        created = client.post("/api/sessions", json={"schema_id": "lung-cancer-prognosis"})
        assert created.status_code == 201
        session_id = created.json()["session_id"]
        body = created.json()
        for line in SCRIPTED_LINES:
            response = client.post(f"/api/sessions/{session_id}/turns", json={"text": line})
            assert response.status_code == 200
            body = response.json()
        ended = client.post(f"/api/sessions/{session_id}/end")
        assert ended.status_code == 200
        report_id = ended.json()["report_id"]
        report_bytes = client.get(f"/api/reports/{report_id}").content
    turns = [(t["speaker"], t["text"]) for t in body["turns"]]
    return turns, report_id, report_bytes


def test_live_service_concurrency_and_restart(capfd, tmp_path):
    label = "service: 10 concurrent sessions match serial; reports survive kill -9"
    with verdict(capfd, label):
        data_dir = tmp_path / "data"
        proc, base_url = _spawn_server(data_dir)
        try:
            serial_turns, _, _ = _scripted_over_http(base_url)

            with ThreadPoolExecutor(max_workers=10) as pool:
                results = [
                    pool.submit(_scripted_over_http, base_url) for _ in range(10)
                ]
                outcomes = [f.result() for f in results]
            for turns, _, _ in outcomes:
                assert turns == serial_turns

            stored = {report_id: report_bytes for _, report_id, report_bytes in outcomes}
        finally:
            proc.kill()
            proc.wait(timeout=10)

        proc, base_url = _spawn_server(data_dir)
        try:
            with httpx.Client(base_url=base_url, timeout=10.0) as client:
                for report_id, expected in stored.items():
                    after = client.get(f"/api/reports/{report_id}")
                    assert after.status_code == 200
                    assert after.content == expected
        finally:
            proc.send_signal(signal.SIGINT)
            proc.wait(timeout=10)
