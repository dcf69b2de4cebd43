"""Conversation-level analytics and the feedback report.

Questions, turn-taking and lecturing, speaking rate, and suggestion
annotations, assembled into the report shown after a session: a transcript
pane plus the Empower, be Explicit, and Empathize metric sections.
"""

from __future__ import annotations

import json
from enum import Enum

from sophie.config import Config
from sophie.content import (
    EMOTION_TREE,
    SUGGEST_EMPATHY_TREE,
    SUGGEST_OPEN_TREE,
    Lexicons,
)
from sophie.patterns import extract_gists, transduce
from sophie.textmetrics import (
    SentimentTrajectory,
    UndefinedMetricError,
    empathy_metrics,
    hedge_metrics,
    pronoun_metrics,
    reading_grade,
    sentiment_trajectory,
    split_sentences,
    tokenize,
    trajectory_distance,
    word_tokens,
)
from sophie.transcript import (
    Annotation,
    AnnotationKind,
    Speaker,
    Transcript,
    Turn,
)

REPORT_VERSION = 1


class QuestionKind(str, Enum):
    OPEN = "open"
    CLOSED = "closed"


_WH_LEADS = {"what", "how", "why", "when", "where", "who", "which"}
_OPEN_VERB_LEADS = {"describe"}


def _word_count(text: str) -> int:
    return len(word_tokens(tokenize(text)))


def detect_questions(text: str) -> list:
    """Classify each question sentence in the text as open or closed.

    A sentence is a question iff it ends with "?" or starts with an
    interrogative lead. Wh-leads (plus "tell me" and "describe") are open;
    everything else that qualifies is closed.
    """
    found: list = []
    for sentence in split_sentences(text):
        tokens = tokenize(sentence)
        if not tokens:
            continue
        open_lead = (
            tokens[0] in _WH_LEADS
            or tokens[0] in _OPEN_VERB_LEADS
            or tokens[:2] == ["tell", "me"]
        )
        if not open_lead and tokens[-1] != "?":
            continue
        kind = QuestionKind.OPEN if open_lead else QuestionKind.CLOSED
        found.append((sentence, kind))
    return found


def is_lecture(turn: Turn, cfg: Config) -> bool:
    """Too-long clinician turn: over 30 s when timed, over 75 words otherwise."""
    if turn.speaker != Speaker.CLINICIAN:
        return False
    if turn.timed:
        return turn.duration_ms > cfg.lecture_ms
    return _word_count(turn.text) > cfg.lecture_words


def speaking_rate(t: Transcript) -> float:
    """Clinician words per minute over the clinician's timed speech."""
    clinician_turns = t.by_speaker(Speaker.CLINICIAN)
    if not clinician_turns:
        raise UndefinedMetricError("no clinician turns")
    if not all(turn.timed for turn in clinician_turns):
        raise UndefinedMetricError("missing timing")
    total_ms = sum(turn.duration_ms for turn in clinician_turns)
    if total_ms <= 0:
        raise UndefinedMetricError("zero duration")
    words = sum(_word_count(turn.text) for turn in clinician_turns)
    return words / (total_ms / 60000.0)


def generate_suggestions(t: Transcript, trees: dict, lexicons: Lexicons, cfg: Config) -> list:
    """Coaching annotations for missed empathy and lecture-without-question turns.

    At most one suggestion of each kind per clinician turn; texts come from
    the suggest-empathy and suggest-open output trees.
    """
    emotion_tree = trees.get(EMOTION_TREE)
    empathy_out = trees.get(SUGGEST_EMPATHY_TREE)
    open_out = trees.get(SUGGEST_OPEN_TREE)
    annotations: list = []
    last_patient: Turn | None = None
    for turn in t.turns:
        if turn.speaker == Speaker.PATIENT:
            last_patient = turn
            continue
        tokens = tokenize(turn.text)
        if (
            emotion_tree is not None
            and empathy_out is not None
            and last_patient is not None
            and extract_gists(emotion_tree, last_patient.text)
            and not any(w in lexicons.empathy for w in tokens)
        ):
            fired = transduce(empathy_out, tokenize(last_patient.text))
            if fired is not None:
                annotations.append(Annotation(
                    turn_index=turn.index,
                    kind=AnnotationKind.SUGGEST_EMPATHY,
                    payload=fired.output,
                ))
        if (
            open_out is not None
            and is_lecture(turn, cfg)
            and not any(kind is QuestionKind.OPEN for _, kind in detect_questions(turn.text))
        ):
            fired = transduce(open_out, tokens)
            if fired is not None:
                annotations.append(Annotation(
                    turn_index=turn.index,
                    kind=AnnotationKind.SUGGEST_OPEN_QUESTION,
                    payload=fired.output,
                ))
    return annotations


_KIND_ORDER = {
    AnnotationKind.QUESTION: 0,
    AnnotationKind.LECTURE: 1,
    AnnotationKind.SUGGEST_OPEN_QUESTION: 2,
    AnnotationKind.SUGGEST_EMPATHY: 3,
}

_NO_CLINICIAN = "no clinician turns"


def compute_report(t: Transcript, lexicons: Lexicons, trees: dict, cfg: Config) -> dict:
    """Assemble the versioned feedback report for a finished transcript.

    Metrics are computed over clinician speech; trajectories cover both
    speakers. A metric that cannot be computed appears as
    {"unavailable": reason} rather than failing the report.
    """
    clinician_turns = t.by_speaker(Speaker.CLINICIAN)
    patient_turns = t.by_speaker(Speaker.PATIENT)
    clinician_tokens = [tok for turn in clinician_turns for tok in tokenize(turn.text)]
    clinician_text = " ".join(turn.text for turn in clinician_turns)

    def metric(fn):
        if not clinician_turns:
            return {"unavailable": _NO_CLINICIAN}
        try:
            return fn()
        except UndefinedMetricError as exc:
            return {"unavailable": exc.reason}

    per_turn: list = []
    questions_asked = 0
    open_questions = 0
    lecture_indices: list = []
    annotations: list = []
    for turn in t.turns:
        questions = detect_questions(turn.text) if turn.speaker == Speaker.CLINICIAN else []
        lecture = is_lecture(turn, cfg)
        if lecture:
            lecture_indices.append(turn.index)
            annotations.append(Annotation(turn_index=turn.index, kind=AnnotationKind.LECTURE))
        if questions:
            questions_asked += len(questions)
            open_questions += sum(1 for _, kind in questions if kind is QuestionKind.OPEN)
            annotations.append(Annotation(turn_index=turn.index, kind=AnnotationKind.QUESTION))
        entry = {
            "turn_index": turn.index,
            "speaker": turn.speaker.value,
            "text": turn.text,
            "word_count": _word_count(turn.text),
            "questions": [[sentence, kind.value] for sentence, kind in questions],
            "is_lecture": lecture,
        }
        if turn.timed:
            entry["duration_ms"] = turn.duration_ms
        per_turn.append(entry)

    annotations.extend(generate_suggestions(t, trees, lexicons, cfg))
    annotations.sort(key=lambda a: (a.turn_index, _KIND_ORDER[a.kind]))

    empower = {
        "questions_asked": metric(lambda: questions_asked),
        "open_questions": metric(lambda: open_questions),
        "lecture_turn_indices": lecture_indices,
    }
    all_timed = bool(t.turns) and all(turn.timed for turn in t.turns)
    if all_timed:
        empower["clinician_time_ms"] = sum(turn.duration_ms for turn in clinician_turns)
        empower["patient_time_ms"] = sum(turn.duration_ms for turn in patient_turns)
    else:
        empower["clinician_words"] = sum(_word_count(turn.text) for turn in clinician_turns)
        empower["patient_words"] = sum(_word_count(turn.text) for turn in patient_turns)

    explicit: dict = {}
    try:
        if not clinician_turns:
            raise UndefinedMetricError(_NO_CLINICIAN)
        hedge = hedge_metrics(clinician_tokens, lexicons.hedges)
        explicit["hedge_percentage"] = hedge.percentage
        explicit["hedge_cloud"] = hedge.cloud.as_list()
    except UndefinedMetricError as exc:
        explicit["hedge_percentage"] = {"unavailable": exc.reason}
        explicit["hedge_cloud"] = []
    explicit["speaking_rate_wpm"] = metric(lambda: speaking_rate(t))
    try:
        if not clinician_turns:
            raise UndefinedMetricError(_NO_CLINICIAN)
        grade = reading_grade(clinician_text)
        explicit["reading_raw"] = grade.raw
        explicit["reading_display"] = grade.display_grade
    except UndefinedMetricError as exc:
        explicit["reading_raw"] = {"unavailable": exc.reason}
        explicit["reading_display"] = {"unavailable": exc.reason}

    empathize: dict = {
        "pronoun_percentage": metric(lambda: pronoun_metrics(clinician_tokens, lexicons.pronouns)),
    }
    if not clinician_turns:
        empathize["empathy_average"] = {"unavailable": _NO_CLINICIAN}
        empathize["empathy_cloud"] = []
    else:
        empathy = empathy_metrics(clinician_tokens, lexicons.empathy)
        if empathy.average is None:
            empathize["empathy_average"] = {"unavailable": "no lexicon words"}
        else:
            empathize["empathy_average"] = empathy.average
        empathize["empathy_cloud"] = empathy.cloud.as_list()

    ideal = list(cfg.ideal_trajectory)
    clinician_traj = None
    try:
        if not clinician_turns:
            raise UndefinedMetricError(_NO_CLINICIAN)
        clinician_traj = sentiment_trajectory(
            t, Speaker.CLINICIAN, lexicons.sentiment, cfg.bin_count
        )
        empathize["trajectory_clinician"] = list(clinician_traj.bins)
    except UndefinedMetricError as exc:
        empathize["trajectory_clinician"] = {"unavailable": exc.reason}
    try:
        if not patient_turns:
            raise UndefinedMetricError("no patient turns")
        patient_traj = sentiment_trajectory(
            t, Speaker.PATIENT, lexicons.sentiment, cfg.bin_count
        )
        empathize["trajectory_patient"] = list(patient_traj.bins)
    except UndefinedMetricError as exc:
        empathize["trajectory_patient"] = {"unavailable": exc.reason}
    empathize["trajectory_ideal"] = ideal
    if clinician_traj is not None:
        empathize["trajectory_distance"] = trajectory_distance(
            clinician_traj, SentimentTrajectory(bins=tuple(ideal))
        )
    else:
        empathize["trajectory_distance"] = {"unavailable": _NO_CLINICIAN}

    return {
        "report_version": REPORT_VERSION,
        "empower": empower,
        "explicit": explicit,
        "empathize": empathize,
        "annotations": [_annotation_to_dict(a) for a in annotations],
        "per_turn": per_turn,
    }


def _annotation_to_dict(a: Annotation) -> dict:
    entry = {"turn_index": a.turn_index, "kind": a.kind.value}
    if a.payload is not None:
        entry["payload"] = a.payload
    return entry


def report_to_json(report: dict) -> str:
    """The one serialization used everywhere a report is written or compared."""
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _fmt(value, suffix: str = "", decimals: int = 1) -> str:
    if isinstance(value, dict):
        return f"unavailable ({value['unavailable']})"
    if isinstance(value, float):
        return f"{value:.{decimals}f}{suffix}"
    return f"{value}{suffix}"


def _fmt_trajectory(value) -> str:
    if isinstance(value, dict):
        return f"unavailable ({value['unavailable']})"
    return " ".join(f"{bin_score:+.2f}" for bin_score in value)


def _cloud_text(cloud: list) -> str:
    if not cloud:
        return "none"
    return ", ".join(f"{word} ({count})" for word, count in cloud)


def render_text(report: dict) -> str:
    """Plain-text rendering: transcript pane plus the three metric sections."""
    lines: list = []

    def section(title: str):
        if lines:
            lines.append("")
        lines.append(title)
        lines.append("-" * len(title))

    section("Transcript")
    annotations_by_turn: dict = {}
    for a in report["annotations"]:
        annotations_by_turn.setdefault(a["turn_index"], []).append(a)
    for entry in report["per_turn"]:
        who = "Sophie" if entry["speaker"] == "patient" else "Clinician"
        marks = [
            a["kind"]
            for a in annotations_by_turn.get(entry["turn_index"], [])
            if a["kind"] in ("question", "lecture")
        ]
        marker = f" [{', '.join(marks)}]" if marks else ""
        lines.append(f"{entry['turn_index'] + 1:3d}. {who}{marker}: {entry['text']}")
        for a in annotations_by_turn.get(entry["turn_index"], []):
            if "payload" in a:
                label = "more open questions" if a["kind"] == "suggest_open_question" else "empathy"
                lines.append(f"     suggestion ({label}): {a['payload']}")

    empower = report["empower"]
    section("Empower")
    asked = empower["questions_asked"]
    opened = empower["open_questions"]
    if isinstance(asked, dict):
        lines.append(f"Questions asked: {_fmt(asked)}")
    else:
        closed = asked - opened
        lines.append(f"Questions asked: {asked} ({opened} open, {closed} closed)")
    if "clinician_time_ms" in empower:
        lines.append(
            "Talk time: clinician "
            f"{empower['clinician_time_ms'] / 1000.0:.1f}s, "
            f"Sophie {empower['patient_time_ms'] / 1000.0:.1f}s"
        )
    else:
        lines.append(
            f"Talk share: clinician {empower['clinician_words']} words, "
            f"Sophie {empower['patient_words']} words"
        )
    if empower["lecture_turn_indices"]:
        turns = ", ".join(str(i + 1) for i in empower["lecture_turn_indices"])
        lines.append(f"Lecture turns: {turns}")
    else:
        lines.append("Lecture turns: none")

    explicit = report["explicit"]
    section("be Explicit")
    lines.append(f"Hedge words: {_fmt(explicit['hedge_percentage'], '%')}"
                 f" (top: {_cloud_text(explicit['hedge_cloud'])})")
    rate = explicit["speaking_rate_wpm"]
    if isinstance(rate, dict):
        lines.append(f"Speaking rate: {_fmt(rate, '')}")
    else:
        lines.append(
            f"Speaking rate: {_fmt(rate, ' words/min')} (measured from turn timestamps)"
        )
    raw = explicit["reading_raw"]
    if isinstance(raw, dict):
        lines.append(f"Reading grade: {_fmt(raw)}")
    else:
        lines.append(
            f"Reading grade: {explicit['reading_display']} (raw {raw:.2f})"
        )

    empathize = report["empathize"]
    section("Empathize")
    lines.append(f"Personal pronouns: {_fmt(empathize['pronoun_percentage'], '%')}")
    lines.append(
        f"Empathy score: {_fmt(empathize['empathy_average'], ' / 7')}"
        f" (top: {_cloud_text(empathize['empathy_cloud'])})"
    )
    lines.append(f"Sentiment (clinician): {_fmt_trajectory(empathize['trajectory_clinician'])}")
    lines.append(f"Sentiment (Sophie):    {_fmt_trajectory(empathize['trajectory_patient'])}")
    lines.append(f"Sentiment (ideal):     {_fmt_trajectory(empathize['trajectory_ideal'])}")
    lines.append(f"Distance from ideal: {_fmt(empathize['trajectory_distance'], '', 3)}")
    return "\n".join(lines) + "\n"
