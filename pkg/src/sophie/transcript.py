"""Canonical conversation data model and its JSON serialization.

A transcript is an ordered list of speaker-attributed turns with optional
millisecond timing. Everything downstream (dialogue sessions, feedback
reports) is built on these types, which are immutable after construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum


class ParseError(ValueError):
    """Malformed JSON input. Carries the byte offset when known."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


@dataclass(frozen=True)
class Violation:
    """One broken transcript invariant, tied to a turn where applicable."""

    rule: str
    message: str
    turn_index: int | None = None

    def __str__(self) -> str:
        where = f" (turn {self.turn_index})" if self.turn_index is not None else ""
        return f"{self.rule}{where}: {self.message}"


class ValidationError(ValueError):
    """Raised when a document parses as JSON but violates transcript invariants."""

    def __init__(self, violations: list[Violation]):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = violations


class Speaker(str, Enum):
    CLINICIAN = "clinician"
    PATIENT = "patient"


# Accepted on input only; canonical names are the enum values.
_SPEAKER_ALIASES = {
    "clinician": Speaker.CLINICIAN,
    "user": Speaker.CLINICIAN,
    "patient": Speaker.PATIENT,
    "sophie": Speaker.PATIENT,
}


class AnnotationKind(str, Enum):
    LECTURE = "lecture"
    QUESTION = "question"
    SUGGEST_OPEN_QUESTION = "suggest_open_question"
    SUGGEST_EMPATHY = "suggest_empathy"


@dataclass(frozen=True)
class Turn:
    index: int
    speaker: Speaker
    text: str
    start_ms: int | None = None
    end_ms: int | None = None

    @property
    def timed(self) -> bool:
        return self.start_ms is not None and self.end_ms is not None

    @property
    def duration_ms(self) -> int | None:
        if not self.timed:
            return None
        return self.end_ms - self.start_ms


@dataclass(frozen=True)
class Transcript:
    turns: tuple[Turn, ...]
    schema_id: str | None = None
    created_at: str | None = None

    def by_speaker(self, speaker: Speaker) -> list[Turn]:
        return [t for t in self.turns if t.speaker == speaker]


@dataclass(frozen=True)
class Annotation:
    """A marker attached to one turn of a report's transcript pane.

    Lecture/Question mark clinician behavior; the Suggest* kinds carry the
    suggestion text in ``payload``.
    """

    turn_index: int
    kind: AnnotationKind
    payload: str | None = None


def validate(t: Transcript) -> list[Violation]:
    """Check every transcript invariant; an empty list means the transcript is valid."""
    violations: list[Violation] = []
    for pos, turn in enumerate(t.turns):
        if turn.index != pos:
            violations.append(Violation(
                "index-contiguity",
                f"expected index {pos}, found {turn.index}",
                turn_index=turn.index,
            ))
        if not turn.text.strip():
            violations.append(Violation(
                "text-nonempty", "turn text is empty after trimming", turn_index=pos,
            ))
        for name, value in (("start_ms", turn.start_ms), ("end_ms", turn.end_ms)):
            if value is not None and value < 0:
                violations.append(Violation(
                    "timestamp-nonnegative", f"{name} is negative", turn_index=pos,
                ))
        if turn.timed and turn.end_ms < turn.start_ms:
            violations.append(Violation(
                "timestamp-order", "end_ms precedes start_ms", turn_index=pos,
            ))
    timed = [t2 for t2 in t.turns if t2.start_ms is not None]
    for prev, cur in zip(timed, timed[1:]):
        if cur.start_ms < prev.start_ms:
            violations.append(Violation(
                "start-monotonic",
                f"start_ms decreases from turn {prev.index} to turn {cur.index}",
                turn_index=cur.index,
            ))
    return violations


def validate_annotations(annotations: list[Annotation], t: Transcript) -> list[Violation]:
    """Check annotation invariants against the transcript they annotate."""
    violations: list[Violation] = []
    for a in annotations:
        if not 0 <= a.turn_index < len(t.turns):
            violations.append(Violation(
                "annotation-target", "turn_index out of range", turn_index=a.turn_index,
            ))
            continue
        speaker = t.turns[a.turn_index].speaker
        if a.kind in (AnnotationKind.LECTURE, AnnotationKind.QUESTION) and speaker != Speaker.CLINICIAN:
            violations.append(Violation(
                "annotation-speaker",
                f"{a.kind.value} annotation on a non-clinician turn",
                turn_index=a.turn_index,
            ))
        if a.kind in (AnnotationKind.SUGGEST_OPEN_QUESTION, AnnotationKind.SUGGEST_EMPATHY):
            if not (a.payload or "").strip():
                violations.append(Violation(
                    "annotation-payload",
                    f"{a.kind.value} annotation without suggestion text",
                    turn_index=a.turn_index,
                ))
    return violations


def _build_turn(raw: object, pos: int, violations: list[Violation]) -> Turn | None:
    if not isinstance(raw, dict):
        violations.append(Violation("turn-shape", "turn is not an object", turn_index=pos))
        return None
    speaker_raw = raw.get("speaker")
    speaker = _SPEAKER_ALIASES.get(str(speaker_raw).lower()) if speaker_raw is not None else None
    if speaker is None:
        violations.append(Violation(
            "speaker", f"unknown speaker {speaker_raw!r}", turn_index=pos,
        ))
        return None
    text = raw.get("text")
    if not isinstance(text, str):
        violations.append(Violation("text-type", "turn text must be a string", turn_index=pos))
        return None
    times: dict[str, int | None] = {}
    for name in ("start_ms", "end_ms"):
        value = raw.get(name)
        if value is not None and (isinstance(value, bool) or not isinstance(value, int)):
            violations.append(Violation(
                "timestamp-type", f"{name} must be an integer", turn_index=pos,
            ))
            return None
        times[name] = value
    explicit = raw.get("index")
    if explicit is not None and explicit != pos:
        violations.append(Violation(
            "index-contiguity",
            f"explicit index {explicit} disagrees with position {pos}",
            turn_index=pos,
        ))
    return Turn(index=pos, speaker=speaker, text=text,
                start_ms=times["start_ms"], end_ms=times["end_ms"])


def parse_transcript(document: str) -> Transcript:
    """Parse transcript JSON, raising ParseError or ValidationError on bad input.

    Unknown fields are ignored. The turn order in the array is authoritative;
    an explicit "index" field must agree with it.
    """
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON at offset {exc.pos}: {exc.msg}", offset=exc.pos) from exc
    if not isinstance(data, dict):
        raise ValidationError([Violation("document-shape", "top level must be an object")])
    raw_turns = data.get("turns")
    if not isinstance(raw_turns, list):
        raise ValidationError([Violation("turns", 'missing or non-array "turns"')])

    violations: list[Violation] = []
    turns = []
    for pos, raw in enumerate(raw_turns):
        turn = _build_turn(raw, pos, violations)
        if turn is not None:
            turns.append(turn)
    schema_id = data.get("schema_id")
    created_at = data.get("created_at")
    if schema_id is not None and not isinstance(schema_id, str):
        violations.append(Violation("schema_id", "schema_id must be a string"))
        schema_id = None
    if created_at is not None and not isinstance(created_at, str):
        violations.append(Violation("created_at", "created_at must be a string"))
        created_at = None
    if len(turns) < len(raw_turns):
        # Some turn failed to build; semantic checks over the survivors would
        # only report phantom gaps on top of the real problem.
        raise ValidationError(violations)
    transcript = Transcript(turns=tuple(turns), schema_id=schema_id, created_at=created_at)
    violations.extend(validate(transcript))
    if violations:
        raise ValidationError(violations)
    return transcript


def transcript_to_dict(t: Transcript) -> dict:
    """Plain-dict form of a transcript with absent optionals omitted."""
    doc: dict = {}
    if t.schema_id is not None:
        doc["schema_id"] = t.schema_id
    if t.created_at is not None:
        doc["created_at"] = t.created_at
    doc["turns"] = []
    for turn in t.turns:
        entry: dict = {"speaker": turn.speaker.value, "text": turn.text}
        if turn.start_ms is not None:
            entry["start_ms"] = turn.start_ms
        if turn.end_ms is not None:
            entry["end_ms"] = turn.end_ms
        doc["turns"].append(entry)
    return doc


def serialize_transcript(t: Transcript) -> str:
    """Serialize to JSON that parse_transcript reads back to an equal transcript."""
    return json.dumps(transcript_to_dict(t), indent=2, ensure_ascii=False) + "\n"
