"""Schema-driven dialogue management for the virtual patient.

A dialogue schema scripts the patient's side of an encounter as a list of
episodes: things the patient says, points where the clinician is expected to
speak, and conditional hand-offs to subschemas. The engine instantiates a
schema per session, interprets clinician turns into gist clauses with the
session's rule trees, and picks the patient's reaction.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from enum import Enum

from sophie.patterns import Pattern, RuleParseError, RuleTree, match, parse_pattern
from sophie.patterns import extract_gists as _extract_gists
from sophie.textmetrics import tokenize
from sophie.transcript import Speaker, Transcript, Turn

CLARIFY_TEXT = "I'm sorry, I didn't quite follow that. Could you say it again for me?"
CLARIFY_GIST = "sophie asked the user to repeat"
DEFAULT_REACTION_GIST = "sophie gave a generic reply"


class SchemaError(ValueError):
    """A schema document is malformed or references missing content."""


class SessionError(RuntimeError):
    """An operation was applied to a session in the wrong state."""


class TimingError(ValueError):
    """A supplied turn timestamp would corrupt the transcript timeline."""


@dataclass(frozen=True)
class SystemSay:
    text: str
    gist: str


@dataclass(frozen=True)
class Say:
    text: str
    gist: str


@dataclass(frozen=True)
class Invoke:
    schema_id: str


class Continue:
    """Advance to the next episode without a spoken reaction."""


@dataclass(frozen=True)
class Reaction:
    gist_pattern: Pattern
    action: object  # Say | Invoke | Continue


@dataclass(frozen=True)
class ExpectUser:
    interp_tree: str
    reactions: tuple


@dataclass(frozen=True)
class InvokeSchema:
    schema_id: str
    condition: Pattern | None = None


@dataclass(frozen=True)
class DialogueSchema:
    id: str
    description: str
    default_reaction: str
    episodes: tuple
    closing: Say | None = None

    def invoked_schema_ids(self) -> set:
        ids = set()
        for episode in self.episodes:
            if isinstance(episode, InvokeSchema):
                ids.add(episode.schema_id)
            elif isinstance(episode, ExpectUser):
                for reaction in episode.reactions:
                    if isinstance(reaction.action, Invoke):
                        ids.add(reaction.action.schema_id)
        return ids


class SessionStatus(str, Enum):
    ACTIVE = "active"
    COMPLETED = "completed"


@dataclass
class _Frame:
    schema_id: str
    episode: int = 0
    failures: int = 0  # consecutive no-gist turns at the current episode


@dataclass
class SessionState:
    session_id: str
    root_schema_id: str
    schema_stack: list = field(default_factory=list)
    gist_history: list = field(default_factory=list)  # of (speaker value, gist)
    turns: list = field(default_factory=list)
    status: SessionStatus = SessionStatus.ACTIVE
    clock: object = None  # optional () -> ms callable used to stamp patient turns


def _require(document: dict, key: str, kind: type, context: str):
    value = document.get(key)
    if not isinstance(value, kind):
        raise SchemaError(f"{context}: missing or invalid {key!r}")
    return value


def _parse_gist_pattern(text: str, context: str) -> Pattern:
    if not isinstance(text, str) or not text.strip():
        raise SchemaError(f"{context}: empty gist pattern")
    try:
        return parse_pattern(text)
    except (RuleParseError, ValueError) as exc:
        raise SchemaError(f"{context}: bad pattern {text!r}: {exc}") from None


def _parse_say(raw: object, context: str) -> Say:
    if not isinstance(raw, dict):
        raise SchemaError(f"{context}: say must be an object")
    text = _require(raw, "text", str, context)
    gist = _require(raw, "gist", str, context)
    if not text.strip() or not gist.strip():
        raise SchemaError(f"{context}: say needs non-empty text and gist")
    return Say(text=text, gist=gist)


def _parse_action(raw: object, context: str):
    if raw == "continue":
        return Continue()
    if isinstance(raw, dict) and "say" in raw:
        return _parse_say(raw["say"], context)
    if isinstance(raw, dict) and "invoke" in raw:
        target = raw["invoke"]
        if not isinstance(target, str) or not target:
            raise SchemaError(f"{context}: invoke needs a schema id")
        return Invoke(schema_id=target)
    raise SchemaError(f"{context}: unknown action {raw!r}")


def _parse_episode(raw: object, index: int, trees: dict):
    context = f"episode {index}"
    if not isinstance(raw, dict) or len(raw) != 1:
        raise SchemaError(f"{context}: episode must be a single-key object")
    key, body = next(iter(raw.items()))
    if key == "say":
        say = _parse_say(body, context)
        return SystemSay(text=say.text, gist=say.gist)
    if key == "expect_user":
        if not isinstance(body, dict):
            raise SchemaError(f"{context}: expect_user must be an object")
        tree_id = _require(body, "interp_tree", str, context)
        if tree_id not in trees:
            raise SchemaError(f"{context}: unknown rule tree {tree_id!r}")
        raw_reactions = _require(body, "reactions", list, context)
        if not raw_reactions:
            raise SchemaError(f"{context}: reactions must be non-empty")
        reactions = []
        for j, raw_reaction in enumerate(raw_reactions):
            rcontext = f"{context} reaction {j}"
            if not isinstance(raw_reaction, dict):
                raise SchemaError(f"{rcontext}: reaction must be an object")
            pattern = _parse_gist_pattern(raw_reaction.get("gist_pattern"), rcontext)
            action = _parse_action(raw_reaction.get("action"), rcontext)
            reactions.append(Reaction(gist_pattern=pattern, action=action))
        return ExpectUser(interp_tree=tree_id, reactions=tuple(reactions))
    if key == "invoke":
        if not isinstance(body, dict):
            raise SchemaError(f"{context}: invoke must be an object")
        schema_id = _require(body, "schema", str, context)
        condition = None
        if body.get("condition") is not None:
            condition = _parse_gist_pattern(body["condition"], context)
        return InvokeSchema(schema_id=schema_id, condition=condition)
    raise SchemaError(f"{context}: unknown episode kind {key!r}")


def load_schema(document: str, trees: dict) -> DialogueSchema:
    """Parse and validate one schema JSON document against the loaded rule trees.

    Invoked schema ids are syntax-checked here; whether they resolve is checked
    across the whole content set by validate_schema_references.
    """
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed schema JSON at offset {exc.pos}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise SchemaError("schema document must be an object")
    schema_id = _require(data, "id", str, "schema")
    context = f"schema {schema_id!r}"
    description = _require(data, "description", str, context)
    default_reaction = _require(data, "default_reaction", str, context)
    if not default_reaction.strip():
        raise SchemaError(f"{context}: default_reaction must be non-empty")
    raw_episodes = _require(data, "episodes", list, context)
    if not raw_episodes:
        raise SchemaError(f"{context}: episodes must be non-empty")
    episodes = tuple(
        _parse_episode(raw, i, trees) for i, raw in enumerate(raw_episodes)
    )
    if not any(isinstance(e, ExpectUser) for e in episodes):
        if not all(isinstance(e, SystemSay) for e in episodes):
            raise SchemaError(
                f"{context}: a schema without expect_user episodes must be pure monologue"
            )
    closing = None
    if data.get("closing") is not None:
        closing = _parse_say(data["closing"], f"{context} closing")
    return DialogueSchema(
        id=schema_id,
        description=description,
        default_reaction=default_reaction,
        episodes=episodes,
        closing=closing,
    )


def validate_schema_references(schemas: dict) -> None:
    """Ensure every invoked schema id resolves within the loaded set."""
    for schema in schemas.values():
        for target in sorted(schema.invoked_schema_ids()):
            if target not in schemas:
                raise SchemaError(
                    f"schema {schema.id!r} invokes unknown schema {target!r}"
                )


def _gist_matches(pattern: Pattern, gists: list) -> bool:
    return any(match(pattern, tokenize(g)) is not None for g in gists)


class DialogueEngine:
    """Runs sessions against an immutable set of schemas and rule trees."""

    def __init__(self, schemas: dict, trees: dict):
        validate_schema_references(schemas)
        for schema in schemas.values():
            for episode in schema.episodes:
                if isinstance(episode, ExpectUser) and episode.interp_tree not in trees:
                    raise SchemaError(
                        f"schema {schema.id!r} references unknown tree {episode.interp_tree!r}"
                    )
        self.schemas = dict(schemas)
        self.trees = dict(trees)

    def start_session(
        self,
        schema_id: str,
        session_id: str | None = None,
        clock=None,
    ) -> tuple[SessionState, list]:
        if schema_id not in self.schemas:
            raise SchemaError(f"unknown schema {schema_id!r}")
        state = SessionState(
            session_id=session_id or uuid.uuid4().hex,
            root_schema_id=schema_id,
            clock=clock,
        )
        state.schema_stack.append(_Frame(schema_id=schema_id))
        emitted: list = []
        self._advance(state, emitted)
        return state, emitted

    def process_user_turn(
        self,
        state: SessionState,
        text: str,
        start_ms: int | None = None,
        end_ms: int | None = None,
    ) -> list:
        if state.status is not SessionStatus.ACTIVE:
            raise SessionError(f"session {state.session_id} is not active")
        if not text.strip():
            raise ValueError("turn text must be non-empty")
        self._check_timing(state, start_ms, end_ms)
        state.turns.append(Turn(
            index=len(state.turns),
            speaker=Speaker.CLINICIAN,
            text=text,
            start_ms=start_ms,
            end_ms=end_ms,
        ))

        frame = state.schema_stack[-1]
        schema = self.schemas[frame.schema_id]
        episode = schema.episodes[frame.episode]
        assert isinstance(episode, ExpectUser), "active session must wait on expect_user"

        gists = _extract_gists(self.trees[episode.interp_tree], text)
        for gist in gists:
            state.gist_history.append((Speaker.CLINICIAN.value, gist))

        emitted: list = []
        if not gists:
            if frame.failures == 0:
                # first unintelligible turn: ask to repeat, stay on this episode
                frame.failures = 1
                self._emit(state, CLARIFY_TEXT, CLARIFY_GIST, emitted)
                return emitted
            self._emit(state, schema.default_reaction, DEFAULT_REACTION_GIST, emitted)
            self._advance_frame(state, frame)
            self._advance(state, emitted)
        else:
            reaction = next(
                (r for r in episode.reactions if _gist_matches(r.gist_pattern, gists)),
                None,
            )
            if reaction is None:
                self._emit(state, schema.default_reaction, DEFAULT_REACTION_GIST, emitted)
                self._advance_frame(state, frame)
                self._advance(state, emitted)
            elif isinstance(reaction.action, Say):
                self._advance_frame(state, frame)
                self._emit(state, reaction.action.text, reaction.action.gist, emitted)
                self._advance(state, emitted)
            elif isinstance(reaction.action, Invoke):
                self._advance_frame(state, frame)
                self._push(state, reaction.action.schema_id)
                self._advance(state, emitted)
            else:  # Continue
                self._advance_frame(state, frame)
                self._advance(state, emitted)

        if not emitted and state.status is SessionStatus.ACTIVE:
            # liveness: the user always gets a reply or a completed session
            top = self.schemas[state.schema_stack[-1].schema_id]
            self._emit(state, top.default_reaction, DEFAULT_REACTION_GIST, emitted)
        return emitted

    def end_session(self, state: SessionState) -> Transcript:
        state.status = SessionStatus.COMPLETED
        return Transcript(turns=tuple(state.turns), schema_id=state.root_schema_id)

    def _check_timing(self, state: SessionState, start_ms, end_ms) -> None:
        for name, value in (("start_ms", start_ms), ("end_ms", end_ms)):
            if value is not None and value < 0:
                raise TimingError(f"{name} is negative")
        if start_ms is not None and end_ms is not None and end_ms < start_ms:
            raise TimingError("end_ms precedes start_ms")
        if start_ms is not None:
            previous = [t.start_ms for t in state.turns if t.start_ms is not None]
            if previous and start_ms < previous[-1]:
                raise TimingError("start_ms precedes an earlier turn")

    def _emit(self, state: SessionState, text: str, gist: str, emitted: list) -> None:
        start = end = state.clock() if state.clock is not None else None
        turn = Turn(
            index=len(state.turns),
            speaker=Speaker.PATIENT,
            text=text,
            start_ms=start,
            end_ms=end,
        )
        state.turns.append(turn)
        state.gist_history.append((Speaker.PATIENT.value, gist))
        emitted.append(turn)

    def _advance_frame(self, state: SessionState, frame: _Frame) -> None:
        frame.episode += 1
        frame.failures = 0

    def _push(self, state: SessionState, schema_id: str) -> None:
        # re-invocation guard: a schema already on the stack is not pushed again
        if any(f.schema_id == schema_id for f in state.schema_stack):
            return
        state.schema_stack.append(_Frame(schema_id=schema_id))

    def _condition_met(self, state: SessionState, condition: Pattern) -> bool:
        return _gist_matches(condition, [gist for _, gist in state.gist_history])

    def _advance(self, state: SessionState, emitted: list) -> None:
        """Run say/invoke episodes until an expect_user blocks or the stack drains."""
        while state.schema_stack:
            frame = state.schema_stack[-1]
            schema = self.schemas[frame.schema_id]
            if frame.episode >= len(schema.episodes):
                state.schema_stack.pop()
                continue
            episode = schema.episodes[frame.episode]
            if isinstance(episode, SystemSay):
                self._advance_frame(state, frame)
                self._emit(state, episode.text, episode.gist, emitted)
            elif isinstance(episode, InvokeSchema):
                self._advance_frame(state, frame)
                if episode.condition is None or self._condition_met(state, episode.condition):
                    self._push(state, episode.schema_id)
            else:
                return  # waiting on the user
        state.status = SessionStatus.COMPLETED
        root = self.schemas[state.root_schema_id]
        if root.closing is not None:
            self._emit(state, root.closing.text, root.closing.gist, emitted)
