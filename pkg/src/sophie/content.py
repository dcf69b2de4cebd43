"""Loading of dialogue content (rule trees, schemas) and lexicons from disk.

A content directory holds `.rules` files (one tree each, file stem = tree id)
and `.json` schema files. load_content is fail-fast for runtime use;
collect_content_errors gathers every problem for the validate command.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from sophie.config import Config
from sophie.dialogue import SchemaError, load_schema, validate_schema_references
from sophie.patterns import RuleParseError, RuleTree, parse_rules
from sophie.textmetrics import Lexicon, LexiconKind, load_lexicon

# Tree ids with a fixed role in report generation.
EMOTION_TREE = "emotion-expressed"
SUGGEST_EMPATHY_TREE = "suggest-empathy"
SUGGEST_OPEN_TREE = "suggest-open"


class ContentError(ValueError):
    """Content failed to load; message names the file and problem."""


@dataclass(frozen=True)
class ContentSet:
    trees: dict  # tree id -> RuleTree
    schemas: dict  # schema id -> DialogueSchema


@dataclass(frozen=True)
class Lexicons:
    sentiment: Lexicon
    empathy: Lexicon
    hedges: Lexicon
    pronouns: Lexicon


def _load_tree(path: Path) -> RuleTree:
    tree = parse_rules(path.read_text(encoding="utf-8"))
    if tree.id != path.stem:
        raise RuleParseError(
            f"tree id {tree.id!r} does not match file name {path.stem!r}", 1
        )
    return tree


def collect_content_errors(content_dir: str | Path) -> tuple[ContentSet | None, list]:
    """Load everything, collecting (file, message) pairs instead of failing fast."""
    directory = Path(content_dir)
    errors: list = []
    if not directory.is_dir():
        return None, [(str(directory), "not a directory")]

    trees: dict = {}
    for path in sorted(directory.glob("*.rules")):
        try:
            tree = _load_tree(path)
        except RuleParseError as exc:
            errors.append((path.name, str(exc)))
            continue
        trees[tree.id] = tree

    schemas: dict = {}
    for path in sorted(directory.glob("*.json")):
        try:
            schema = load_schema(path.read_text(encoding="utf-8"), trees)
        except SchemaError as exc:
            errors.append((path.name, str(exc)))
            continue
        if schema.id in schemas:
            errors.append((path.name, f"duplicate schema id {schema.id!r}"))
            continue
        schemas[schema.id] = schema

    try:
        validate_schema_references(schemas)
    except SchemaError as exc:
        errors.append(("<content>", str(exc)))

    if errors:
        return None, errors
    if not schemas:
        return None, [(str(directory), "no schema files found")]
    return ContentSet(trees=trees, schemas=schemas), []


def load_content(content_dir: str | Path) -> ContentSet:
    content, errors = collect_content_errors(content_dir)
    if errors:
        file, message = errors[0]
        raise ContentError(f"{file}: {message}")
    return content


def load_lexicons(cfg: Config) -> Lexicons:
    try:
        return Lexicons(
            sentiment=load_lexicon(str(cfg.lexicon_sentiment), LexiconKind.SENTIMENT),
            empathy=load_lexicon(str(cfg.lexicon_empathy), LexiconKind.EMPATHY),
            hedges=load_lexicon(str(cfg.lexicon_hedges), LexiconKind.HEDGE_SET),
            pronouns=load_lexicon(str(cfg.lexicon_pronouns), LexiconKind.PRONOUN_SET),
        )
    except OSError as exc:
        raise ContentError(f"cannot read lexicon: {exc}") from None
