"""Lexical and sentence-level measurements.

Tokenization, sentence splitting, syllable counting, readability, lexicon
metrics (hedges, pronouns, empathy), sentiment scoring, and sentiment
trajectories. Everything here is a pure function over immutable inputs.
"""

from __future__ import annotations

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum

from sophie.transcript import Speaker, Transcript

logger = logging.getLogger(__name__)


class UndefinedMetricError(ValueError):
    """A metric has no defined value for this input (e.g. zero words)."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class LexiconError(ValueError):
    """A lexicon file could not be loaded. Carries path and line number."""

    def __init__(self, message: str, path: str, line: int):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class LexiconKind(str, Enum):
    SENTIMENT = "sentiment"
    EMPATHY = "empathy"
    HEDGE_SET = "hedge_set"
    PRONOUN_SET = "pronoun_set"


# Valid score ranges for the scored kinds; set kinds carry no scores.
_SCORE_RANGES = {
    LexiconKind.SENTIMENT: (-4.0, 4.0),
    LexiconKind.EMPATHY: (1.0, 7.0),
}


@dataclass(frozen=True)
class Lexicon:
    kind: LexiconKind
    entries: dict  # lowercase word -> score; set kinds store 0.0
    source: str = ""

    def __post_init__(self):
        bounds = _SCORE_RANGES.get(self.kind)
        if bounds is None:
            return
        lo, hi = bounds
        for word, score in self.entries.items():
            if not lo <= score <= hi:
                raise ValueError(
                    f"{self.kind.value} score {score} for {word!r} outside [{lo}, {hi}]"
                )

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def score(self, word: str) -> float:
        return self.entries[word]

    @classmethod
    def word_set(cls, kind: LexiconKind, words, source: str = "") -> "Lexicon":
        return cls(kind=kind, entries={w.lower(): 0.0 for w in words}, source=source)


def load_lexicon(path: str, kind: LexiconKind) -> Lexicon:
    """Load a lexicon file: `word<TAB>score` lines for scored kinds, one word
    per line for set kinds. Lines starting with `#` and blank lines are
    ignored; duplicate words keep the last entry and log a warning.
    """
    scored = kind in _SCORE_RANGES
    entries: dict = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if scored:
                parts = line.split("\t")
                if len(parts) != 2:
                    raise LexiconError("expected word<TAB>score", path, lineno)
                word = parts[0].strip().lower()
                try:
                    score = float(parts[1])
                except ValueError:
                    raise LexiconError(f"bad score {parts[1]!r}", path, lineno) from None
                lo, hi = _SCORE_RANGES[kind]
                if not lo <= score <= hi:
                    raise LexiconError(
                        f"score {score} outside [{lo}, {hi}]", path, lineno
                    )
            else:
                if "\t" in line or " " in line:
                    raise LexiconError("expected one word per line", path, lineno)
                word, score = line.lower(), 0.0
            if not word:
                raise LexiconError("empty word", path, lineno)
            if word in entries:
                logger.warning("%s:%d: duplicate word %r, last entry wins", path, lineno, word)
            entries[word] = score
    if not entries:
        raise LexiconError("lexicon is empty", path, 0)
    return Lexicon(kind=kind, entries=entries, source=path)


# A token is a run of letters/digits, possibly joined by intra-word
# apostrophes, or a lone "?". All other punctuation is dropped.
_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*|\?", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase tokens; "?" is kept as its own token, other punctuation dropped."""
    return _TOKEN_RE.findall(text.lower().replace("’", "'"))


def word_tokens(tokens: list[str]) -> list[str]:
    """Tokens that count as words for rates and percentages ("?" excluded)."""
    return [t for t in tokens if t != "?"]


_ABBREVIATIONS = ("dr.", "mr.", "mrs.", "e.g.", "i.e.")


def _ends_with_abbreviation(text: str, end: int) -> bool:
    low = text[:end].lower()
    for abbr in _ABBREVIATIONS:
        if low.endswith(abbr):
            before = low[: len(low) - len(abbr)]
            if not before or not before[-1].isalnum():
                return True
    return False


def split_sentences(text: str) -> list[str]:
    """Split after `.`, `!`, `?` followed by whitespace or end of text.

    Common abbreviations (dr., mr., mrs., e.g., i.e.) do not end a sentence.
    Text without a terminator is one sentence.
    """
    sentences: list[str] = []
    start = 0
    for i, ch in enumerate(text):
        if ch not in ".!?":
            continue
        nxt = text[i + 1] if i + 1 < len(text) else ""
        if nxt and not nxt.isspace():
            continue
        if ch == "." and _ends_with_abbreviation(text, i + 1):
            continue
        piece = text[start:i + 1].strip()
        if piece:
            sentences.append(piece)
        start = i + 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")


def count_syllables(word: str) -> int:
    """Vowel-group heuristic with a silent final "e" adjustment, minimum 1."""
    w = word.lower().replace("'", "")
    groups = len(_VOWEL_GROUP_RE.findall(w))
    if w.endswith("e"):
        # consonant + "le" keeps its syllable (table, little)
        ends_cons_le = len(w) >= 3 and w.endswith("le") and w[-3] not in "aeiouy"
        if not ends_cons_le:
            groups -= 1
    return max(1, groups)


@dataclass(frozen=True)
class ReadingGrade:
    raw: float
    display_grade: int  # U.S. school grade, clamped to [1, 12]


def reading_grade(text: str) -> ReadingGrade:
    """Flesch-Kincaid grade level of the text.

    raw = 0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59,
    with words, sentences and syllables from this module's own counters.
    The display grade is the raw value rounded half-up and clamped to [1, 12].
    """
    words = word_tokens(tokenize(text))
    if not words:
        raise UndefinedMetricError("no words")
    sentences = split_sentences(text)
    n_sentences = max(1, len(sentences))
    syllables = sum(count_syllables(w) for w in words)
    raw = 0.39 * (len(words) / n_sentences) + 11.8 * (syllables / len(words)) - 15.59
    display = min(12, max(1, math.floor(raw + 0.5)))
    return ReadingGrade(raw=raw, display_grade=display)


@dataclass(frozen=True)
class WordCloud:
    """Most frequent words, count descending, ties alphabetical, length <= cap."""

    entries: tuple  # of (word, count)
    cap: int

    def as_list(self) -> list:
        return [[word, count] for word, count in self.entries]


def build_cloud(words: list[str], cap: int) -> WordCloud:
    counts = Counter(words)
    ordered = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return WordCloud(entries=tuple(ordered[:cap]), cap=cap)


HEDGE_CLOUD_CAP = 10
EMPATHY_CLOUD_CAP = 15


@dataclass(frozen=True)
class HedgeMetrics:
    percentage: float  # [0, 100]
    cloud: WordCloud


def hedge_metrics(tokens: list[str], hedges: Lexicon) -> HedgeMetrics:
    words = word_tokens(tokens)
    if not words:
        raise UndefinedMetricError("no words")
    hits = [w for w in words if w in hedges]
    return HedgeMetrics(
        percentage=100.0 * len(hits) / len(words),
        cloud=build_cloud(hits, HEDGE_CLOUD_CAP),
    )


def pronoun_metrics(tokens: list[str], pronouns: Lexicon) -> float:
    """Percentage of tokens that are personal pronouns."""
    words = word_tokens(tokens)
    if not words:
        raise UndefinedMetricError("no words")
    hits = sum(1 for w in words if w in pronouns)
    return 100.0 * hits / len(words)


@dataclass(frozen=True)
class EmpathyMetrics:
    average: float | None  # [1, 7]; None when no token is in the lexicon
    cloud: WordCloud


def empathy_metrics(tokens: list[str], empathy: Lexicon) -> EmpathyMetrics:
    """Average empathy score over in-lexicon tokens plus their word cloud."""
    hits = [w for w in word_tokens(tokens) if w in empathy]
    if not hits:
        return EmpathyMetrics(average=None, cloud=build_cloud([], EMPATHY_CLOUD_CAP))
    average = sum(empathy.score(w) for w in hits) / len(hits)
    return EmpathyMetrics(average=average, cloud=build_cloud(hits, EMPATHY_CLOUD_CAP))


_NEGATORS = {"not", "no", "never"}
_NEGATION_WINDOW = 3
_NORMALIZATION_ALPHA = 15.0


def _is_negator(token: str) -> bool:
    return token in _NEGATORS or token.endswith("n't")


def sentiment_score(tokens: list[str], sentiment: Lexicon) -> float:
    """Normalized valence sum in [-1, +1].

    A token's valence flips sign when a negator (not, no, never, or any
    n't-suffixed token) occurs within the 3 preceding tokens.
    """
    total = 0.0
    for i, token in enumerate(tokens):
        if token not in sentiment:
            continue
        valence = sentiment.score(token)
        window = tokens[max(0, i - _NEGATION_WINDOW):i]
        if any(_is_negator(t) for t in window):
            valence = -valence
        total += valence
    if total == 0.0:
        return 0.0
    return total / math.sqrt(total * total + _NORMALIZATION_ALPHA)


@dataclass(frozen=True)
class SentimentTrajectory:
    bins: tuple  # of floats in [-1, +1]

    @property
    def bin_count(self) -> int:
        return len(self.bins)


DEFAULT_BIN_COUNT = 10


def _interpolated_token_times(t: Transcript, who: Speaker) -> list[float]:
    """Midpoint-of-token times for who's tokens, in ms, in turn order."""
    times: list[float] = []
    for turn in t.turns:
        if turn.speaker != who:
            continue
        turn_tokens = tokenize(turn.text)
        if not turn_tokens:
            continue
        duration = turn.end_ms - turn.start_ms
        for k in range(len(turn_tokens)):
            times.append(turn.start_ms + duration * (k + 0.5) / len(turn_tokens))
    return times


def sentiment_trajectory(
    t: Transcript,
    who: Speaker,
    sentiment: Lexicon,
    bin_count: int = DEFAULT_BIN_COUNT,
) -> SentimentTrajectory:
    """Per-bin sentiment of who's tokens across the conversation.

    Tokens are assigned to bins by fractional position in the speaker's token
    sequence. When every turn in the transcript is timestamped, assignment
    uses interpolated token times over the conversation's span instead, so
    both speakers' trajectories share a common time axis. Empty bins score 0.
    """
    if bin_count < 2:
        raise ValueError("bin_count must be at least 2")
    if not any(turn.speaker == who for turn in t.turns):
        raise UndefinedMetricError(f"no {who.value} turns")

    tokens: list[str] = []
    for turn in t.turns:
        if turn.speaker == who:
            tokens.extend(tokenize(turn.text))

    binned: list[list[str]] = [[] for _ in range(bin_count)]
    all_timed = bool(t.turns) and all(turn.timed for turn in t.turns)
    if all_timed:
        span_start = min(turn.start_ms for turn in t.turns)
        span_end = max(turn.end_ms for turn in t.turns)
        span = span_end - span_start
        times = _interpolated_token_times(t, who)
        for token, at in zip(tokens, times):
            if span > 0:
                index = int((at - span_start) / span * bin_count)
            else:
                index = 0
            binned[min(bin_count - 1, max(0, index))].append(token)
    else:
        total = len(tokens)
        for i, token in enumerate(tokens):
            index = int(i / total * bin_count) if total else 0
            binned[min(bin_count - 1, index)].append(token)

    scores = tuple(sentiment_score(group, sentiment) for group in binned)
    return SentimentTrajectory(bins=scores)


def trajectory_distance(a: SentimentTrajectory, ideal: SentimentTrajectory) -> float:
    """Root-mean-square difference between two equal-length trajectories."""
    if a.bin_count != ideal.bin_count:
        raise ValueError(
            f"bin count mismatch: {a.bin_count} vs {ideal.bin_count}"
        )
    total = sum((x - y) ** 2 for x, y in zip(a.bins, ideal.bins))
    return math.sqrt(total / a.bin_count)
