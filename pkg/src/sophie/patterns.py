"""Pattern-transduction rule trees.

A rule tree maps token sequences to strings: interpretation trees produce
gist clauses, output trees produce response or suggestion text. Rules are
organized as trees; children refine their parent's pattern and win over the
parent's own template.

Rule-file syntax (one tree per ``.rules`` file, two-space indentation):

    tree: bad-news
    class emotion: sad scared anxious

    * bad news * => gist: the news is bad
    * !emotion *
      * very !emotion * => gist: sophie is very upset

Pattern elements: ``*`` wildcard (any number of tokens), ``*N`` wildcard of
at most N tokens, ``[a|b|c]`` alternatives, ``!name`` declared word class,
anything else a literal token. Templates start with ``gist:`` or ``out:``
(all templates in a tree must agree) and may reference pattern elements by
1-based position with ``$k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from sophie.textmetrics import split_sentences, tokenize


class RuleParseError(ValueError):
    """A rule file could not be parsed. Carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class Literal:
    __slots__ = ("word",)

    def __init__(self, word: str):
        self.word = word

    def matches(self, token: str) -> bool:
        return token == self.word

    def __repr__(self):
        return f"Literal({self.word!r})"


class Alt:
    __slots__ = ("words",)

    def __init__(self, words):
        self.words = frozenset(words)

    def matches(self, token: str) -> bool:
        return token in self.words

    def __repr__(self):
        return f"Alt({sorted(self.words)!r})"


class ClassRef:
    __slots__ = ("name", "words")

    def __init__(self, name: str, words):
        self.name = name
        self.words = frozenset(words)

    def matches(self, token: str) -> bool:
        return token in self.words

    def __repr__(self):
        return f"ClassRef(!{self.name})"


class Wild:
    """Matches a span of tokens: up to ``max`` of them, 0 meaning unbounded."""

    __slots__ = ("max",)

    def __init__(self, max: int = 0):
        self.max = max

    def __repr__(self):
        return f"Wild({self.max})"


@dataclass(frozen=True)
class Pattern:
    elements: tuple

    def __post_init__(self):
        if not self.elements:
            raise ValueError("pattern has no elements")
        wilds = [e for e in self.elements if isinstance(e, Wild)]
        if len(wilds) == len(self.elements):
            single_unbounded = len(self.elements) == 1 and self.elements[0].max == 0
            if not single_unbounded:
                raise ValueError("pattern needs at least one non-wildcard element")


class CaptureRef:
    __slots__ = ("index",)

    def __init__(self, index: int):
        self.index = index  # 1-based pattern element position

    def __repr__(self):
        return f"CaptureRef(${self.index})"


class RuleTag(str, Enum):
    GIST = "gist"
    OUTPUT = "out"


@dataclass(frozen=True)
class Template:
    parts: tuple  # of str literals or CaptureRef


@dataclass(frozen=True)
class Rule:
    pattern: Pattern
    template: Template | None
    children: tuple = ()


@dataclass(frozen=True)
class RuleTree:
    id: str
    tag: RuleTag
    roots: tuple
    classes: dict = field(default_factory=dict)


def match(pattern: Pattern, tokens: list[str]) -> dict | None:
    """Match the pattern against the ENTIRE token sequence.

    Returns a map of 1-based element index to the matched token list for
    every element, or None. Wildcards are lazy: the leftmost-shortest
    assignment wins, found by deterministic backtracking.
    """
    elements = pattern.elements
    n = len(elements)
    spans: list = [None] * n

    def walk(ei: int, ti: int) -> bool:
        if ei == n:
            return ti == len(tokens)
        element = elements[ei]
        if isinstance(element, Wild):
            remaining = len(tokens) - ti
            longest = remaining if element.max == 0 else min(element.max, remaining)
            for length in range(longest + 1):  # shortest first
                spans[ei] = (ti, ti + length)
                if walk(ei + 1, ti + length):
                    return True
            spans[ei] = None
            return False
        if ti < len(tokens) and element.matches(tokens[ti]):
            spans[ei] = (ti, ti + 1)
            if walk(ei + 1, ti + 1):
                return True
            spans[ei] = None
        return False

    if not walk(0, 0):
        return None
    return {i + 1: list(tokens[a:b]) for i, (a, b) in enumerate(spans)}


def apply_template(template: Template, captures: dict) -> str:
    """Join literal words and captured token spans with single spaces."""
    pieces: list[str] = []
    for part in template.parts:
        if isinstance(part, CaptureRef):
            piece = " ".join(captures.get(part.index, []))
        else:
            piece = part
        if piece:
            pieces.append(piece)
    return " ".join(pieces)


@dataclass(frozen=True)
class Transduction:
    output: str
    path: tuple  # rule indices from root, for traceability


def _transduce_rule(rule: Rule, path: tuple, tokens: list[str]) -> Transduction | None:
    captures = match(rule.pattern, tokens)
    if captures is None:
        return None
    for j, child in enumerate(rule.children):
        result = _transduce_rule(child, path + (j,), tokens)
        if result is not None:
            return result
    if rule.template is not None:
        return Transduction(output=apply_template(rule.template, captures), path=path)
    return None


def transduce(tree: RuleTree, tokens: list[str]) -> Transduction | None:
    """Depth-first search of the tree; children win over their parent's template."""
    for i, root in enumerate(tree.roots):
        result = _transduce_rule(root, (i,), tokens)
        if result is not None:
            return result
    return None


def extract_gists(tree: RuleTree, utterance_text: str) -> list[str]:
    """Transduce each sentence of the utterance; empty list means no gist found."""
    gists: list[str] = []
    for sentence in split_sentences(utterance_text):
        result = transduce(tree, tokenize(sentence))
        if result is not None and result.output:
            gists.append(result.output)
    return gists


def _parse_element(word: str, classes: dict, lineno: int):
    if word == "*":
        return Wild(0)
    if word.startswith("*"):
        digits = word[1:]
        if not digits.isdigit() or int(digits) < 1:
            raise RuleParseError(f"bad wildcard {word!r}", lineno)
        return Wild(int(digits))
    if word.startswith("[") and word.endswith("]"):
        alts = [w for w in word[1:-1].split("|") if w]
        if not alts:
            raise RuleParseError(f"empty alternative set {word!r}", lineno)
        return Alt(w.lower() for w in alts)
    if word.startswith("!"):
        name = word[1:]
        if name not in classes:
            raise RuleParseError(f"unknown class {name!r}", lineno)
        return ClassRef(name, classes[name])
    return Literal(word.lower())


def _parse_pattern(text: str, classes: dict, lineno: int) -> Pattern:
    words = text.split()
    if not words:
        raise RuleParseError("empty pattern", lineno)
    elements = tuple(_parse_element(w, classes, lineno) for w in words)
    try:
        return Pattern(elements=elements)
    except ValueError as exc:
        raise RuleParseError(str(exc), lineno) from None


def _parse_template(text: str, n_elements: int, lineno: int) -> tuple[RuleTag, Template]:
    tag = None
    for candidate in RuleTag:
        prefix = candidate.value + ":"
        if text.startswith(prefix):
            tag = candidate
            text = text[len(prefix):].strip()
            break
    if tag is None:
        raise RuleParseError('template must start with "gist:" or "out:"', lineno)
    parts: list = []
    for word in text.split():
        if word.startswith("$") and word[1:].isdigit():
            index = int(word[1:])
            if not 1 <= index <= n_elements:
                raise RuleParseError(
                    f"capture ${index} out of range (pattern has {n_elements} elements)",
                    lineno,
                )
            parts.append(CaptureRef(index))
        else:
            parts.append(word)
    if not parts:
        raise RuleParseError("empty template", lineno)
    return tag, Template(parts=tuple(parts))


def parse_pattern(text: str, classes: dict | None = None) -> Pattern:
    """Parse a standalone pattern string (same element syntax as rule files)."""
    return _parse_pattern(text.strip(), classes or {}, 0)


class _Node:
    """Mutable rule under construction; frozen into Rule once children are known."""

    def __init__(self, pattern: Pattern, template: Template | None, lineno: int):
        self.pattern = pattern
        self.template = template
        self.lineno = lineno
        self.children: list[_Node] = []

    def freeze(self) -> Rule:
        if self.template is None and not self.children:
            raise RuleParseError("rule without a template needs children", self.lineno)
        return Rule(
            pattern=self.pattern,
            template=self.template,
            children=tuple(child.freeze() for child in self.children),
        )


def parse_rules(source: str) -> RuleTree:
    """Parse one rule tree from rule-file text (syntax in the module docstring)."""
    lines = source.splitlines()

    tree_id = None
    classes: dict = {}
    # Class declarations are gathered first so rule order does not matter.
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if tree_id is None:
            if not line.startswith("tree:"):
                raise RuleParseError('rule file must open with "tree: <id>"', lineno)
            tree_id = line[len("tree:"):].strip()
            if not tree_id:
                raise RuleParseError("empty tree id", lineno)
            continue
        if line.startswith("class "):
            if raw != raw.lstrip():
                raise RuleParseError("class declarations must not be indented", lineno)
            head, _, words = line[len("class "):].partition(":")
            name = head.strip()
            members = frozenset(w.lower() for w in words.split())
            if not name or not members:
                raise RuleParseError("class needs a name and at least one word", lineno)
            if name in classes:
                raise RuleParseError(f"class {name!r} declared twice", lineno)
            classes[name] = members
    if tree_id is None:
        raise RuleParseError("missing tree header", len(lines) or 1)

    roots: list[_Node] = []
    stack: list[_Node] = []  # open rules, one per indentation level
    tag: RuleTag | None = None
    seen_header = False
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if not seen_header:
            seen_header = True  # tree: line, validated above
            continue
        if stripped.startswith("class "):
            continue
        if "\t" in raw[: len(raw) - len(raw.lstrip())]:
            raise RuleParseError("tabs are not allowed in indentation", lineno)
        indent = len(raw) - len(raw.lstrip(" "))
        if indent % 2 != 0:
            raise RuleParseError("indentation must be a multiple of two spaces", lineno)
        level = indent // 2
        if level > len(stack):
            raise RuleParseError("indentation jumps more than one level", lineno)

        pattern_text, sep, template_text = stripped.partition("=>")
        pattern = _parse_pattern(pattern_text.strip(), classes, lineno)
        template = None
        if sep:
            rule_tag, template = _parse_template(
                template_text.strip(), len(pattern.elements), lineno
            )
            if tag is None:
                tag = rule_tag
            elif tag != rule_tag:
                raise RuleParseError(
                    f'tree mixes "{tag.value}:" and "{rule_tag.value}:" templates', lineno
                )

        node = _Node(pattern, template, lineno)
        del stack[level:]
        if level == 0:
            roots.append(node)
        else:
            stack[level - 1].children.append(node)
        stack.append(node)

    if not roots:
        raise RuleParseError("tree has no rules", len(lines))
    if tag is None:
        raise RuleParseError("tree has no templates", len(lines))
    return RuleTree(
        id=tree_id,
        tag=tag,
        roots=tuple(node.freeze() for node in roots),
        classes=classes,
    )
