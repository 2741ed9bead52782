"""Tokenization and template extraction.

A template is the input text with every protected token (gendered name or
pronoun) swapped for a typed placeholder. Placeholders that refer to the same
person share a cluster id, so a mutant can replace them consistently.

Coreference is a deterministic rule, not a learned model: a pronoun attaches
to the most recently mentioned name of its gender, or, when no such name
precedes it, to a pronoun-only cluster of that gender.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

from fairgate.lexicon import (
    DEFAULT_PRONOUNS,
    Gender,
    NameHit,
    NameLexicon,
    PronounHit,
    PronounRole,
    PronounTable,
    classify_token,
)

MAX_TEXT_LENGTH = 100_000

SENTENCE_FINAL = frozenset(".!?")
_POSSESSIVE_SUFFIXES = ("'s", "’s")
_CHUNK = re.compile(r"\S+")

# Words that cannot be the noun owned by a possessive "her"; seeing one right
# after "her" means it was the object ("told her the truth", "saw her again").
_NON_NOUN_FOLLOWERS = frozenset(
    """a an the to and or but nor so yet in on at for with from by of about as into onto
    over under after before than that this these those if when while because again too
    very all up out down off away back there here then now is was be been""".split()
)


class TextTooLong(ValueError):
    pass


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int
    is_word: bool


@dataclass(frozen=True)
class TokenizedText:
    text: str
    tokens: tuple[Token, ...]

    def render(self) -> str:
        out, pos = [], 0
        for tok in self.tokens:
            out.append(self.text[pos:tok.start])
            out.append(tok.text)
            pos = tok.end
        out.append(self.text[pos:])
        return "".join(out)


def tokenize(text: str, max_length: int = MAX_TEXT_LENGTH) -> TokenizedText:
    """Whitespace tokenizer that peels punctuation off word edges.

    Leading and trailing non-alphanumeric characters become one-character
    punctuation tokens, and a trailing ``'s`` is split off as its own token.
    """
    if len(text) > max_length:
        raise TextTooLong(f"text has {len(text)} characters, limit is {max_length}")
    tokens: list[Token] = []
    for m in _CHUNK.finditer(text):
        s, e = m.span()
        a = s
        while a < e and not text[a].isalnum():
            tokens.append(Token(text[a], a, a + 1, False))
            a += 1
        b = e
        while b > a and not text[b - 1].isalnum():
            b -= 1
        if b > a:
            if b - a > 2 and text[b - 2:b].lower() in _POSSESSIVE_SUFFIXES and text[b - 3].isalnum():
                tokens.append(Token(text[a:b - 2], a, b - 2, True))
                tokens.append(Token(text[b - 2:b], b - 2, b, False))
            else:
                tokens.append(Token(text[a:b], a, b, True))
        for k in range(b, e):
            tokens.append(Token(text[k], k, k + 1, False))
    return TokenizedText(text=text, tokens=tuple(tokens))


class PlaceholderKind(enum.Enum):
    NAME = "name"
    SUBJECTIVE = "subjective-pronoun"
    OBJECTIVE = "objective-pronoun"
    POSSESSIVE = "possessive-pronoun"
    REFLEXIVE = "reflexive-pronoun"

    @property
    def role(self) -> PronounRole | None:
        return _KIND_TO_ROLE.get(self)


_KIND_TO_ROLE = {
    PlaceholderKind.SUBJECTIVE: PronounRole.SUBJECTIVE,
    PlaceholderKind.OBJECTIVE: PronounRole.OBJECTIVE,
    PlaceholderKind.POSSESSIVE: PronounRole.POSSESSIVE,
    PlaceholderKind.REFLEXIVE: PronounRole.REFLEXIVE,
}
_ROLE_TO_KIND = {role: kind for kind, role in _KIND_TO_ROLE.items()}


@dataclass(frozen=True)
class Placeholder:
    kind: PlaceholderKind
    cluster: int
    gender: Gender
    surface: str
    start: int
    end: int


@dataclass(frozen=True)
class Cluster:
    id: int
    gender: Gender
    anchor: str | None


Segment = Union[str, Placeholder]


@dataclass(frozen=True)
class Template:
    segments: tuple[Segment, ...]
    clusters: tuple[Cluster, ...]
    source: TokenizedText

    @property
    def placeholders(self) -> tuple[Placeholder, ...]:
        return tuple(s for s in self.segments if isinstance(s, Placeholder))

    @property
    def checkable(self) -> bool:
        return any(isinstance(s, Placeholder) for s in self.segments)

    def kinds(self, cluster: int | None = None) -> set[PlaceholderKind]:
        return {p.kind for p in self.placeholders if cluster is None or p.cluster == cluster}

    def annotate(self) -> str:
        parts = []
        for seg in self.segments:
            if isinstance(seg, Placeholder):
                parts.append(f"<{seg.kind.value}#{seg.cluster}>")
            else:
                parts.append(seg)
        return "".join(parts)


@dataclass(frozen=True)
class ReplacementTuple:
    """A name plus the four pronoun forms, all for one gender."""

    gender: Gender
    name: str
    pronouns: Mapping[PronounRole, str] = field(default_factory=dict)

    @classmethod
    def for_gender(
        cls, gender: Gender, name: str, table: PronounTable = DEFAULT_PRONOUNS
    ) -> "ReplacementTuple":
        return cls(gender=gender, name=name, pronouns=dict(table.rows[gender]))

    def fill(self, kind: PlaceholderKind) -> str:
        if kind is PlaceholderKind.NAME:
            return self.name
        try:
            return self.pronouns[kind.role]
        except KeyError:
            raise RenderError(f"replacement tuple has no {kind.role.value} pronoun") from None


def _her_is_possessive(tokens: Sequence[Token], i: int, lexicon: NameLexicon, table: PronounTable) -> bool:
    if i + 1 >= len(tokens):
        return False
    nxt = tokens[i + 1]
    if not nxt.is_word or nxt.text in SENTENCE_FINAL:
        return False
    if nxt.text.lower() in _NON_NOUN_FOLLOWERS:
        return False
    return classify_token(nxt.text, lexicon, table) is None


def _surname_end(tt: TokenizedText, i: int, lexicon: NameLexicon, table: PronounTable) -> int | None:
    """End offset of a surname directly following the first name at ``i``, if any."""
    tokens = tt.tokens
    if i + 1 >= len(tokens):
        return None
    first, nxt = tokens[i], tokens[i + 1]
    if not nxt.is_word or tt.text[first.end:nxt.start] != " ":
        return None
    word = nxt.text
    if not word[0].isupper() or not any(ch.islower() for ch in word[1:]):
        return None
    if not all(ch.isalpha() or ch in "-'’" for ch in word):
        return None
    if classify_token(word, lexicon, table) is not None:
        return None
    return nxt.end


def extract_template(
    tt: TokenizedText, lexicon: NameLexicon, table: PronounTable = DEFAULT_PRONOUNS
) -> Template:
    text, tokens = tt.text, tt.tokens
    segments: list[Segment] = []
    clusters: list[Cluster] = []
    name_clusters: dict[str, int] = {}
    pronoun_only: dict[Gender, int] = {}
    last_named: dict[Gender, int] = {}
    pos = 0
    i = 0

    def new_cluster(gender: Gender, anchor: str | None) -> int:
        clusters.append(Cluster(id=len(clusters), gender=gender, anchor=anchor))
        return len(clusters) - 1

    while i < len(tokens):
        tok = tokens[i]
        hit = classify_token(tok.text, lexicon, table) if tok.is_word else None
        if hit is None:
            i += 1
            continue
        if tok.start > pos:
            segments.append(text[pos:tok.start])
        if isinstance(hit, NameHit):
            end = _surname_end(tt, i, lexicon, table)
            consumed = 2 if end is not None else 1
            end = end if end is not None else tok.end
            surface = text[tok.start:end]
            key = surface.lower()
            if key not in name_clusters:
                name_clusters[key] = new_cluster(hit.gender, surface)
            cid = name_clusters[key]
            last_named[hit.gender] = cid
            segments.append(Placeholder(PlaceholderKind.NAME, cid, hit.gender, surface, tok.start, end))
        else:
            assert isinstance(hit, PronounHit)
            if len(hit.roles) == 1:
                (role,) = hit.roles
            elif _her_is_possessive(tokens, i, lexicon, table):
                role = PronounRole.POSSESSIVE
            else:
                role = PronounRole.OBJECTIVE
            cid = last_named.get(hit.gender)
            if cid is None:
                if hit.gender not in pronoun_only:
                    pronoun_only[hit.gender] = new_cluster(hit.gender, None)
                cid = pronoun_only[hit.gender]
            end = tok.end
            consumed = 1
            segments.append(Placeholder(_ROLE_TO_KIND[role], cid, hit.gender, tok.text, tok.start, end))
        pos = end
        i += consumed
    if pos < len(text):
        segments.append(text[pos:])
    return Template(segments=tuple(segments), clusters=tuple(clusters), source=tt)


def match_case(surface: str, replacement: str) -> str:
    """Give ``replacement`` the capitalization pattern of ``surface``."""
    if surface.lower() == replacement.lower():
        return surface
    if len(surface) > 1 and surface.isupper():
        return replacement.upper()
    if surface[:1].isupper():
        return replacement[:1].upper() + replacement[1:]
    return replacement


def render(template: Template, assignment: Mapping[int, ReplacementTuple]) -> str:
    for cluster in template.clusters:
        if cluster.id not in assignment:
            raise RenderError(f"no replacement tuple for cluster {cluster.id}")
    out = []
    for seg in template.segments:
        if isinstance(seg, Placeholder):
            out.append(match_case(seg.surface, assignment[seg.cluster].fill(seg.kind)))
        else:
            out.append(seg)
    return "".join(out)


def original_assignment(template: Template, table: PronounTable = DEFAULT_PRONOUNS) -> dict[int, ReplacementTuple]:
    """Tuples that reproduce the source text when rendered."""
    return {
        c.id: ReplacementTuple.for_gender(c.gender, c.anchor or "", table) for c in template.clusters
    }
