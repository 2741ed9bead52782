"""Gendered name gazetteer and pronoun table.

These two tables decide which tokens are *protected*: any token that can be
swapped for a token of the other gender without otherwise changing meaning.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable


class Gender(enum.Enum):
    MALE = "M"
    FEMALE = "F"

    @property
    def other(self) -> "Gender":
        return Gender.FEMALE if self is Gender.MALE else Gender.MALE

    def __str__(self) -> str:
        return "Male" if self is Gender.MALE else "Female"


class PronounRole(enum.Enum):
    SUBJECTIVE = "subjective"
    OBJECTIVE = "objective"
    POSSESSIVE = "possessive"
    REFLEXIVE = "reflexive"


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class PronounTable:
    rows: dict[Gender, dict[PronounRole, str]]

    def __post_init__(self) -> None:
        for gender in Gender:
            row = self.rows.get(gender)
            if row is None or set(row) != set(PronounRole):
                raise LexiconError(f"pronoun row for {gender} must cover every role")
            for cell in row.values():
                if not cell or cell != cell.lower():
                    raise LexiconError(f"pronoun cell {cell!r} must be non-empty lowercase")
        # surface -> (gender, roles)
        index: dict[str, tuple[Gender, frozenset[PronounRole]]] = {}
        for gender, row in self.rows.items():
            for role, surface in row.items():
                if surface in index:
                    other, roles = index[surface]
                    if other is not gender:
                        raise LexiconError(f"pronoun {surface!r} appears under both genders")
                    index[surface] = (gender, roles | {role})
                else:
                    index[surface] = (gender, frozenset({role}))
        object.__setattr__(self, "_index", index)

    def lookup(self, surface: str) -> tuple[Gender, frozenset[PronounRole]] | None:
        return self._index.get(surface.lower())  # type: ignore[attr-defined]

    def form(self, gender: Gender, role: PronounRole) -> str:
        return self.rows[gender][role]


DEFAULT_PRONOUNS = PronounTable(
    rows={
        Gender.MALE: {
            PronounRole.SUBJECTIVE: "he",
            PronounRole.OBJECTIVE: "him",
            PronounRole.POSSESSIVE: "his",
            PronounRole.REFLEXIVE: "himself",
        },
        Gender.FEMALE: {
            PronounRole.SUBJECTIVE: "she",
            PronounRole.OBJECTIVE: "her",
            PronounRole.POSSESSIVE: "her",
            PronounRole.REFLEXIVE: "herself",
        },
    }
)


def render_name(name: str) -> str:
    return name[:1].upper() + name[1:]


@dataclass(frozen=True)
class NameLexicon:
    """Two disjoint name lists, stored lowercase in file order."""

    male: tuple[str, ...]
    female: tuple[str, ...]
    source: str | None = None
    _lookup: dict[str, Gender] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        lookup: dict[str, Gender] = {}
        for gender, names in ((Gender.MALE, self.male), (Gender.FEMALE, self.female)):
            for name in names:
                if not name or any(ch.isspace() for ch in name) or name != name.lower():
                    raise LexiconError(f"bad lexicon entry {name!r}")
                if lookup.get(name, gender) is not gender:
                    raise LexiconError(f"name {name!r} listed under both genders")
                lookup[name] = gender
        object.__setattr__(self, "_lookup", lookup)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, Gender]], source: str | None = None) -> "NameLexicon":
        """Build a lexicon, dropping any name claimed by both genders."""
        seen: dict[str, set[Gender]] = {}
        order: list[str] = []
        for name, gender in pairs:
            key = name.lower()
            if key not in seen:
                seen[key] = set()
                order.append(key)
            seen[key].add(gender)
        male = tuple(n for n in order if seen[n] == {Gender.MALE})
        female = tuple(n for n in order if seen[n] == {Gender.FEMALE})
        return cls(male=male, female=female, source=source)

    def names(self, gender: Gender) -> tuple[str, ...]:
        return self.male if gender is Gender.MALE else self.female

    def gender_of(self, name: str) -> Gender | None:
        return self._lookup.get(name.lower())

    def __contains__(self, name: str) -> bool:
        return name.lower() in self._lookup


def _parse_lines(lines: Iterable[str], source: str) -> NameLexicon:
    pairs: list[tuple[str, Gender]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or parts[1] not in ("M", "F"):
            raise LexiconError(f"{source}:{lineno}: expected 'name<TAB>M|F', got {line!r}")
        name = parts[0].strip()
        if not name or any(ch.isspace() for ch in name):
            raise LexiconError(f"{source}:{lineno}: name must be a single word, got {parts[0]!r}")
        pairs.append((name, Gender(parts[1])))
    lexicon = NameLexicon.from_pairs(pairs, source=source)
    for gender in Gender:
        if not lexicon.names(gender):
            raise LexiconError(f"{source}: no {gender} names left after exclusivity filtering")
    return lexicon


def load_lexicon(path: str | Path) -> NameLexicon:
    """Load a ``name<TAB>M|F`` file; names listed under both genders are dropped."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        return _parse_lines(fh, str(path))


_DEFAULT: NameLexicon | None = None


def default_lexicon() -> NameLexicon:
    global _DEFAULT
    if _DEFAULT is None:
        text = resources.files("fairgate").joinpath("data/names.tsv").read_text(encoding="utf-8")
        _DEFAULT = _parse_lines(text.splitlines(), "fairgate:data/names.tsv")
    return _DEFAULT


@dataclass(frozen=True)
class NameHit:
    gender: Gender
    kind: str = "name"


@dataclass(frozen=True)
class PronounHit:
    gender: Gender
    roles: frozenset[PronounRole]
    kind: str = "pronoun"


def classify_token(
    token: str, lexicon: NameLexicon, table: PronounTable = DEFAULT_PRONOUNS
) -> NameHit | PronounHit | None:
    """Classify one token as a gendered name, a gendered pronoun, or neither.

    Pronouns match case-insensitively. Names only match when the token starts
    with an uppercase letter, so lowercase common nouns never count.
    """
    hit = table.lookup(token)
    if hit is not None:
        return PronounHit(gender=hit[0], roles=hit[1])
    if token[:1].isupper():
        gender = lexicon.gender_of(token)
        if gender is not None:
            return NameHit(gender=gender)
    return None
