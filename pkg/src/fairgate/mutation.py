"""Male/female mutant generation from an extracted template.

Sampling uses :class:`random.Random` (MT19937) seeded with a 64-bit integer.
Per-text seeds come from :func:`text_seed`, a SHA-256 digest of the global
seed and the text, so results do not depend on ``PYTHONHASHSEED``.
"""
from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from fairgate.extraction import ReplacementTuple, Template, render
from fairgate.lexicon import DEFAULT_PRONOUNS, Gender, NameLexicon, PronounTable, render_name

DEFAULT_MUTANTS_PER_GENDER = 30


class MutationError(ValueError):
    pass


def derive_seed(*parts: object) -> int:
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def text_seed(global_seed: int, text: str) -> int:
    return derive_seed("text", global_seed, text)


@dataclass(frozen=True)
class Mutant:
    gender: Gender
    text: str
    tuples: tuple[ReplacementTuple, ...]  # indexed by cluster id


@dataclass(frozen=True)
class MutantSet:
    template: Template
    male: tuple[Mutant, ...]
    female: tuple[Mutant, ...]
    seed: int

    def group(self, gender: Gender) -> tuple[Mutant, ...]:
        return self.male if gender is Gender.MALE else self.female

    def __len__(self) -> int:
        return len(self.male) + len(self.female)


def checkable(template: Template) -> bool:
    return template.checkable


def generate_mutants(
    template: Template,
    lexicon: NameLexicon,
    table: PronounTable = DEFAULT_PRONOUNS,
    n_per_gender: int = DEFAULT_MUTANTS_PER_GENDER,
    seed: int = 0,
) -> MutantSet:
    """Render up to ``n_per_gender`` mutants per gender.

    Each gender's names are shuffled once; mutant ``i`` gives cluster ``j``
    the name at position ``i + j`` (mod the list length). The cluster-0 names
    are therefore a draw without replacement, and no mutant reuses a name
    across clusters.
    """
    if not template.checkable:
        raise MutationError("template has no placeholders")
    if n_per_gender < 1:
        raise MutationError("n_per_gender must be at least 1")
    k = len(template.clusters)
    rng = random.Random(seed)
    groups: dict[Gender, tuple[Mutant, ...]] = {}
    for gender in (Gender.MALE, Gender.FEMALE):
        names = lexicon.names(gender)
        if k > len(names):
            raise MutationError(f"{k} clusters but only {len(names)} {gender} names")
        order = rng.sample(names, len(names))
        mutants = []
        for i in range(min(n_per_gender, len(names))):
            tuples = tuple(
                ReplacementTuple.for_gender(gender, render_name(order[(i + j) % len(order)]), table)
                for j in range(k)
            )
            text = render(template, dict(enumerate(tuples)))
            mutants.append(Mutant(gender=gender, text=text, tuples=tuples))
        groups[gender] = tuple(mutants)
    return MutantSet(template=template, male=groups[Gender.MALE], female=groups[Gender.FEMALE], seed=seed)
