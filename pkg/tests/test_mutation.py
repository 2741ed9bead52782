import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GOLDEN_FEMALE, GOLDEN_MALE, GOLDEN_SEED, GOLDEN_TEXT
from fairgate.extraction import PlaceholderKind, extract_template, tokenize
from fairgate.lexicon import Gender, NameLexicon
from fairgate.mutation import MutationError, checkable, generate_mutants, text_seed


def template_of(text, lexicon):
    return extract_template(tokenize(text), lexicon)


def test_pinned_seed_gives_golden_mutants(lexicon, table):
    t = template_of(GOLDEN_TEXT, lexicon)
    ms = generate_mutants(t, lexicon, table, n_per_gender=1, seed=text_seed(GOLDEN_SEED, GOLDEN_TEXT))
    assert [m.text for m in ms.male] == [GOLDEN_MALE]
    assert [m.text for m in ms.female] == [GOLDEN_FEMALE]
    assert ms.male[0].tuples[0].name == "James"
    assert ms.female[0].tuples[0].name == "Anne"


def test_thirty_per_gender_all_distinct(lexicon, table):
    ms = generate_mutants(template_of(GOLDEN_TEXT, lexicon), lexicon, table, 30, seed=1)
    assert len(ms.male) == len(ms.female) == 30
    texts = [m.text for m in ms.male + ms.female]
    assert len(set(texts)) == 60
    assert GOLDEN_TEXT not in texts


def test_same_seed_same_mutants(lexicon, table):
    t = template_of(GOLDEN_TEXT, lexicon)
    assert generate_mutants(t, lexicon, table, 30, seed=42) == generate_mutants(t, lexicon, table, 30, seed=42)
    assert generate_mutants(t, lexicon, table, 30, seed=42) != generate_mutants(t, lexicon, table, 30, seed=43)


def test_seed_is_platform_independent(lexicon, table):
    # frozen: guards against accidental changes to the sampling scheme
    ms = generate_mutants(template_of("Anne smiled.", lexicon), lexicon, table, 3, seed=7)
    assert [m.text for m in ms.male + ms.female] == [
        "Samuel smiled.", "Joshua smiled.", "Jose smiled.",
        "Sara smiled.", "Victoria smiled.", "Elizabeth smiled.",
    ]


def test_checkable(lexicon):
    assert checkable(template_of(GOLDEN_TEXT, lexicon))
    assert not checkable(template_of("I am happy", lexicon))
    assert not checkable(template_of("", lexicon))


def test_errors(lexicon, table):
    with pytest.raises(MutationError):
        generate_mutants(template_of("I am happy", lexicon), lexicon, table, 30, seed=0)
    with pytest.raises(MutationError):
        generate_mutants(template_of("Anne", lexicon), lexicon, table, 0, seed=0)
    tiny = NameLexicon(male=("james",), female=("anne", "mary"))
    with pytest.raises(MutationError, match="2 clusters"):
        generate_mutants(template_of("James met Anne.", tiny), tiny, table, 5, seed=0)


def test_count_capped_by_available_names(table):
    lex = NameLexicon(male=("james", "adam", "john"), female=("anne", "mary", "ruth", "lisa"))
    ms = generate_mutants(template_of("Anne smiled.", lex), lex, table, 30, seed=0)
    assert len(ms.male) == 3 and len(ms.female) == 4


def test_clusters_outnumbering_draws_still_get_distinct_names(table):
    lex = NameLexicon(male=("james", "adam", "john", "paul"), female=("anne", "mary", "ruth", "lisa"))
    t = template_of("James met Adam and John.", lex)
    ms = generate_mutants(t, lex, table, 2, seed=3)
    assert len(ms.male) == len(ms.female) == 2
    for m in ms.male + ms.female:
        names = [tp.name for tp in m.tuples]
        assert len(set(names)) == 3
    for group in (ms.male, ms.female):
        assert len({m.tuples[0].name for m in group}) == len(group)


def span_pattern(text, spans):
    parts, pos = [], 0
    for s, e in spans:
        parts.append(re.escape(text[pos:s]))
        parts.append(r"\S+")
        pos = e
    parts.append(re.escape(text[pos:]))
    return "".join(parts)


TEXTS = [
    GOLDEN_TEXT,
    "He met Anne. She smiled at him and at herself.",
    "James and Mary argued; she won, and he admitted his mistake to her.",
    "Before Adam arrived, her sister called. He left his coat. Ruth kept it herself.",
]


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(TEXTS), st.integers(0, 2**64 - 1), st.integers(1, 30))
def test_mutant_properties(lexicon, table, text, seed, n):
    t = template_of(text, lexicon)
    ms = generate_mutants(t, lexicon, table, n, seed)
    assert len(ms.male) == len(ms.female) == n
    spans = [(p.start, p.end) for p in t.placeholders]
    for gender in Gender:
        group = ms.group(gender)
        assert len({m.tuples[0].name for m in group}) == len(group)
        foreign = set(table.rows[gender.other].values()) - set(table.rows[gender].values())
        for m in group:
            assert all(tp.gender is gender for tp in m.tuples)
            assert all(lexicon.gender_of(tp.name) is gender for tp in m.tuples)
            assert len({tp.name for tp in m.tuples}) == len(m.tuples)
            # no opposite-gender pronoun survives anywhere in the mutant
            words = {tok.text.lower() for tok in tokenize(m.text).tokens}
            assert not words & foreign
            # outside the placeholder spans the mutant is the original, verbatim
            assert re.fullmatch(span_pattern(text, spans), m.text)


def test_placeholder_fills_use_role_forms(lexicon, table):
    t = template_of("James hurt himself; his friend helped him.", lexicon)
    ms = generate_mutants(t, lexicon, table, 1, seed=0)
    (f,) = ms.female
    kinds = [p.kind for p in t.placeholders]
    assert kinds == [PlaceholderKind.NAME, PlaceholderKind.REFLEXIVE, PlaceholderKind.POSSESSIVE, PlaceholderKind.OBJECTIVE]
    assert f.text == f"{f.tuples[0].name} hurt herself; her friend helped her."
