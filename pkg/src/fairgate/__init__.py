"""Runtime gender-bias monitoring for binary sentiment-analysis services."""
from fairgate.extraction import ReplacementTuple, Template, extract_template, render, tokenize
from fairgate.lexicon import DEFAULT_PRONOUNS, Gender, NameLexicon, PronounRole, classify_token, default_lexicon, load_lexicon
from fairgate.mutation import MutantSet, checkable, generate_mutants
from fairgate.verifier import (
    FairnessOutcome,
    Sentiment,
    Stage,
    Verdict,
    Verifier,
    VerifierConfig,
    check_distributional_fairness,
    verify,
    verify_full,
)

__all__ = [
    "DEFAULT_PRONOUNS", "FairnessOutcome", "Gender", "MutantSet", "NameLexicon", "PronounRole",
    "ReplacementTuple", "Sentiment", "Stage", "Template", "Verdict", "Verifier", "VerifierConfig",
    "check_distributional_fairness", "checkable", "classify_token", "default_lexicon",
    "extract_template", "generate_mutants", "load_lexicon", "render", "tokenize", "verify", "verify_full",
]
