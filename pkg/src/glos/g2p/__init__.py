"""Grapheme-to-phoneme conversion for Polish.

The public surface is the :class:`G2P` facade plus the underlying
pieces (rule engine, lexicon, phone inventory, syllabifier) for callers
that need them individually.
"""

from __future__ import annotations

from . import phones
from .lexicon import Lexicon, load_default_lexicon
from .phones import INVENTORY, Phone
from .rules import RuleSet, load_default_rules
from .syllables import Syllable, legal_onset, syllabify
from .transcribe import (
    apply_sandhi,
    regressive_voicing,
    tokenize,
    transcribe_canonical,
    transcribe_word,
)

__all__ = [
    "G2P", "Lexicon", "RuleSet", "Phone", "Syllable", "INVENTORY",
    "load_default_rules", "load_default_lexicon", "tokenize",
    "transcribe_word", "transcribe_canonical", "apply_sandhi",
    "regressive_voicing", "syllabify", "legal_onset", "phones",
]

_default: "G2P | None" = None


class G2P:
    """Bundles a rule set and a lexicon behind simple methods."""

    def __init__(self, rules: RuleSet | None = None, lexicon: Lexicon | None = None):
        self.rules = rules or load_default_rules()
        self.lexicon = lexicon or load_default_lexicon()

    @classmethod
    def default(cls) -> "G2P":
        """Shared instance with the packaged rules and lexicon."""
        global _default
        if _default is None:
            _default = cls()
        return _default

    def word(self, word: str) -> list[list[str]]:
        return transcribe_word(word, self.rules, self.lexicon)

    def canonical(self, text: str) -> list[str]:
        return transcribe_canonical(text, self.rules, self.lexicon)

    def syllabify(self, pron: list[str] | tuple[str, ...]) -> list[Syllable]:
        return syllabify(pron)
