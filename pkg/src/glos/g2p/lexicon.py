"""Exception lexicon with per-word pronunciation variants."""

from __future__ import annotations

from importlib import resources

from ..errors import RuleFileError
from .phones import INVENTORY


class Lexicon:
    """Maps lowercase words to one or more pronunciations.

    Lookup always wins over the rewrite rules, so the lexicon is the
    place for loanwords and for morpheme boundaries that fool the
    digraph rules ("odznaka", "nauka").
    """

    def __init__(self, entries: dict[str, list[tuple[str, ...]]] | None = None):
        self.entries = entries or {}

    @classmethod
    def parse(cls, text: str) -> "Lexicon":
        entries: dict[str, list[tuple[str, ...]]] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 2:
                raise RuleFileError("expected 'word phones...'", lineno)
            word, phones = parts[0].lower(), tuple(parts[1:])
            for sym in phones:
                if sym not in INVENTORY:
                    raise RuleFileError(f"unknown phone {sym!r}", lineno)
            variants = entries.setdefault(word, [])
            if phones not in variants:
                variants.append(phones)
        return cls(entries)

    def get(self, word: str) -> list[tuple[str, ...]] | None:
        return self.entries.get(word.lower())

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def load_default_lexicon() -> Lexicon:
    text = (resources.files(__package__) / "data/exceptions.lex").read_text("utf-8")
    return Lexicon.parse(text)
