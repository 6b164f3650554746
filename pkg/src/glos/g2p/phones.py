"""Polish phone inventory.

The inventory is a modified SAMPA alphabet where palatal and other
"extra" sounds get multi-character symbols (``ni``, ``tsi``, ``si`` ...).
The authoritative machine-readable table ships with the package as
``data/phones.tsv``; this module loads it once at import time.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

__all__ = [
    "Phone", "INVENTORY", "PAIR", "VOWELS", "OBSTRUENTS", "SONORANTS",
    "is_vowel", "is_obstruent", "is_voiced_obstruent", "pair", "with_voicing",
]

VOICINGS = ("voiced", "voiceless", "sonorant", "vowel")
CLASSES = ("vowel", "plosive", "fricative", "affricate", "nasal", "approximant")


@dataclass(frozen=True)
class Phone:
    """One symbol of the phone inventory."""

    symbol: str
    voicing: str   # voiced | voiceless | sonorant | vowel
    cls: str       # vowel | plosive | fricative | affricate | nasal | approximant
    pair: str | None = None  # opposite-voicing partner for obstruents


def _load_inventory() -> dict[str, Phone]:
    text = (resources.files(__package__) / "data/phones.tsv").read_text("utf-8")
    inv: dict[str, Phone] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        sym, voicing, cls, mate = line.split("\t")
        if voicing not in VOICINGS or cls not in CLASSES:
            raise ValueError(f"bad phone table row: {raw!r}")
        inv[sym] = Phone(sym, voicing, cls, None if mate == "-" else mate)
    return inv


INVENTORY: dict[str, Phone] = _load_inventory()

PAIR: dict[str, str] = {p.symbol: p.pair for p in INVENTORY.values() if p.pair}
VOWELS = frozenset(p.symbol for p in INVENTORY.values() if p.cls == "vowel")
OBSTRUENTS = frozenset(
    p.symbol for p in INVENTORY.values() if p.voicing in ("voiced", "voiceless")
)
SONORANTS = frozenset(
    p.symbol for p in INVENTORY.values() if p.voicing == "sonorant"
)


def is_vowel(symbol: str) -> bool:
    return symbol in VOWELS


def is_obstruent(symbol: str) -> bool:
    return symbol in OBSTRUENTS


def is_voiced_obstruent(symbol: str) -> bool:
    return INVENTORY[symbol].voicing == "voiced"


def pair(symbol: str) -> str:
    """Opposite-voicing partner of an obstruent (involutive)."""
    return PAIR[symbol]


def with_voicing(symbol: str, voiced: bool) -> str:
    """Return ``symbol`` adjusted to the requested voicing.

    Sonorants and vowels are returned unchanged; obstruents are swapped
    through the pair table when needed.
    """
    if symbol not in OBSTRUENTS:
        return symbol
    if is_voiced_obstruent(symbol) == voiced:
        return symbol
    return PAIR[symbol]
