"""Phonological syllabification (maximal onset)."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import NoNucleus
from .phones import INVENTORY, is_vowel

# Sonority ranks used to decide which consonant clusters may open a
# syllable: obstruents < nasals < liquids < glides.
_SONORITY = {"plosive": 1, "fricative": 1, "affricate": 1, "nasal": 2}
_SONORITY_BY_SYMBOL = {"l": 3, "r": 3, "w": 4, "j": 4}


def _sonority(symbol: str) -> int:
    try:
        return _SONORITY_BY_SYMBOL.get(symbol) or _SONORITY[INVENTORY[symbol].cls]
    except KeyError:
        raise KeyError(f"unknown phone {symbol!r}") from None


def legal_onset(cluster: tuple[str, ...]) -> bool:
    """True if the cluster may start a syllable.

    Sonority must not decrease towards the nucleus and identical
    neighbours (geminates) are ruled out.
    """
    for a, b in zip(cluster, cluster[1:]):
        if a == b or _sonority(a) > _sonority(b):
            return False
    return True


@dataclass(frozen=True)
class Syllable:
    onset: tuple[str, ...]
    nucleus: str
    coda: tuple[str, ...]

    @property
    def phones(self) -> tuple[str, ...]:
        return self.onset + (self.nucleus,) + self.coda


def syllabify(phones: list[str] | tuple[str, ...]) -> list[Syllable]:
    """Split a pronunciation into syllables.

    Each vowel is a nucleus.  Consonants between two nuclei go to the
    following syllable's onset as long as the onset stays legal
    (maximal onset); the rest become the previous coda.  Word-edge
    consonants always stay with the nearest syllable.  Raises NoNucleus
    when the sequence contains no vowel.
    """
    phones = list(phones)
    nuclei = [i for i, p in enumerate(phones) if is_vowel(p)]
    if not nuclei:
        raise NoNucleus(f"no vowel in {' '.join(phones) or '(empty)'}")
    syllables: list[Syllable] = []
    onset_start = 0
    for k, nucleus_at in enumerate(nuclei):
        onset = tuple(phones[onset_start:nucleus_at])
        if k + 1 < len(nuclei):
            cluster = phones[nucleus_at + 1:nuclei[k + 1]]
            split = 0
            for cand in range(len(cluster)):
                if legal_onset(tuple(cluster[cand:])):
                    split = cand
                    break
            else:
                split = len(cluster)
            coda = tuple(cluster[:split])
            onset_start = nucleus_at + 1 + split
        else:
            coda = tuple(phones[nucleus_at + 1:])
        syllables.append(Syllable(onset, phones[nucleus_at], coda))
    return syllables
