"""Word- and phrase-level transcription.

``transcribe_word`` produces the underlying pronunciation(s) of a single
word: exception lexicon first, rewrite rules otherwise, followed by the
within-word regressive voicing pass (obstruent clusters agree with their
last member, e.g. "przedstawić" -> p S e t s t a v i tsi).

``transcribe_canonical`` transcribes running text the way a careful
speaker joins words: single-consonant prepositions (w, z) attach to the
next word, a word-final single obstruent takes the voicing of the next
word's initial obstruent, and every phrase ends voiceless.  Punctuation
splits phrases; sandhi never crosses a phrase boundary.
"""

from __future__ import annotations

import re

from ..errors import G2PError
from .lexicon import Lexicon
from .phones import is_obstruent, is_voiced_obstruent, with_voicing
from .rules import RuleSet

# Letters of the Polish alphabet (plus apostrophe for inflected loanwords).
_WORD_RE = re.compile(r"[a-ząćęłńóśźż']+")
_PREPOSITIONS = {"w", "z"}


def tokenize(text: str) -> list[list[str]]:
    """Split text into phrases of lowercase word tokens.

    Any character that is neither a word character nor whitespace acts
    as a phrase boundary, except the hyphen, which merely separates the
    parts of a compound without closing the phrase.
    """
    phrases: list[list[str]] = []
    current: list[str] = []
    pos = 0
    text = text.lower()
    for match in _WORD_RE.finditer(text):
        between = text[pos:match.start()]
        if any(not ch.isspace() and ch != "-" for ch in between):
            if current:
                phrases.append(current)
                current = []
        current.append(match.group())
        pos = match.end()
    # Trailing punctuation only closes the last phrase.
    if current:
        phrases.append(current)
    return phrases


def regressive_voicing(phones: list[str]) -> list[str]:
    """Spread obstruent voicing right-to-left through clusters."""
    out = list(phones)
    for i in range(len(out) - 2, -1, -1):
        if is_obstruent(out[i]) and is_obstruent(out[i + 1]):
            out[i] = with_voicing(out[i], is_voiced_obstruent(out[i + 1]))
    return out


def transcribe_word(word: str, rules: RuleSet, lexicon: Lexicon) -> list[list[str]]:
    """All pronunciations of one word, primary first.

    Raises UnmappableGrapheme for letters no rule covers and G2PError
    for an empty token.
    """
    word = word.lower()
    if not word:
        raise G2PError("empty word")
    hit = lexicon.get(word)
    if hit is not None:
        raw = [list(p) for p in hit]
    else:
        raw = rules.apply(word)
    variants: list[list[str]] = []
    for pron in raw:
        pron = regressive_voicing(pron)
        if pron not in variants:
            variants.append(pron)
    return variants


def _attach_prepositions(words: list[str], prons: list[list[str]]
                         ) -> tuple[list[str], list[list[str]]]:
    """Glue single-consonant prepositions onto the following word."""
    out_words: list[str] = []
    out_prons: list[list[str]] = []
    pending_word = ""
    pending_phones: list[str] = []
    for idx, (word, pron) in enumerate(zip(words, prons)):
        if word in _PREPOSITIONS and idx < len(words) - 1:
            pending_word += word + " "
            pending_phones.extend(pron)
            continue
        if pending_phones:
            out_words.append(pending_word + word)
            out_prons.append(regressive_voicing(pending_phones + pron))
            pending_word, pending_phones = "", []
        else:
            out_words.append(word)
            out_prons.append(pron)
    if pending_phones:  # phrase ended on a bare preposition
        out_words.append(pending_word.strip())
        out_prons.append(pending_phones)
    return out_words, out_prons


def apply_sandhi(phrase_prons: list[list[str]]) -> list[list[str]]:
    """Cross-word voicing within one phrase, then phrase-final devoicing.

    A word-final obstruent assimilates to the next word's initial
    obstruent only when it stands alone (not preceded by another
    obstruent); final clusters keep their own voicing, which matches how
    "chrząszcz brzmi" keeps its voiceless ending.  The trailing
    obstruent run of the whole phrase is devoiced.  The pass is
    idempotent.
    """
    prons = [list(p) for p in phrase_prons]
    for i in range(len(prons) - 1):
        a, b = prons[i], prons[i + 1]
        if not a or not b:
            continue
        if not is_obstruent(a[-1]) or not is_obstruent(b[0]):
            continue
        if len(a) >= 2 and is_obstruent(a[-2]):
            continue  # final cluster: leave as is
        a[-1] = with_voicing(a[-1], is_voiced_obstruent(b[0]))
    if prons:
        last = prons[-1]
        j = len(last)
        while j > 0 and is_obstruent(last[j - 1]):
            j -= 1
        for k in range(j, len(last)):
            last[k] = with_voicing(last[k], voiced=False)
    return prons


def transcribe_canonical(text: str, rules: RuleSet, lexicon: Lexicon) -> list[str]:
    """Transcribe running text into one flat phone sequence.

    Uses the primary pronunciation of every word, attaches w/z
    prepositions, and applies the sandhi pass per phrase.  Empty input
    yields an empty sequence.
    """
    result: list[str] = []
    for phrase in tokenize(text):
        prons = [transcribe_word(w, rules, lexicon)[0] for w in phrase]
        _, merged = _attach_prepositions(phrase, prons)
        for pron in apply_sandhi(merged):
            result.extend(pron)
    return result
