"""Context-sensitive letter-to-phone rewrite rules.

Rule files are plain UTF-8 text, one rule per line::

    LEFT | FOCUS | RIGHT -> OUTPUT[, ALTERNATIVE ...]

``FOCUS`` is the letter string consumed by the rule.  ``LEFT`` and
``RIGHT`` are optional context patterns made of space-separated atoms:
a literal letter string, a ``[class]`` reference, or ``#`` for the word
boundary.  ``OUTPUT`` is a space-separated list of phone symbols and may
be empty (the focus is deleted).  A comma introduces a marked
pronunciation variant.  Classes are declared before use::

    class vowel = a ą e ę i o ó u y

At each input position the engine picks, among all matching rules, the
one with the longest focus; ties are broken by file order.  The focus is
consumed and scanning continues after it, so rule outputs are never
re-scanned.  If no rule matches, ``UnmappableGrapheme`` is raised.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

from ..errors import RuleFileError, UnmappableGrapheme
from .phones import INVENTORY


@dataclass(frozen=True)
class RewriteRule:
    left: str
    focus: str
    right: str
    outputs: tuple[tuple[str, ...], ...]  # first entry is the primary output
    index: int                            # position in the file
    left_re: re.Pattern | None = field(default=None, compare=False)
    right_re: re.Pattern | None = field(default=None, compare=False)

    def matches(self, word: str, pos: int) -> bool:
        if not word.startswith(self.focus, pos):
            return False
        if self.left_re is not None and not self.left_re.search(word[:pos]):
            return False
        if self.right_re is not None:
            if not self.right_re.match(word[pos + len(self.focus):]):
                return False
        return True


def _compile_context(spec: str, classes: dict[str, list[str]],
                     side: str, lineno: int) -> re.Pattern | None:
    """Compile a context field into an anchored regex (None if empty)."""
    atoms = spec.split()
    if not atoms:
        return None
    parts: list[str] = []
    for i, atom in enumerate(atoms):
        if atom == "#":
            edge = (side == "left" and i == 0) or (side == "right" and i == len(atoms) - 1)
            if not edge:
                raise RuleFileError("'#' must sit at the outer edge of a context", lineno)
            parts.append(r"\A" if side == "left" else r"\Z")
        elif atom.startswith("[") and atom.endswith("]"):
            name = atom[1:-1]
            if name not in classes:
                raise RuleFileError(f"unknown class {name!r}", lineno)
            members = sorted(classes[name], key=len, reverse=True)
            parts.append("(?:" + "|".join(re.escape(m) for m in members) + ")")
        else:
            parts.append(re.escape(atom))
    body = "".join(parts)
    # The left context must touch the focus, the right context must start at it.
    return re.compile(body + "$") if side == "left" else re.compile(body)


class RuleSet:
    """An ordered collection of rewrite rules applied longest-focus-first."""

    def __init__(self, rules: list[RewriteRule], classes: dict[str, list[str]]):
        self.rules = rules
        self.classes = classes
        # Resolution order: longest focus wins, then file order.  Rules are
        # bucketed by the first focus letter so lookup stays cheap.
        self._ordered = sorted(rules, key=lambda r: (-len(r.focus), r.index))
        self._by_char: dict[str, list[RewriteRule]] = {}
        for rule in self._ordered:
            self._by_char.setdefault(rule.focus[0], []).append(rule)

    @classmethod
    def parse(cls, text: str) -> "RuleSet":
        classes: dict[str, list[str]] = {}
        rules: list[RewriteRule] = []
        seen: set[tuple[str, str, str]] = set()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("class "):
                try:
                    name, members = line[len("class "):].split("=", 1)
                except ValueError:
                    raise RuleFileError("malformed class declaration", lineno)
                classes[name.strip()] = members.split()
                continue
            if "->" not in line:
                raise RuleFileError("missing '->'", lineno)
            lhs, rhs = line.split("->", 1)
            fields = lhs.split("|")
            if len(fields) != 3:
                raise RuleFileError("expected 'LEFT | FOCUS | RIGHT -> OUTPUT'", lineno)
            left, focus, right = (f.strip() for f in fields)
            if not focus:
                raise RuleFileError("empty focus", lineno)
            key = (left, focus, right)
            if key in seen:
                raise RuleFileError(f"duplicate rule for {key}", lineno)
            seen.add(key)
            outputs: list[tuple[str, ...]] = []
            for alt in rhs.split(","):
                symbols = tuple(alt.split())
                for sym in symbols:
                    if sym not in INVENTORY:
                        raise RuleFileError(f"unknown phone {sym!r}", lineno)
                outputs.append(symbols)
            if not outputs:
                outputs = [()]
            rule = RewriteRule(
                left, focus, right, tuple(outputs), index=len(rules),
                left_re=_compile_context(left, classes, "left", lineno),
                right_re=_compile_context(right, classes, "right", lineno),
            )
            rules.append(rule)
        return cls(rules, classes)

    def apply(self, word: str) -> list[list[str]]:
        """Rewrite ``word`` and return all pronunciation variants.

        The first variant is the primary one.  Variants come from rules
        with marked alternatives and are expanded one site at a time (no
        cross products), keeping the list linear in the number of
        alternative outputs.
        """
        phones: list[str] = []
        # (start index in phones, primary length, alternative outputs)
        alt_sites: list[tuple[int, int, tuple[tuple[str, ...], ...]]] = []
        pos = 0
        while pos < len(word):
            rule = self._match_at(word, pos)
            if rule is None:
                raise UnmappableGrapheme(word[pos], pos, word)
            primary = rule.outputs[0]
            if len(rule.outputs) > 1:
                alt_sites.append((len(phones), len(primary), rule.outputs[1:]))
            phones.extend(primary)
            pos += len(rule.focus)
        variants = [list(phones)]
        for start, plen, alts in alt_sites:
            for alt in alts:
                variants.append(phones[:start] + list(alt) + phones[start + plen:])
        return variants

    def _match_at(self, word: str, pos: int) -> RewriteRule | None:
        for rule in self._by_char.get(word[pos], ()):
            if rule.matches(word, pos):
                return rule
        return None


def load_default_rules() -> RuleSet:
    text = (resources.files(__package__) / "data/rules.txt").read_text("utf-8")
    return RuleSet.parse(text)
