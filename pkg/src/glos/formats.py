"""Interchange formats: Praat TextGrid, annotation JSON, RTTM, segment text.

The TextGrid writer targets the long ("ooTextFile") dialect with a fixed
layout: 4-space indentation per nesting level, times printed as the shortest
string that parses back to the identical float (integers without a decimal
point), and quotes inside labels escaped by doubling.  The parser accepts
exactly that dialect, tolerating CRLF line endings and extra surrounding
whitespace, and reports errors with 1-based line numbers.

The annotation JSON is a small versioned schema for browser tooling: interval
levels whose items carry sample-accurate integer ``start``/``duration``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import InvalidTiers, InvariantViolation, ParseError

__all__ = [
    "Tier",
    "TextGridDoc",
    "write_textgrid",
    "parse_textgrid",
    "AnnotationItem",
    "AnnotationLevel",
    "AnnotationDoc",
    "annotation_from_alignment",
    "alignment_from_annotation",
    "write_annotation_json",
    "parse_annotation_json",
    "alignment_tiers",
    "write_rttm",
    "write_segments_text",
]

ANNOTATION_VERSION = 1


# --- TextGrid --------------------------------------------------------------------


@dataclass(frozen=True)
class Tier:
    name: str
    intervals: tuple[tuple[float, float, str], ...]


@dataclass(frozen=True)
class TextGridDoc:
    xmin: float
    xmax: float
    tiers: tuple[Tier, ...] = ()


def _num(value: float) -> str:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidTiers(f"non-finite time {value!r}")
    if value.is_integer():
        return str(int(value))
    return repr(value)


def _quoted(text: str) -> str:
    if "\n" in text or "\r" in text:
        raise InvalidTiers("labels must not contain line breaks")
    return '"' + text.replace('"', '""') + '"'


def _fill_gaps(intervals, xmin, xmax):
    """Insert empty-label intervals so the tier tiles [xmin, xmax] exactly."""
    out = []
    cursor = xmin
    for a, b, text in intervals:
        if a < cursor:
            raise InvalidTiers(
                f"interval [{a}, {b}] overlaps the previous one")
        if b < a:
            raise InvalidTiers(f"interval [{a}, {b}] has negative length")
        if a < xmin or b > xmax:
            raise InvalidTiers(
                f"interval [{a}, {b}] outside tier range [{xmin}, {xmax}]")
        if b == a:
            continue  # zero-length marks carry no span; not representable
        if a > cursor:
            out.append((cursor, a, ""))
        out.append((a, b, text))
        cursor = b
    if cursor < xmax:
        out.append((cursor, xmax, ""))
    if not out:
        out.append((xmin, xmax, ""))
    return out


def write_textgrid(tiers, xmin: float = 0.0, xmax: float | None = None) -> str:
    """Serialize tiers to long-dialect TextGrid text.

    ``tiers`` is a TextGridDoc or a list of ``(name, intervals)`` pairs with
    intervals as ``(xmin, xmax, label)`` triples, sorted, non-overlapping.
    Gaps are filled with empty-label intervals; zero-length intervals are
    dropped (the dialect cannot represent them).
    """
    if isinstance(tiers, TextGridDoc):
        doc_xmin, doc_xmax = tiers.xmin, tiers.xmax
        pairs = [(t.name, t.intervals) for t in tiers.tiers]
    else:
        pairs = [(name, list(ivs)) for name, ivs in tiers]
        doc_xmin = xmin
        if xmax is None:
            ends = [iv[1] for _, ivs in pairs for iv in ivs]
            xmax = max(ends) if ends else 1.0
        doc_xmax = xmax
    if not doc_xmax > doc_xmin:
        raise InvalidTiers(f"empty time range [{doc_xmin}, {doc_xmax}]")

    lines = [
        'File type = "ooTextFile"',
        'Object class = "TextGrid"',
        "",
        f"xmin = {_num(doc_xmin)}",
        f"xmax = {_num(doc_xmax)}",
        "tiers? <exists>",
        f"size = {len(pairs)}",
        "item []:",
    ]
    for i, (name, intervals) in enumerate(pairs, start=1):
        filled = _fill_gaps(sorted(intervals, key=lambda iv: (iv[0], iv[1])),
                            doc_xmin, doc_xmax)
        lines.append(f"    item [{i}]:")
        lines.append('        class = "IntervalTier"')
        lines.append(f"        name = {_quoted(name)}")
        lines.append(f"        xmin = {_num(doc_xmin)}")
        lines.append(f"        xmax = {_num(doc_xmax)}")
        lines.append(f"        intervals: size = {len(filled)}")
        for j, (a, b, text) in enumerate(filled, start=1):
            lines.append(f"        intervals [{j}]:")
            lines.append(f"            xmin = {_num(a)}")
            lines.append(f"            xmax = {_num(b)}")
            lines.append(f"            text = {_quoted(text)}")
    return "\n".join(lines) + "\n"


class _LineReader:
    def __init__(self, text: str):
        self.lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")
        self.pos = 0

    def next_content(self) -> tuple[int, str]:
        """(1-based line number, stripped content) of the next non-blank line."""
        while self.pos < len(self.lines):
            self.pos += 1
            stripped = self.lines[self.pos - 1].strip()
            if stripped:
                return self.pos, stripped
        raise ParseError("unexpected end of file", line=len(self.lines))


def _expect(reader: _LineReader, literal: str) -> None:
    line_no, content = reader.next_content()
    if content != literal:
        raise ParseError(f"expected {literal!r}, got {content!r}", line=line_no)


def _read_number(reader: _LineReader, key: str) -> float:
    line_no, content = reader.next_content()
    prefix = f"{key} = "
    if not content.startswith(prefix):
        raise ParseError(f"expected `{key} = ...`, got {content!r}",
                         line=line_no)
    try:
        return float(content[len(prefix):])
    except ValueError:
        raise ParseError(f"bad number in {content!r}", line=line_no) from None


def _read_int(reader: _LineReader, prefix: str) -> int:
    line_no, content = reader.next_content()
    if not content.startswith(prefix):
        raise ParseError(f"expected `{prefix}...`, got {content!r}",
                         line=line_no)
    try:
        return int(content[len(prefix):])
    except ValueError:
        raise ParseError(f"bad count in {content!r}", line=line_no) from None


def _read_string(reader: _LineReader, key: str) -> str:
    line_no, content = reader.next_content()
    prefix = f"{key} = "
    if not content.startswith(prefix):
        raise ParseError(f"expected `{key} = \"...\"`, got {content!r}",
                         line=line_no)
    raw = content[len(prefix):].strip()
    if len(raw) < 2 or not raw.startswith('"') or not raw.endswith('"'):
        raise ParseError(f"expected a quoted string in {content!r}",
                         line=line_no)
    return raw[1:-1].replace('""', '"')


def _check_tiling(tier: Tier, xmin: float, xmax: float) -> None:
    ivs = tier.intervals
    if not ivs:
        raise InvariantViolation(f"tier {tier.name!r} has no intervals")
    if ivs[0][0] != xmin or ivs[-1][1] != xmax:
        raise InvariantViolation(
            f"tier {tier.name!r} does not span [{xmin}, {xmax}]")
    for (a0, a1, _), (b0, b1, _) in zip(ivs, ivs[1:]):
        if a1 > b0:
            raise InvariantViolation(
                f"tier {tier.name!r}: intervals [{a0}, {a1}] and "
                f"[{b0}, {b1}] overlap")
        if a1 < b0:
            raise InvariantViolation(
                f"tier {tier.name!r}: gap between {a1} and {b0}")
    for a, b, _ in ivs:
        if not b > a:
            raise InvariantViolation(
                f"tier {tier.name!r}: empty interval at {a}")


def parse_textgrid(text: str) -> TextGridDoc:
    """Parse long-dialect TextGrid text into a validated document."""
    reader = _LineReader(text)
    line_no, header = reader.next_content()
    if header != 'File type = "ooTextFile"':
        raise ParseError("not an ooTextFile TextGrid", line=line_no)
    _expect(reader, 'Object class = "TextGrid"')
    xmin = _read_number(reader, "xmin")
    xmax = _read_number(reader, "xmax")
    line_no, marker = reader.next_content()
    if marker == "tiers? <absent>":
        return TextGridDoc(xmin, xmax, ())
    if marker != "tiers? <exists>":
        raise ParseError(f"expected tiers marker, got {marker!r}", line=line_no)
    size = _read_int(reader, "size = ")
    _expect(reader, "item []:")
    tiers = []
    for i in range(1, size + 1):
        _expect(reader, f"item [{i}]:")
        line_no, klass = reader.next_content()
        if klass != 'class = "IntervalTier"':
            raise ParseError(f"unsupported tier class: {klass!r}", line=line_no)
        name = _read_string(reader, "name")
        t_xmin = _read_number(reader, "xmin")
        t_xmax = _read_number(reader, "xmax")
        if (t_xmin, t_xmax) != (xmin, xmax):
            raise InvariantViolation(
                f"tier {name!r} range [{t_xmin}, {t_xmax}] differs from "
                f"document range [{xmin}, {xmax}]")
        n = _read_int(reader, "intervals: size = ")
        intervals = []
        for j in range(1, n + 1):
            _expect(reader, f"intervals [{j}]:")
            a = _read_number(reader, "xmin")
            b = _read_number(reader, "xmax")
            label = _read_string(reader, "text")
            intervals.append((a, b, label))
        tier = Tier(name, tuple(intervals))
        _check_tiling(tier, xmin, xmax)
        tiers.append(tier)
    return TextGridDoc(xmin, xmax, tuple(tiers))


# --- annotation JSON -------------------------------------------------------------


@dataclass(frozen=True)
class AnnotationItem:
    label: str
    start: int        # samples
    duration: int     # samples
    score: float | None = None


@dataclass(frozen=True)
class AnnotationLevel:
    name: str
    items: tuple[AnnotationItem, ...]
    type: str = "interval"


@dataclass(frozen=True)
class AnnotationDoc:
    sample_rate: int
    levels: tuple[AnnotationLevel, ...]
    audio: str = ""
    version: int = ANNOTATION_VERSION


def annotation_from_alignment(alignment, sample_rate: int,
                              audio: str = "") -> AnnotationDoc:
    """Word and phone tiers with sample-accurate integer spans."""

    def to_items(intervals):
        items = []
        for iv in intervals:
            start = round(iv.start * sample_rate)
            end = round(iv.end * sample_rate)
            items.append(AnnotationItem(iv.label, start, end - start,
                                        iv.score))
        return tuple(items)

    return AnnotationDoc(
        sample_rate=sample_rate,
        levels=(
            AnnotationLevel("words", to_items(alignment.words)),
            AnnotationLevel("phones", to_items(alignment.phones)),
        ),
        audio=audio,
    )


def write_annotation_json(doc: AnnotationDoc) -> str:
    payload = {
        "version": doc.version,
        "sample_rate": doc.sample_rate,
        "audio": doc.audio,
        "levels": [
            {
                "name": level.name,
                "type": level.type,
                "items": [
                    {
                        "label": item.label,
                        "start": item.start,
                        "duration": item.duration,
                        **({"score": item.score}
                           if item.score is not None else {}),
                    }
                    for item in level.items
                ],
            }
            for level in doc.levels
        ],
    }
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def parse_annotation_json(text: str) -> AnnotationDoc:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(payload, dict) or payload.get("version") != ANNOTATION_VERSION:
        raise ParseError(
            f"unsupported annotation version {payload.get('version')!r}"
            if isinstance(payload, dict) else "annotation root must be an object")
    try:
        levels = []
        for level in payload["levels"]:
            items = tuple(
                AnnotationItem(str(i["label"]), int(i["start"]),
                               int(i["duration"]),
                               i.get("score"))
                for i in level["items"]
            )
            levels.append(AnnotationLevel(str(level["name"]), items,
                                          str(level.get("type", "interval"))))
        return AnnotationDoc(int(payload["sample_rate"]), tuple(levels),
                             str(payload.get("audio", "")),
                             int(payload["version"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed annotation document: {exc}") from None


# --- plain-text emitters ----------------------------------------------------------


def alignment_from_annotation(doc: AnnotationDoc, duration: float | None = None):
    """Rebuild an Alignment from its annotation document.

    Times come back as ``samples / sample_rate``; each phone is owned by the
    word whose span contains its midpoint.
    """
    from .align import AlignedInterval, Alignment  # local: avoid import cycle

    def intervals(name):
        for level in doc.levels:
            if level.name == name:
                return [
                    AlignedInterval(i.label, i.start / doc.sample_rate,
                                    (i.start + i.duration) / doc.sample_rate,
                                    0.0 if i.score is None else i.score)
                    for i in level.items
                ]
        raise ParseError(f"annotation document has no {name!r} level")

    words = intervals("words")
    phones = intervals("phones")
    owners = []
    for ph in phones:
        mid = (ph.start + ph.end) / 2
        owner = next(
            (k for k, w in enumerate(words)
             if w.start <= mid < w.end or (w.start == mid == w.end)),
            None)
        if owner is None:
            if ph.label != "sil":
                raise ParseError(
                    f"phone at {ph.start} not contained in any word")
            owner = -1
        owners.append(owner)
    if duration is None:
        duration = max((w.end for w in words), default=0.0)
    return Alignment(words, phones, duration, owners)


def alignment_tiers(alignment):
    """(name, intervals) pairs ready for the TextGrid writer."""
    return [
        ("words", [(iv.start, iv.end, iv.label) for iv in alignment.words]),
        ("phones", [(iv.start, iv.end, iv.label) for iv in alignment.phones]),
    ]


def write_rttm(segments, file_id: str = "audio") -> str:
    """`SPEAKER <file> 1 <start> <dur> <spk>` lines for speaker segments."""
    lines = [
        f"SPEAKER {file_id} 1 {seg.start:.3f} {seg.end - seg.start:.3f} "
        f"{seg.speaker}"
        for seg in segments
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def write_segments_text(segments) -> str:
    """`start<TAB>end<TAB>kind` lines for speech/nonspeech segments."""
    lines = [f"{seg.start:.3f}\t{seg.end:.3f}\t{seg.kind}"
             for seg in segments.segments]
    return "\n".join(lines) + ("\n" if lines else "")
