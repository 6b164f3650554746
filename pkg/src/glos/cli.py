"""Batch command-line front end: every pipeline stage as a subcommand.

One binary, subcommand style.  Exit codes: 0 success, 1 usage error,
2 input error, 3 processing error.  Errors go to standard error with a
machine-readable ``error:<kind>:`` prefix; declared output files are
written atomically (temp file + rename), so a failed run never leaves a
partial artifact behind.
"""
from __future__ import annotations

import argparse
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .am import AcousticModel, flat_start, mixup, viterbi_train
from .align import align_long, force_align
from .diarize import diarize
from .dsp import load_wav, mfcc, vad_features
from .errors import GlosError
from .formats import (
    alignment_tiers,
    annotation_from_alignment,
    parse_textgrid,  # noqa: F401  (re-exported for scripting convenience)
    write_annotation_json,
    write_rttm,
    write_segments_text,
    write_textgrid,
)
from .g2p import G2P
from .g2p.lexicon import Lexicon
from .g2p.rules import RuleSet
from .kws import LIKELIHOOD_ORIGIN, background_scores, build_query, format_hits, search
from .synth import training_corpus, vad_dataset, write_dataset
from .vad import VadModel, vad_segment, vad_train
from . import corpus as corpus_mod

DEFAULT_MODEL_SEED = 2024

# Reference statistics of the full read-speech collection; `corpus validate`
# compares a manifest against these unless overridden by flags.
REFERENCE_STATS = {
    "speakers": 317,
    "sessions": 554,
    "tokens": 356674,
    "vocabulary": 46361,
}

# GlosError kinds that indicate a problem with what the user handed us, as
# opposed to a failure while computing.  Everything else exits 3.
_INPUT_KINDS = {
    "UnmappableGrapheme",
    "NoNucleus",
    "G2PError",
    "RuleFileError",
    "UnsupportedFormat",
    "CorruptFile",
    "ParseError",
    "InvalidTiers",
    "MissingAudio",
    "DuplicateSession",
    "TooFewSessions",
    "FingerprintMismatch",
    "DimensionMismatch",
    "RegionOutOfRange",
}

_TOKEN_STRIP = "\"'.,;:!?()[]{}„”«»‹›-–—…"


class _Parser(argparse.ArgumentParser):
    """argparse with the documented usage exit code (1, not argparse's 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error:Usage: {message}", file=sys.stderr)
        raise SystemExit(1)


# --- small plumbing ----------------------------------------------------------------


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _write_output(path: str | None, text: str) -> None:
    """Write to stdout, or atomically to a file (temp + rename)."""
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=str(target.parent) or ".",
                               prefix=target.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _save_atomic(save, target: str | Path) -> None:
    """Run a ``save(path)`` callback against a temp file, then rename."""
    target = Path(target)
    tmp = target.with_name(f"{target.name}.{os.getpid()}.tmp")
    try:
        save(tmp)
        os.replace(tmp, target)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def _cache_dir() -> Path:
    env = os.environ.get("GLOS_CACHE_DIR")
    if env:
        return Path(env)
    xdg = os.environ.get("XDG_CACHE_HOME")
    base = Path(xdg) if xdg else Path.home() / ".cache"
    return base / "glos"


def _acoustic_model(args) -> AcousticModel:
    if getattr(args, "model", None):
        return AcousticModel.load(args.model)
    path = _cache_dir() / f"acoustic-seed{DEFAULT_MODEL_SEED}.json"
    if path.exists():
        return AcousticModel.load(path)
    print("note: training default acoustic model (cached after first run)",
          file=sys.stderr)
    rng = np.random.default_rng(DEFAULT_MODEL_SEED)
    corpus, _ = training_corpus(rng, n_utterances=12)
    model = flat_start(corpus)
    viterbi_train(model, corpus, iterations=4)
    mixup(model, 2)
    viterbi_train(model, corpus, iterations=3)
    path.parent.mkdir(parents=True, exist_ok=True)
    _save_atomic(model.save, path)
    return model


def _vad_model(args, flag: str = "vad_model") -> VadModel:
    given = getattr(args, flag, None)
    if given:
        return VadModel.load(given)
    path = _cache_dir() / f"vad-seed{DEFAULT_MODEL_SEED}.json"
    if path.exists():
        return VadModel.load(path)
    print("note: training default VAD model (cached after first run)",
          file=sys.stderr)
    rng = np.random.default_rng(DEFAULT_MODEL_SEED)
    audio, labels = vad_dataset(rng, n_blocks=16)
    feats = vad_features(audio)
    model = vad_train(feats, labels[:feats.n_frames])
    path.parent.mkdir(parents=True, exist_ok=True)
    _save_atomic(model.save, path)
    return model


def _g2p_from(args) -> G2P:
    rules = getattr(args, "rules", None)
    lexicon = getattr(args, "lexicon", None)
    if rules is None and lexicon is None:
        return G2P.default()
    return G2P(
        RuleSet.parse(Path(rules).read_text(encoding="utf-8")) if rules else None,
        Lexicon.parse(Path(lexicon).read_text(encoding="utf-8")) if lexicon else None,
    )


# --- subcommands -------------------------------------------------------------------


def cmd_g2p(args) -> int:
    g2p = _g2p_from(args)
    text = _read_text(args.input)
    lines: list[str] = []
    if args.canonical:
        for raw in text.splitlines():
            if raw.strip():
                lines.append(" ".join(g2p.canonical(raw)))
    else:
        seen: list[str] = []
        for token in text.split():
            word = token.strip(_TOKEN_STRIP).lower()
            if word and word not in seen:
                seen.append(word)
        for word in seen:
            for pron in g2p.word(word):
                lines.append(word + "\t" + " ".join(pron))
    _write_output(args.output, "".join(line + "\n" for line in lines))
    return 0


def _alignment_outputs(args, alignment, sample_rate: int) -> None:
    grid = write_textgrid(alignment_tiers(alignment), xmax=alignment.duration)
    _write_output(args.output, grid)
    if args.json:
        doc = annotation_from_alignment(alignment, sample_rate,
                                        audio=str(args.audio))
        _write_output(args.json, write_annotation_json(doc))


def cmd_align(args) -> int:
    audio = load_wav(args.audio)
    model = _acoustic_model(args)
    alignment = force_align(mfcc(audio), _read_text(args.text), model,
                            use_sil=not args.no_sil)
    _alignment_outputs(args, alignment, audio.sample_rate)
    return 0


def cmd_align_long(args) -> int:
    audio = load_wav(args.audio)
    model = _acoustic_model(args)
    vad_model = VadModel.load(args.vad_model) if args.vad_model else None
    result = align_long(audio, _read_text(args.text), model,
                        vad_model=vad_model)
    _alignment_outputs(args, result.alignment, audio.sample_rate)
    if args.output not in (None, "-"):
        print(f"anchored_fraction={result.anchored_fraction:.3f} "
              f"low_confidence={str(result.low_confidence).lower()}")
    return 0


def cmd_vad(args) -> int:
    feats = vad_features(load_wav(args.audio))
    segments = vad_segment(feats, _vad_model(args, flag="model"))
    _write_output(args.output, write_segments_text(segments))
    if args.textgrid:
        tier = [(s.start, s.end, s.kind) for s in segments.segments]
        _write_output(args.textgrid,
                      write_textgrid([("activity", tier)], xmax=feats.duration))
    return 0


def cmd_diarize(args) -> int:
    audio = load_wav(args.audio)
    feats = mfcc(audio)
    speech = None
    if not args.no_vad:
        speech = vad_segment(vad_features(audio), _vad_model(args))
    turns = diarize(feats, speech)
    _write_output(args.output, write_rttm(turns, file_id=Path(args.audio).stem))
    if args.textgrid:
        tier = [(t.start, t.end, t.speaker) for t in turns]
        _write_output(args.textgrid,
                      write_textgrid([("speakers", tier)], xmax=feats.duration))
    return 0


def cmd_kws(args) -> int:
    g2p = G2P.default()
    keywords = [k.strip() for k in args.keywords.split(",") if k.strip()]
    model = _acoustic_model(args)
    feats = mfcc(load_wav(args.audio))
    background = background_scores(model, feats)
    theta = LIKELIHOOD_ORIGIN if args.theta is None else args.theta
    queries = [build_query(kw, g2p.lexicon, g2p) for kw in keywords]

    def scan(query):
        return search(feats, query, model, theta=theta, background=background)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            per_keyword = list(pool.map(scan, queries))
    else:
        per_keyword = [scan(q) for q in queries]
    hits = [hit for group in per_keyword for hit in group]
    _write_output(args.output, format_hits(hits))
    return 0


def cmd_train_am(args) -> int:
    rng = np.random.default_rng(args.seed)
    g2p = G2P.default()
    if args.manifest:
        manifest = corpus_mod.load_manifest(args.manifest)
        corpus = []
        for session in manifest.sessions:
            for item in session.items:
                if item.kind != "sentence":
                    continue
                feats = mfcc(load_wav(item.audio))
                corpus.append((feats, g2p.canonical(item.transcription)))
    else:
        corpus, _ = training_corpus(rng, n_utterances=args.utterances, g2p=g2p)
    model = flat_start(corpus)
    viterbi_train(model, corpus, iterations=args.iterations)
    if args.mixtures > 1:
        mixup(model, args.mixtures)
        viterbi_train(model, corpus, iterations=args.final_iterations)
    _save_atomic(model.save, args.output)
    return 0


def cmd_train_vad(args) -> int:
    rng = np.random.default_rng(args.seed)
    audio, labels = vad_dataset(rng, n_blocks=args.blocks)
    feats = vad_features(audio)
    model = vad_train(feats, labels[:feats.n_frames], recall_target=args.recall)
    if not model.converged:
        print("note: gradient descent hit the epoch limit before converging",
              file=sys.stderr)
    _save_atomic(model.save, args.output)
    return 0


def cmd_corpus_synth(args) -> int:
    manifest = write_dataset(args.out_dir, n_sessions=args.sessions,
                             sentences_per_session=args.sentences,
                             words_per_session=args.words, seed=args.seed)
    print(manifest)
    return 0


def cmd_corpus_stats(args) -> int:
    manifest = corpus_mod.load_manifest(args.manifest)
    s = manifest.stats
    for key, value in (("speakers", s.speakers), ("sessions", s.sessions),
                       ("tokens", s.tokens), ("vocabulary", s.vocabulary)):
        print(f"{key}\t{value}")
    print(f"hours\t{s.hours:.4f}")
    for note in manifest.warnings:
        print(f"warning: {note}", file=sys.stderr)
    return 0


def _manifest_tsv(manifest, out_dir: Path) -> str:
    rows = []
    for session in manifest.sessions:
        for item in session.items:
            rel = os.path.relpath(item.audio.resolve(), out_dir.resolve())
            rows.append("\t".join((session.session_id, session.speaker_id,
                                   item.kind, rel, item.transcription)))
    return "".join(row + "\n" for row in rows)


def cmd_corpus_split(args) -> int:
    manifest = corpus_mod.load_manifest(args.manifest)
    train, test = corpus_mod.split(manifest, test_fraction=args.test_fraction,
                                   seed=args.seed,
                                   speaker_disjoint=args.speaker_disjoint)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_output(str(out / "train.tsv"), _manifest_tsv(train, out))
    _write_output(str(out / "test.tsv"), _manifest_tsv(test, out))
    print(f"train\t{len(train.sessions)}\ntest\t{len(test.sessions)}")
    return 0


def cmd_corpus_validate(args) -> int:
    manifest = corpus_mod.load_manifest(args.manifest)
    expected = {
        "speakers": args.speakers,
        "sessions": args.sessions,
        "tokens": args.tokens,
        "vocabulary": args.vocabulary,
    }
    if args.hours is not None:
        expected["hours"] = args.hours
    report = corpus_mod.validate_stats(manifest, expected)
    for row in report:
        verdict = "MATCH" if row["match"] else "MISMATCH"
        print(f"{row['stat']}\t{row['expected']}\t{row['actual']}\t{verdict}")
    if args.strict and not all(row["match"] for row in report):
        return 3
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(storage=Path(args.storage), workers=args.jobs,
                           payload_limit=args.payload_limit,
                           auth_token=args.auth_token, model_seed=args.seed)
    uvicorn.run(create_app(config), host=args.host, port=args.port)
    return 0


# --- parser ------------------------------------------------------------------------


def _add_model_flag(parser) -> None:
    parser.add_argument("--model", metavar="FILE",
                        help="acoustic model JSON (default: cached self-trained)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="glos",
                     description="Polish speech processing toolkit")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("g2p", help="grapheme-to-phoneme conversion")
    p.add_argument("input", nargs="?", default="-",
                   help="text file ('-' for stdin)")
    p.add_argument("--canonical", action="store_true",
                   help="whole-line transcription with cross-word sandhi "
                        "(default: per-word lexicon lines)")
    p.add_argument("--rules", metavar="FILE", help="alternative rewrite rules")
    p.add_argument("--lexicon", metavar="FILE",
                   help="alternative exception lexicon")
    p.add_argument("-o", "--output", metavar="FILE")
    p.set_defaults(func=cmd_g2p)

    p = sub.add_parser("align", help="forced alignment of a transcript")
    p.add_argument("audio", help="16 kHz mono WAV file")
    p.add_argument("text", help="transcript text file ('-' for stdin)")
    p.add_argument("-o", "--output", metavar="FILE",
                   help="TextGrid output (default: stdout)")
    p.add_argument("--json", metavar="FILE", help="also write annotation JSON")
    p.add_argument("--no-sil", action="store_true",
                   help="disallow optional silence between words")
    _add_model_flag(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("align-long",
                       help="anchor-based alignment for long recordings")
    p.add_argument("audio")
    p.add_argument("text")
    p.add_argument("-o", "--output", metavar="FILE")
    p.add_argument("--json", metavar="FILE")
    p.add_argument("--vad-model", metavar="FILE",
                   help="speech detector used for chunking (default: energy)")
    _add_model_flag(p)
    p.set_defaults(func=cmd_align_long)

    p = sub.add_parser("vad", help="speech/nonspeech segmentation")
    p.add_argument("audio")
    p.add_argument("-o", "--output", metavar="FILE",
                   help="start/end/kind lines (default: stdout)")
    p.add_argument("--textgrid", metavar="FILE",
                   help="also write the segments as a TextGrid tier")
    p.add_argument("--model", metavar="FILE",
                   help="VAD model JSON (default: cached self-trained)")
    p.set_defaults(func=cmd_vad)

    p = sub.add_parser("diarize", help="speaker change detection + clustering")
    p.add_argument("audio")
    p.add_argument("-o", "--output", metavar="FILE",
                   help="RTTM lines (default: stdout)")
    p.add_argument("--textgrid", metavar="FILE")
    p.add_argument("--no-vad", action="store_true",
                   help="treat the whole file as speech")
    p.add_argument("--vad-model", metavar="FILE")
    p.set_defaults(func=cmd_diarize)

    p = sub.add_parser("kws", help="keyword search")
    p.add_argument("audio")
    p.add_argument("--keywords", required=True, metavar="W1,W2,...",
                   help="comma-separated list of words to find")
    p.add_argument("--theta", type=float, default=None,
                   help=f"per-frame score threshold in nats "
                        f"(default: {LIKELIHOOD_ORIGIN})")
    p.add_argument("--jobs", type=int, default=1, metavar="N",
                   help="scan keywords in parallel")
    p.add_argument("-o", "--output", metavar="FILE")
    _add_model_flag(p)
    p.set_defaults(func=cmd_kws)

    p = sub.add_parser("train-am", help="train a monophone acoustic model")
    p.add_argument("-o", "--output", required=True, metavar="FILE")
    p.add_argument("--manifest", metavar="FILE",
                   help="train on a corpus manifest instead of synthetic audio")
    p.add_argument("--seed", type=int, default=DEFAULT_MODEL_SEED)
    p.add_argument("--utterances", type=int, default=12)
    p.add_argument("--iterations", type=int, default=4)
    p.add_argument("--mixtures", type=int, default=2)
    p.add_argument("--final-iterations", type=int, default=3,
                   help="re-estimation passes after the mixture split")
    p.set_defaults(func=cmd_train_am)

    p = sub.add_parser("train-vad", help="train the speech/nonspeech classifier")
    p.add_argument("-o", "--output", required=True, metavar="FILE")
    p.add_argument("--seed", type=int, default=DEFAULT_MODEL_SEED)
    p.add_argument("--blocks", type=int, default=16,
                   help="alternating silence/speech blocks of training audio")
    p.add_argument("--recall", type=float, default=0.99,
                   help="frame recall the decision threshold must reach")
    p.set_defaults(func=cmd_train_vad)

    p = sub.add_parser("corpus", help="manifest tools")
    csub = p.add_subparsers(dest="corpus_command", metavar="ACTION")
    csub.required = True

    c = csub.add_parser("synth", help="generate a small synthetic dataset")
    c.add_argument("out_dir")
    c.add_argument("--sessions", type=int, default=3)
    c.add_argument("--sentences", type=int, default=4)
    c.add_argument("--words", type=int, default=2)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_corpus_synth)

    c = csub.add_parser("stats", help="validate and summarize a manifest")
    c.add_argument("manifest")
    c.set_defaults(func=cmd_corpus_stats)

    c = csub.add_parser("split", help="session-granular train/test split")
    c.add_argument("manifest")
    c.add_argument("--out-dir", required=True)
    c.add_argument("--test-fraction", type=float, default=0.1)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--speaker-disjoint", action="store_true",
                   help="keep every speaker entirely on one side")
    c.set_defaults(func=cmd_corpus_split)

    c = csub.add_parser("validate",
                        help="compare manifest statistics against expectations")
    c.add_argument("manifest")
    c.add_argument("--speakers", type=int, default=REFERENCE_STATS["speakers"])
    c.add_argument("--sessions", type=int, default=REFERENCE_STATS["sessions"])
    c.add_argument("--tokens", type=int, default=REFERENCE_STATS["tokens"])
    c.add_argument("--vocabulary", type=int,
                   default=REFERENCE_STATS["vocabulary"])
    c.add_argument("--hours", type=float, default=None)
    c.add_argument("--strict", action="store_true",
                   help="exit 3 when any statistic mismatches")
    c.set_defaults(func=cmd_corpus_validate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--storage", default="glos-storage",
                   help="job log + artifact directory")
    p.add_argument("--jobs", type=int, default=2, help="worker threads")
    p.add_argument("--payload-limit", type=int, default=500 * 1024 * 1024)
    p.add_argument("--auth-token", default=None)
    p.add_argument("--seed", type=int, default=DEFAULT_MODEL_SEED,
                   help="seed for the self-trained default models")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args) or 0)
    except GlosError as exc:
        print(f"error:{exc.kind}: {exc}", file=sys.stderr)
        return 2 if exc.kind in _INPUT_KINDS else 3
    except FileNotFoundError as exc:
        print(f"error:MissingInput: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error:IO: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error:Usage: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # pragma: no cover - defensive catch-all
        print(f"error:InternalError: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
