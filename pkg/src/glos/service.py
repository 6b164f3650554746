"""Asynchronous job-based HTTP service exposing every pipeline tool.

Jobs are submitted as multipart uploads, run on a bounded worker pool, and
leave durable traces: an append-only ``jobs.jsonl`` log of record snapshots
plus a content-addressed artifact directory (files named by the SHA-256 of
their bytes).  On restart the log is replayed; jobs caught mid-run are
re-queued, so a crash never loses accepted work.

Default acoustic and speech-activity models are trained once, on first use,
from the built-in synthetic corpus and cached under the storage directory —
the service is fully self-contained.
"""

from __future__ import annotations

import json
import secrets
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass
from hashlib import sha256
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from starlette.datastructures import UploadFile

from .align import align_long, realign_region, words_in_region
from .am import AcousticModel, flat_start, mixup, viterbi_train
from .diarize import diarize
from .dsp import load_wav, mfcc, vad_features
from .errors import (
    BadInputManifest,
    G2PError,
    GlosError,
    PayloadTooLarge,
    RegionOutOfRange,
    UnknownJob,
)
from .formats import (
    alignment_from_annotation,
    alignment_tiers,
    annotation_from_alignment,
    parse_annotation_json,
    write_annotation_json,
    write_rttm,
    write_segments_text,
    write_textgrid,
)
from .g2p import G2P
from .kws import (
    LIKELIHOOD_ORIGIN,
    background_scores,
    build_query,
    format_hits,
    search,
)
from .synth import training_corpus, vad_dataset
from .vad import VadModel, vad_segment, vad_train

__all__ = ["ServiceConfig", "JobStore", "Runtime", "create_app"]

TOOLS = ("g2p", "align", "vad", "diarize", "kws", "train", "realign")

# Input parts each tool requires when submitted through POST /jobs.
# ("realign" jobs are created internally by the realign endpoint.)
REQUIRED_INPUTS = {
    "g2p": {"text"},
    "align": {"audio", "transcript"},
    "vad": {"audio"},
    "diarize": {"audio"},
    "kws": {"audio", "keywords"},
    "train": set(),
}

MEDIA_TYPES = {
    ".TextGrid": "text/plain; charset=utf-8",
    ".json": "application/json",
    ".txt": "text/plain; charset=utf-8",
    ".rttm": "text/plain; charset=utf-8",
    ".wav": "audio/wav",
}


def _media_type(name: str) -> str:
    for suffix, media in MEDIA_TYPES.items():
        if name.endswith(suffix):
            return media
    return "application/octet-stream"


@dataclass(frozen=True)
class ServiceConfig:
    storage: Path
    workers: int = 2
    payload_limit: int = 500 * 1024 * 1024
    auth_token: str | None = None
    model_seed: int = 2024


class JobStore:
    """Durable job records: replayed JSONL log + content-addressed artifacts."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "artifacts").mkdir(exist_ok=True)
        self.log_path = self.root / "jobs.jsonl"
        self._lock = threading.Lock()
        self._jobs: dict[str, dict] = {}
        self._replay()

    def _replay(self) -> None:
        if not self.log_path.exists():
            return
        for line in self.log_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                record = json.loads(line)
                self._jobs[record["id"]] = record
        # Jobs that were running when the previous process died restart
        # from the queue; their tools are pure so re-running is safe.
        for record in self._jobs.values():
            if record["state"] == "running":
                record["state"] = "queued"
                self._append(record)

    def _append(self, record: dict) -> None:
        with self.log_path.open("a", encoding="utf-8") as f:
            f.write(json.dumps(record, ensure_ascii=False) + "\n")

    # -- artifacts ----------------------------------------------------------

    def put_artifact(self, content: bytes, name: str) -> dict:
        digest = sha256(content).hexdigest()
        path = self.root / "artifacts" / digest
        if not path.exists():
            tmp = path.with_suffix(".tmp" + secrets.token_hex(4))
            tmp.write_bytes(content)
            tmp.rename(path)
        return {"sha256": digest, "size": len(content),
                "media_type": _media_type(name)}

    def artifact_path(self, ref: dict) -> Path:
        return self.root / "artifacts" / ref["sha256"]

    def get_artifact(self, ref: dict) -> bytes:
        return self.artifact_path(ref).read_bytes()

    # -- records --------------------------------------------------------------

    def create(self, tool: str, inputs: dict, params: dict) -> dict:
        record = {
            "id": secrets.token_hex(8),
            "tool": tool,
            "state": "queued",
            "inputs": inputs,
            "params": params,
            "results": {},
            "error": None,
            "created": time.time(),
            "started": None,
            "finished": None,
        }
        with self._lock:
            self._jobs[record["id"]] = record
            self._append(record)
        return dict(record)

    def get(self, job_id: str) -> dict:
        with self._lock:
            record = self._jobs.get(job_id)
            if record is None:
                raise UnknownJob(f"no job {job_id!r}")
            return dict(record)

    def claim(self, job_id: str) -> bool:
        """queued → running; False if someone else already claimed it."""
        with self._lock:
            record = self._jobs.get(job_id)
            if record is None or record["state"] != "queued":
                return False
            record["state"] = "running"
            record["started"] = time.time()
            self._append(record)
            return True

    def finish(self, job_id: str, results: dict | None = None,
               error: str | None = None) -> None:
        with self._lock:
            record = self._jobs[job_id]
            if record["state"] != "running":
                raise ValueError(
                    f"job {job_id} is {record['state']}, not running")
            record["state"] = "failed" if error is not None else "done"
            record["error"] = error
            record["results"] = results or {}
            record["finished"] = time.time()
            self._append(record)

    def queued_ids(self) -> list[str]:
        with self._lock:
            return [r["id"] for r in self._jobs.values()
                    if r["state"] == "queued"]


class Runtime:
    """Shared models, the worker pool and the tool implementations."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.store = JobStore(config.storage)
        self.g2p = G2P.default()
        self.executor = ThreadPoolExecutor(max_workers=config.workers)
        self._model_lock = threading.Lock()
        self._am: AcousticModel | None = None
        self._vad: VadModel | None = None

    # -- default models -------------------------------------------------------

    def acoustic_model(self) -> AcousticModel:
        with self._model_lock:
            if self._am is None:
                path = self.store.root / "models" / "acoustic.json"
                if path.exists():
                    self._am = AcousticModel.load(path)
                else:
                    self._am = self._train_am()
                    path.parent.mkdir(exist_ok=True)
                    self._am.save(path)
            return self._am

    def _train_am(self) -> AcousticModel:
        rng = np.random.default_rng(self.config.model_seed)
        corpus, _ = training_corpus(rng, n_utterances=12, g2p=self.g2p)
        model = flat_start(corpus)
        viterbi_train(model, corpus, iterations=4)
        mixup(model, 2)
        viterbi_train(model, corpus, iterations=3)
        return model

    def vad_model(self) -> VadModel:
        with self._model_lock:
            if self._vad is None:
                path = self.store.root / "models" / "vad.json"
                if path.exists():
                    self._vad = VadModel.load(path)
                else:
                    rng = np.random.default_rng(self.config.model_seed)
                    audio, labels = vad_dataset(rng, n_blocks=16, g2p=self.g2p)
                    feats = vad_features(audio)
                    self._vad = vad_train(feats, labels[:feats.n_frames])
                    path.parent.mkdir(exist_ok=True)
                    self._vad.save(path)
            return self._vad

    # -- job execution ----------------------------------------------------------

    def enqueue(self, job_id: str) -> None:
        self.executor.submit(self._run, job_id)

    def resume(self) -> None:
        for job_id in self.store.queued_ids():
            self.enqueue(job_id)

    def _run(self, job_id: str) -> None:
        if not self.store.claim(job_id):
            return
        record = self.store.get(job_id)
        runner = getattr(self, f"_tool_{record['tool']}")
        try:
            results = runner(record)
            self.store.finish(job_id, results=results)
        except GlosError as exc:
            self.store.finish(job_id, error=f"{exc.kind}: {exc}")
        except Exception as exc:  # noqa: BLE001 - job isolation boundary
            self.store.finish(job_id, error=f"InternalError: {exc}")

    def _save(self, content: str | bytes, name: str) -> dict:
        if isinstance(content, str):
            content = content.encode("utf-8")
        return self.store.put_artifact(content, name)

    def _input_text(self, record: dict, name: str) -> str:
        raw = self.store.get_artifact(record["inputs"][name])
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            raise G2PError(f"input {name!r} is not UTF-8 text") from None

    def _input_audio(self, record: dict, name: str = "audio"):
        return load_wav(self.store.artifact_path(record["inputs"][name]))

    # -- tools ------------------------------------------------------------------

    def _tool_g2p(self, record: dict) -> dict:
        text = self._input_text(record, "text")
        lines = [" ".join(self.g2p.canonical(line))
                 for line in text.splitlines() if line.strip()]
        return {"phonemes.txt": self._save("\n".join(lines) + "\n",
                                           "phonemes.txt")}

    def _align_artifacts(self, alignment, low_confidence=False,
                         anchored_fraction=1.0) -> dict:
        doc = annotation_from_alignment(alignment, 16000)
        textgrid = write_textgrid(alignment_tiers(alignment),
                                  xmax=alignment.duration)
        meta = json.dumps({
            "low_confidence": bool(low_confidence),
            "anchored_fraction": anchored_fraction,
        }) + "\n"
        return {
            "alignment.TextGrid": self._save(textgrid, "alignment.TextGrid"),
            "alignment.json": self._save(write_annotation_json(doc),
                                         "alignment.json"),
            "meta.json": self._save(meta, "meta.json"),
        }

    def _tool_align(self, record: dict) -> dict:
        audio = self._input_audio(record)
        text = self._input_text(record, "transcript")
        result = align_long(audio, text, self.acoustic_model(), self.g2p)
        return self._align_artifacts(result.alignment, result.low_confidence,
                                     result.anchored_fraction)

    def _tool_realign(self, record: dict) -> dict:
        audio = self._input_audio(record)
        features = mfcc(audio)
        doc = parse_annotation_json(self._input_text(record, "alignment"))
        alignment = alignment_from_annotation(doc, duration=features.duration)
        params = record["params"]
        region = (float(params["start"]), float(params["end"]))
        words = params.get("words")
        if words is None:
            words = words_in_region(alignment, region)
        updated = realign_region(features, alignment, region, words,
                                 self.acoustic_model(), self.g2p)
        return self._align_artifacts(updated)

    def _tool_vad(self, record: dict) -> dict:
        audio = self._input_audio(record)
        segments = vad_segment(vad_features(audio), self.vad_model())
        tier = [(s.start, s.end, s.kind) for s in segments.segments]
        return {
            "segments.txt": self._save(write_segments_text(segments),
                                       "segments.txt"),
            "segments.TextGrid": self._save(
                write_textgrid([("vad", tier)], xmax=segments.duration),
                "segments.TextGrid"),
        }

    def _tool_diarize(self, record: dict) -> dict:
        audio = self._input_audio(record)
        speech = vad_segment(vad_features(audio), self.vad_model())
        turns = diarize(mfcc(audio), speech=speech)
        tier = [(s.start, s.end, s.speaker) for s in turns]
        xmax = max([audio.duration] + [s.end for s in turns])
        return {
            "speakers.rttm": self._save(write_rttm(turns), "speakers.rttm"),
            "speakers.TextGrid": self._save(
                write_textgrid([("speakers", tier)], xmax=xmax),
                "speakers.TextGrid"),
        }

    def _tool_kws(self, record: dict) -> dict:
        audio = self._input_audio(record)
        keywords = [w.strip() for w in
                    self._input_text(record, "keywords").splitlines()
                    if w.strip()]
        theta = float(record["params"].get("theta", LIKELIHOOD_ORIGIN))
        features = mfcc(audio)
        model = self.acoustic_model()
        background = background_scores(model, features)
        hits = []
        for word in keywords:
            query = build_query(word, self.g2p.lexicon, self.g2p)
            hits.extend(search(features, query, model, theta,
                               background=background))
        return {"hits.txt": self._save(format_hits(hits), "hits.txt")}

    def _tool_train(self, record: dict) -> dict:
        params = record["params"]
        rng = np.random.default_rng(int(params.get("seed", 0)))
        corpus, _ = training_corpus(
            rng, n_utterances=int(params.get("utterances", 12)),
            g2p=self.g2p)
        model = flat_start(corpus)
        result = viterbi_train(model, corpus,
                               iterations=int(params.get("iterations", 5)))
        mixtures = int(params.get("mixtures", 1))
        if mixtures > 1:
            mixup(model, mixtures)
            result = viterbi_train(model, corpus, iterations=2)
        history = json.dumps({"loglik_per_iteration": result.loglik_history}
                             ) + "\n"
        return {
            "model.json": self._save(
                json.dumps(model.to_dict(), ensure_ascii=False),
                "model.json"),
            "history.json": self._save(history, "history.json"),
        }


def _error_response(exc: GlosError, status: int) -> JSONResponse:
    return JSONResponse(
        {"error": {"kind": exc.kind, "message": str(exc)}}, status_code=status)


ERROR_STATUS = {
    "BadInputManifest": 400,
    "ParseError": 400,
    "RegionOutOfRange": 400,
    "UnknownJob": 404,
    "PayloadTooLarge": 413,
}


def _public_record(record: dict) -> dict:
    out = dict(record)
    out["inputs"] = {k: {"size": v["size"], "media_type": v["media_type"]}
                     for k, v in record["inputs"].items()}
    out["results"] = {k: {"size": v["size"], "media_type": v["media_type"]}
                      for k, v in record["results"].items()}
    return out


def create_app(config: ServiceConfig) -> FastAPI:
    runtime = Runtime(config)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        runtime.resume()
        yield
        runtime.executor.shutdown(wait=True, cancel_futures=True)

    app = FastAPI(title="speech tools", lifespan=lifespan)
    app.state.runtime = runtime
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"])

    @app.exception_handler(GlosError)
    async def glos_error(request: Request, exc: GlosError):
        return _error_response(exc, ERROR_STATUS.get(exc.kind, 500))

    def check_auth(request: Request) -> JSONResponse | None:
        if config.auth_token is None:
            return None
        if request.headers.get("x-auth-token") == config.auth_token:
            return None
        return JSONResponse(
            {"error": {"kind": "Unauthorized",
                       "message": "missing or wrong x-auth-token header"}},
            status_code=401)

    @app.post("/jobs", status_code=201)
    async def submit(request: Request):
        denied = check_auth(request)
        if denied:
            return denied
        declared = request.headers.get("content-length")
        if declared and int(declared) > config.payload_limit:
            raise PayloadTooLarge(
                f"payload {declared} bytes exceeds {config.payload_limit}")
        form = await request.form()
        tool = form.get("tool")
        if not isinstance(tool, str) or tool not in REQUIRED_INPUTS:
            raise BadInputManifest(
                f"unknown tool {tool!r}; expected one of "
                f"{sorted(REQUIRED_INPUTS)}")
        inputs: dict[str, dict] = {}
        params: dict[str, str] = {}
        total = 0
        for key, value in form.multi_items():
            if isinstance(value, UploadFile):
                content = await value.read()
                total += len(content)
                if total > config.payload_limit:
                    raise PayloadTooLarge(
                        f"upload exceeds {config.payload_limit} bytes")
                inputs[key] = runtime.store.put_artifact(
                    content, value.filename or key)
            elif key != "tool":
                params[key] = str(value)
        required = REQUIRED_INPUTS[tool]
        missing = required - set(inputs)
        extra = set(inputs) - required
        if missing or extra:
            raise BadInputManifest(
                f"tool {tool!r}: missing parts {sorted(missing)}, "
                f"unexpected parts {sorted(extra)}")
        record = runtime.store.create(tool, inputs, params)
        runtime.enqueue(record["id"])
        return {"id": record["id"], "state": record["state"]}

    @app.get("/jobs/{job_id}")
    async def get_job(job_id: str, request: Request):
        denied = check_auth(request)
        if denied:
            return denied
        return _public_record(runtime.store.get(job_id))

    @app.get("/jobs/{job_id}/artifacts/{name}")
    async def get_artifact(job_id: str, name: str, request: Request):
        denied = check_auth(request)
        if denied:
            return denied
        record = runtime.store.get(job_id)
        ref = record["results"].get(name) or record["inputs"].get(name)
        if ref is None:
            raise UnknownJob(f"job {job_id} has no artifact {name!r}")
        return Response(runtime.store.get_artifact(ref),
                        media_type=ref["media_type"])

    @app.post("/jobs/{job_id}/realign", status_code=201)
    async def realign(job_id: str, request: Request):
        denied = check_auth(request)
        if denied:
            return denied
        parent = runtime.store.get(job_id)
        if parent["tool"] not in ("align", "realign") \
                or parent["state"] != "done":
            raise BadInputManifest(
                f"job {job_id} is not a completed alignment")
        payload = await request.json()
        try:
            start = float(payload["start"])
            end = float(payload["end"])
        except (KeyError, TypeError, ValueError):
            raise BadInputManifest(
                "realign request needs numeric `start` and `end`") from None
        words = payload.get("words")
        if words is not None and not (
                isinstance(words, list)
                and all(isinstance(w, str) for w in words)):
            raise BadInputManifest("`words` must be a list of strings")
        audio = load_wav(
            runtime.store.artifact_path(parent["inputs"]["audio"]))
        if not (0.0 <= start < end <= audio.duration + 1e-9):
            raise RegionOutOfRange(
                f"region [{start}, {end}] outside [0, {audio.duration}]")
        inputs = {
            "audio": parent["inputs"]["audio"],
            "alignment": parent["results"]["alignment.json"],
        }
        params = {"start": start, "end": end, "words": words,
                  "parent": job_id}
        record = runtime.store.create("realign", inputs, params)
        runtime.enqueue(record["id"])
        return {"id": record["id"], "state": record["state"]}

    @app.get("/jobs/{job_id}/peaks")
    async def peaks(job_id: str, request: Request, bins: int = 800):
        denied = check_auth(request)
        if denied:
            return denied
        record = runtime.store.get(job_id)
        ref = record["inputs"].get("audio")
        if ref is None:
            raise UnknownJob(f"job {job_id} has no audio input")
        audio = load_wav(runtime.store.artifact_path(ref))
        bins = max(1, min(int(bins), 20000))
        edges = np.linspace(0, len(audio.samples), bins + 1).astype(int)
        pairs = []
        for a, b in zip(edges, edges[1:]):
            chunk = audio.samples[a:b] if b > a else np.zeros(1)
            pairs.append([round(float(chunk.min()), 4),
                          round(float(chunk.max()), 4)])
        return {
            "duration": audio.duration,
            "sample_rate": audio.sample_rate,
            "bins": bins,
            "peaks": pairs,
        }

    return app
