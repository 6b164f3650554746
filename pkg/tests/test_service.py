"""HTTP service tests: job lifecycle, artifacts, realign, durability."""

import io
import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from glos.dsp import write_wav
from glos.formats import parse_annotation_json, parse_textgrid
from glos.service import JobStore, ServiceConfig, create_app
from glos.synth import synth_canonical, synth_utterance

POLL_TIMEOUT = 60.0


@pytest.fixture(scope="module")
def service(tmp_path_factory, trained, g2p):
    """A running app over fresh storage, with the shared model pre-seeded."""
    storage = tmp_path_factory.mktemp("service")
    (storage / "models").mkdir()
    trained.save(storage / "models" / "acoustic.json")
    config = ServiceConfig(storage=storage, workers=2)
    app = create_app(config)
    with TestClient(app) as client:
        yield client, storage


@pytest.fixture(scope="module")
def fixture_utt(g2p):
    rng = np.random.default_rng(974)
    return synth_utterance(["pan", "woda", "lato", "kot"], rng, g2p,
                           inter_sil_prob=1.0)


def _wav_bytes(audio) -> bytes:
    buf = io.BytesIO()
    import wave

    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(16000)
        clipped = np.clip(audio.samples, -1.0, 1.0)
        w.writeframes((clipped * 32767).astype("<i2").tobytes())
    return buf.getvalue()


def _wait(client, job_id, timeout=POLL_TIMEOUT):
    deadline = time.time() + timeout
    while time.time() < deadline:
        record = client.get(f"/jobs/{job_id}").json()
        if record["state"] in ("done", "failed"):
            return record
        time.sleep(0.05)
    raise TimeoutError(f"job {job_id} still {record['state']}")


def test_g2p_job_end_to_end(service):
    client, _ = service
    resp = client.post("/jobs", data={"tool": "g2p"}, files={
        "text": ("poem.txt", "tak brzęczy w gąszczu".encode(), "text/plain")})
    assert resp.status_code == 201
    job_id = resp.json()["id"]
    record = _wait(client, job_id)
    assert record["state"] == "done", record["error"]
    art = client.get(f"/jobs/{job_id}/artifacts/phonemes.txt")
    assert art.status_code == 200
    assert art.text.strip() == "t a g b Z en tS I v g on S tS u"


def test_distinct_ids(service):
    client, _ = service
    ids = set()
    for _ in range(3):
        resp = client.post("/jobs", data={"tool": "g2p"}, files={
            "text": ("t.txt", b"kot", "text/plain")})
        ids.add(resp.json()["id"])
    assert len(ids) == 3


def test_missing_part_is_bad_manifest(service):
    client, _ = service
    resp = client.post("/jobs", data={"tool": "align"}, files={
        "audio": ("a.wav", b"RIFF", "audio/wav")})
    assert resp.status_code == 400
    body = resp.json()["error"]
    assert body["kind"] == "BadInputManifest"
    assert "transcript" in body["message"]


def test_unknown_tool_rejected(service):
    client, _ = service
    resp = client.post("/jobs", data={"tool": "frobnicate"}, files={
        "text": ("t.txt", b"x", "text/plain")})
    assert resp.status_code == 400


def test_unknown_job_404(service):
    client, _ = service
    resp = client.get("/jobs/deadbeef")
    assert resp.status_code == 404
    assert resp.json()["error"]["kind"] == "UnknownJob"


def test_garbage_g2p_input_fails_with_error(service):
    client, _ = service
    resp = client.post("/jobs", data={"tool": "g2p"}, files={
        "text": ("t.bin", bytes([0xFF, 0xFE, 0x00, 0x81]), "text/plain")})
    record = _wait(client, resp.json()["id"])
    assert record["state"] == "failed"
    assert "G2PError" in record["error"]


def test_payload_limit(tmp_path, trained):
    storage = tmp_path / "small"
    config = ServiceConfig(storage=storage, workers=1, payload_limit=1000)
    app = create_app(config)
    with TestClient(app) as client:
        resp = client.post("/jobs", data={"tool": "g2p"}, files={
            "text": ("t.txt", b"x" * 5000, "text/plain")})
        assert resp.status_code == 413
        assert resp.json()["error"]["kind"] == "PayloadTooLarge"


def test_align_job_and_artifacts(service, fixture_utt):
    client, _ = service
    resp = client.post("/jobs", data={"tool": "align"}, files={
        "audio": ("a.wav", _wav_bytes(fixture_utt.audio), "audio/wav"),
        "transcript": ("t.txt", fixture_utt.text.encode(), "text/plain")})
    job_id = resp.json()["id"]
    record = _wait(client, job_id)
    assert record["state"] == "done", record["error"]
    assert set(record["results"]) == {
        "alignment.TextGrid", "alignment.json", "meta.json"}

    grid = client.get(f"/jobs/{job_id}/artifacts/alignment.TextGrid")
    doc = parse_textgrid(grid.text)
    assert [t.name for t in doc.tiers] == ["words", "phones"]
    labels = [iv[2] for iv in doc.tiers[0].intervals if iv[2]]
    assert labels == ["pan", "woda", "lato", "kot"]

    ann = parse_annotation_json(
        client.get(f"/jobs/{job_id}/artifacts/alignment.json").text)
    assert ann.sample_rate == 16000
    assert [lv.name for lv in ann.levels] == ["words", "phones"]


@pytest.fixture(scope="module")
def done_alignment(service, fixture_utt):
    client, _ = service
    resp = client.post("/jobs", data={"tool": "align"}, files={
        "audio": ("a.wav", _wav_bytes(fixture_utt.audio), "audio/wav"),
        "transcript": ("t.txt", fixture_utt.text.encode(), "text/plain")})
    job_id = resp.json()["id"]
    record = _wait(client, job_id)
    assert record["state"] == "done", record["error"]
    return job_id


def test_identity_realign_preserves_alignment(service, done_alignment,
                                              fixture_utt):
    client, _ = service
    original = parse_annotation_json(
        client.get(f"/jobs/{done_alignment}/artifacts/alignment.json").text)
    times = {w: (a, b) for w, a, b in fixture_utt.word_times()}
    t0, t1 = times["woda"]
    resp = client.post(f"/jobs/{done_alignment}/realign",
                       json={"start": t0 + 0.01, "end": t1 - 0.01})
    assert resp.status_code == 201
    record = _wait(client, resp.json()["id"])
    assert record["state"] == "done", record["error"]
    updated = parse_annotation_json(
        client.get(f"/jobs/{record['id']}/artifacts/alignment.json").text)

    def items(doc, level):
        return next(lv.items for lv in doc.levels if lv.name == level)

    # outside intervals byte-identical, inside within one frame (160 samples)
    region = (round((t0 + 0.01) * 16000), round((t1 - 0.01) * 16000))
    for before, after in zip(items(original, "words"),
                             items(updated, "words")):
        overlaps = before.start < region[1] and \
            before.start + before.duration > region[0]
        if overlaps:
            assert abs(before.start - after.start) <= 160
            assert abs(before.duration - after.duration) <= 320
        else:
            assert before == after


def test_realign_out_of_range(service, done_alignment):
    client, _ = service
    resp = client.post(f"/jobs/{done_alignment}/realign",
                       json={"start": 500.0, "end": 600.0})
    assert resp.status_code == 400
    assert resp.json()["error"]["kind"] == "RegionOutOfRange"


def test_realign_requires_done_alignment(service):
    client, _ = service
    resp = client.post("/jobs", data={"tool": "g2p"}, files={
        "text": ("t.txt", b"kot", "text/plain")})
    job_id = resp.json()["id"]
    _wait(client, job_id)
    resp = client.post(f"/jobs/{job_id}/realign",
                       json={"start": 0.0, "end": 0.1})
    assert resp.status_code == 400


def test_kws_job(service, fixture_utt):
    client, _ = service
    resp = client.post("/jobs", data={"tool": "kws"}, files={
        "audio": ("a.wav", _wav_bytes(fixture_utt.audio), "audio/wav"),
        "keywords": ("k.txt", "lato\nrok\n".encode(), "text/plain")})
    record = _wait(client, resp.json()["id"])
    assert record["state"] == "done", record["error"]
    hits = client.get(f"/jobs/{record['id']}/artifacts/hits.txt").text
    assert any(line.startswith("lato ") for line in hits.splitlines())


def test_vad_job(service, g2p):
    client, _ = service
    rng = np.random.default_rng(975)
    utt = synth_canonical("pan woda kot", rng, g2p)
    resp = client.post("/jobs", data={"tool": "vad"}, files={
        "audio": ("a.wav", _wav_bytes(utt.audio), "audio/wav")})
    record = _wait(client, resp.json()["id"])
    assert record["state"] == "done", record["error"]
    text = client.get(f"/jobs/{record['id']}/artifacts/segments.txt").text
    kinds = [line.split("\t")[2] for line in text.splitlines()]
    assert "speech" in kinds


def test_peaks_endpoint(service, done_alignment):
    client, _ = service
    resp = client.get(f"/jobs/{done_alignment}/peaks", params={"bins": 64})
    assert resp.status_code == 200
    body = resp.json()
    assert body["bins"] == 64
    assert len(body["peaks"]) == 64
    assert all(lo <= hi for lo, hi in body["peaks"])
    assert body["duration"] > 0


def test_store_survives_restart(service, done_alignment):
    client, storage = service
    reloaded = JobStore(storage)
    record = reloaded.get(done_alignment)
    assert record["state"] == "done"
    assert set(record["results"]) == {
        "alignment.TextGrid", "alignment.json", "meta.json"}
    art = reloaded.get_artifact(record["results"]["alignment.TextGrid"])
    assert art.startswith(b'File type = "ooTextFile"')


def test_running_jobs_requeue_on_restart(tmp_path):
    store = JobStore(tmp_path / "jobs")
    record = store.create("g2p", {}, {})
    assert store.claim(record["id"])
    assert store.get(record["id"])["state"] == "running"
    # simulate a crash: a new store over the same directory
    revived = JobStore(tmp_path / "jobs")
    assert revived.get(record["id"])["state"] == "queued"


def test_state_transitions_enforced(tmp_path):
    store = JobStore(tmp_path / "jobs2")
    record = store.create("g2p", {}, {})
    assert store.claim(record["id"]) is True
    assert store.claim(record["id"]) is False  # already running
    store.finish(record["id"], results={})
    with pytest.raises(ValueError):
        store.finish(record["id"], results={})


def test_artifacts_are_content_addressed(tmp_path):
    store = JobStore(tmp_path / "jobs3")
    a = store.put_artifact(b"same bytes", "x.txt")
    b = store.put_artifact(b"same bytes", "y.txt")
    assert a["sha256"] == b["sha256"]
    assert len(list((tmp_path / "jobs3" / "artifacts").iterdir())) == 1


def test_auth_token_enforced(tmp_path, trained):
    storage = tmp_path / "auth"
    (storage / "models").mkdir(parents=True)
    trained.save(storage / "models" / "acoustic.json")
    app = create_app(ServiceConfig(storage=storage, auth_token="sekret"))
    with TestClient(app) as client:
        resp = client.post("/jobs", data={"tool": "g2p"}, files={
            "text": ("t.txt", b"kot", "text/plain")})
        assert resp.status_code == 401
        resp = client.post("/jobs", data={"tool": "g2p"},
                           headers={"x-auth-token": "sekret"}, files={
                               "text": ("t.txt", b"kot", "text/plain")})
        assert resp.status_code == 201
