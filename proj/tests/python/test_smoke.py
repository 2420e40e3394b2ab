import os
import pathlib

import pytest

edgetb = pytest.importorskip("edgetb")

SCENARIOS = pathlib.Path(
    os.environ.get("EDGETB_SCENARIOS", pathlib.Path(__file__).resolve().parents[2] / "scenarios")
)


def test_text_reference_encoding():
    reg = edgetb.CodecRegistry()
    assert {"bin.v1", "text.v1"} <= set(reg.ids())
    msg = edgetb.Message("radar/contacts", 1, b"hi")
    assert reg.encode("text.v1", msg) == b"radar/contacts|1|aGk=\n"


def test_translate_round_trip():
    reg = edgetb.CodecRegistry()
    msg = edgetb.Message("a/b", 3, bytes(range(256)))
    text = reg.encode("text.v1", msg)
    binary = reg.translate(text, "text.v1", "bin.v1")
    assert edgetb.decode_frame(binary) == reg.decode("text.v1", text)
    assert reg.translate(binary, "bin.v1", "text.v1") == text


def test_stream_and_errors():
    reg = edgetb.CodecRegistry()
    stream = b"".join(reg.encode("text.v1", edgetb.Message("t", i % 4, bytes([i]))) for i in range(10))
    out, n = reg.translate_stream(stream, "text.v1", "bin.v1")
    assert n == 10 and len(out) > 0
    with pytest.raises(edgetb.EdgeError, match="at byte"):
        reg.translate(b"t|9|aGk=\n", "text.v1", "bin.v1")
    with pytest.raises(edgetb.EdgeError, match="UnknownCodec"):
        reg.translate(stream, "text.v1", "xml")


def test_frame_checksum():
    frame = bytearray(edgetb.encode_frame(edgetb.Message("x", 0, b"payload")))
    frame[-5] ^= 0x01
    with pytest.raises(edgetb.EdgeError):
        edgetb.decode_frame(bytes(frame))


def test_scenario_run_is_deterministic():
    text = (SCENARIOS / "system_a.json").read_text()
    a = edgetb.run_scenario(text, duration_ms=20000)
    b = edgetb.run_scenario(text, duration_ms=20000)
    assert a.log_hash == b.log_hash and len(a.log_hash) == 64
    assert a.events > 0 and a.ended_at == 20000
    assert "pipelines" in edgetb.metrics(a)


def test_run_writes_log(tmp_path):
    text = (SCENARIOS / "system_a.json").read_text()
    path = tmp_path / "run.jsonl"
    s = edgetb.run_scenario(text, duration_ms=5000, log_path=str(path))
    lines = path.read_text().splitlines()
    assert len(lines) == s.events
    assert edgetb.reduce_metrics(path.read_text()) == s.metrics_json


def test_invalid_scenario():
    with pytest.raises(edgetb.EdgeError, match="ValidationError|ParseError"):
        edgetb.validate_scenario('{"schema_version": 1}')
