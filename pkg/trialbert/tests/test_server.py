import json
import socket
import subprocess
import sys
import time

import pytest

from trialbert.server import Scorer, handle_batch


def send_batch(proc, requests):
    """Write one batch to a server process and read the response batch."""
    for obj in requests:
        proc.stdin.write(json.dumps(obj) + "\n")
    proc.stdin.write("\n")
    proc.stdin.flush()
    responses = []
    while True:
        line = proc.stdout.readline()
        assert line, "server closed its output mid-batch"
        line = line.rstrip("\n")
        if not line:
            return responses
        responses.append(json.loads(line))


@pytest.fixture(scope="module")
def server(finetuned_model):
    proc = subprocess.Popen(
        [sys.executable, "-m", "trialbert.cli", "serve",
         "--model-dir", finetuned_model, "--max-seq-len", "64"],
        stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True,
    )
    yield proc
    proc.stdin.close()
    proc.wait(timeout=30)


class TestStdioProtocol:
    def test_ids_round_trip_in_order(self, server):
        out = send_batch(server, [
            {"id": "a", "text": "exclusion: hiv positive"},
            {"id": "b", "text": "inclusion: measurable disease"},
            {"id": "c", "text": "exclusion: known hiv infection"},
        ])
        assert [o["id"] for o in out] == ["a", "b", "c"]
        for o in out:
            assert 0.0 <= o["score"] <= 1.0

    def test_empty_batch(self, server):
        assert send_batch(server, []) == []

    def test_huge_text_is_truncated_not_fatal(self, server):
        text = "hiv " * 10000
        [out] = send_batch(server, [{"id": "big", "text": text.strip()}])
        assert out["id"] == "big"
        assert 0.0 <= out["score"] <= 1.0

    def test_truncation_invariance(self, server):
        # Equal first-64-token prefixes must score identically.
        prefix = ("hiv positive patient " * 40).strip()
        [a] = send_batch(server, [{"id": "1", "text": prefix + " extra tail one"}])
        [b] = send_batch(server, [{"id": "2", "text": prefix + " different ending"}])
        assert a["score"] == b["score"]

    def test_malformed_line_gets_error_and_server_survives(self, server):
        server.stdin.write("this is not json\n")
        server.stdin.write(json.dumps({"id": "ok", "text": "hello"}) + "\n")
        server.stdin.write("\n")
        server.stdin.flush()
        first = json.loads(server.stdout.readline())
        second = json.loads(server.stdout.readline())
        assert server.stdout.readline() == "\n"
        assert "error" in first and "score" not in first
        assert second["id"] == "ok" and 0.0 <= second["score"] <= 1.0
        # Still serving afterwards:
        [again] = send_batch(server, [{"id": "z", "text": "more"}])
        assert again["id"] == "z"

    def test_missing_text_field_is_malformed(self, server):
        [out] = send_batch(server, [{"id": "q"}])
        assert out["id"] == "q" and "error" in out


class TestTcp:
    def test_round_trip(self, finetuned_model):
        with socket.socket() as probe:
            probe.bind(("127.0.0.1", 0))
            port = probe.getsockname()[1]
        proc = subprocess.Popen(
            [sys.executable, "-m", "trialbert.cli", "serve",
             "--model-dir", finetuned_model, "--tcp", str(port)]
        )
        try:
            deadline = time.monotonic() + 30
            conn = None
            while time.monotonic() < deadline:
                try:
                    conn = socket.create_connection(("127.0.0.1", port), 0.2)
                    break
                except OSError:
                    time.sleep(0.1)
            assert conn, "server never came up"
            with conn, conn.makefile("rw") as stream:
                stream.write(json.dumps({"id": 1, "text": "hiv"}) + "\n\n")
                stream.flush()
                out = json.loads(stream.readline())
                assert stream.readline() == "\n"
            assert out["id"] == 1 and 0.0 <= out["score"] <= 1.0
        finally:
            proc.terminate()
            proc.wait(timeout=10)


class TestHandleBatchUnit:
    def test_order_and_count(self, finetuned_model):
        scorer = Scorer(finetuned_model, max_seq_len=64)
        lines = [json.dumps({"id": i, "text": f"text {i}"}) for i in range(4)]
        out = [json.loads(l) for l in handle_batch(lines, scorer)]
        assert [o["id"] for o in out] == [0, 1, 2, 3]
