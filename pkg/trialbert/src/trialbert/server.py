"""Model server speaking the line-delimited JSON scoring protocol.

Requests are one JSON object per line: {"id": ..., "text": ...}. A batch is
terminated by a blank line. Responses mirror the batch: one
{"id": ..., "score": ...} per request (same ids, same order) followed by a
blank line. Scores are the positive-class probability in [0, 1]. A
malformed request line yields an {"id": ..., "error": ...} response for
that line and the server keeps running. Transports: standard input/output
of the process, or TCP with one batch exchange per connection lifetime.
"""

from __future__ import annotations

import json
import socketserver
import sys
from pathlib import Path

import torch
from transformers import AutoModelForSequenceClassification, AutoTokenizer

from . import _quiet  # noqa: F401
from .errors import BaseModelUnavailable


class Scorer:
    """Loads a fine-tuned classifier once; weights are immutable after load."""

    def __init__(self, model_dir: str | Path, max_seq_len: int = 512):
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_dir)
            self.model = AutoModelForSequenceClassification.from_pretrained(model_dir)
        except (OSError, ValueError) as exc:
            raise BaseModelUnavailable(f"cannot load model {model_dir!r}: {exc}")
        self.model.eval()
        self.max_seq_len = max_seq_len

    @torch.no_grad()
    def score_batch(self, texts: list[str]) -> list[float]:
        if not texts:
            return []
        encoded = self.tokenizer(
            texts,
            padding=True,
            truncation=True,
            max_length=self.max_seq_len,
            return_tensors="pt",
        )
        logits = self.model(**encoded).logits
        return torch.softmax(logits, dim=-1)[:, 1].tolist()


def handle_batch(lines: list[str], scorer: Scorer) -> list[str]:
    """Score one batch of request lines, preserving order and ids."""
    parsed: list[tuple[object, str | None, str | None]] = []  # (id, text, error)
    for line in lines:
        try:
            obj = json.loads(line)
            parsed.append((obj["id"], str(obj["text"]), None))
        except (json.JSONDecodeError, KeyError, TypeError):
            request_id = None
            try:
                request_id = json.loads(line).get("id")
            except (json.JSONDecodeError, AttributeError):
                pass
            parsed.append((request_id, None, "malformed request line"))

    scores = iter(scorer.score_batch([text for _, text, err in parsed if err is None]))
    out = []
    for request_id, _, error in parsed:
        if error is None:
            payload = {"id": request_id, "score": next(scores)}
        else:
            payload = {"id": request_id, "error": error}
        out.append(json.dumps(payload))
    return out


def serve_stdio(scorer: Scorer, stdin=None, stdout=None) -> None:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    batch: list[str] = []
    for raw in stdin:
        line = raw.rstrip("\n")
        if line:
            batch.append(line)
            continue
        for response in handle_batch(batch, scorer):
            stdout.write(response + "\n")
        stdout.write("\n")
        stdout.flush()
        batch = []


def serve_tcp(scorer: Scorer, port: int, host: str = "127.0.0.1") -> None:
    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            batch = []
            for raw in self.rfile:
                line = raw.decode().rstrip("\n")
                if line:
                    batch.append(line)
                    continue
                for response in handle_batch(batch, scorer):
                    self.wfile.write(response.encode() + b"\n")
                self.wfile.write(b"\n")
                self.wfile.flush()
                batch = []

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True

    with Server((host, port), Handler) as server:
        server.serve_forever()


def serve(model_dir: str | Path, tcp_port: int | None = None,
          max_seq_len: int = 512) -> None:
    scorer = Scorer(model_dir, max_seq_len=max_seq_len)
    if tcp_port is None:
        serve_stdio(scorer)
    else:
        serve_tcp(scorer, tcp_port)
