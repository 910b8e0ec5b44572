"""Pluggable classifier backends behind one predict surface.

The builtin backend trains and scores the linear model in-process. The
remote backend speaks a line-delimited JSON protocol to a model server,
either over TCP or over the stdio of a child process:

    request:  {"id": "<string>", "text": "<string>"}\n ... then a blank line
    response: {"id": "<string>", "score": <number in [0,1]>}\n ... blank line

Ids must round-trip verbatim; one score per request. Texts are truncated to
512 whitespace tokens at the remote boundary only (mirroring the input limit
of encoder models); the builtin model sees full text.
"""

from __future__ import annotations

import json
import shlex
import socket
import subprocess
from dataclasses import dataclass
from enum import Enum

from .classifier import LabeledExample, Hyperparams, LinearModel, Prediction, train
from .errors import BackendUnreachable, ProtocolViolation
from .keywords import ExclusionType

MAX_REMOTE_TOKENS = 512


class BackendKind(Enum):
    BUILTIN = "builtin"
    REMOTE = "remote"


@dataclass
class BackendConfig:
    kind: BackendKind = BackendKind.BUILTIN
    endpoint: str | None = None  # "host:port" or "exec:<command line>"
    batch_size: int = 32
    threshold: float = 0.5

    def __post_init__(self) -> None:
        if self.kind is BackendKind.REMOTE and not self.endpoint:
            raise ValueError("remote backend requires an endpoint")
        if self.kind is BackendKind.BUILTIN and self.endpoint:
            raise ValueError("builtin backend takes no endpoint")
        if self.batch_size <= 0:
            raise ValueError("batch_size must be positive")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0,1)")


def truncate_tokens(text: str, limit: int = MAX_REMOTE_TOKENS) -> str:
    tokens = text.split()
    if len(tokens) <= limit:
        return text
    return " ".join(tokens[:limit])


class BuiltinBackend:
    """In-process linear model; fit() trains one model per invocation."""

    def __init__(
        self,
        model: LinearModel | None = None,
        hyperparams: Hyperparams | None = None,
        threshold: float = 0.5,
    ) -> None:
        self.model = model
        self.hyperparams = hyperparams or Hyperparams()
        self.threshold = threshold

    def fit(self, examples: list[LabeledExample]) -> None:
        self.model = train(examples, self.hyperparams)

    def predict_scores(self, texts: list[str]) -> list[float]:
        if self.model is None:
            raise BackendUnreachable("builtin backend has no trained model")
        return self.model.predict_scores(texts)

    def close(self) -> None:
        pass


class _StdioTransport:
    def __init__(self, command: str) -> None:
        self.command = command
        self.proc: subprocess.Popen | None = None

    def _ensure(self) -> subprocess.Popen:
        if self.proc is None or self.proc.poll() is not None:
            try:
                self.proc = subprocess.Popen(
                    shlex.split(self.command),
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            except OSError as exc:
                raise BackendUnreachable(f"cannot spawn {self.command!r}: {exc}") from exc
        return self.proc

    def round_trip(self, lines: list[str]) -> list[str]:
        proc = self._ensure()
        try:
            for line in lines:
                proc.stdin.write(line + "\n")
            proc.stdin.write("\n")
            proc.stdin.flush()
            out: list[str] = []
            while True:
                line = proc.stdout.readline()
                if line == "":
                    raise BackendUnreachable("server closed stdio mid-batch")
                line = line.rstrip("\n")
                if line == "":
                    return out
                out.append(line)
        except (BrokenPipeError, OSError) as exc:
            raise BackendUnreachable(f"stdio transport failed: {exc}") from exc

    def close(self) -> None:
        if self.proc is not None and self.proc.poll() is None:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
            self.proc.wait(timeout=10)
        self.proc = None


class _TcpTransport:
    def __init__(self, host: str, port: int, timeout: float = 30.0) -> None:
        self.host = host
        self.port = port
        self.timeout = timeout

    def round_trip(self, lines: list[str]) -> list[str]:
        try:
            with socket.create_connection((self.host, self.port), self.timeout) as sock:
                payload = ("\n".join(lines) + "\n\n").encode("utf-8")
                sock.sendall(payload)
                f = sock.makefile("r", encoding="utf-8")
                out: list[str] = []
                for line in f:
                    line = line.rstrip("\n")
                    if line == "":
                        return out
                    out.append(line)
                raise BackendUnreachable("connection closed before blank terminator")
        except OSError as exc:
            raise BackendUnreachable(f"tcp transport failed: {exc}") from exc

    def close(self) -> None:
        pass


class RemoteBackend:
    """Client for a model server speaking the line-delimited protocol."""

    def __init__(self, config: BackendConfig, retries: int = 2) -> None:
        if config.kind is not BackendKind.REMOTE:
            raise ValueError("RemoteBackend requires a remote BackendConfig")
        self.config = config
        self.retries = retries
        endpoint = config.endpoint or ""
        if endpoint.startswith("exec:"):
            self._transport = _StdioTransport(endpoint[len("exec:"):])
        else:
            host, _, port = endpoint.rpartition(":")
            if not host or not port.isdigit():
                raise ValueError(f"bad endpoint {endpoint!r}; want host:port or exec:cmd")
            self._transport = _TcpTransport(host, int(port))

    def fit(self, examples: list[LabeledExample]) -> None:
        # Remote models are trained out-of-band (fine-tuning is the server's
        # job); fitting is a no-op here.
        del examples

    def _score_batch(self, texts: list[str]) -> list[float]:
        ids = [str(i) for i in range(len(texts))]
        lines = [
            json.dumps({"id": i, "text": truncate_tokens(t)}, ensure_ascii=False)
            for i, t in zip(ids, texts)
        ]
        attempt = 0
        while True:
            try:
                raw = self._transport.round_trip(lines)
                break
            except BackendUnreachable:
                attempt += 1
                if attempt > self.retries:
                    raise
        if len(raw) != len(texts):
            raise ProtocolViolation(
                f"sent {len(texts)} requests, got {len(raw)} responses"
            )
        scores: dict[str, float] = {}
        for line in raw:
            try:
                obj = json.loads(line)
                rid = obj["id"]
                score = obj["score"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ProtocolViolation(f"malformed response line {line!r}") from exc
            if not isinstance(rid, str) or not isinstance(score, (int, float)):
                raise ProtocolViolation(f"bad field types in {line!r}")
            if not 0.0 <= score <= 1.0:
                raise ProtocolViolation(f"score out of range in {line!r}")
            scores[rid] = float(score)
        try:
            return [scores[i] for i in ids]
        except KeyError as exc:
            raise ProtocolViolation(f"missing response for id {exc}") from exc

    def predict_scores(self, texts: list[str]) -> list[float]:
        out: list[float] = []
        step = self.config.batch_size
        for i in range(0, len(texts), step):
            out.extend(self._score_batch(texts[i : i + step]))
        return out

    def close(self) -> None:
        self._transport.close()


def make_backend(config: BackendConfig):
    if config.kind is BackendKind.BUILTIN:
        return BuiltinBackend(threshold=config.threshold)
    return RemoteBackend(config)


def predict(
    backend,
    tagged_texts: list[str],
    criterion_keys: list[tuple[str, int]] | None = None,
    exclusion: ExclusionType | None = None,
    threshold: float = 0.5,
) -> list[Prediction]:
    """Score a batch of tagged texts; order preserved, labels by threshold."""
    if not tagged_texts:
        return []
    scores = backend.predict_scores(tagged_texts)
    keys = criterion_keys or [None] * len(tagged_texts)
    return [
        Prediction(key, exclusion, score, int(score >= threshold))
        for key, score in zip(keys, scores)
    ]
