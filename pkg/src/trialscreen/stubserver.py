"""Bundled model server for tests and offline runs.

Speaks the line-delimited JSON protocol from `backend`. It can serve a saved
linear model (making remote predictions equal builtin ones), a constant
score, or a deterministic hash-of-text score. Runs over stdio by default or
as a TCP server with --tcp.

    python -m trialscreen.stubserver --model model.json
    python -m trialscreen.stubserver --constant 0.25 --tcp 9100
"""

from __future__ import annotations

import argparse
import hashlib
import json
import socketserver
import sys

from .classifier import load_model


def _hash_score(text: str) -> float:
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") / 0xFFFFFFFF


def make_scorer(args: argparse.Namespace):
    if args.model:
        model = load_model(args.model)
        return model.score
    if args.constant is not None:
        const = args.constant
        return lambda _text: const
    return _hash_score


def handle_batch(lines: list[str], scorer) -> list[str]:
    out = []
    for line in lines:
        try:
            obj = json.loads(line)
            rid = obj["id"]
            text = obj["text"]
        except (json.JSONDecodeError, KeyError, TypeError):
            out.append(json.dumps({"error": "malformed request", "line": line}))
            continue
        out.append(json.dumps({"id": rid, "score": scorer(text)}))
    return out


def serve_stdio(scorer, stdin=None, stdout=None) -> None:
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


def serve_tcp(scorer, port: int, host: str = "127.0.0.1") -> None:
    class Handler(socketserver.StreamRequestHandler):
        def handle(self) -> None:
            batch: list[str] = []
            for raw in self.rfile:
                line = raw.decode("utf-8").rstrip("\n")
                if line:
                    batch.append(line)
                    continue
                payload = "\n".join(handle_batch(batch, scorer)) + "\n\n"
                self.wfile.write(payload.encode("utf-8"))
                batch = []

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True

    with Server((host, port), Handler) as server:
        server.serve_forever()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", help="path to a saved linear model to serve")
    parser.add_argument("--constant", type=float, help="serve a fixed score")
    parser.add_argument("--tcp", type=int, metavar="PORT", help="serve over TCP instead of stdio")
    args = parser.parse_args(argv)
    scorer = make_scorer(args)
    if args.tcp:
        serve_tcp(scorer, args.tcp)
    else:
        serve_stdio(scorer)
    return 0


if __name__ == "__main__":
    sys.exit(main())
