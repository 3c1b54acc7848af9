"""Engine-side client for an out-of-process scorer.

The scorer runs as a child process speaking the ``hadas-scorer/1``
protocol: UTF-8, one JSON object per line over stdin/stdout, with a
handshake line first.  Responses may arrive out of order and are matched
back to requests by id.  Closing stdin asks the child to shut down.
"""

from __future__ import annotations

import json
import shlex
import subprocess
from typing import Sequence

from .pool import Document, Summary
from .scoring import Scorer, ScorerError

PROTOCOL = "hadas-scorer/1"


class BridgeLaunchError(RuntimeError):
    """The scorer process could not be started or did not handshake."""


class BridgeScorer(Scorer):
    """Scorer backed by a child process speaking ``hadas-scorer/1``."""

    def __init__(self, command: str | Sequence[str]):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise BridgeLaunchError("empty bridge command")
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
            )
        except OSError as exc:
            raise BridgeLaunchError(f"cannot launch scorer bridge {argv!r}: {exc}") from exc
        handshake = self._proc.stdout.readline()
        try:
            header = json.loads(handshake)
        except json.JSONDecodeError:
            self.close()
            raise BridgeLaunchError(f"bad handshake line from bridge: {handshake!r}")
        if header.get("protocol") != PROTOCOL:
            self.close()
            raise BridgeLaunchError(f"unsupported bridge protocol: {header!r}")

    def score_pairs(self, pairs: Sequence[tuple[Document, Summary]]):
        if self._proc.poll() is not None:
            raise ScorerError("scorer bridge process has exited")
        for i, (doc, summary) in enumerate(pairs):
            request = {"id": i, "document": doc.text, "summary": summary.text}
            self._proc.stdin.write(json.dumps(request) + "\n")
        self._proc.stdin.flush()

        results: dict[int, tuple[float, float, float]] = {}
        pending = set(range(len(pairs)))
        while pending:
            line = self._proc.stdout.readline()
            if not line:
                raise ScorerError(
                    f"scorer bridge died with {len(pending)} responses outstanding"
                )
            try:
                response = json.loads(line)
            except json.JSONDecodeError:
                raise ScorerError(f"unparseable bridge response: {line!r}")
            rid = response.get("id")
            if "error" in response:
                raise ScorerError(
                    f"bridge error for request {rid}: {response['error']}",
                    index=rid if isinstance(rid, int) else None,
                )
            if rid not in pending:
                raise ScorerError(f"bridge answered unknown request id {rid!r}")
            try:
                results[rid] = (
                    float(response["sf"]),
                    float(response["disc"]),
                    float(response["cv"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ScorerError(f"malformed bridge response for id {rid}: {exc}", index=rid)
            pending.discard(rid)
        return [results[i] for i in range(len(pairs))]

    def close(self) -> None:
        proc = getattr(self, "_proc", None)
        if proc is None:
            return
        if proc.stdin and not proc.stdin.closed:
            try:
                proc.stdin.close()
            except OSError:
                pass
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __enter__(self) -> "BridgeScorer":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
