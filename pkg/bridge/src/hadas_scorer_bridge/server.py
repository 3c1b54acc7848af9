"""The hadas-scorer/1 request/response loop.

Wire format: UTF-8, one JSON object per line over stdin/stdout.  The
server emits ``{"protocol": "hadas-scorer/1"}`` before anything else,
then answers each ``{"id", "document", "summary"}`` request line with
``{"id", "sf", "disc", "cv"}``.  A malformed line produces
``{"id": null, "error": ...}`` and the loop continues; a per-request
inference failure produces ``{"id": <id>, "error": ...}``.  EOF on stdin
is a clean shutdown.
"""

from __future__ import annotations

import json
from typing import IO

from .scorers import ScorerSet

PROTOCOL = "hadas-scorer/1"


def _emit(stream: IO[str], payload: dict) -> None:
    stream.write(json.dumps(payload) + "\n")
    stream.flush()


def serve(scorers: ScorerSet, stdin: IO[str], stdout: IO[str]) -> int:
    """Serve requests until EOF; returns the number of lines handled."""
    _emit(stdout, {"protocol": PROTOCOL})
    handled = 0
    for line in stdin:
        handled += 1
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            _emit(stdout, {"id": None, "error": f"malformed request line: {exc}"})
            continue
        if not isinstance(request, dict) or "id" not in request:
            _emit(stdout, {"id": None, "error": "request is not an object with an id"})
            continue
        request_id = request["id"]
        try:
            document = str(request["document"])
            summary = str(request["summary"])
        except KeyError as exc:
            _emit(stdout, {"id": request_id, "error": f"missing field {exc}"})
            continue
        try:
            sf, disc, cv = scorers.score(document, summary)
        except Exception as exc:  # inference failure must not kill the loop
            _emit(stdout, {"id": request_id, "error": f"scoring failed: {exc}"})
            continue
        _emit(stdout, {"id": request_id, "sf": sf, "disc": disc, "cv": cv})
    return handled
