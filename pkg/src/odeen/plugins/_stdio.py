"""Shared request loop for the built-in stdio plugins."""

from __future__ import annotations

import json
import sys
from typing import Callable


def emit(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj, separators=(",", ":")) + "\n")
    sys.stdout.flush()


def serve(name: str, roles: list[str], handlers: dict[str, Callable[[dict], None]]) -> None:
    """Dispatch one JSON request per line until stdin closes."""
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            op = req["op"]
        except (json.JSONDecodeError, TypeError, KeyError):
            emit({"error": f"unreadable request: {line[:80]!r}"})
            continue
        if op == "hello":
            emit({"name": name, "roles": roles})
        elif op in handlers:
            try:
                handlers[op](req)
            except Exception as exc:  # keep serving after a bad request
                emit({"error": f"{type(exc).__name__}: {exc}"})
        else:
            emit({"error": f"unsupported op {op!r}"})
