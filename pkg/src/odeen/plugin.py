"""Child-process bridge for external conjecture generators and interpreters.

Wire protocol: newline-delimited JSON over the child's stdin/stdout.

    request  {"op": "hello"}
    reply    {"name": "...", "roles": ["conjecture" | "interpret", ...]}

    request  {"op": "conjecture", "board": [{"s": "Qq....", "y": 1}, ...],
              "n": 300, "seed": 12345}
    reply    exactly n lines, each {"rule": "..."}

    request  {"op": "interpret", "rule": "...", "structures": ["......", ...]}
    reply    {"labels": [0, 1, ...]}   (same length and order)

Anything else coming back -- malformed JSON, missing keys, wrong types,
wrong counts, EOF, or silence past the timeout -- raises PluginError.
Requests are serialized: one in flight per child process.
"""

from __future__ import annotations

import collections
import json
import queue
import shlex
import subprocess
import threading
from typing import Sequence

from .dataset import Board
from .solvers import SolverError
from .universe import render_structure, structure_of

ROLE_CONJECTURE = "conjecture"
ROLE_INTERPRET = "interpret"


class PluginError(SolverError):
    """The child violated the protocol, crashed, or timed out."""


def board_payload(board: Board) -> list[dict]:
    return [
        {"s": render_structure(structure_of(s)), "y": int(y)} for s, y in board.entries
    ]


class PluginClient:
    """Owns one child process speaking the line protocol."""

    def __init__(self, cmd: str | Sequence[str], timeout: float = 30.0):
        self.cmd = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue = queue.Queue()
        self._stderr_tail: collections.deque = collections.deque(maxlen=20)
        self._lock = threading.Lock()
        self.name: str | None = None
        self.roles: tuple[str, ...] = ()

    def start(self) -> "PluginClient":
        try:
            self._proc = subprocess.Popen(
                self.cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise PluginError(f"cannot start plugin {self.cmd}: {exc}") from exc
        threading.Thread(target=self._pump_stdout, daemon=True).start()
        threading.Thread(target=self._pump_stderr, daemon=True).start()
        info = self._request({"op": "hello"}, n_lines=1)[0]
        name = info.get("name")
        roles = info.get("roles")
        if not isinstance(name, str) or not isinstance(roles, list) or not all(
            isinstance(r, str) for r in roles
        ):
            raise PluginError(f"bad handshake reply: {info!r}")
        self.name = name
        self.roles = tuple(roles)
        return self

    def _pump_stdout(self) -> None:
        assert self._proc and self._proc.stdout
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF marker

    def _pump_stderr(self) -> None:
        assert self._proc and self._proc.stderr
        for line in self._proc.stderr:
            self._stderr_tail.append(line.rstrip("\n"))

    def _diag(self) -> str:
        tail = "; ".join(self._stderr_tail)
        return f" [stderr: {tail}]" if tail else ""

    def _read_obj(self) -> dict:
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise PluginError(f"plugin {self.cmd} timed out{self._diag()}") from None
        if line is None:
            raise PluginError(f"plugin {self.cmd} closed its output{self._diag()}")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise PluginError(
                f"plugin sent malformed JSON: {line.strip()!r}{self._diag()}"
            ) from exc
        if not isinstance(obj, dict):
            raise PluginError(f"plugin sent a non-object line: {line.strip()!r}")
        if "error" in obj:
            raise PluginError(f"plugin reported an error: {obj['error']!r}")
        return obj

    def _request(self, req: dict, n_lines: int) -> list[dict]:
        with self._lock:  # exactly one request in flight
            proc = self._proc
            if proc is None or proc.poll() is not None:
                raise PluginError(f"plugin {self.cmd} is not running{self._diag()}")
            try:
                assert proc.stdin
                proc.stdin.write(json.dumps(req, separators=(",", ":")) + "\n")
                proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise PluginError(f"plugin {self.cmd} pipe broke: {exc}{self._diag()}") from exc
            return [self._read_obj() for _ in range(n_lines)]

    def conjecture(self, board: Board, n: int, seed: int) -> list[str]:
        if ROLE_CONJECTURE not in self.roles:
            raise PluginError(f"plugin {self.name!r} lacks the conjecture role")
        req = {"op": "conjecture", "board": board_payload(board), "n": n, "seed": seed}
        out = []
        for obj in self._request(req, n_lines=n):
            rule = obj.get("rule")
            if not isinstance(rule, str):
                raise PluginError(f"conjecture reply missing rule text: {obj!r}")
            out.append(rule)
        return out

    def interpret(self, rule_text: str, structure_texts: Sequence[str]) -> list[int]:
        if ROLE_INTERPRET not in self.roles:
            raise PluginError(f"plugin {self.name!r} lacks the interpret role")
        req = {"op": "interpret", "rule": rule_text, "structures": list(structure_texts)}
        obj = self._request(req, n_lines=1)[0]
        labels = obj.get("labels")
        if (
            not isinstance(labels, list)
            or len(labels) != len(structure_texts)
            or any(lab not in (0, 1) for lab in labels)
        ):
            raise PluginError(f"bad interpret reply: {obj!r}")
        return [int(lab) for lab in labels]

    def close(self) -> None:
        proc = self._proc
        if proc is None:
            return
        try:
            if proc.stdin:
                proc.stdin.close()
            proc.wait(timeout=5)
        except (OSError, subprocess.TimeoutExpired):
            proc.kill()
            proc.wait()
        self._proc = None

    def __enter__(self) -> "PluginClient":
        return self.start() if self._proc is None else self

    def __exit__(self, *exc) -> None:
        self.close()


class PluginConjectureSource:
    """ConjectureSource backed by a child process."""

    def __init__(self, client: PluginClient):
        self.client = client

    def conjectures(self, board: Board, n: int, seed: int) -> list[str]:
        return self.client.conjecture(board, n, seed)


class PluginInterpreter:
    """InterpreterBackend backed by a child process; may score any string."""

    def __init__(self, client: PluginClient):
        self.client = client

    def labels(self, rule_text: str, structures: Sequence[int]) -> list[int]:
        texts = [render_structure(structure_of(s)) for s in structures]
        return self.client.interpret(rule_text, texts)
