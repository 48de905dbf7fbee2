"""HTTP game master: humans probe structures and guess the secret rule.

Each session holds a secret rule sampled from the satisfiable-and-
refutable pool and starts with one positive and one negative reveal.
Probes return the true label of any structure.  A wrong guess returns a
genuine counterexample (the smallest structure index where the guessed
rule and the secret disagree, revealed with its true label); a guess
equivalent to the secret wins and reveals the secret text.  Open-session
responses never contain the secret.

Sessions live in memory; with a data directory every mutating call is
appended to sessions.jsonl and replayed on startup.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from .grammar import SIMPLE_COUNT, index_rule, render, rule_index, RuleSyntaxError, parse
from .semantics import SemanticMatrix
from .universe import (
    StructureError,
    UNIVERSE_SIZE,
    index_of,
    parse_structure,
    render_structure,
    structure_of,
)

OPEN = "open"
WON = "won"
ABANDONED = "abandoned"

EASY = "easy"  # simple propositions only
FULL = "full"


class SessionNotFound(KeyError):
    pass


class SessionClosed(RuntimeError):
    pass


@dataclass
class Session:
    session_id: str
    secret_rule: int
    difficulty: str
    created_at: float
    revealed: list[dict] = field(default_factory=list)  # {"s": text, "y": label}
    guesses: list[dict] = field(default_factory=list)
    status: str = OPEN
    _seen: dict[str, int] = field(default_factory=dict)

    def reveal(self, text: str, label: int) -> None:
        if text not in self._seen:
            self._seen[text] = label
            self.revealed.append({"s": text, "y": label})

    def public_state(self) -> dict:
        state = {
            "session_id": self.session_id,
            "status": self.status,
            "difficulty": self.difficulty,
            "created_at": self.created_at,
            "reveals": list(self.revealed),
            "guesses": [dict(g) for g in self.guesses],
            "probe_count": len(self.revealed),
        }
        if self.status == WON:
            state["secret"] = render(index_rule(self.secret_rule))
        return state

    def summary(self) -> dict:
        return {
            "session_id": self.session_id,
            "status": self.status,
            "reveal_count": len(self.revealed),
            "guess_count": len(self.guesses),
        }


class GameMaster:
    def __init__(
        self,
        matrix: SemanticMatrix,
        seed: int | None = None,
        log_path: str | Path | None = None,
    ):
        self.matrix = matrix
        self._rng = np.random.default_rng(seed)
        self._lock = threading.RLock()
        self.sessions: dict[str, Session] = {}
        weights = matrix.row_weights()
        # a playable secret needs at least one positive and one negative witness
        playable = (weights > 0) & (weights < UNIVERSE_SIZE)
        self._pools = {
            FULL: np.nonzero(playable)[0],
            EASY: np.nonzero(playable[:SIMPLE_COUNT])[0],
        }
        self._log_path = Path(log_path) if log_path else None
        self._replaying = False
        if self._log_path and self._log_path.exists():
            self._replay_log()

    # -- persistence -------------------------------------------------------

    def _log(self, event: dict) -> None:
        if self._log_path is None or self._replaying:
            return
        with open(self._log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, separators=(",", ":")) + "\n")

    def _replay_log(self) -> None:
        self._replaying = True
        try:
            with open(self._log_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    ev = json.loads(line)
                    kind = ev.get("ev")
                    if kind == "create":
                        session = Session(
                            ev["sid"], int(ev["secret"]), ev["difficulty"], ev["t"]
                        )
                        for text, label in ev["reveals"]:
                            session.reveal(text, int(label))
                        self.sessions[session.session_id] = session
                    elif kind == "probe":
                        self.probe(ev["sid"], ev["s"])
                    elif kind == "guess":
                        self.guess(ev["sid"], ev["rule"])
                    elif kind == "abandon":
                        self.abandon(ev["sid"])
        finally:
            self._replaying = False

    # -- game operations -----------------------------------------------------

    def _session(self, session_id: str, must_be_open: bool = False) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise SessionNotFound(session_id)
        if must_be_open and session.status != OPEN:
            raise SessionClosed(f"session {session_id} is {session.status}")
        return session

    def create_session(self, difficulty: str | None = None) -> dict:
        with self._lock:
            difficulty = difficulty or FULL
            pool = self._pools.get(difficulty)
            if pool is None or pool.size == 0:
                raise ValueError(f"unknown difficulty {difficulty!r}")
            secret = int(pool[self._rng.integers(pool.size)])
            row_bools = self.matrix.row(secret).to_bools()
            positives = np.nonzero(row_bools)[0]
            negatives = np.nonzero(~row_bools)[0]
            pos = int(positives[self._rng.integers(positives.size)])
            neg = int(negatives[self._rng.integers(negatives.size)])
            session_id = "g" + "".join(
                f"{b:02x}" for b in self._rng.integers(0, 256, size=8)
            )
            session = Session(session_id, secret, difficulty, time.time())
            session.reveal(render_structure(structure_of(pos)), 1)
            session.reveal(render_structure(structure_of(neg)), 0)
            self.sessions[session_id] = session
            self._log(
                {
                    "ev": "create",
                    "sid": session_id,
                    "secret": secret,
                    "difficulty": difficulty,
                    "t": session.created_at,
                    "reveals": [[r["s"], r["y"]] for r in session.revealed],
                }
            )
            return session.public_state()

    def probe(self, session_id: str, structure_text: str) -> int:
        with self._lock:
            session = self._session(session_id, must_be_open=True)
            s = parse_structure(structure_text)  # StructureError on bad text
            canonical = render_structure(s)
            if canonical in session._seen:
                return session._seen[canonical]
            label = self.matrix.bit(session.secret_rule, index_of(s))
            session.reveal(canonical, label)
            self._log({"ev": "probe", "sid": session_id, "s": canonical, "y": label})
            return label

    def guess(self, session_id: str, rule_text: str) -> dict:
        with self._lock:
            session = self._session(session_id, must_be_open=True)
            try:
                ast = parse(rule_text)
            except RuleSyntaxError as exc:
                verdict = {"verdict": "malformed", "message": str(exc)}
                session.guesses.append({"rule": rule_text, "verdict": "malformed"})
                self._log({"ev": "guess", "sid": session_id, "rule": rule_text})
                return verdict
            guess_row = self.matrix.row(rule_index(ast))
            secret_row = self.matrix.row(session.secret_rule)
            witness = guess_row.first_difference(secret_row)
            if witness is None:
                session.status = WON
                session.guesses.append({"rule": rule_text, "verdict": "equivalent"})
                self._log({"ev": "guess", "sid": session_id, "rule": rule_text})
                return {
                    "verdict": "equivalent",
                    "secret": render(index_rule(session.secret_rule)),
                }
            true_label = secret_row.bit(witness)
            text = render_structure(structure_of(witness))
            session.reveal(text, true_label)
            session.guesses.append({"rule": rule_text, "verdict": "not_equivalent"})
            self._log({"ev": "guess", "sid": session_id, "rule": rule_text})
            return {
                "verdict": "not_equivalent",
                "counterexample": {"s": text, "y": true_label},
            }

    def abandon(self, session_id: str) -> dict:
        with self._lock:
            session = self._session(session_id, must_be_open=True)
            session.status = ABANDONED
            self._log({"ev": "abandon", "sid": session_id})
            return session.public_state()

    def get_session(self, session_id: str) -> dict:
        with self._lock:
            return self._session(session_id).public_state()

    def list_sessions(self) -> list[dict]:
        with self._lock:
            return [s.summary() for s in self.sessions.values()]


# ---------------------------------------------------------------------------
# HTTP layer


class CreateRequest(BaseModel):
    difficulty: str | None = None


class ProbeRequest(BaseModel):
    s: str


class GuessRequest(BaseModel):
    rule: str


def create_app(master: GameMaster, ui_dir: str | Path | None = None):
    from fastapi import FastAPI, HTTPException
    from fastapi.staticfiles import StaticFiles

    app = FastAPI(title="odeen game master")

    def _get(session_id: str, open_only: bool = False):
        try:
            return master._session(session_id, must_be_open=open_only)
        except SessionNotFound:
            raise HTTPException(404, f"no session {session_id}") from None
        except SessionClosed as exc:
            raise HTTPException(409, str(exc)) from None

    @app.get("/api/health")
    def health() -> dict:
        return {
            "status": "ok",
            "rules": master.matrix.rule_count,
            "sessions": len(master.sessions),
        }

    @app.post("/api/games", status_code=201)
    def create(req: CreateRequest | None = None) -> dict:
        difficulty = req.difficulty if req else None
        try:
            return master.create_session(difficulty)
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from None

    @app.get("/api/games")
    def list_games() -> list[dict]:
        return master.list_sessions()

    @app.get("/api/games/{session_id}")
    def get_game(session_id: str) -> dict:
        _get(session_id)
        return master.get_session(session_id)

    @app.post("/api/games/{session_id}/probe")
    def probe(session_id: str, req: ProbeRequest) -> dict:
        _get(session_id, open_only=True)
        try:
            label = master.probe(session_id, req.s)
        except StructureError as exc:
            raise HTTPException(400, str(exc)) from None
        return {"s": req.s, "y": label}

    @app.post("/api/games/{session_id}/guess")
    def guess(session_id: str, req: GuessRequest) -> dict:
        _get(session_id, open_only=True)
        return master.guess(session_id, req.rule)

    @app.delete("/api/games/{session_id}")
    def abandon(session_id: str) -> dict:
        _get(session_id, open_only=True)
        return master.abandon(session_id)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
