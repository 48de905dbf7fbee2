import json

import pytest

from odeen.grammar import SIMPLE_COUNT, index_rule, parse, render, rule_index
from odeen.service import GameMaster, create_app
from odeen.universe import index_of, parse_structure


@pytest.fixture()
def master(matrix, tmp_path):
    return GameMaster(matrix, seed=1234, log_path=tmp_path / "sessions.jsonl")


@pytest.fixture()
def client(master):
    from fastapi.testclient import TestClient

    return TestClient(create_app(master))


def secret_text(master, sid) -> str:
    return render(index_rule(master.sessions[sid].secret_rule))


def test_health(client):
    r = client.get("/api/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_create_session_seed_reveals(client, master, matrix):
    r = client.post("/api/games", json={})
    assert r.status_code == 201
    state = r.json()
    assert state["status"] == "open"
    labels = [rv["y"] for rv in state["reveals"]]
    assert sorted(labels) == [0, 1]
    secret = master.sessions[state["session_id"]].secret_rule
    for rv in state["reveals"]:
        idx = index_of(parse_structure(rv["s"]))
        assert matrix.bit(secret, idx) == rv["y"]


def test_easy_difficulty_draws_simple_rules(client, master):
    for _ in range(5):
        state = client.post("/api/games", json={"difficulty": "easy"}).json()
        assert master.sessions[state["session_id"]].secret_rule < SIMPLE_COUNT


def test_unknown_difficulty(client):
    assert client.post("/api/games", json={"difficulty": "brutal"}).status_code == 400


def test_secret_never_leaks_while_open(client, master):
    state = client.post("/api/games", json={}).json()
    sid = state["session_id"]
    secret = secret_text(master, sid)
    payloads = [state]
    payloads.append(client.post(f"/api/games/{sid}/probe", json={"s": "......"}).json())
    payloads.append(client.post(f"/api/games/{sid}/guess", json={"rule": "zero red"}).json())
    payloads.append(client.get(f"/api/games/{sid}").json())
    payloads.append(client.get("/api/games").json())
    for payload in payloads:
        assert secret not in json.dumps(payload)
        assert str(master.sessions[sid].secret_rule) not in json.dumps(payload).replace(
            sid, ""
        )


def test_probe(client, master, matrix):
    state = client.post("/api/games", json={}).json()
    sid = state["session_id"]
    secret = master.sessions[sid].secret_rule
    r = client.post(f"/api/games/{sid}/probe", json={"s": "Qq...."})
    assert r.status_code == 200
    y = r.json()["y"]
    assert y == matrix.bit(secret, index_of(parse_structure("Qq....")))
    # idempotent: probing again returns the stored label without duplication
    before = len(master.sessions[sid].revealed)
    y2 = client.post(f"/api/games/{sid}/probe", json={"s": "Qq...."}).json()["y"]
    assert y2 == y
    assert len(master.sessions[sid].revealed) == before


def test_probe_rejects_malformed(client):
    sid = client.post("/api/games", json={}).json()["session_id"]
    assert client.post(f"/api/games/{sid}/probe", json={"s": "ab"}).status_code == 400
    assert client.post(f"/api/games/{sid}/probe", json={"s": "xxxxxx"}).status_code == 400


def test_probe_zero_red_on_empty(client, master, matrix):
    # a secret of "zero red" must tag the all-empty structure green
    sid = client.post("/api/games", json={}).json()["session_id"]
    master.sessions[sid].secret_rule = rule_index(parse("zero red"))
    y = client.post(f"/api/games/{sid}/probe", json={"s": "......"}).json()["y"]
    assert y == 1


def test_wrong_guess_returns_genuine_counterexample(client, master, matrix):
    sid = client.post("/api/games", json={}).json()["session_id"]
    secret = master.sessions[sid].secret_rule
    guess = "zero red" if secret != rule_index(parse("zero red")) else "zero blue"
    v = client.post(f"/api/games/{sid}/guess", json={"rule": guess}).json()
    assert v["verdict"] == "not_equivalent"
    cx = v["counterexample"]
    j = index_of(parse_structure(cx["s"]))
    assert matrix.bit(secret, j) == cx["y"]
    assert matrix.bit(rule_index(parse(guess)), j) != cx["y"]
    # the smallest disagreeing structure index is chosen
    assert j == matrix.row(rule_index(parse(guess))).first_difference(matrix.row(secret))
    # counterexample lands in the revealed list with its true label
    state = client.get(f"/api/games/{sid}").json()
    assert {"s": cx["s"], "y": cx["y"]} in state["reveals"]


def test_equivalent_paraphrase_wins(client, master):
    sid = client.post("/api/games", json={}).json()["session_id"]
    master.sessions[sid].secret_rule = rule_index(
        parse("exactly 1 pyramid pointing_up")
    )
    v = client.post(
        f"/api/games/{sid}/guess",
        json={"rule": "at_least 1 pyramid pointing_up and at_most 1 pyramid pointing_up"},
    ).json()
    assert v["verdict"] == "equivalent"
    assert v["secret"] == "exactly 1 pyramid pointing_up"
    state = client.get(f"/api/games/{sid}").json()
    assert state["status"] == "won"
    assert state["secret"] == "exactly 1 pyramid pointing_up"
    # a won session is closed: no further probes or guesses
    assert client.post(f"/api/games/{sid}/probe", json={"s": "......"}).status_code == 409
    assert client.post(f"/api/games/{sid}/guess", json={"rule": "zero red"}).status_code == 409


def test_malformed_guess_is_a_verdict(client):
    sid = client.post("/api/games", json={}).json()["session_id"]
    v = client.post(
        f"/api/games/{sid}/guess", json={"rule": "at least one pointing up"}
    ).json()
    assert v["verdict"] == "malformed"
    assert "quantifier" in v["message"]


def test_closed_session_and_missing_session(client, master):
    sid = client.post("/api/games", json={}).json()["session_id"]
    client.delete(f"/api/games/{sid}")
    assert master.sessions[sid].status == "abandoned"
    assert client.post(f"/api/games/{sid}/probe", json={"s": "......"}).status_code == 409
    assert client.post(f"/api/games/{sid}/guess", json={"rule": "zero red"}).status_code == 409
    assert client.get("/api/games/missing").status_code == 404
    assert client.delete(f"/api/games/{sid}").status_code == 409


def test_list_sessions(client):
    a = client.post("/api/games", json={}).json()["session_id"]
    b = client.post("/api/games", json={}).json()["session_id"]
    assert a != b
    summaries = client.get("/api/games").json()
    ids = {s["session_id"] for s in summaries}
    assert {a, b} <= ids
    for s in summaries:
        assert set(s) == {"session_id", "status", "reveal_count", "guess_count"}


def test_log_replay_restores_state(matrix, tmp_path):
    log = tmp_path / "sessions.jsonl"
    master = GameMaster(matrix, seed=5, log_path=log)
    state = master.create_session()
    sid = state["session_id"]
    master.probe(sid, "......")
    master.guess(sid, "zero red")
    secret = master.sessions[sid].secret_rule

    restored = GameMaster(matrix, seed=999, log_path=log)
    session = restored.sessions[sid]
    assert session.secret_rule == secret
    assert session.status == master.sessions[sid].status
    assert session.revealed == master.sessions[sid].revealed
    assert session.guesses == master.sessions[sid].guesses


def test_static_ui_bundle_served(matrix, tmp_path):
    from pathlib import Path

    from fastapi.testclient import TestClient

    ui_dir = Path(__file__).resolve().parents[1] / "frontend" / "dist"
    if not ui_dir.is_dir():
        pytest.skip("frontend bundle not built")
    master = GameMaster(matrix, seed=0)
    client = TestClient(create_app(master, ui_dir=ui_dir))
    page = client.get("/")
    assert page.status_code == 200
    assert "Odeen" in page.text
    js = client.get("/js/main.js")
    assert js.status_code == 200
    # the API stays reachable alongside the static mount
    assert client.get("/api/health").status_code == 200
