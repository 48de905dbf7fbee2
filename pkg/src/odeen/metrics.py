"""Official scoring for a solver run over a set of games.

Per game, a prediction is an eval-length tag vector (plus optionally the
rule text that produced it).  Three scores are reported:

    nearest-rule score   the tag vector is strictly closer (Hamming) to the
                         secret's vector than to every other distinct tag
                         vector realized by some rule on the eval columns
    tagging accuracy     mean fraction of correct tags
    rule accuracy        the output rule is semantically equivalent to the
                         secret (identical full truth rows)

Unknown predictions count as failures for the first and third scores and
are excluded from the tagging mean (reported as unknown_rate) unless the
majority-label fallback is requested, which tags everything with the
board's majority label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import Game
from .grammar import parse, rule_index, try_parse
from .semantics import SemanticMatrix
from .solvers import Prediction

UNKNOWN_EXCLUDE = "exclude"
UNKNOWN_MAJORITY = "majority"


class MetricsError(ValueError):
    """Predictions do not line up with the games."""


def hamming(v: Sequence[int], w: Sequence[int]) -> int:
    """Number of differing positions; lengths must match."""
    if len(v) != len(w):
        raise MetricsError(f"length mismatch: {len(v)} vs {len(w)}")
    va = np.asarray(v, dtype=np.uint8)
    wa = np.asarray(w, dtype=np.uint8)
    return int((va != wa).sum())


def golden_tags(game: Game, matrix: SemanticMatrix) -> np.ndarray:
    """The secret rule's labels on the game's eval structures."""
    idx = rule_index(parse(game.rule_text))
    return matrix.row(idx).bits(np.asarray(game.eval_structures, dtype=np.int64))


def _realized_vectors(game: Game, matrix: SemanticMatrix) -> np.ndarray:
    """Tag vectors of every equivalence class on the eval columns."""
    reps = matrix.class_representatives()
    cols = np.asarray(game.eval_structures, dtype=np.int64)
    return matrix.rows_at(reps, cols)


def nrs_game(tags: Sequence[int] | None, game: Game, matrix: SemanticMatrix) -> bool:
    """Strictly nearest to the golden vector among all realized distinct vectors."""
    if tags is None:
        return False
    golden = golden_tags(game, matrix)
    v = np.asarray(tags, dtype=np.uint8)
    if v.shape != golden.shape:
        raise MetricsError(
            f"game {game.game_id}: tag vector length {v.size} != eval size {golden.size}"
        )
    own = int((v != golden).sum())
    if own == 0:
        return True  # distance 0 strictly beats every distinct vector
    realized = _realized_vectors(game, matrix)
    d_v = (realized != v[None, :]).sum(axis=1)
    d_golden = (realized != golden[None, :]).sum(axis=1)
    rivals = d_v[d_golden > 0]  # vectors equal to the golden one are not rivals
    if rivals.size == 0:
        return True
    return own < int(rivals.min())


def t_acc_game(tags: Sequence[int], game: Game, matrix: SemanticMatrix) -> float:
    golden = golden_tags(game, matrix)
    return 1.0 - hamming(tags, list(golden)) / golden.size


def r_acc_game(
    rule_text: str | None, game: Game, matrix: SemanticMatrix
) -> bool:
    """Semantic equivalence of the output rule with the secret one."""
    if rule_text is None:
        return False
    ast = try_parse(rule_text)
    if ast is None:
        return False
    golden_idx = rule_index(parse(game.rule_text))
    return bool(
        np.array_equal(matrix.packed[rule_index(ast)], matrix.packed[golden_idx])
    )


@dataclass
class MetricsReport:
    games: int
    nrs: float
    t_acc: float | None
    r_acc: float
    unknown_rate: float
    mean_cg_calls: float | None
    mean_i_calls: float | None
    mean_wall_seconds: float | None
    tagged_games: int

    def to_dict(self) -> dict:
        return {
            "games": self.games,
            "nrs": self.nrs,
            "t_acc": self.t_acc,
            "r_acc": self.r_acc,
            "unknown_rate": self.unknown_rate,
            "tagged_games": self.tagged_games,
            "mean_cg_calls": self.mean_cg_calls,
            "mean_i_calls": self.mean_i_calls,
            "mean_wall_seconds": self.mean_wall_seconds,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self) -> str:
        def fmt(x: float | None) -> str:
            return "-" if x is None else f"{x:.3f}"

        header = f"{'games':>6}  {'NRS':>6}  {'T-Acc':>6}  {'R-Acc':>6}  {'unknown':>8}"
        values = (
            f"{self.games:>6}  {self.nrs:>6.3f}  {fmt(self.t_acc):>6}  "
            f"{self.r_acc:>6.3f}  {self.unknown_rate:>8.3f}"
        )
        lines = [header, values]
        if self.mean_i_calls is not None:
            lines.append(
                f"mean cost per game: cg_calls={fmt(self.mean_cg_calls)} "
                f"i_calls={fmt(self.mean_i_calls)} wall={fmt(self.mean_wall_seconds)}s"
            )
        return "\n".join(lines)


def score_run(
    games: Sequence[Game],
    predictions: Sequence[Prediction],
    matrix: SemanticMatrix,
    unknown_policy: str = UNKNOWN_EXCLUDE,
) -> MetricsReport:
    """Aggregate the per-game scores; one prediction per game, matched by id."""
    if unknown_policy not in (UNKNOWN_EXCLUDE, UNKNOWN_MAJORITY):
        raise MetricsError(f"unknown policy {unknown_policy!r}")
    if len(games) != len(predictions):
        raise MetricsError(f"{len(games)} games but {len(predictions)} predictions")
    by_id = {p.game_id: p for p in predictions}
    if len(by_id) != len(predictions):
        raise MetricsError("duplicate game ids in predictions")

    nrs_hits = 0
    r_hits = 0
    unknowns = 0
    t_accs: list[float] = []
    cg, icalls, wall = [], [], []
    for game in games:
        pred = by_id.get(game.game_id)
        if pred is None:
            raise MetricsError(f"no prediction for game {game.game_id}")
        tags = pred.tags
        if pred.is_unknown:
            unknowns += 1
            if unknown_policy == UNKNOWN_MAJORITY:
                majority = 1 if game.board.labels().mean() >= 0.5 else 0
                tags = (majority,) * len(game.eval_structures)
        if tags is not None:
            if nrs_game(tags, game, matrix):
                nrs_hits += 1
            t_accs.append(t_acc_game(tags, game, matrix))
        if r_acc_game(pred.rule, game, matrix):
            r_hits += 1
        if pred.costs is not None:
            cg.append(pred.costs.cg_calls)
            icalls.append(pred.costs.i_calls)
            wall.append(pred.costs.wall_seconds)

    n = len(games)
    return MetricsReport(
        games=n,
        nrs=nrs_hits / n,
        t_acc=(sum(t_accs) / len(t_accs)) if t_accs else None,
        r_acc=r_hits / n,
        unknown_rate=unknowns / n,
        mean_cg_calls=(sum(cg) / len(cg)) if cg else None,
        mean_i_calls=(sum(icalls) / len(icalls)) if icalls else None,
        mean_wall_seconds=(sum(wall) / len(wall)) if wall else None,
        tagged_games=n - unknowns,
    )


# ---------------------------------------------------------------------------
# Predictions file: JSONL {"game_id", "rule", "tags"} plus optional costs


def prediction_to_dict(pred: Prediction) -> dict:
    out = {
        "game_id": pred.game_id,
        "rule": pred.rule,
        "tags": list(pred.tags) if pred.tags is not None else None,
    }
    if pred.costs is not None:
        out["costs"] = {
            "cg_calls": pred.costs.cg_calls,
            "i_calls": pred.costs.i_calls,
            "wall_seconds": round(pred.costs.wall_seconds, 6),
        }
    if pred.distinct_conjectures is not None:
        out["distinct_conjectures"] = pred.distinct_conjectures
    return out


def write_predictions(predictions: Sequence[Prediction], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pred in predictions:
            fh.write(json.dumps(prediction_to_dict(pred), separators=(",", ":")) + "\n")


def read_predictions(path) -> list[Prediction]:
    from .solvers import CostCounter

    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                costs = obj.get("costs") or {}
                out.append(
                    Prediction(
                        game_id=str(obj["game_id"]),
                        rule=obj["rule"],
                        tags=tuple(obj["tags"]) if obj["tags"] is not None else None,
                        costs=CostCounter(
                            cg_calls=int(costs.get("cg_calls", 0)),
                            i_calls=int(costs.get("i_calls", 0)),
                            wall_seconds=float(costs.get("wall_seconds", 0.0)),
                        ),
                        distinct_conjectures=obj.get("distinct_conjectures"),
                    )
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise MetricsError(f"{path}:{line_no}: bad prediction record: {exc}") from exc
    return out
