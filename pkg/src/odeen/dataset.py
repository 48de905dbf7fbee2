"""Reproducible training/test split generation.

Every board is guaranteed representative: exactly one rule equivalence
class is consistent with its labels, so an exhaustive consistency filter
recovers the secret rule's class from the board alone.

Training boards start from uniform structure samples and substitute
separating structures until unique.  Test boards start from five pairs
of near-identical structures with different labels (the classic
minimal-perturbation probe), then add structures greedily, each chosen
to eliminate as many still-consistent classes as possible, and pad with
random structures up to the configured size.

All randomness is derived from the split seed; a per-game generator is
seeded by hashing the seed with the game's rule index, so regeneration
is byte-identical no matter how games are scheduled.

Split files are JSON lines, one game per line:

    {"game_id": "...", "rule": "...", "board": [{"s": "Qq....", "y": 1}, ...],
     "eval": ["......", ...], "eval_y": [0, ...]}

A sibling split_meta.json records the configuration and census counts.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .grammar import (
    CONJ_AND,
    Conj,
    QtyKind,
    SIMPLE_COUNT,
    enumerate_rules,
    index_rule,
    relational_count,
    relations,
    render,
    rule_count,
    terminals,
)
from .semantics import SemanticMatrix
from .universe import (
    CELL_KINDS,
    STRUCTURE_LEN,
    UNIVERSE_SIZE,
    index_of,
    parse_structure,
    render_structure,
    structure_of,
)

_PLACE = tuple(CELL_KINDS ** (STRUCTURE_LEN - 1 - p) for p in range(STRUCTURE_LEN))


class DatasetError(ValueError):
    """Bad configuration or malformed split file."""


class BoardGenerationError(RuntimeError):
    """A board could not be disambiguated within its budget."""


@dataclass(frozen=True)
class SplitConfig:
    """Split parameters: n training rules with boards of m structures,
    s test games with boards of k structures and l held-out eval structures."""

    n: int
    m: int
    s: int
    k: int = 32
    l: int = 1176
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("n", "m", "s", "k", "l"):
            if getattr(self, name) <= 0:
                raise DatasetError(f"{name} must be positive")
        if self.k < 2:
            raise DatasetError("test boards need at least 2 structures")
        if self.l + self.k > UNIVERSE_SIZE:
            raise DatasetError("eval size plus board size exceeds the universe")
        if self.m > UNIVERSE_SIZE:
            raise DatasetError("training board size exceeds the universe")


@dataclass(frozen=True)
class Board:
    """Labeled observations of one secret rule; structures never repeat."""

    entries: tuple[tuple[int, int], ...]  # (structure index, label)

    def __post_init__(self) -> None:
        structures = [s for s, _ in self.entries]
        if len(set(structures)) != len(structures):
            raise DatasetError("board contains duplicate structures")

    def structures(self) -> np.ndarray:
        return np.array([s for s, _ in self.entries], dtype=np.int64)

    def labels(self) -> np.ndarray:
        return np.array([y for _, y in self.entries], dtype=np.uint8)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class Game:
    game_id: str
    rule_text: str
    board: Board
    eval_structures: tuple[int, ...]
    eval_labels: tuple[int, ...]


def _derive_seed(seed: int, label: str) -> int:
    h = hashlib.blake2b(digest_size=8)
    h.update(seed.to_bytes(8, "little", signed=False))
    h.update(label.encode())
    return int.from_bytes(h.digest(), "little")


def game_rng(seed: int, label: str) -> np.random.Generator:
    return np.random.default_rng(_derive_seed(seed, label))


# ---------------------------------------------------------------------------
# Consistency filtering


def consistent_classes(
    board: Board | Sequence[tuple[int, int]],
    matrix: SemanticMatrix,
    candidates: np.ndarray | None = None,
) -> np.ndarray:
    """Class representatives whose rows agree with every board label."""
    entries = board.entries if isinstance(board, Board) else tuple(board)
    cand = matrix.class_representatives() if candidates is None else candidates
    for s_idx, y in entries:
        if cand.size == 0:
            break
        cand = cand[matrix.column_bits(s_idx, cand) == y]
    return cand


def verify_representativity(board: Board, matrix: SemanticMatrix) -> int:
    """Number of equivalence classes consistent with the board."""
    return int(consistent_classes(board, matrix).size)


# ---------------------------------------------------------------------------
# Board construction


def _greedy_separators(row, matrix: SemanticMatrix, budget: int) -> list[tuple[int, int]]:
    """Columns that cut the consistent set down to one class, chosen greedily."""
    survivors = matrix.class_representatives()
    used: set[int] = set()
    entries: list[tuple[int, int]] = []
    while survivors.size > 1:
        if len(entries) >= budget:
            raise BoardGenerationError(
                f"{budget} structures cannot disambiguate this rule's class"
            )
        col = _elimination_column(matrix, survivors, row, used)
        y = row.bit(col)
        entries.append((col, y))
        used.add(col)
        survivors = survivors[matrix.column_bits(col, survivors) == y]
    return entries


def make_training_board(
    rule_idx: int, m: int, matrix: SemanticMatrix, rng: np.random.Generator
) -> Board:
    """m uniform structures, then greedy substitutions until exactly one class fits.

    Each substitution replaces a random non-protected entry with the structure
    that eliminates the most surviving classes; replaced slots are protected so
    a separator is never dropped again.  Removing an entry can re-admit classes,
    so uniqueness is always confirmed with a full re-filter.  If substitution
    slots run out (possible only when m barely exceeds the class's separating
    set), the board is rebuilt as greedy separators plus random filler.
    """
    row = matrix.row(rule_idx)
    structures = [int(s) for s in rng.choice(UNIVERSE_SIZE, size=m, replace=False)]
    labels = [row.bit(s) for s in structures]
    on_board = set(structures)
    protected: set[int] = set()  # entry slots holding separating structures

    survivors = consistent_classes(list(zip(structures, labels)), matrix)
    while survivors.size > 1:
        free = [i for i in range(m) if i not in protected]
        if not free:
            entries = _greedy_separators(row, matrix, budget=m)
            on_board = {s for s, _ in entries}
            while len(entries) < m:
                s = int(rng.integers(UNIVERSE_SIZE))
                if s not in on_board:
                    entries.append((s, row.bit(s)))
                    on_board.add(s)
            return Board(tuple(entries))
        sep = _elimination_column(matrix, survivors, row, on_board)
        slot = int(free[rng.integers(len(free))])
        on_board.discard(structures[slot])
        structures[slot] = sep
        labels[slot] = row.bit(sep)
        on_board.add(sep)
        protected.add(slot)
        survivors = survivors[matrix.column_bits(sep, survivors) == labels[slot]]
        if survivors.size <= 1:
            # the removed entry may have re-admitted classes; confirm from scratch
            survivors = consistent_classes(list(zip(structures, labels)), matrix)
    return Board(tuple(zip(structures, labels)))


def _mutate_cell(s_idx: int, pos: int, new_code: int) -> int:
    old_code = (s_idx // _PLACE[pos]) % CELL_KINDS
    return s_idx + (new_code - old_code) * _PLACE[pos]


def _random_similar(
    row, rng: np.random.Generator, used: set[int], cells_changed: int
) -> tuple[int, int] | None:
    """One random attempt at a label-discordant pair differing in N cells."""
    a = int(rng.integers(UNIVERSE_SIZE))
    b = a
    positions = rng.choice(STRUCTURE_LEN, size=cells_changed, replace=False)
    for pos in positions:
        old = (b // _PLACE[pos]) % CELL_KINDS
        new = int(rng.integers(CELL_KINDS - 1))
        if new >= old:
            new += 1
        b = _mutate_cell(b, int(pos), new)
    if a in used or b in used or a == b:
        return None
    ya, yb = row.bit(a), row.bit(b)
    if ya == yb:
        return None
    return (a, b)


def _constructive_pair(row, used: set[int]) -> tuple[int, int]:
    """Walk from a negative to a positive structure; some step flips the label."""
    bools = row.to_bools()
    positives = np.nonzero(bools)[0]
    negatives = np.nonzero(~bools)[0]
    if positives.size == 0 or negatives.size == 0:
        raise BoardGenerationError("rule labels every structure identically")
    for neg in negatives[:64]:
        cur = int(neg)
        target = int(positives[0])
        for pos in range(STRUCTURE_LEN):
            want = (target // _PLACE[pos]) % CELL_KINDS
            have = (cur // _PLACE[pos]) % CELL_KINDS
            if want == have:
                continue
            nxt = _mutate_cell(cur, pos, want)
            if row.bit(nxt) != row.bit(cur):
                if cur not in used and nxt not in used:
                    return (cur, nxt)
                break  # pair collides with the board, try another start
            cur = nxt
    raise BoardGenerationError("could not find a fresh label-discordant pair")


def _discordant_pair(row, rng: np.random.Generator, used: set[int]) -> tuple[int, int]:
    for _ in range(4000):
        pair = _random_similar(row, rng, used, cells_changed=1)
        if pair:
            return pair
    for _ in range(4000):  # fallback: two-cell perturbation
        pair = _random_similar(row, rng, used, cells_changed=2)
        if pair:
            return pair
    return _constructive_pair(row, used)


def _elimination_column(
    matrix: SemanticMatrix, survivors: np.ndarray, secret_row, used: set[int]
) -> int:
    """Structure index eliminating the most surviving classes (first argmax)."""
    counts = np.zeros(matrix.packed.shape[1] * 8, dtype=np.int64)
    chunk = 512
    secret = secret_row.packed[None, :]
    for start in range(0, survivors.size, chunk):
        diff = matrix.packed[survivors[start : start + chunk]] ^ secret
        counts += np.unpackbits(diff, axis=1, bitorder="little").sum(axis=0, dtype=np.int64)
    counts = counts[:UNIVERSE_SIZE]
    if used:
        counts[np.fromiter(used, dtype=np.int64)] = -1
    col = int(np.argmax(counts))
    if counts[col] <= 0:
        raise BoardGenerationError("no structure separates the surviving classes")
    return col


def make_test_board(
    rule_idx: int, k: int, matrix: SemanticMatrix, rng: np.random.Generator
) -> Board:
    """Five discordant near-pairs, greedy disambiguation, random padding."""
    row = matrix.row(rule_idx)
    n_pairs = min(5, (k - 2) // 2)
    entries: list[tuple[int, int]] = []
    used: set[int] = set()
    for _ in range(n_pairs):
        a, b = _discordant_pair(row, rng, used)
        entries.append((a, row.bit(a)))
        entries.append((b, row.bit(b)))
        used.update((a, b))

    budget = k - len(entries)
    added = 0
    survivors = consistent_classes(entries, matrix)
    while survivors.size > 1:
        if added >= budget:
            raise BoardGenerationError(
                f"board for rule {rule_idx} still ambiguous after {budget} additions"
            )
        col = _elimination_column(matrix, survivors, row, used)
        y = row.bit(col)
        entries.append((col, y))
        used.add(col)
        survivors = survivors[matrix.column_bits(col, survivors) == y]
        added += 1
    if survivors.size == 0:
        raise BoardGenerationError(f"board for rule {rule_idx} eliminated every class")

    while len(entries) < k:
        s = int(rng.integers(UNIVERSE_SIZE))
        if s in used:
            continue
        entries.append((s, row.bit(s)))
        used.add(s)
    return Board(tuple(entries))


# ---------------------------------------------------------------------------
# Rule selection


def _is_exactly2_conjunction(ast: Conj) -> bool:
    """Conjunction meaning "exactly 2 X": at_least 2 X and at_most 2 X, either order."""
    if ast.op != CONJ_AND:
        return False
    left, right = ast.left, ast.right
    if left.obj != right.obj:
        return False
    kinds = {left.qty.kind, right.qty.kind}
    nums = (left.qty.num, right.qty.num)
    return kinds == {QtyKind.AT_LEAST, QtyKind.AT_MOST} and nums == (2, 2)


def training_eligible(rule_idx: int, text: str, ast) -> bool:
    """Training may not contain the held-out "exactly 2" concept."""
    if "exactly 2" in text:
        return False
    if isinstance(ast, Conj) and _is_exactly2_conjunction(ast):
        return False
    return True


def _rule_construct(rule_idx: int) -> str:
    if rule_idx < SIMPLE_COUNT:
        return "simple"
    if rule_idx < SIMPLE_COUNT + relational_count():
        return "relational"
    conj_offset = rule_idx - SIMPLE_COUNT - relational_count()
    return "conj-and" if (conj_offset // SIMPLE_COUNT) % 2 == 0 else "conj-or"


@lru_cache(maxsize=2)
def _texts_for(rels: tuple[str, ...]) -> tuple[str, ...]:
    return tuple(render(ast) for ast in enumerate_rules())


def all_rule_texts() -> tuple[str, ...]:
    """Canonical text of every rule, index order; cached per grammar config."""
    return _texts_for(relations())


def select_training_rules(
    n: int, matrix: SemanticMatrix, rng: np.random.Generator
) -> list[int]:
    """Pick n training rules: cover every terminal and construct, fill uniformly.

    Rules containing "exactly 2", or conjoining at_least 2 and at_most 2 of
    one object, are excluded outright so the concept stays test-only.
    """
    texts = all_rule_texts()
    eligible = [
        i for i, text in enumerate(texts)
        if training_eligible(i, text, index_rule(i))
    ]
    targets: list[str] = sorted(terminals()) + ["simple", "relational", "conj-and", "conj-or"]
    by_target: dict[str, list[int]] = {t: [] for t in targets}
    for i in eligible:
        for tok in set(texts[i].split(" ")):
            if tok in by_target:
                by_target[tok].append(i)
        by_target[_rule_construct(i)].append(i)

    covered: set[str] = set()
    selected: list[int] = []
    selected_set: set[int] = set()
    for target in targets:
        if target in covered:
            continue
        candidates = [i for i in by_target[target] if i not in selected_set]
        if not candidates:
            raise DatasetError(f"no eligible training rule covers {target!r}")
        pick = candidates[int(rng.integers(len(candidates)))]
        selected.append(pick)
        selected_set.add(pick)
        covered.update(texts[pick].split(" "))
        covered.add(_rule_construct(pick))
    if len(selected) > n:
        raise DatasetError(
            f"n={n} too small: covering every terminal and construct needs "
            f"{len(selected)} rules"
        )
    if n > len(eligible):
        raise DatasetError(f"n={n} exceeds the {len(eligible)} eligible training rules")

    remaining = [i for i in eligible if i not in selected_set]
    fill = rng.choice(len(remaining), size=n - len(selected), replace=False)
    selected.extend(remaining[int(j)] for j in fill)
    return sorted(selected)


# ---------------------------------------------------------------------------
# Split generation


def _sample_eval(
    rng: np.random.Generator, count: int, exclude: set[int]
) -> tuple[int, ...]:
    draw = rng.choice(UNIVERSE_SIZE, size=count + len(exclude), replace=False)
    picked = [int(s) for s in draw if int(s) not in exclude][:count]
    if len(picked) < count:  # cannot happen for sane configs
        raise DatasetError("universe exhausted while sampling eval structures")
    return tuple(picked)


def _make_game(
    game_id: str,
    rule_idx: int,
    board: Board,
    l: int,
    matrix: SemanticMatrix,
    rng: np.random.Generator,
    text: str,
) -> Game:
    row = matrix.row(rule_idx)
    eval_structures = _sample_eval(rng, l, {s for s, _ in board.entries})
    eval_labels = tuple(int(b) for b in row.bits(np.array(eval_structures, dtype=np.int64)))
    return Game(game_id, text, board, eval_structures, eval_labels)


@dataclass
class Split:
    train: list[Game]
    test: list[Game]
    meta: dict


def generate_split(cfg: SplitConfig, matrix: SemanticMatrix) -> Split:
    if matrix.rule_count != rule_count():
        raise DatasetError("matrix does not match the current grammar")
    texts = all_rule_texts()
    rep_map = matrix.class_rep_map()
    weights = matrix.row_weights()

    rng_select = game_rng(cfg.seed, "train-select")
    train_rules = select_training_rules(cfg.n, matrix, rng_select)
    train_games = []
    for i, r in enumerate(train_rules):
        rng = game_rng(cfg.seed, f"train-game-{r}")
        board = make_training_board(r, cfg.m, matrix, rng)
        train_games.append(_make_game(f"train-{i:05d}", r, board, cfg.l, matrix, rng, texts[r]))

    train_reps = {int(rep_map[r]) for r in train_rules}
    # Constant rows cannot yield discordant pairs, so they never become secrets.
    eligible = [
        i for i in range(rule_count())
        if int(rep_map[i]) not in train_reps and 0 < weights[i] < UNIVERSE_SIZE
    ]
    rng_test = game_rng(cfg.seed, "test-select")
    order = rng_test.permutation(len(eligible))

    test_games: list[Game] = []
    used_reps: set[int] = set()
    exactly2 = 0
    for j in order:
        if len(test_games) == cfg.s:
            break
        r = eligible[int(j)]
        rep = int(rep_map[r])
        if rep in used_reps:
            continue
        board = None
        for attempt in range(8):
            rng = game_rng(cfg.seed, f"test-game-{r}-{attempt}")
            try:
                board = make_test_board(r, cfg.k, matrix, rng)
                break
            except BoardGenerationError:
                continue
        if board is None:
            continue  # hopeless rule, skip it
        used_reps.add(rep)
        game_id = f"test-{len(test_games):05d}"
        test_games.append(_make_game(game_id, r, board, cfg.l, matrix, rng, texts[r]))
        if "exactly 2" in texts[r]:
            exactly2 += 1
    if len(test_games) < cfg.s:
        raise DatasetError(
            f"only {len(test_games)} of {cfg.s} test games could be generated: "
            "not enough unused equivalence classes"
        )

    def rate_stats(games: list[Game]) -> dict:
        rates = [float(g.board.labels().mean()) for g in games]
        return {
            "mean": round(float(np.mean(rates)), 6),
            "min": round(min(rates), 6),
            "max": round(max(rates), 6),
        }

    meta = {
        "config": asdict(cfg),
        "rule_count": rule_count(),
        "class_count": len(matrix.classes()),
        "train_games": len(train_games),
        "test_games": len(test_games),
        "train_classes": len(train_reps),
        "test_rules_with_exactly_2": exactly2,
        "train_board_positive_rate": rate_stats(train_games),
        "test_board_positive_rate": rate_stats(test_games),
    }
    return Split(train_games, test_games, meta)


# ---------------------------------------------------------------------------
# File I/O


def game_to_dict(game: Game) -> dict:
    return {
        "game_id": game.game_id,
        "rule": game.rule_text,
        "board": [
            {"s": render_structure(structure_of(s)), "y": int(y)}
            for s, y in game.board.entries
        ],
        "eval": [render_structure(structure_of(s)) for s in game.eval_structures],
        "eval_y": [int(y) for y in game.eval_labels],
    }


def game_from_dict(obj: dict) -> Game:
    try:
        board = Board(
            tuple(
                (index_of(parse_structure(e["s"])), int(e["y"])) for e in obj["board"]
            )
        )
        eval_structures = tuple(index_of(parse_structure(t)) for t in obj["eval"])
        eval_labels = tuple(int(y) for y in obj["eval_y"])
        game = Game(str(obj["game_id"]), str(obj["rule"]), board, eval_structures, eval_labels)
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"malformed game record: {exc}") from exc
    if len(game.eval_structures) != len(game.eval_labels):
        raise DatasetError(f"game {game.game_id}: eval/eval_y length mismatch")
    labels = list(game.eval_labels) + [y for _, y in game.board.entries]
    if any(y not in (0, 1) for y in labels):
        raise DatasetError(f"game {game.game_id}: labels must be 0 or 1")
    return game


def write_games(games: Iterable[Game], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for game in games:
            fh.write(json.dumps(game_to_dict(game), separators=(",", ":")) + "\n")


def read_games(path: str | Path) -> list[Game]:
    games = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            games.append(game_from_dict(obj))
    return games


def write_split(split: Split, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "train": out / "train.jsonl",
        "test": out / "test.jsonl",
        "meta": out / "split_meta.json",
    }
    write_games(split.train, paths["train"])
    write_games(split.test, paths["test"])
    with open(paths["meta"], "w", encoding="utf-8") as fh:
        json.dump(split.meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths
