"""Command-line front end for the whole pipeline.

Exit codes: 0 success, 1 usage, 2 data or format error, 3 plugin or
protocol error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from . import dataset as ds
from . import grammar, metrics, semantics, solvers
from .grammar import PUBLISHED_RULE_COUNT, RuleSyntaxError
from .semantics import MatrixFormatError, SemanticMatrix
from .solvers import SolverConfig, SolverError
from .universe import UNIVERSE_SIZE, StructureError


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _say(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _data_dir(args) -> Path:
    return Path(args.data_dir or os.environ.get("ODEEN_DATA_DIR", "."))


def _matrix_path(args) -> Path:
    if args.matrix:
        return Path(args.matrix)
    return _data_dir(args) / "matrix.bin"


def _load_matrix(args) -> SemanticMatrix:
    path = _matrix_path(args)
    if not path.exists():
        raise MatrixFormatError(
            f"no matrix at {path}; run 'odeen matrix build --out {path}' first"
        )
    return SemanticMatrix.load(path)


def _add_matrix_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--matrix", help="matrix file (default: DATA_DIR/matrix.bin)")


def _add_seed_arg(p: argparse.ArgumentParser) -> None:
    # a subcommand --seed overrides the global one when given
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed")


def _add_data_dir_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data-dir", default=argparse.SUPPRESS, help="artifact directory")


# ---------------------------------------------------------------------------
# Subcommands


def cmd_enumerate(args) -> int:
    counts = grammar.category_counts()
    gap = PUBLISHED_RULE_COUNT - counts["total"]
    print(f"universe: {UNIVERSE_SIZE} structures (7^6)")
    print(
        "rules: simple {simple}, relational {relational}, "
        "conjunction {conjunction}, total {total}".format(**counts)
    )
    print(f"published reference total: {PUBLISHED_RULE_COUNT}")
    if gap:
        print(
            f"discrepancy: {gap} rules; equals one extra relation alternative "
            f"(98 x 4 x 14 = 5488 relational rules gives "
            f"{counts['simple'] + 5488 + counts['conjunction']}). "
            "register_relation() reproduces that grammar."
        )
    return 0


def cmd_matrix(args) -> int:
    if args.action == "build":
        out = Path(args.out) if args.out else _matrix_path(args)
        _say("building semantic matrix (about 23k rules x 117k structures)...")
        matrix = semantics.build_matrix()
        out.parent.mkdir(parents=True, exist_ok=True)
        matrix.save(out)
        _say(f"wrote {out} ({out.stat().st_size} bytes)")
        return 0

    matrix = _load_matrix(args)
    if args.action == "stats":
        rw = matrix.row_weights()
        cw = matrix.column_weights()
        classes = matrix.classes()
        largest = max(classes, key=lambda c: len(c.members))
        print(
            f"matrix: {matrix.rule_count} rules x {matrix.structure_count} structures"
        )
        print(f"equivalence classes: {len(classes)} (largest has {len(largest.members)} members)")
        print(
            f"rule rows satisfying everything: {int((rw == matrix.structure_count).sum())}, "
            f"nothing: {int((rw == 0).sum())}"
        )
        print(
            f"column weights: min {int(cw.min())}, max {int(cw.max())} "
            "(published reference band: 10000-14000; depends on relation semantics)"
        )
        return 0

    if args.action == "export":
        out_dir = Path(args.out_dir or args.out or _data_dir(args))
        out_dir.mkdir(parents=True, exist_ok=True)
        texts = ds.all_rule_texts()
        rw = matrix.row_weights()
        with open(out_dir / "rule_weights.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rule_index", "canonical_text", "weight"])
            for i, text in enumerate(texts):
                w.writerow([i, text, int(rw[i])])
        cw = matrix.column_weights()
        from .universe import render_structure, structure_of

        with open(out_dir / "structure_weights.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["structure_index", "text", "weight"])
            for j in range(matrix.structure_count):
                w.writerow([j, render_structure(structure_of(j)), int(cw[j])])
        with open(out_dir / "classes.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["representative", "size", "weight", "representative_text"])
            for c in matrix.classes():
                w.writerow(
                    [c.representative, len(c.members), int(rw[c.representative]),
                     texts[c.representative]]
                )
        _say(f"wrote rule_weights.csv, structure_weights.csv, classes.csv to {out_dir}")
        return 0
    raise AssertionError(args.action)


def cmd_dataset(args) -> int:
    matrix = _load_matrix(args)
    cfg = ds.SplitConfig(n=args.n, m=args.m, s=args.s, k=args.k, l=args.l, seed=args.seed)
    _say(f"generating split {cfg} ...")
    split = ds.generate_split(cfg, matrix)
    paths = ds.write_split(split, args.out)
    _say(
        f"wrote {len(split.train)} training and {len(split.test)} test games to "
        f"{paths['train'].parent}"
    )
    return 0


def _conjecture_source(args):
    if args.plugin:
        from .plugin import PluginClient, PluginConjectureSource

        client = PluginClient(args.plugin, timeout=args.plugin_timeout).start()
        return PluginConjectureSource(client), client
    if args.cg == "uniform":
        return solvers.UniformSource(), None
    if args.cg == "enumeration":
        return solvers.EnumerationSource(), None
    raise SolverError(f"no conjecture source named {args.cg!r}")


def cmd_solve(args) -> int:
    games = ds.read_games(args.games)
    predictions = []
    if args.solver == "exhaustive":
        matrix = _load_matrix(args)
        for game in games:
            predictions.append(solvers.exhaustive_solve(game, matrix))
    else:
        cfg = SolverConfig(
            t=args.t,
            mode=solvers.STRICT if args.mode == "strict" else solvers.BEST_HIT_RATE,
        )
        cg, cg_client = _conjecture_source(args)
        interp = None
        interp_client = None
        if args.interpreter_plugin:
            from .plugin import PluginClient, PluginInterpreter

            interp_client = PluginClient(
                args.interpreter_plugin, timeout=args.plugin_timeout
            ).start()
            interp = PluginInterpreter(interp_client)
        try:
            for game in games:
                seed = ds._derive_seed(args.seed, f"solve-{game.game_id}")
                predictions.append(solvers.crn_solve(game, cg, cfg, seed, interp))
        finally:
            for client in (cg_client, interp_client):
                if client is not None:
                    client.close()
    metrics.write_predictions(predictions, args.out)
    unknown = sum(1 for p in predictions if p.is_unknown)
    _say(f"wrote {len(predictions)} predictions ({unknown} unknown) to {args.out}")
    return 0


def cmd_score(args) -> int:
    games = ds.read_games(args.games)
    predictions = metrics.read_predictions(args.predictions)
    matrix = _load_matrix(args)
    report = metrics.score_run(games, predictions, matrix, args.unknown_policy)
    print(report.to_table())
    if args.json:
        Path(args.json).write_text(report.to_json() + "\n")
        _say(f"wrote JSON report to {args.json}")
    return 0


def cmd_curve(args) -> int:
    games = ds.read_games(args.games)
    matrix = _load_matrix(args)
    cg, client = _conjecture_source(args)
    try:
        curve = solvers.cumulative_discovery_curve(
            games, cg, matrix, args.t_max, seed=args.seed
        )
    finally:
        if client is not None:
            client.close()
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "fraction_discovered"])
        for t, frac in enumerate(curve, 1):
            w.writerow([t, f"{frac:.6f}"])
    _say(f"wrote discovery curve ({args.t_max} points) to {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import GameMaster, create_app

    matrix = _load_matrix(args)
    data_dir = _data_dir(args)
    data_dir.mkdir(parents=True, exist_ok=True)
    master = GameMaster(matrix, seed=args.seed, log_path=data_dir / "sessions.jsonl")
    ui_dir = args.ui_dir
    if ui_dir is None:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        ui_dir = candidate if candidate.is_dir() else None
    app = create_app(master, ui_dir)
    _say(f"serving on http://{args.host}:{args.port} (ui: {ui_dir or 'api only'})")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="odeen", description=__doc__)
    parser.add_argument("--seed", type=int, default=0, help="master random seed")
    parser.add_argument(
        "--threads", type=int, default=1,
        help="worker bound (results are identical for any value)",
    )
    parser.add_argument(
        "--data-dir", default=None, help="artifact directory (env ODEEN_DATA_DIR)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="universe and grammar census")
    p.add_argument("--stats", action="store_true", help="print counts (default)")
    p.set_defaults(fn=cmd_enumerate)

    p = sub.add_parser("matrix", help="build or inspect the semantic matrix")
    p.add_argument("action", choices=["build", "stats", "export"])
    p.add_argument("--out", help="output file for build (or export directory)")
    p.add_argument("--out-dir", help="output directory for export")
    _add_data_dir_arg(p)
    _add_matrix_arg(p)
    p.set_defaults(fn=cmd_matrix)

    p = sub.add_parser("dataset", help="generate reproducible splits")
    p.add_argument("action", choices=["gen"])
    p.add_argument("--n", type=int, required=True, help="training rules")
    p.add_argument("--m", type=int, required=True, help="training board size")
    p.add_argument("--k", type=int, default=32, help="test board size")
    p.add_argument("--s", type=int, required=True, help="test games")
    p.add_argument("--l", type=int, default=1176, help="eval structures per game")
    p.add_argument("--out", required=True, help="output directory")
    _add_seed_arg(p)
    _add_matrix_arg(p)
    p.set_defaults(fn=cmd_dataset)

    p = sub.add_parser("solve", help="run a solver over a games file")
    p.add_argument("--solver", choices=["exhaustive", "crn"], required=True)
    p.add_argument("--games", required=True)
    p.add_argument("--out", required=True, help="predictions JSONL")
    p.add_argument("--t", type=int, default=300, help="conjecture budget")
    p.add_argument("--mode", choices=["best", "strict"], default="best")
    p.add_argument("--cg", choices=["uniform", "enumeration"], default="uniform")
    p.add_argument("--plugin", help="conjecture generator command (stdio protocol)")
    p.add_argument("--interpreter-plugin", help="interpreter command (stdio protocol)")
    p.add_argument("--plugin-timeout", type=float, default=60.0)
    _add_seed_arg(p)
    _add_matrix_arg(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("score", help="score predictions against games")
    p.add_argument("--games", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--json", help="also write the report as JSON here")
    p.add_argument(
        "--unknown-policy",
        choices=[metrics.UNKNOWN_EXCLUDE, metrics.UNKNOWN_MAJORITY],
        default=metrics.UNKNOWN_EXCLUDE,
    )
    _add_matrix_arg(p)
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("curve", help="cumulative discovery curve CSV")
    p.add_argument("--games", required=True)
    p.add_argument("--t-max", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cg", choices=["uniform", "enumeration"], default="uniform")
    p.add_argument("--plugin", help="conjecture generator command")
    p.add_argument("--plugin-timeout", type=float, default=60.0)
    _add_seed_arg(p)
    _add_matrix_arg(p)
    p.set_defaults(fn=cmd_curve)

    p = sub.add_parser("serve", help="start the game-master service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui-dir", help="static UI bundle (default: frontend/dist if present)")
    _add_seed_arg(p)
    _add_data_dir_arg(p)
    _add_matrix_arg(p)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.fn(args)
    except (
        ds.DatasetError,
        ds.BoardGenerationError,
        MatrixFormatError,
        metrics.MetricsError,
        RuleSyntaxError,
        StructureError,
        FileNotFoundError,
    ) as exc:
        _say(f"error: {exc}")
        return 2
    except SolverError as exc:  # includes PluginError
        _say(f"plugin/solver error: {exc}")
        return 3


if __name__ == "__main__":
    sys.exit(main())
