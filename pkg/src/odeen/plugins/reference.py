"""Ground-truth interpreter as a stdio plugin.

Labels any grammatical rule exactly like the in-process interpreter;
text the grammar rejects is labeled all-zero (never satisfied).
"""

from __future__ import annotations

from ..grammar import try_parse
from ..interpreter import evaluate
from ..universe import parse_structure
from ._stdio import emit, serve


def _interpret(req: dict) -> None:
    structures = [parse_structure(t) for t in req["structures"]]
    ast = try_parse(str(req["rule"]))
    if ast is None:
        emit({"labels": [0] * len(structures)})
        return
    emit({"labels": [evaluate(ast, s) for s in structures]})


def main() -> None:
    serve("reference-interpreter", ["interpret"], {"interpret": _interpret})


if __name__ == "__main__":
    main()
