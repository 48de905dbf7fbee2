"""Uniform conjecture generator as a stdio plugin.

Draws from the exact sampling stream of solvers.uniform_conjectures, so
running it through the bridge reproduces the in-process source bit for bit.
"""

from __future__ import annotations

from ..solvers import uniform_conjectures
from ._stdio import emit, serve


def _conjecture(req: dict) -> None:
    for text in uniform_conjectures(int(req["n"]), int(req["seed"])):
        emit({"rule": text})


def main() -> None:
    serve("uniform-cg", ["conjecture"], {"conjecture": _conjecture})


if __name__ == "__main__":
    main()
