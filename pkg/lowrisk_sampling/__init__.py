"""Adaptive inspection sample sizing for low-risk trade pathways.

The solver lives in :mod:`belief`, :mod:`status` and :mod:`sizing`; the
comparator designs in :mod:`comparators`; scenario simulation in
:mod:`simulator`; and the operator command line in :mod:`cli`.

Updates: v0.1.0 - 2026-10-16 - Created package scaffold.
"""

from __future__ import annotations

from collections.abc import Sequence


def main(argv: Sequence[str] | None = None) -> int:
    """Import and invoke the real command-line entrypoint lazily."""
    from .main import main as run_main

    return run_main(argv)


__all__ = ["main"]
