"""Package command-line entrypoint.

Enables running the tool with:

    python -m lowrisk_sampling recommend

or, once installed (via the console-script declared in *pyproject.toml*), simply:

    lowrisk-sampling recommend
"""

from __future__ import annotations

import sys
from collections.abc import Callable, Sequence

main: Callable[[Sequence[str] | None], int] | None = None


def _load_main() -> Callable[[Sequence[str] | None], int]:
    """Load and cache the real package entrypoint lazily."""
    global main
    if main is None:
        from .main import main as loaded_main

        main = loaded_main
    return main


def _run() -> None:  # pragma: no cover – thin wrapper
    """Invoke the command line; ``--check`` is kept as an alias of ``check``."""
    argv = ["check" if arg == "--check" else arg for arg in sys.argv[1:]]
    raise SystemExit(_load_main()(argv))


if __name__ == "__main__":  # pragma: no cover
    _run()
