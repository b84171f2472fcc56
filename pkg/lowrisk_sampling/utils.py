"""Utility helpers shared across lowrisk-sampling modules.

Updates: v0.1.0 - 2026-10-16 - Seeded module with env, formatting, hashing and
atomic-write helpers.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from collections.abc import Mapping
from pathlib import Path
from typing import Any


def read_optional_env(name: str) -> str | None:
    """Return trimmed environment variable or ``None`` when unset/blank."""
    value = os.getenv(name)
    if value is None:
        return None
    stripped = value.strip()
    return stripped or None


def format_probability(value: float) -> str:
    """Render a probability with 6 significant digits."""
    return f"{value:.6g}"


def config_hash(payload: Mapping[str, Any]) -> str:
    """Return a short stable digest of a JSON-serializable configuration."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def atomic_write_text(path: Path, content: str) -> None:
    """Write ``content`` to ``path`` via a temp file and rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(content)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


__all__ = [
    "atomic_write_text",
    "config_hash",
    "format_probability",
    "read_optional_env",
]
