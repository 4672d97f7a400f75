"""Atomic file output helpers.

Every report, checkpoint, and summary goes through write-temp-then-rename
so an interrupted run never leaves a partial document behind.
"""

from __future__ import annotations

import json
import os
import tempfile

__all__ = ["atomic_write_text", "write_json"]


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=1) + "\n")
