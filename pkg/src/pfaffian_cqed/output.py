"""CSV/JSON writers, atomic output directories and run manifests."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import shutil
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__


def fmt(value) -> str:
    """12 significant digits for floats, plain text otherwise."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


class OutputDir:
    """Collects files in a staging directory and moves them into place on commit."""

    def __init__(self, target: str | os.PathLike):
        self.target = Path(target)
        self.files: list[str] = []
        self._stage: Path | None = None

    def __enter__(self):
        self.target.mkdir(parents=True, exist_ok=True)
        self._stage = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.target))
        return self

    def write_text(self, name: str, text: str) -> Path:
        path = self._stage / name
        path.write_text(text)
        self.files.append(name)
        return self.target / name

    def write_csv(self, name: str, header, rows) -> Path:
        return self.write_text(name, csv_text(header, rows))

    def write_json(self, name: str, obj) -> Path:
        return self.write_text(name, json_text(obj))

    def __exit__(self, exc_type, exc, tb):
        try:
            if exc_type is None:
                for name in self.files:
                    os.replace(self._stage / name, self.target / name)
        finally:
            shutil.rmtree(self._stage, ignore_errors=True)
        return False


def manifest(command: str, config: dict, *, seed=None, threads=None, outputs=(), extra=None) -> dict:
    m = {
        "command": command,
        "package_version": __version__,
        "config": config,
        "seed": seed,
        "threads": threads,
        "outputs": list(outputs),
    }
    if extra:
        m.update(extra)
    return m


@contextmanager
def atomic_file(path: str | os.PathLike):
    """Open ``path`` for writing through a temporary file renamed on success."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
