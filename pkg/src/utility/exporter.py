"""
CSV and JSON writers for command output.

Every file is written to a temporary sibling first and moved into place with
os.replace, so readers never see a partial file.
"""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Iterable, List, Mapping, Optional, Sequence

import pandas as pd

from models.errors import OutputExists

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"


def _check_target(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise OutputExists(f"{path} already exists; pass --force to overwrite")


def write_atomic(path, text: str, force: bool = False) -> Path:
    """
    Write `text` to `path` via a temporary file in the same directory.

    Raises:
        OutputExists: `path` exists and force is not set.
    """
    path = Path(path)
    _check_target(path, force)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temporary = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as stream:
            stream.write(text)
        os.replace(temporary, path)
    except BaseException:
        if os.path.exists(temporary):
            os.unlink(temporary)
        raise
    logger.debug("wrote %d characters to %s", len(text), path)
    return path


def csv_text(rows: Sequence[Mapping], columns: Sequence[str],
             header: Optional[Mapping[str, object]] = None) -> str:
    """
    CSV body with `# key=value` metadata lines first and floats at 12
    significant digits.
    """
    lines = [f"# {key}={_format_value(value)}" for key, value in (header or {}).items()]
    frame = pd.DataFrame(list(rows), columns=list(columns))
    body = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return "".join(line + "\n" for line in lines) + body


def _format_value(value) -> str:
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    return str(value)


def write_csv(path, rows: Sequence[Mapping], columns: Sequence[str],
              header: Optional[Mapping[str, object]] = None, force: bool = False) -> Path:
    return write_atomic(path, csv_text(rows, columns, header), force=force)


def write_json(path, document, force: bool = False) -> Path:
    text = json.dumps(document, indent=2, sort_keys=True) + "\n"
    return write_atomic(path, text, force=force)


def read_csv(path) -> pd.DataFrame:
    """Read a CSV written by write_csv, skipping its metadata lines."""
    return pd.read_csv(path, comment="#")


def read_header(path) -> dict:
    """The `# key=value` metadata lines of a CSV written by write_csv."""
    header = {}
    with open(path, "r", encoding="utf-8") as stream:
        for line in stream:
            if not line.startswith("# "):
                break
            key, _, value = line[2:].rstrip("\n").partition("=")
            header[key] = value
    return header


def check_targets(paths: Iterable, force: bool) -> List[Path]:
    """Fail before any work is done if an output would be clobbered."""
    paths = [Path(p) for p in paths]
    for path in paths:
        _check_target(path, force)
    return paths
