"""
CSV output. Files are written to a temporary sibling and renamed on success,
so an interrupted run never leaves a partial file behind.
"""

import csv
import io
import math
import os
import tempfile
from pathlib import Path
from typing import Any, List, Sequence

from sber_outage.core.config import CSV_FLOAT_FORMAT
from sber_outage.core.logging_utils import get_logger

logger = get_logger(__name__)


def format_cell(value: Any) -> str:
    """Floats in scientific notation with 9 significant digits; empty for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return CSV_FLOAT_FORMAT.format(value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def render_csv(columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buffer.getvalue()


def write_csv(path: Path, columns: Sequence[str], rows: List[Sequence[Any]]) -> Path:
    """Write the table atomically and return the final path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = render_csv(columns, rows)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except FileNotFoundError:
            pass
        raise
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path
