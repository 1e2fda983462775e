from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union


def write_atomic(path: Union[str, Path], text: str) -> None:
    """Write through a temp file in the same directory, then rename over `path`."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, out: Optional[Union[str, Path]]) -> None:
    if out is None:
        print(text, end="" if text.endswith("\n") else "\n")
    else:
        write_atomic(out, text if text.endswith("\n") else text + "\n")


def significant(value: float, digits: int = 7) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return f"{value:.{digits}g}"


def energy_text(value: float) -> str:
    """`E (= q·π)` with seven significant digits on both sides."""
    return f"{significant(value)} (= {significant(value / math.pi)}·π)"


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if cell is None else cell for cell in row])
    return buffer.getvalue()


def parse_float_list(raw: str) -> list[float]:
    return [float(x.strip()) for x in raw.split(",") if x.strip()]
