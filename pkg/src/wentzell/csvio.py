"""CSV output with bit-stable float formatting."""
from __future__ import annotations

import csv
from typing import Iterable, Sequence


def format_cell(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


def write_csv(fh, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Header row plus data rows; floats with 17 significant digits, ``\\n`` line endings."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(x) for x in row])
