"""CSV writing with a pinned dialect for bit-stable artifacts.

Comma separated, one header row, decimal point, floats in scientific
notation with 16 significant digits so re-runs compare byte for byte.
"""

import csv


def format_value(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.15e}"
    return str(value)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def read_csv(path):
    """Return (header, rows-of-strings)."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        return header, [row for row in reader]
