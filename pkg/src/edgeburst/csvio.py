"""Deterministic CSV emission.

Every file starts with a ``# config: {...}`` comment holding the canonical
JSON of the effective run configuration; feeding that JSON back through
``--config`` reproduces the file byte for byte.  Floats are printed with 17
significant digits, newline endings are fixed to ``\\n``.
"""

import json
import os


def format_value(v) -> str:
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def config_line(config: dict) -> str:
    return "# config: " + json.dumps(config, sort_keys=True,
                                     separators=(",", ":"))


def write_csv(path, header, rows, config, trailers=()):
    """Write one CSV file: config comment, header, rows, trailer comments."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(config_line(config) + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")
        for line in trailers:
            fh.write("# " + line + "\n")


def sibling_path(path: str, suffix: str) -> str:
    """Insert ``suffix`` before the file extension of ``path``."""
    root, ext = os.path.splitext(path)
    return root + suffix + (ext or ".csv")
