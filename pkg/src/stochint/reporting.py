"""Deterministic report and table emission.

Reports are flat `key = value` documents; tables are comma-separated with a
single header row.  Floats are printed with 17 significant digits so a rerun
of the same configuration reproduces every artifact byte for byte (no
timestamps, no environment-dependent content).
"""

from __future__ import annotations

import os
from typing import Iterable, Mapping


class ReportWriteError(OSError):
    pass


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def flatten_config(config: Mapping, prefix: str = "config") -> list[tuple[str, str]]:
    items: list[tuple[str, str]] = []
    for key in sorted(config):
        val = config[key]
        name = f"{prefix}.{key}"
        if isinstance(val, Mapping):
            items.extend(flatten_config(val, name))
        elif isinstance(val, (list, tuple)):
            items.append((name, "[" + ", ".join(format_value(v) if not isinstance(v, Mapping)
                                                else str(dict(v)) for v in val) + "]"))
        else:
            items.append((name, format_value(val)))
    return items


def write_report(path: str, entries: Iterable[tuple[str, object]]) -> None:
    try:
        with open(path, "w") as fh:
            for key, value in entries:
                fh.write(f"{key} = {format_value(value)}\n")
    except OSError as exc:
        raise ReportWriteError(f"cannot write report {path}: {exc}") from exc


def write_table(path: str, header: Iterable[str], rows: Iterable[Iterable]) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(format_value(v) for v in row) + "\n")
    except OSError as exc:
        raise ReportWriteError(f"cannot write table {path}: {exc}") from exc


def ensure_dir(path: str) -> None:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise ReportWriteError(f"cannot create output directory {path}: {exc}") from exc
