"""Flat key=value configuration files.

One assignment per line, snake_case keys matching the simulation or
economic parameter field names; blank lines and '#' comments are
ignored. Unknown keys are rejected by the consumers so typos in sweep
scripts fail loudly.
"""

from __future__ import annotations

from pathlib import Path


class ConfigFormatError(ValueError):
    """A line is not a key=value assignment."""


def parse_kv_text(text: str) -> dict[str, str]:
    mapping: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigFormatError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigFormatError(f"line {lineno}: empty key")
        if key in mapping:
            raise ConfigFormatError(f"line {lineno}: duplicate key {key!r}")
        mapping[key] = value
    return mapping


def load_kv_file(path: str | Path) -> dict[str, str]:
    return parse_kv_text(Path(path).read_text(encoding="utf-8"))
