"""Deterministic CSV/JSON emission for the CLI workflows.

All floats are written with 17 significant digits, '.' decimal separator
and LF line endings, so reruns with identical configs are byte-identical
across platforms.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


def fmt(value) -> str:
    """Canonical text form of one CSV cell."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=True) + "\n"


def write_json(path: Path, doc) -> None:
    path.write_text(canonical_json(doc), encoding="utf-8", newline="\n")


def config_hash(config: dict) -> str:
    """sha256 of the canonical config serialization, git-blob style."""
    payload = canonical_json(config).encode("utf-8")
    blob = b"blob %d\0%s" % (len(payload), payload)
    return hashlib.sha256(blob).hexdigest()


def write_manifest(path: Path, command: str, config: dict, outputs: list[str], version: str) -> None:
    """Run manifest: full materialized config plus content hash of inputs."""
    write_json(
        path,
        {
            "command": command,
            "config": config,
            "config_sha256": config_hash(config),
            "outputs": sorted(outputs),
            "tool_version": version,
        },
    )
