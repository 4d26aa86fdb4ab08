"""Episode trace documents: versioned JSON that round-trips losslessly."""
from __future__ import annotations

import json
from dataclasses import asdict

from .episode import EpisodeRecord

TRACE_SCHEMA_VERSION = 1


class TraceFormatError(ValueError):
    """Unreadable or wrong-version trace document."""


def emit_trace(record: EpisodeRecord) -> str:
    """Serialize a record to the trace JSON document."""
    doc = {"schema_version": TRACE_SCHEMA_VERSION, "record": asdict(record)}
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def parse_trace(text: str) -> EpisodeRecord:
    """Parse a trace document back into an EpisodeRecord."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"not valid JSON: {exc}") from exc
    version = doc.get("schema_version")
    if version != TRACE_SCHEMA_VERSION:
        raise TraceFormatError(
            f"trace schema version {version!r} != supported {TRACE_SCHEMA_VERSION}"
        )
    data = doc.get("record")
    if not isinstance(data, dict):
        raise TraceFormatError("trace document has no record object")
    try:
        return EpisodeRecord(**data)
    except TypeError as exc:
        raise TraceFormatError(f"record fields do not match: {exc}") from exc
