"""Small shared helpers: presentation rounding, timestamps, deterministic JSON."""

from __future__ import annotations

import json
from datetime import datetime, timezone
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Any


def round_half_up(value: float, places: int = 2) -> float:
    """Round with ties away from zero, matching how report tables are printed.

    Python's built-in round() is banker's rounding and would turn 12.305
    into 12.30 instead of 12.31.
    """
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


def percent_share(count: int, total: int, places: int = 2) -> float:
    """count/total as a percentage rounded half-away-from-zero."""
    if total <= 0:
        raise ValueError("total must be positive")
    q = Decimal(1).scaleb(-places)
    pct = (Decimal(count) * 100) / Decimal(total)
    return float(pct.quantize(q, rounding=ROUND_HALF_UP))


def parse_rfc3339(value: str) -> datetime:
    """Parse an RFC 3339 timestamp; naive values are taken as UTC."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_rfc3339(dt: datetime) -> str:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def dump_json(obj: Any, path: str | Path) -> None:
    """Write JSON with a stable key order so repeat runs are byte-identical."""
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def json_bytes(obj: Any) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


def slugify(name: str) -> str:
    """Filesystem-safe lowercase slug for label and product names."""
    out = []
    for ch in name.strip().lower():
        if ch.isalnum():
            out.append(ch)
        elif out and out[-1] != "_":
            out.append("_")
    return "".join(out).strip("_") or "unnamed"
