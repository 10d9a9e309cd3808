"""Name canonicalization and text tokenization shared across the engine."""

from __future__ import annotations

import re

_WS = re.compile(r"\s+")
_NON_ALNUM = re.compile(r"[^a-z0-9]+")


def normalize_ws(value: str) -> str:
    """Collapse runs of whitespace to single spaces and strip the ends."""
    return _WS.sub(" ", value).strip()


def canon_name(raw: str) -> str:
    """Canonical tag/attribute name: namespace stripped, lowercased,
    internal whitespace replaced with a single underscore.

    Query contexts written as "trade country" therefore match tags written
    as trade_country. A leading "@" (attribute marker) is preserved.
    """
    name = raw
    if name.startswith("{"):  # ElementTree universal-name form {uri}local
        name = name.rsplit("}", 1)[-1]
    elif ":" in name:
        name = name.rsplit(":", 1)[-1]
    marker = ""
    if name.startswith("@"):
        marker, name = "@", name[1:]
    return marker + _WS.sub("_", name.strip().lower())


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens, split on non-alphanumerics; digit runs are
    kept as tokens so values like "15" stay searchable."""
    lowered = text.lower()
    return [t for t in _NON_ALNUM.split(lowered) if t]
