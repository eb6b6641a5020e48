"""JSON helpers: floats emitted with 17 significant digits (lossless)."""

from __future__ import annotations

import json
import re

# control-character sentinel: cannot collide with JSON-encodable user text
# produced by this package, and json.dumps escapes it if it ever leaks
_FLOAT_TAG = chr(1) + "f:"
_FLOAT_RE = re.compile('"' + re.escape(json.dumps(_FLOAT_TAG)[1:-1]) + '([^"]*)"')


def _tag_floats(obj):
    if isinstance(obj, float):
        return f"{_FLOAT_TAG}{obj:.17g}"
    if isinstance(obj, dict):
        return {key: _tag_floats(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tag_floats(value) for value in obj]
    return obj


def dumps(obj, indent: int | None = 2) -> str:
    """json.dumps with every float printed as %.17g (exact round-trip)."""
    text = json.dumps(_tag_floats(obj), indent=indent, sort_keys=True)
    return _FLOAT_RE.sub(lambda m: m.group(1), text)


def dump(obj, path, indent: int | None = 2) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dumps(obj, indent=indent))
        handle.write("\n")


def load(path):
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)
