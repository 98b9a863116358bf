"""Line-oriented `key = value` config files with [section] headers.

No nesting, no quoting: a value is everything after the first '=' with
surrounding whitespace stripped.  Keys inside a section are addressed as
"section.key".  Unknown keys are rejected by the consumer against an
explicit allow-list, with the offending key and line number in the message.
"""

from __future__ import annotations


class ConfigError(ValueError):
    """Raised for malformed or unrecognized configuration input."""


def parse_config(path) -> dict:
    """Parse a config file into an {key: (value, line_number)} mapping."""
    entries: dict = {}
    section = ""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                if not section:
                    raise ConfigError(f"{path}: empty section name at line {lineno}")
                continue
            if "=" not in line:
                raise ConfigError(f"{path}: expected 'key = value' at line {lineno}: {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if not key:
                raise ConfigError(f"{path}: missing key at line {lineno}")
            full = f"{section}.{key}" if section else key
            if full in entries:
                raise ConfigError(f"{path}: duplicate key '{full}' at line {lineno}")
            entries[full] = (value.strip(), lineno)
    return entries


def apply_config(entries: dict, allowed: dict, path) -> dict:
    """Convert parsed entries via `allowed` ({key: converter}); reject others.

    Returns {key: converted value}.
    """
    out = {}
    for key, (value, lineno) in entries.items():
        if key not in allowed:
            raise ConfigError(f"{path}: unknown key '{key}' at line {lineno}")
        try:
            out[key] = allowed[key](value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(
                f"{path}: bad value for '{key}' at line {lineno}: {exc}"
            ) from exc
    return out
