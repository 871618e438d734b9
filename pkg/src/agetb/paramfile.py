"""Flat ``key = value`` parameter documents.

One assignment per line, ``#`` starts a comment. Per-group values are comma
separated; a single number given for a per-group key applies to all groups.
"""
from __future__ import annotations

from .errors import ParseError

SCALAR_KEYS = ("A", "rho", "omega")
VECTOR_KEYS = {
    "mu": 3,
    "theta": 2,
    "sigma": 3,
    "gamma": 3,
    "d": 3,
    "a": 3,
    "eps": 3,
    "beta": 3,
    "n_fixed": 3,
}
TEXT_KEYS = ("preset", "n_mode")
KNOWN_KEYS = SCALAR_KEYS + tuple(VECTOR_KEYS) + TEXT_KEYS


def parse(text: str) -> dict:
    """Parse a parameter document into ``{key: value}``.

    Numbers are returned as floats (scalar keys) or tuples of floats (per-group
    keys); ``preset`` and ``n_mode`` stay strings. Key validity is left to the
    caller so it can report unknown keys with its own error type.
    """
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", row=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ParseError("empty key or value", row=lineno)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", row=lineno, column=key)
        if key in TEXT_KEYS:
            out[key] = value.strip("'\"")
            continue
        try:
            numbers = tuple(float(v) for v in value.split(","))
        except ValueError:
            if key in KNOWN_KEYS:
                raise ParseError(f"non-numeric value {value!r}", row=lineno, column=key) from None
            out[key] = value
            continue
        if key in VECTOR_KEYS:
            width = VECTOR_KEYS[key]
            if len(numbers) == 1:
                numbers = numbers * width
            if len(numbers) != width:
                raise ParseError(f"{key} needs {width} values, got {len(numbers)}", row=lineno, column=key)
            out[key] = numbers
        else:
            if len(numbers) != 1:
                raise ParseError(f"{key} takes a single value", row=lineno, column=key)
            out[key] = numbers[0]
    return out


def _fmt(v: float) -> str:
    return repr(float(v))


def dump(values: dict) -> str:
    """Inverse of :func:`parse` for the known keys (full float precision)."""
    lines = []
    for key in KNOWN_KEYS:
        if key not in values or values[key] is None:
            continue
        v = values[key]
        if key in TEXT_KEYS:
            lines.append(f"{key} = {v}")
        elif key in VECTOR_KEYS:
            lines.append(f"{key} = {', '.join(_fmt(x) for x in v)}")
        else:
            lines.append(f"{key} = {_fmt(v)}")
    return "\n".join(lines) + "\n"
