"""Parsing of quantities with SI suffixes (ns, us, MHz, ...) for the CLI."""
from __future__ import annotations

import re

from .errors import ConfigurationError

_SUFFIXES = {
    "s": 1.0,
    "ms": 1e-3,
    "us": 1e-6,
    "µs": 1e-6,
    "ns": 1e-9,
    "ps": 1e-12,
    "hz": 1.0,
    "khz": 1e3,
    "mhz": 1e6,
    "ghz": 1e9,
}

_QTY_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*([a-zA-Zµ]*)\s*$")


def parse_quantity(text: str, flag: str = "value") -> float:
    """Parse '25ns', '48MHz', '2e6' ... into a plain float in SI base units."""
    m = _QTY_RE.match(str(text))
    if not m:
        raise ConfigurationError(f"{flag}: cannot parse quantity {text!r}")
    num, suffix = m.groups()
    try:
        value = float(num)
    except ValueError:
        raise ConfigurationError(f"{flag}: cannot parse number in {text!r}") from None
    if not suffix:
        return value
    scale = _SUFFIXES.get(suffix.lower())
    if scale is None:
        raise ConfigurationError(f"{flag}: unknown unit suffix {suffix!r} in {text!r}")
    return value * scale


def parse_count(text: str, flag: str = "value") -> int:
    """Parse an integer count, accepting scientific notation like '1e6'."""
    value = parse_quantity(text, flag)
    n = int(round(value))
    if abs(value - n) > 1e-9 * max(1.0, abs(value)):
        raise ConfigurationError(f"{flag}: {text!r} is not an integer count")
    return n
