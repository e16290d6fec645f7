"""
Tailwise — Utility functions
"""
import logging
import math
import re
from pathlib import Path

from config import settings
from errors import DomainError

LOG_FORMAT = '{"time":"%(asctime)s","level":"%(levelname)s","msg":"%(message)s"}'

_KEY_RE = re.compile(r"^[a-z][a-z0-9_]*$")


def configure_logging(debug: bool | None = None) -> logging.Logger:
    """Install the JSON-line log format once and return the root app logger."""
    debug = settings.debug if debug is None else debug
    logging.basicConfig(level=logging.DEBUG if debug else logging.INFO, format=LOG_FORMAT)
    return logging.getLogger("tailwise")


def parse_number(text: str, key: str | None = None) -> float:
    """Parse a finite float, raising DomainError that names the key."""
    try:
        value = float(text.strip().replace("_", ""))
    except (AttributeError, ValueError):
        raise DomainError(f"{key or 'value'}: not a number: {text!r}", key=key) from None
    if not math.isfinite(value):
        raise DomainError(f"{key or 'value'}: must be finite, got {text!r}", key=key)
    return value


def parse_int(text: str, key: str | None = None) -> int:
    value = parse_number(text, key)
    if value != int(value):
        raise DomainError(f"{key or 'value'}: expected an integer, got {text!r}", key=key)
    return int(value)


def parse_key_values(tokens) -> dict[str, str]:
    """Parse `key=value` tokens (a string or an iterable of strings).

    Later keys override earlier ones; keys are lower-case identifiers.
    """
    if isinstance(tokens, str):
        tokens = tokens.split()
    pairs: dict[str, str] = {}
    for token in tokens:
        key, sep, value = token.partition("=")
        key = key.strip().lower().replace("-", "_")
        if not sep or not value.strip():
            raise DomainError(f"expected key=value, got {token!r}", key=key or None)
        if not _KEY_RE.match(key):
            raise DomainError(f"invalid key {key!r}", key=key)
        pairs[key] = value.strip()
    return pairs


def read_config_file(path: str | Path) -> dict[str, str]:
    """Read key=value lines; `#` starts a comment, blank lines are skipped."""
    tokens = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    return parse_key_values(tokens)


def parse_list(text: str) -> list[str]:
    return [item.strip().lower() for item in text.split(",") if item.strip()]


def fmt(value: float | None, digits: int | None = None) -> str:
    """Format to a fixed number of significant digits; None renders as the singular marker."""
    if value is None:
        return settings.singular_marker
    digits = digits or settings.csv_digits
    return f"{value:.{digits}g}"


def order_of_magnitude(value: float) -> int:
    """Signed base-10 order: sign(x)*floor(log10|x|), 0 for |x| < 1."""
    if value == 0 or not math.isfinite(value):
        raise DomainError(f"order of magnitude undefined for {value!r}")
    order = math.floor(math.log10(abs(value)))
    return int(math.copysign(order, value)) if order > 0 else 0
