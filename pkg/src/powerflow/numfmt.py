"""Byte-stable number formatting for CSV and DOT output."""

import math


def fmt(x: float) -> str:
    """Shortest decimal string that round-trips to the same double."""
    x = float(x)
    if x == 0.0:
        return "0.0"
    if not math.isfinite(x):
        raise ValueError(f"cannot format non-finite value {x!r}")
    return repr(x)
