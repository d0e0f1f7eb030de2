"""
Utility helpers for shrinkbench: grid parsing, value formatting for the
output tables, worker-count resolution and logging setup.
"""
import logging
import math
import os

import numpy as np

from utils.errors import DomainError

# The 23 noncentrality values used on the x-axis of every table.
DEFAULT_DELTA2_GRID = (
    0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.5,
    2.0, 3.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 50.0,
)

INF_SENTINEL = "Inf"
NA_SENTINEL = "NA"

THREADS_ENV = "SHRINKBENCH_THREADS"

VERSION = "1.0.0"


def parse_grid(text: str) -> tuple:
    """
    Parse a Δ² grid string.

      "default"        -> the 23-point default grid
      "0:50"           -> integers 0..50
      "0:50:0.5"       -> start:stop:step, stop inclusive
      "0,0.5,1,10"     -> explicit list
    """
    text = text.strip()
    if text == "default":
        return DEFAULT_DELTA2_GRID
    try:
        if ":" in text:
            parts = [float(t) for t in text.split(":")]
            if len(parts) == 2:
                start, stop, step = parts[0], parts[1], 1.0
            elif len(parts) == 3:
                start, stop, step = parts
            else:
                raise ValueError(text)
            if step <= 0 or stop < start:
                raise ValueError(text)
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = tuple(float(v) for v in np.round(start + step * np.arange(count), 12))
        else:
            values = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise DomainError(f"cannot parse grid {text!r}") from exc
    if not values or any(v < 0 or not math.isfinite(v) for v in values):
        raise DomainError(f"grid values must be finite and >= 0: {text!r}")
    return values


def format_value(x: float) -> str:
    """Render a table number; +inf becomes Inf and NaN becomes NA."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return NA_SENTINEL
    if math.isinf(x):
        return INF_SENTINEL if x > 0 else "-" + INF_SENTINEL
    return format(float(x), ".10g")


def parse_value(text: str) -> float:
    """Inverse of format_value."""
    text = text.strip()
    if text == INF_SENTINEL:
        return math.inf
    if text == "-" + INF_SENTINEL:
        return -math.inf
    if text == NA_SENTINEL or text == "":
        return math.nan
    return float(text)


def worker_count(requested: int | None = None) -> int:
    """Number of worker processes, capped by SHRINKBENCH_THREADS when set."""
    count = requested if requested else (os.cpu_count() or 1)
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            count = min(count, max(1, int(cap)))
        except ValueError:
            logging.getLogger(__name__).warning(
                "ignoring non-integer %s=%r", THREADS_ENV, cap
            )
    return max(1, count)


def configure_logging(level: str = "INFO"):
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
