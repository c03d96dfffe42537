"""
Small helpers: logging setup, float formatting, convergence arithmetic.
"""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s"
FLOAT_FORMAT = "%.17g"


def configure_logging(level: str | int = "INFO") -> None:
    """
    Install a single stream handler on the root logger.
    Safe to call repeatedly; the level is updated each time.
    """
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.INFO)
    root = logging.getLogger()
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)
    root.setLevel(level)


def format_float(value: float) -> str:
    """Round-trip representation with 17 significant digits."""
    return FLOAT_FORMAT % value


def format_kv(head: str, head_value: object, **fields: object) -> str:
    """
    Build a machine-readable diagnostics line `head=<v> key=value ...`.
    Floats are printed with 17 significant digits.
    """
    parts = [f"{head}={head_value}"]
    for key, value in fields.items():
        if isinstance(value, (float, np.floating)):
            value = format_float(float(value))
        parts.append(f"{key}={value}")
    return " ".join(parts)


def observed_orders(errors: Sequence[float], ratio: float = 2.0) -> List[float]:
    """
    Observed convergence orders log(e_k/e_{k+1})/log(ratio) for successive
    refinements. Returns an empty list for fewer than two errors.
    """
    orders = []
    for coarse, fine in zip(errors[:-1], errors[1:]):
        if coarse <= 0.0 or fine <= 0.0:
            orders.append(math.nan)
        else:
            orders.append(math.log(coarse / fine) / math.log(ratio))
    return orders


def log_uniform(
    rng: np.random.Generator, low: float, high: float, size: Optional[int] = None
) -> np.ndarray:
    """Samples log-uniformly distributed in [low, high]."""
    return np.exp(rng.uniform(math.log(low), math.log(high), size=size))
