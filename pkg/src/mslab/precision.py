"""Working-precision management and compensated summation.

Default arithmetic is binary64.  The "dd" mode (double-double, ~31 digits)
is realized through mpmath at 32 significant digits; it is engaged
explicitly by the cancellation verifier and available everywhere via
``use_dd()`` or the MS_LAB_PRECISION environment variable.

All state here is a single module-level mode flag read at call time; the
special-function caches elsewhere are idempotent, so concurrent readers are
safe once initialized.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

import mpmath

DD_DPS = 32

_mode = os.environ.get("MS_LAB_PRECISION", "double")
if _mode not in ("double", "dd"):
    _mode = "double"


def mode() -> str:
    return _mode


def set_mode(m: str) -> None:
    global _mode
    if m not in ("double", "dd"):
        raise ValueError(f"unknown precision mode {m!r}")
    _mode = m


@contextmanager
def use_dd():
    """Temporarily switch to double-double (mpmath, 32 digits)."""
    global _mode
    old = _mode
    _mode = "dd"
    try:
        with mpmath.workdps(DD_DPS):
            yield
    finally:
        _mode = old


def neumaier_sum(values):
    """Compensated (Kahan-Neumaier) sum of an iterable of floats/complex.

    Deterministic for a fixed iteration order; used for every Weyl-sum
    reduction so results do not depend on worker count or chunking.
    """
    s = 0.0
    comp = 0.0
    for v in values:
        t = s + v
        if abs(s) >= abs(v):
            comp += (s - t) + v
        else:
            comp += (v - t) + s
        s = t
    return s + comp


class NeumaierAccumulator:
    """Streaming compensated accumulator; works for scalars and ndarrays."""

    def __init__(self, zero=0.0):
        self.s = zero
        self.c = zero * 0

    def add(self, v):
        t = self.s + v
        big = abs(self.s) >= abs(v)
        try:
            import numpy as np

            if isinstance(t, np.ndarray):
                self.c = self.c + np.where(big, (self.s - t) + v, (v - t) + self.s)
                self.s = t
                return
        except ImportError:  # pragma: no cover
            pass
        if big:
            self.c += (self.s - t) + v
        else:
            self.c += (v - t) + self.s
        self.s = t

    def total(self):
        return self.s + self.c
