"""Symbolic affine forms a + b1*s1 + b2*s2 + d*eps.

These carry the pairing bookkeeping for the Weyl sums: every denominator
factor and every c-function argument is such a form.  Singularity
classification (is this factor exactly +-1, or exactly 0, along the
unperturbed direction?) is done on the coefficients, never on evaluated
floating magnitudes, whenever the coefficients are exact rationals.
Numeric (complex) coefficients fall back to a snap tolerance.

Coefficients: ``const`` and ``d`` may be Fraction (exact) or complex;
``b1``/``b2`` are integers in everything the formulas produce.
"""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple, Union

Coef = Union[Fraction, int, float, complex]

SNAP_TOL = 1e-9  # numeric fallback only; exact coefficients compare exactly


def _add(a: Coef, b: Coef) -> Coef:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a + b
    return _tofloat(a) + _tofloat(b)


def _tofloat(a: Coef):
    if isinstance(a, Fraction):
        return float(a)
    return a


def _iszero(a: Coef) -> bool:
    if isinstance(a, Fraction):
        return a == 0
    return abs(a) <= SNAP_TOL


def _equals(a: Coef, v: int) -> bool:
    if isinstance(a, Fraction):
        return a == v
    return abs(a - v) <= SNAP_TOL


class Affine(NamedTuple):
    const: Coef
    b1: Coef = 0
    b2: Coef = 0
    d: Coef = 0  # coefficient of the perturbation parameter eps

    def __add__(self, other: "Affine") -> "Affine":
        return Affine(
            _add(self.const, other.const),
            _add(self.b1, other.b1),
            _add(self.b2, other.b2),
            _add(self.d, other.d),
        )

    def __sub__(self, other: "Affine") -> "Affine":
        return self + other.neg()

    def neg(self) -> "Affine":
        return Affine(-self.const, -self.b1, -self.b2, -self.d)

    def scale(self, c: Coef) -> "Affine":
        if isinstance(c, Fraction) or isinstance(c, int):
            mul = lambda x: c * x if isinstance(x, (Fraction, int)) else _tofloat(c) * x
        else:
            mul = lambda x: _tofloat(c) * _tofloat(x)
        return Affine(mul(self.const), mul(self.b1), mul(self.b2), mul(self.d))

    # -- evaluation ----------------------------------------------------
    def value(self, s1=0.0, s2=0.0, eps=0.0):
        """Evaluate at concrete arguments; s1/s2 may be numpy arrays."""
        out = _tofloat(self.const)
        if not _iszero(self.b1):
            out = out + _tofloat(self.b1) * s1
        if not _iszero(self.b2):
            out = out + _tofloat(self.b2) * s2
        if not _iszero(self.d):
            out = out + _tofloat(self.d) * eps
        return out

    # -- classification ------------------------------------------------
    def s_free(self, active=("s1", "s2")) -> bool:
        """True when the form is constant along every active s-variable."""
        if "s1" in active and not _iszero(self.b1):
            return False
        if "s2" in active and not _iszero(self.b2):
            return False
        return True

    def eps_free(self) -> bool:
        return _iszero(self.d)

    def is_exactly(self, v: int, active=("s1", "s2")) -> bool:
        """Form == v identically in the active s-variables and in eps."""
        return self.s_free(active) and self.eps_free() and _equals(self.const, v)

    def is_eps_multiple_of(self, v: int, active=("s1", "s2")) -> bool:
        """Form == v + d*eps with d != 0, identically in active s-vars."""
        return self.s_free(active) and not self.eps_free() and _equals(self.const, v)

    def eps_coeff(self):
        return _tofloat(self.d)

    def key(self):
        """Hashable cache key (Fractions normalized to float-safe repr)."""
        return (
            str(self.const) if isinstance(self.const, Fraction) else complex(self.const),
            str(self.b1) if isinstance(self.b1, Fraction) else complex(self.b1),
            str(self.b2) if isinstance(self.b2, Fraction) else complex(self.b2),
            str(self.d) if isinstance(self.d, Fraction) else complex(self.d),
        )


def const_form(c: Coef) -> Affine:
    return Affine(c, 0, 0, 0)


def svar_form(c: Coef, var: str, coeff: Coef = 1) -> Affine:
    """c + coeff*s_var."""
    if var == "s1":
        return Affine(c, coeff, 0, 0)
    if var == "s2":
        return Affine(c, 0, coeff, 0)
    raise ValueError(f"unknown variable {var!r}")
