"""Intertwining coefficients M(w, lambda) as products of c-factors.

M(w, lambda) = prod over inverted positive roots (i,j) of c(lam_i - lam_j).

Factors whose unperturbed argument is exactly -1 contribute a first-order
zero in the perturbation parameter (leading coefficient eps_coeff*c'(-1));
arguments exactly +1 contribute a first-order pole (coefficient
(6/pi)/eps_coeff).  "Exactly" is decided on the unperturbed part: for
builder-derived vectors the entries are exact half-integers in binary64, so
the 1e-9 snap below coincides with symbolic comparison; genuinely perturbed
arguments sit at distance >= eps >> 1e-9 and are never snapped.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import xifunc
from .errors import SingularConfiguration
from .weyl import WeightVector, WeylElement, act, inversion_set

SNAP = 1e-9


@dataclass(frozen=True)
class IntertwiningValue:
    """Leading Laurent/Taylor coefficient plus the order bookkeeping.

    After reduction at most one of zero_order/pole_order is nonzero; value
    is the plain product when both are zero.
    """

    value: complex
    zero_order: int = 0
    pole_order: int = 0

    def __complex__(self):
        return complex(self.value)


def m_op(w: WeylElement, lam: WeightVector) -> IntertwiningValue:
    """The c-factor product over the inversion set of w, with order tracking."""
    value = 1.0 + 0j
    zeros = 0
    poles = 0
    dirs = lam.eps_dir or (0.0,) * lam.n
    for (i, j) in inversion_set(w):
        base = lam.entries[i - 1] - lam.entries[j - 1]
        ec = dirs[i - 1] - dirs[j - 1]
        if abs(base + 1.0) <= SNAP:
            zeros += 1
            # c(-1 + ec*eps) = ec*eps*c'(-1) + O(eps^2); ec == 0 kills M identically
            value *= ec * xifunc.c_fn_slope_at_minus_one()
        elif abs(base - 1.0) <= SNAP:
            poles += 1
            # c(1 + ec*eps) ~ (6/pi)/(ec*eps); with ec == 0 the coefficient is
            # taken with respect to the argument distance instead.
            value *= xifunc.C_POLE_COEFF / ec if ec != 0 else xifunc.C_POLE_COEFF
        else:
            value *= xifunc.c_value(base)
    net = zeros - poles
    return IntertwiningValue(value, zero_order=max(net, 0), pole_order=max(-net, 0))


def m_functional_check(w1: WeylElement, w2: WeylElement, lam: WeightVector) -> float:
    """Relative residual of M(w1 w2, lam) = M(w1, w2 lam) M(w2, lam).

    Refuses near-singular configurations (any pairing within 1e-6 of +-1).
    """
    n = lam.n
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            d = lam.entries[i - 1] - lam.entries[j - 1]
            if abs(d - 1.0) < 1e-6 or abs(d + 1.0) < 1e-6:
                raise SingularConfiguration(
                    f"pairing ({i},{j}) = {d} within 1e-6 of a c singularity"
                )
    lhs = m_op(w1 * w2, lam).value
    rhs = m_op(w1, act(w2, lam)).value * m_op(w2, lam).value
    return abs(lhs - rhs) / max(abs(lhs), 1e-300)
