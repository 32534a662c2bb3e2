"""Complex special functions: Gamma, zeta, the completed zeta and c-function.

The completed zeta xi(s) = pi^(-s/2) Gamma(s/2) zeta(s) is handled through
its entire version xihat(s) = s(s-1) xi(s), which satisfies
xihat(s) = xihat(1-s) and equals 1 at s in {0, 1}.  All c-function
arithmetic is routed through xihat so the zero at -1 and the pole at +1 are
algebraically explicit, never numerically inferred:

    c(z) = xi(z)/xi(1+z) = xihat(z) (1+z) / ( xihat(1+z) (z-1) ).

zeta is computed by Euler-Maclaurin for Re s >= 1/2 (term count chosen for
<= ~1e-13 relative error up to |Im s| ~ 300) and by the functional equation
below that line.  Gamma is delegated to scipy's complex implementation
(>= 13 digits in our validity window |z| <= 100, |Im z| <= 200).

Precision: binary64 by default; when ``precision.mode() == "dd"`` scalar
entry points switch to mpmath at ~32 digits.  The lazily initialized caches
(the c-derivative at -1, the bump normalizer elsewhere) are idempotent,
so racing initializers are harmless.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np
import scipy.special as sps

from . import precision
from .errors import InvalidParabolic, InvalidDimension, PerturbationFailure, PoleSignal

_LOG_PI = math.log(math.pi)

# B_{2j} for the Euler-Maclaurin tail, j = 1..13.
_BERNOULLI = [
    Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30),
    Fraction(5, 66), Fraction(-691, 2730), Fraction(7, 6), Fraction(-3617, 510),
    Fraction(43867, 798), Fraction(-174611, 330), Fraction(854513, 138),
    Fraction(-236364091, 2730), Fraction(8553103, 6),
]
_EM_COEF = [float(b) / math.factorial(2 * j) for j, b in enumerate(_BERNOULLI, start=1)]


@dataclass(frozen=True)
class CompletedZetaValue:
    """Finite value, or the leading Laurent coefficient at a simple pole."""

    value: complex
    pole_order: int = 0


# ---------------------------------------------------------------------------
# zeta
# ---------------------------------------------------------------------------

def _zeta_em_vec(s: np.ndarray) -> np.ndarray:
    """Euler-Maclaurin zeta on an array with Re s >= 0.5."""
    smax = float(np.max(np.abs(s))) if s.size else 1.0
    N = int(max(24, math.ceil(0.9 * (smax + 26))))
    logs = np.log(np.arange(1, N, dtype=float))
    out = np.exp(-np.multiply.outer(s, logs)).sum(axis=-1)
    lnN = math.log(N)
    NmS = np.exp(-s * lnN)  # N^{-s}
    with np.errstate(divide="ignore", invalid="ignore"):
        out = out + 0.5 * NmS + N * NmS / (s - 1.0)
    # Correction terms B_{2j}/(2j)! * s(s+1)...(s+2j-2) * N^{-s-2j+1}
    rising = s.copy()
    Npow = NmS / N  # N^{-s-1}
    for j, coef in enumerate(_EM_COEF, start=1):
        if j > 1:
            rising = rising * (s + (2 * j - 3)) * (s + (2 * j - 2))
            Npow = Npow / (N * N)
        out = out + coef * rising * Npow
    return out


def _as_array(s) -> np.ndarray:
    return np.asarray(s, dtype=complex)


def zeta_fn(s: complex) -> complex:
    """Riemann zeta for complex s != 1 (reflection below Re s = 1/2)."""
    if s == 1:
        raise PoleSignal("zeta has its pole at s=1")
    if precision.mode() == "dd":
        return complex(mpmath.zeta(complex(s)))
    s = complex(s)
    if s == 0:
        return -0.5
    if s.real >= 0.5:
        return complex(_zeta_em_vec(_as_array([s]))[0])
    if s.imag == 0 and s.real < 0 and abs(s.real - round(s.real)) == 0 and int(round(s.real)) % 2 == 0:
        return 0.0  # trivial zeros, exactly
    w = 1.0 - s
    chi = (
        2.0**s
        * cmath.exp((s - 1) * _LOG_PI)
        * cmath.sin(cmath.pi * s / 2)
        * complex(sps.gamma(complex(w)))
    )
    return chi * complex(_zeta_em_vec(_as_array([w]))[0])


def gamma_fn(z: complex) -> complex:
    """Complex Gamma; signals the poles at non-positive integers."""
    z = complex(z)
    if z.imag == 0 and z.real <= 0 and z.real == round(z.real):
        raise PoleSignal(f"Gamma pole at {z}")
    if precision.mode() == "dd":
        return complex(mpmath.gamma(z))
    return complex(sps.gamma(z))


# ---------------------------------------------------------------------------
# completed zeta
# ---------------------------------------------------------------------------

def xi_entire_vec(s: np.ndarray) -> np.ndarray:
    """Entire completion s(s-1)xi(s) on an array (binary64 path)."""
    s = _as_array(s)
    w = np.where(s.real >= 0.5, s, 1.0 - s)  # functional-equation symmetry
    special = (w == 0) | (w == 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = w * (w - 1.0) * np.exp(-w / 2 * _LOG_PI) * sps.gamma(w / 2) * _zeta_em_vec(w)
    if np.any(special):
        out = np.where(special, 1.0, out)  # xihat(0) = xihat(1) = 1
    return out


def _mp_xi_entire(s) -> mpmath.mpc:
    s = mpmath.mpc(s)
    if s == 0 or s == 1:
        return mpmath.mpc(1)
    if mpmath.re(s) < 0.5:
        s = 1 - s
    return s * (s - 1) * mpmath.power(mpmath.pi, -s / 2) * mpmath.gamma(s / 2) * mpmath.zeta(s)


def xi_entire(s: complex) -> complex:
    """Entire completion s(s-1)xi(s); satisfies xi_entire(s)=xi_entire(1-s)."""
    if precision.mode() == "dd":
        return complex(_mp_xi_entire(complex(s)))
    return complex(xi_entire_vec(_as_array([complex(s)]))[0])


def xi(s: complex) -> CompletedZetaValue:
    """Completed zeta; simple poles at 0 and 1 reported in-band."""
    s = complex(s)
    if s == 0:
        return CompletedZetaValue(-1.0, pole_order=1)  # xi ~ -1/s
    if s == 1:
        return CompletedZetaValue(1.0, pole_order=1)  # xi ~ 1/(s-1)
    return CompletedZetaValue(xi_entire(s) / (s * (s - 1.0)))


# ---------------------------------------------------------------------------
# c-function
# ---------------------------------------------------------------------------

C_POLE_COEFF = 6.0 / math.pi  # leading Laurent coefficient of c at z = +1


def c_value(z: complex) -> complex:
    """c(z) = xi(z)/xi(1+z) through the structural quotient; pole at z=1."""
    z = complex(z)
    if z == 1:
        raise PoleSignal("c has its simple pole at z=1")
    if z == -1:
        return 0.0
    return xi_entire(z) * (1.0 + z) / (xi_entire(1.0 + z) * (z - 1.0))


def c_values_vec(z: np.ndarray) -> np.ndarray:
    """Vectorized c on points staying off z=1 (caller's responsibility)."""
    z = _as_array(z)
    return xi_entire_vec(z) * (1.0 + z) / (xi_entire_vec(1.0 + z) * (z - 1.0))


def _mp_c_value(z) -> mpmath.mpc:
    z = mpmath.mpc(z)
    return _mp_xi_entire(z) * (1 + z) / (_mp_xi_entire(1 + z) * (z - 1))


def c_fn(z: complex) -> CompletedZetaValue:
    """c with explicit zero/pole structure: zero at -1 is exact, pole at +1."""
    z = complex(z)
    if z == 1:
        return CompletedZetaValue(C_POLE_COEFF, pole_order=1)
    if z == -1:
        return CompletedZetaValue(0.0)
    return CompletedZetaValue(c_value(z))


@lru_cache(maxsize=1)
def c_fn_slope_at_minus_one() -> complex:
    """c'(-1), by Richardson-extrapolated central differences; cached.

    The two radii must agree to 1e-8 (convergence guard); the cancellation
    calculus divides by this number, so it is computed once and frozen.
    """
    vals = []
    for h in (1e-3, 5e-4):
        d = (c_value(-1 + h) - c_value(-1 - h)) / (2 * h)
        d4 = (c_value(-1 + h / 2) - c_value(-1 - h / 2)) / h
        vals.append((4 * d4 - d) / 3)
    if abs(vals[0] - vals[1]) > 1e-8:
        raise PerturbationFailure("Richardson radii disagree for c'(-1)")
    return vals[1]


def xi_nk(n: int, k: int) -> float:
    """xi(2)...xi(n-k) / ( xi(k+1)...xi(n) ); empty products are 1."""
    if not 1 <= k <= n - 1:
        raise InvalidParabolic(f"k={k} out of range for n={n}")
    num = 1.0
    for m in range(2, n - k + 1):
        num *= xi(m).value.real
    den = 1.0
    for m in range(k + 1, n + 1):
        den *= xi(m).value.real
    return num / den


def total_volume(n: int) -> float:
    """Normalized volume of the full quotient: xi(2)...xi(n)."""
    if n < 2:
        raise InvalidDimension(f"need n >= 2, got {n}")
    out = 1.0
    for m in range(2, n + 1):
        out *= xi(m).value.real
    return out
