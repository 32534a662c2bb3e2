"""Test functions, their Mellin transforms, and the bump asymptotics.

Test-function kinds:

* ``sharp_upto N``      -- indicator of [0, N] (boundary included)
* ``sharp_window``      -- indicator of (N1, N2]
* ``bump delta``        -- beta_delta(x) = B_delta(log x), the log-bump
* ``smoothed``          -- multiplicative convolution window * beta_delta

The convolution is multiplicative, (f*g)(x) = int f(x/y) g(y) dy/y, the
unique reading under which M(f*g) = Mf * Mg and the pointwise sandwich
smoothed(p e^{-d}, d) <= sharp(p) <= smoothed(p e^{d}, d) hold.  Mellin
transforms use Mf(s) = int_0^inf f(x) x^{s-1} dx.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import AsymptoticUnreliable, OutOfStrip, WindowTooWide


def _bump_raw(x):
    """exp(-1/(1-x^2)) on (-1,1), 0 outside (unnormalized bump)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (1.0 - xi * xi))
    return out


@lru_cache(maxsize=1)
def bump_normalizer() -> float:
    """A with int A*exp(-1/(1-x^2)) dx = 1, by high-order quadrature."""
    nodes, weights = leggauss(80)
    total = 0.0
    panels = np.linspace(-1.0, 1.0, 41)
    for a, b in zip(panels[:-1], panels[1:]):
        x = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        total += 0.5 * (b - a) * float(np.sum(weights * _bump_raw(x)))
    return 1.0 / total


@lru_cache(maxsize=4)
def _bump_cdf_table(m: int = 4001) -> Tuple[np.ndarray, np.ndarray]:
    """Cumulative integral of the normalized bump on a fine grid."""
    xs = np.linspace(-1.0, 1.0, m)
    ys = bump_normalizer() * _bump_raw(xs)
    # composite Simpson prefix sums (m odd)
    h = xs[1] - xs[0]
    cdf = np.zeros(m)
    for i in range(2, m, 2):
        cdf[i] = cdf[i - 2] + h / 3 * (ys[i - 2] + 4 * ys[i - 1] + ys[i])
        cdf[i - 1] = cdf[i - 2] + h / 12 * (5 * ys[i - 2] + 8 * ys[i - 1] - ys[i])
    cdf = np.minimum(cdf / cdf[-1], 1.0)
    return xs, cdf


def bump_cdf(t):
    """int_{-1}^{t} of the normalized bump; exactly 0/1 outside [-1,1]."""
    xs, cdf = _bump_cdf_table()
    t = np.asarray(t, dtype=float)
    out = np.interp(t, xs, cdf, left=0.0, right=1.0)
    return out


def bump_fourier(z: complex):
    """sigma-hat(z) = int sigma(x) e^{izx} dx for the normalized bump.

    Composite Gauss-Legendre on the compact support; panel count scales
    with the oscillation |Re z|.  Absolute error <= ~1e-12 for |Im z| <= 50.
    """
    zarr = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(np.abs(zarr.imag) > 50):
        raise OutOfStrip("bump_fourier validity requires |Im z| <= 50")
    npanels = int(max(24, math.ceil(float(np.max(np.abs(zarr.real))) / 3.0)))
    nodes, weights = leggauss(12)
    edges = np.linspace(-1.0, 1.0, npanels + 1)
    A = bump_normalizer()
    out = np.zeros_like(zarr)
    for a, b in zip(edges[:-1], edges[1:]):
        x = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        w = 0.5 * (b - a) * weights * A * _bump_raw(x)
        out += np.exp(1j * np.multiply.outer(zarr, x)) @ w
    return out if np.ndim(z) else complex(out[0])


@dataclass(frozen=True)
class TestFunction:
    """A Mellin-transformable radial weight; see module docstring."""

    kind: str  # sharp_upto | sharp_window | bump | smoothed
    params: Tuple[float, ...]

    # -- constructors ---------------------------------------------------
    @staticmethod
    def sharp_upto(N: float) -> "TestFunction":
        if N <= 0:
            raise ValueError("need N > 0")
        return TestFunction("sharp_upto", (float(N),))

    @staticmethod
    def sharp_window(N1: float, N2: float) -> "TestFunction":
        if not 0 <= N1 < N2:
            raise ValueError("need 0 <= N1 < N2")
        return TestFunction("sharp_window", (float(N1), float(N2)))

    @staticmethod
    def bump(delta: float) -> "TestFunction":
        if not 0 < delta < 1:
            raise ValueError("need delta in (0,1)")
        return TestFunction("bump", (float(delta),))

    @staticmethod
    def smoothed(window: "TestFunction", delta: float) -> "TestFunction":
        if window.kind not in ("sharp_upto", "sharp_window"):
            raise ValueError("smoothed wraps a sharp window")
        if not 0 < delta < 1:
            raise ValueError("need delta in (0,1)")
        n1, n2 = (0.0, window.params[0]) if window.kind == "sharp_upto" else window.params
        return TestFunction("smoothed", (n1, n2, float(delta)))

    @property
    def delta(self) -> float:
        if self.kind == "bump":
            return self.params[0]
        if self.kind == "smoothed":
            return self.params[2]
        raise AttributeError("no delta for sharp kinds")

    # -- pointwise ------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "sharp_upto":
            return (x <= self.params[0]).astype(float)
        if self.kind == "sharp_window":
            n1, n2 = self.params
            return ((x > n1) & (x <= n2)).astype(float)
        if self.kind == "bump":
            d = self.params[0]
            out = np.zeros_like(x)
            pos = x > 0
            out[pos] = _bump_raw(np.log(x[pos]) / d) * bump_normalizer() / d
            return out
        n1, n2, d = self.params
        # smoothed(x) = S(log(x/N2)/d) - S(log(x/N1)/d), S(t) = 1 - CDF(t)
        with np.errstate(divide="ignore"):
            hi = 1.0 - bump_cdf(np.log(np.maximum(x, 1e-300) / n2) / d)
            lo = 1.0 - bump_cdf(np.log(np.maximum(x, 1e-300) / n1) / d) if n1 > 0 else 0.0
        out = hi - lo
        return np.where(x <= 0, 1.0 if n1 == 0 else 0.0, out)

    def support_max(self) -> float:
        if self.kind == "sharp_upto":
            return self.params[0]
        if self.kind == "sharp_window":
            return self.params[1]
        if self.kind == "bump":
            return math.exp(self.params[0])
        return self.params[1] * math.exp(self.params[2])

    # -- Mellin transform -----------------------------------------------
    def mellin(self, s):
        return mellin(self, s)


def mellin(f: TestFunction, s):
    """Mf(s) on Re s > 0; closed forms for the sharp kinds, sigma-hat for the bump.

    Accepts scalars or numpy arrays of s.
    """
    arr = isinstance(s, np.ndarray)
    sa = np.asarray(s, dtype=complex)
    if np.any(sa.real <= 0):
        raise OutOfStrip("Mellin transforms used on Re s > 0 only")
    if f.kind == "sharp_upto":
        out = np.exp(sa * math.log(f.params[0])) / sa
    elif f.kind == "sharp_window":
        n1, n2 = f.params
        out = np.exp(sa * math.log(n2)) / sa
        if n1 > 0:
            out = out - np.exp(sa * math.log(n1)) / sa
    elif f.kind == "bump":
        out = bump_fourier(-1j * f.params[0] * sa)
    else:
        n1, n2, d = f.params
        win = np.exp(sa * math.log(n2)) / sa
        if n1 > 0:
            win = win - np.exp(sa * math.log(n1)) / sa
        out = win * bump_fourier(-1j * d * sa)
    return out if arr else complex(out)


def mellin_window_bound_check(N1: float, N2: float, c: float, t_grid) -> float:
    """max_t |Mh_A(c+it)| / |Mh_A(c)| under the narrow-window hypothesis.

    Requires c >= 1 and (N1 == 0 or N2^c - N1^c <= N1^c / 2); the ratio is
    then bounded by an absolute constant (asserted <= 10).
    """
    if c < 1:
        raise WindowTooWide(f"need c >= 1, got {c}")
    if N1 > 0 and N2**c - N1**c > N1**c / 2:
        raise WindowTooWide(
            f"window too wide: N2^c - N1^c = {N2**c - N1**c:.3g} > N1^c/2 = {N1**c/2:.3g}"
        )
    w = TestFunction.sharp_window(N1, N2)
    ref = abs(mellin(w, complex(c)))
    vals = np.abs(mellin(w, c + 1j * np.asarray(t_grid, dtype=float)))
    ratio = float(np.max(vals) / ref)
    assert ratio <= 10.0, f"window-ratio {ratio} exceeds the absolute constant 10"
    return ratio


@lru_cache(maxsize=1)
def bump_decay_constant() -> float:
    """sup of |sigma-hat(x)| x^{3/4} e^{sqrt(x)} on x in [5, 400], doubled.

    Frozen constant behind the certified Mellin tail bounds; the doubling
    is the safety factor on top of the measured supremum.
    """
    xs = np.linspace(5.0, 400.0, 396)
    vals = np.abs(bump_fourier(xs + 0j)) * xs**0.75 * np.exp(np.sqrt(xs))
    return 2.0 * float(np.max(vals))


def smoothed_tail_integral(f: TestFunction, c: float, height: float, growth: float = 0.6) -> float:
    """Upper bound for int_height^inf |Mf(c+it)| t^growth dt, f smoothed.

    Uses |Mh_A(c+it)| <= (N2^c + N1^c)/t and the bump decay
    |Mbeta(c+it)| <= K (dt)^(-3/4) e^(-sqrt(dt)) e^(c d); the integral is an
    incomplete-gamma closed form.
    """
    import mpmath

    if f.kind != "smoothed":
        raise ValueError("tail bound implemented for smoothed kind")
    n1, n2, d = f.params
    K = bump_decay_constant() * math.exp(c * d)
    amp = (n2**c + (n1**c if n1 > 0 else 0.0)) * K
    g = growth - 1.0 - 0.75  # t-exponent after |Mh| ~ 1/t and (dt)^{-3/4}
    # int_L^inf t^g e^{-sqrt(d t)} dt = 2 d^{-g-1} Gamma(2g+2, sqrt(dL))
    a = 2 * g + 2
    x = math.sqrt(d * height)
    val = 2.0 * d ** (-(g + 1.0)) * float(mpmath.gammainc(a, x))
    return amp * d**0.75 * val


def saddle_component(k: float) -> complex:
    """Single-saddle main term sqrt(-i pi/(sqrt(2i) k^{3/2})) e^{ik-sqrt(2ik)-1/4}.

    Principal branches throughout.  The full asymptotic for real k is twice
    the real part (the second saddle is the conjugate).
    """
    kk = complex(k)
    amp = cmath.sqrt(-1j * cmath.pi / (cmath.sqrt(2j) * kk**1.5))
    return amp * cmath.exp(1j * kk - cmath.sqrt(2j * kk) - 0.25)


def saddle_asymptotic(k: float) -> complex:
    """Leading saddle-point term of F(k) = int_{-1}^1 e^{ikx - 1/(1-x^2)} dx.

    Principal branches throughout; relative accuracy O(k^{-1/4}).
    """
    if k < 10:
        raise AsymptoticUnreliable(f"saddle asymptotics unreliable for k={k} < 10")
    return complex(2.0 * saddle_component(k).real)


def saddle_reference_component(k: float) -> complex:
    """Quadrature oracle for the bent-contour half of F(k).

    Integrates e^{ik} int_{0 -> 1-i} e^{-ikt - 1/(2t) - 1/(4-2t)} dt along
    t = (1-i)u; the integrand decays like e^{-ku}, so there is no
    oscillatory cancellation and the slowly varying modulus of F is
    |2 * component|.  F(k) = 2 Re(component) for real k.
    """
    import mpmath

    with mpmath.workdps(40):
        nodes, weights = _mp_leggauss()
        direction = mpmath.mpc(1, -1)
        umin = mpmath.mpf(5e-4) / max(1.0, math.sqrt(k) / 10.0)
        edges = [umin * (1 / umin) ** (j / 64) for j in range(65)]
        total = mpmath.mpc(0)
        kk = mpmath.mpf(k)
        for a, b in zip(edges[:-1], edges[1:]):
            half = (b - a) / 2
            mid = (a + b) / 2
            for x0, w in zip(nodes, weights):
                u = half * x0 + mid
                t = direction * u
                total += half * w * mpmath.e ** (-1j * kk * t - 1 / (2 * t) - 1 / (4 - 2 * t))
        total = direction * total * mpmath.e ** (1j * kk)
        return complex(total)


@lru_cache(maxsize=2)
def _mp_leggauss(m: int = 16, dps: int = 50):
    """Gauss-Legendre nodes/weights at mpmath precision (Newton-refined)."""
    import mpmath

    with mpmath.workdps(dps):
        xs0, _ = leggauss(m)
        nodes, weights = [], []
        for x0 in xs0:
            x = mpmath.mpf(float(x0))
            for _ in range(60):
                p0, p1 = mpmath.mpf(1), x
                for j in range(2, m + 1):
                    p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
                dp = m * (x * p1 - p0) / (x * x - 1)
                dx = p1 / dp
                x -= dx
                if abs(dx) < mpmath.mpf(10) ** (-dps + 2):
                    break
            p0, p1 = mpmath.mpf(1), x
            for j in range(2, m + 1):
                p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
            dp = m * (x * p1 - p0) / (x * x - 1)
            nodes.append(x)
            weights.append(2 / ((1 - x * x) * dp * dp))
    return tuple(nodes), tuple(weights)


def oscillatory_reference(k: float) -> float:
    """Quadrature oracle for F(k) = int_{-1}^1 e^{ikx - 1/(1-x^2)} dx.

    Runs in mpmath at 40 digits with per-oscillation panels: the integral
    is exponentially small in sqrt(k) while the integrand is O(1), so
    binary64 cancellation noise would swamp it for k beyond ~500.
    """
    import mpmath

    with mpmath.workdps(40):
        nodes, weights = _mp_leggauss()
        npanels = int(max(24, math.ceil(abs(k) / 2.0)))
        edges = mpmath.linspace(-1, 1, npanels + 1)
        total = mpmath.mpf(0)
        kk = mpmath.mpf(k)
        for a, b in zip(edges[:-1], edges[1:]):
            half = (b - a) / 2
            mid = (a + b) / 2
            for x0, w in zip(nodes, weights):
                x = half * x0 + mid
                total += half * w * mpmath.cos(kk * x) * mpmath.e ** (-1 / (1 - x * x))
        return float(total)  # integrand even part only: F(k) real for real k
