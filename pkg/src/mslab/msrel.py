"""The Maass-Selberg double Weyl sum and its perturbation/limit machinery.

A summand, for a Weyl pair (w1, w2) and spectral parameters lam1, lam2, is

    I(w1,w2) = e^{<C, w1.lam1 + w2.lam2>} / prod_j <alpha_j_vee, w1.lam1+w2.lam2>
               * M(w1, lam1) * M(w2, lam2),

with C = log T * rho_vee, so the exponential is a T-power.  Both lam's are
affine in their spectral variable (s1 or s2) and in the perturbation eps;
every denominator factor and every c-argument is therefore an affine form,
and the singular bookkeeping (which factors are O(eps), which summands are
identically zero) is decided on those forms exactly.

Two evaluation modes:

* ``limit``  -- the eps -> 0 limit, taken analytically by pairing each
  O(eps) denominator factor with the matching O(eps) intertwining zero
  (coefficient eps_coeff * c'(-1)) or pole (coefficient (6/pi)/eps_coeff).
  Summands with unmatched zeros vanish; unmatched poles raise.
* ``finite`` -- plain evaluation at a concrete eps != 0, used on the small
  residue contours and for cross-checking the limit mode.

The W x W loop is a pure map over a deterministically ordered term list;
reductions use exactly rounded ``math.fsum``, so results are independent of
any chunking.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import xifunc
from .affine import Affine, const_form
from .errors import (
    ContourCollision,
    DivergingLimit,
    IdenticallyZeroDenominator,
    InvalidParabolic,
    PerturbationFailure,
    SingularTerm,
)
from .intertwine import IntertwiningValue, m_op
from .precision import NeumaierAccumulator
from .weyl import (
    CoweightVector,
    WeightVector,
    WeylElement,
    act,
    all_weyl,
    inversion_set,
    rho,
    rho_covector,
    w_star,
)

__all__ = [
    "TruncationParam",
    "MsTerm",
    "LambdaSpec",
    "lambda_spec_of_s",
    "const_spec",
    "minus_rho_spec",
    "lambda_builder",
    "WeylSumEvaluator",
    "ms_term",
    "ms_sum",
    "truncated_volume",
    "truncated_volume_deficit",
    "residue_bundle_at_n",
    "residue_bundle_analytic",
    "permissible_perms",
    "subleading_volume_terms",
    "extrapolate_to_zero",
    "DEFAULT_EPS_SCHEDULE",
]

DEFAULT_EPS_SCHEDULE = (1e-3, 5e-4, 2.5e-4)


def _combine_parts(parts, shape, is_array, log_T: float):
    """Deterministic compensated reduction of (part, texp) summands."""
    acc_r = NeumaierAccumulator(np.zeros(shape) if is_array else 0.0)
    acc_i = NeumaierAccumulator(np.zeros(shape) if is_array else 0.0)
    for val, texp in parts:
        v = val * (np.exp(log_T * texp) if is_array else cmath.exp(log_T * texp))
        acc_r.add(v.real)
        acc_i.add(v.imag)
    return acc_r.total() + 1j * acc_i.total()


@dataclass(frozen=True)
class TruncationParam:
    """Truncation height T > 1; C = log T * rho_vee is always derived."""

    n: int
    T: float

    def __post_init__(self):
        if not self.T > 1:
            raise PerturbationFailure(f"need T > 1, got {self.T}")

    @property
    def C(self) -> Tuple[float, ...]:
        lt = math.log(self.T)
        return tuple(lt * float(c) for c in rho_covector(self.n).entries)

    @property
    def log_T(self) -> float:
        return math.log(self.T)


# ---------------------------------------------------------------------------
# symbolic spectral parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LambdaSpec:
    """n affine entries in (s1, s2, eps); the symbolic form of a lambda."""

    n: int
    entries: Tuple[Affine, ...]

    def perturbed(self, direction: Sequence[Fraction], scale: Fraction = Fraction(1)) -> "LambdaSpec":
        """Add eps * scale * direction to the entries."""
        new = tuple(
            e + Affine(0, 0, 0, scale * Fraction(d) if isinstance(d, (int, Fraction)) else scale * d)
            for e, d in zip(self.entries, direction)
        )
        return LambdaSpec(self.n, new)

    def at(self, s1=0.0, s2=0.0, eps=0.0) -> WeightVector:
        return WeightVector(self.n, tuple(complex(e.value(s1, s2, eps)) for e in self.entries))


def lambda_spec_of_s(n: int, k: int, var: str) -> LambdaSpec:
    """Symbolic lambda(s): first n-k entries -n..-k-1, last k entries -s-k..-s-1."""
    if not 1 <= k <= n - 1:
        raise InvalidParabolic(f"k={k} out of range for n={n}")
    ent = [Affine(Fraction(-n + i)) for i in range(n - k)]
    b = {"s1": (1, 0), "s2": (0, 1)}[var]
    ent += [Affine(Fraction(-k + i), -b[0], -b[1], 0) for i in range(k)]
    return LambdaSpec(n, tuple(ent))


def const_spec(entries: Sequence) -> LambdaSpec:
    return LambdaSpec(len(entries), tuple(const_form(Fraction(e) if isinstance(e, (int, Fraction)) else e) for e in entries))


def minus_rho_spec(n: int) -> LambdaSpec:
    return const_spec([Fraction(-(n - 2 * i + 1), 2) for i in range(1, n + 1)])


def rho_fractions(n: int) -> Tuple[Fraction, ...]:
    return tuple(Fraction(n - 2 * i + 1, 2) for i in range(1, n + 1))


def generic_direction(n: int) -> Tuple[Fraction, ...]:
    """A zero-sum rational direction with all pairwise differences nonzero."""
    raw = [Fraction(1, i + 1) for i in range(n)]
    m = sum(raw, Fraction(0)) / n
    return tuple(r - m for r in raw)


def act_fractions(w: WeylElement, vec: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    out = [Fraction(0)] * w.n
    for i in range(w.n):
        out[w.image[i] - 1] = vec[i]
    return tuple(out)


@dataclass(frozen=True)
class LambdaBuilder:
    """Numeric and symbolic access to lambda(s) for one (n, k)."""

    n: int
    k: int

    def spec(self, var: str = "s1") -> LambdaSpec:
        return lambda_spec_of_s(self.n, self.k, var)

    def __call__(self, s: complex) -> WeightVector:
        from .weyl import lambda_of_s

        return lambda_of_s(self.n, self.k, s)


def lambda_builder(n: int, k: int) -> LambdaBuilder:
    return LambdaBuilder(n, k)


# ---------------------------------------------------------------------------
# term table
# ---------------------------------------------------------------------------


@dataclass
class _Term:
    w1: WeylElement
    w2: WeylElement
    denoms: List[Affine]
    texp: Affine
    m1_args: List[Affine]
    m2_args: List[Affine]
    # limit-mode classification (filled lazily)
    dead: bool = False
    prefactor: complex = 1.0 + 0j
    reg_denoms: List[Affine] = field(default_factory=list)
    reg_cargs: List[Affine] = field(default_factory=list)
    net_order: int = 0
    singular_factors: List[str] = field(default_factory=list)


def _pair_sum_entries(spec1: LambdaSpec, spec2: LambdaSpec, w1: WeylElement, w2: WeylElement) -> List[Affine]:
    """Entries of w1.lam1 + w2.lam2 (action: (w.lam)_j = lam_{w^{-1}(j)})."""
    inv1 = w1.inverse().image
    inv2 = w2.inverse().image
    return [spec1.entries[inv1[j] - 1] + spec2.entries[inv2[j] - 1] for j in range(spec1.n)]


def _build_term(n: int, spec1: LambdaSpec, spec2: LambdaSpec, w1: WeylElement, w2: WeylElement) -> _Term:
    ent = _pair_sum_entries(spec1, spec2, w1, w2)
    denoms = [ent[j] - ent[j + 1] for j in range(n - 1)]
    rv = rho_fractions(n)  # rho_vee has the same entries as rho
    texp = Affine(Fraction(0))
    for j in range(n):
        texp = texp + ent[j].scale(rv[j])
    m1_args = [spec1.entries[i - 1] - spec1.entries[j - 1] for (i, j) in inversion_set(w1)]
    m2_args = [spec2.entries[i - 1] - spec2.entries[j - 1] for (i, j) in inversion_set(w2)]
    return _Term(w1, w2, denoms, texp, m1_args, m2_args)


def _classify(term: _Term, active: Tuple[str, ...]) -> None:
    """Resolve the eps -> 0 limit structure of one summand.

    Pairs O(eps) denominator factors and c-function zeros/poles into a net
    order; fills the finite prefactor when the net order is zero.
    """
    cprime = xifunc.c_fn_slope_at_minus_one()
    pref = 1.0 + 0j
    zeros = poles = 0
    term.reg_denoms = []
    term.reg_cargs = []
    term.singular_factors = []
    # exact c(-1) factors kill the summand outright; they must be seen before
    # any denominator bookkeeping (unperturbed sums pair them legitimately)
    if any(f.is_exactly(-1, active) for f in term.m1_args + term.m2_args):
        term.dead = True
        return
    for f in term.denoms:
        if f.is_exactly(0, active):
            raise IdenticallyZeroDenominator(
                f"denominator {f} vanishes identically for pair {term.w1.image},{term.w2.image}"
            )
        if f.is_eps_multiple_of(0, active):
            poles += 1
            pref /= f.eps_coeff()
            term.singular_factors.append(f"denom {f}")
        else:
            term.reg_denoms.append(f)
    for f in term.m1_args + term.m2_args:
        if f.is_exactly(-1, active):
            term.dead = True
            return
        if f.is_exactly(1, active):
            poles += 1
            term.singular_factors.append(f"c-pole {f} (no eps resolution)")
            pref *= math.nan  # unresolvable; only reachable off the allowed contours
        elif f.is_eps_multiple_of(-1, active):
            zeros += 1
            pref *= f.eps_coeff() * cprime
            term.singular_factors.append(f"c-zero {f}")
        elif f.is_eps_multiple_of(1, active):
            poles += 1
            pref *= xifunc.C_POLE_COEFF / f.eps_coeff()
            term.singular_factors.append(f"c-pole {f}")
        else:
            term.reg_cargs.append(f)
    term.net_order = zeros - poles
    if term.net_order > 0:
        term.dead = True
    term.prefactor = pref


class WeylSumEvaluator:
    """Evaluates sum_{(w1,w2) in pairs} I(w1,w2) in limit or finite mode."""

    def __init__(
        self,
        n: int,
        spec1: LambdaSpec,
        spec2: LambdaSpec,
        trunc: TruncationParam,
        pairs: Optional[Sequence[Tuple[WeylElement, WeylElement]]] = None,
    ):
        self.n = n
        self.spec1 = spec1
        self.spec2 = spec2
        self.trunc = trunc
        if pairs is None:
            ws = list(all_weyl(n))
            pairs = [(w1, w2) for w1 in ws for w2 in ws]
        self.pairs = list(pairs)
        self.terms = [_build_term(n, spec1, spec2, w1, w2) for (w1, w2) in self.pairs]
        self._classified_for: Optional[Tuple[str, ...]] = None
        self._c_persist: Dict[tuple, np.ndarray] = {}

    # -- classification -------------------------------------------------
    def classify(self, active: Tuple[str, ...] = ()) -> None:
        """Resolve the eps structure of every term.

        "Exactly +-1 / exactly 0" always means identically in both spectral
        variables; the ``active`` argument is accepted for call-site clarity
        but classification does not depend on it.
        """
        if self._classified_for is not None:
            return
        for t in self.terms:
            t.dead = False
            _classify(t, ("s1", "s2"))
        self._classified_for = ("s1", "s2")

    def singular_terms(self) -> List[_Term]:
        return [t for t in self.terms if not t.dead and t.net_order < 0]

    # -- limit mode ------------------------------------------------------
    def limit_parts(self, s1=0.0, s2=0.0, active: Tuple[str, ...] = (), grid_tag: Optional[str] = None):
        """T-independent factor and T-exponent of each live summand.

        The summand equals part * T^texp; separating them makes sweeps over
        several T values nearly free (the c-function work dominates).  When
        ``grid_tag`` names the array argument's grid, the c-function arrays
        for forms depending only on that variable persist across calls (the
        double integrals reuse the inner grid for every outer node).
        """
        self.classify(active)
        bad = self.singular_terms()
        if bad:
            t = bad[0]
            raise SingularTerm(
                f"net order {t.net_order} at pair {t.w1.image},{t.w2.image}",
                factors=t.singular_factors,
            )
        is_array = isinstance(s1, np.ndarray) or isinstance(s2, np.ndarray)
        array_var = "s1" if isinstance(s1, np.ndarray) else ("s2" if isinstance(s2, np.ndarray) else None)
        shape = np.shape(s1) if isinstance(s1, np.ndarray) else np.shape(s2)
        ccache: Dict[tuple, np.ndarray] = {}
        dcache: Dict[tuple, np.ndarray] = {}

        def asgrid(z):
            if not is_array:
                return z
            z = np.asarray(z, dtype=complex)
            if z.shape != shape:
                z = np.broadcast_to(z, shape).copy()
            return z

        def cvals(f: Affine):
            key = f.key()
            if key in ccache:
                return ccache[key]
            # c-arguments live on one lambda side, so they depend on at most
            # one spectral variable; grid-persistent iff it is the array var
            persist = (
                grid_tag is not None
                and is_array
                and ((array_var == "s1" and f.b1 != 0 and f.b2 == 0)
                     or (array_var == "s2" and f.b2 != 0 and f.b1 == 0))
            )
            if persist:
                pkey = (key, grid_tag)
                if pkey not in self._c_persist:
                    self._c_persist[pkey] = xifunc.c_values_vec(asgrid(f.value(s1, s2, 0.0)))
                ccache[key] = self._c_persist[pkey]
            else:
                z = f.value(s1, s2, 0.0)
                if np.ndim(z) == 0:
                    ccache[key] = xifunc.c_value(complex(z))  # scalar broadcasts
                else:
                    ccache[key] = xifunc.c_values_vec(asgrid(z))
            return ccache[key]

        def dvals(f: Affine):
            key = f.key()
            if key not in dcache:
                dcache[key] = f.value(s1, s2, 0.0)
            return dcache[key]

        parts = []
        for t in self.terms:
            if t.dead:
                continue
            val = t.prefactor * (np.ones(shape, dtype=complex) if is_array else 1.0)
            for f in t.reg_cargs:
                val = val * cvals(f)
            for f in t.reg_denoms:
                val = val / dvals(f)
            texp = asgrid(t.texp.value(s1, s2, 0.0)) if is_array else complex(t.texp.value(s1, s2, 0.0))
            parts.append((val, texp))
        return parts, shape, is_array

    def eval_limit(self, s1=0.0, s2=0.0, active: Tuple[str, ...] = (), log_T: Optional[float] = None):
        """eps -> 0 limit of the sum; s1/s2 scalar or one of them an array."""
        parts, shape, is_array = self.limit_parts(s1, s2, active)
        return _combine_parts(parts, shape, is_array, self.trunc.log_T if log_T is None else log_T)

    # -- finite mode -----------------------------------------------------
    def eval_at_eps(self, eps: float, s1=0.0, s2=0.0, log_T: Optional[float] = None):
        """Direct evaluation at concrete eps != 0 (scalar or array s)."""
        is_array = isinstance(s1, np.ndarray) or isinstance(s2, np.ndarray)
        shape = np.shape(s1) if isinstance(s1, np.ndarray) else np.shape(s2)
        ccache: Dict[tuple, np.ndarray] = {}

        def cvals(f: Affine):
            key = f.key()
            if key not in ccache:
                if f.is_exactly(-1, ("s1", "s2")):  # exact zero independent of everything
                    ccache[key] = np.zeros(shape) if is_array else 0.0
                else:
                    z = f.value(s1, s2, eps)
                    if is_array:
                        z = np.broadcast_to(np.asarray(z, dtype=complex), shape).copy() if np.shape(z) != shape else np.asarray(z, dtype=complex)
                        ccache[key] = xifunc.c_values_vec(z)
                    else:
                        ccache[key] = xifunc.c_value(z)
            return ccache[key]

        logT = self.trunc.log_T if log_T is None else log_T
        acc_r = NeumaierAccumulator(np.zeros(shape) if is_array else 0.0)
        acc_i = NeumaierAccumulator(np.zeros(shape) if is_array else 0.0)
        for t in self.terms:
            val = np.exp(logT * np.asarray(t.texp.value(s1, s2, eps), dtype=complex)) if is_array else cmath.exp(logT * complex(t.texp.value(s1, s2, eps)))
            dead = False
            for f in t.m1_args + t.m2_args:
                cv = cvals(f)
                if not is_array and cv == 0.0:
                    dead = True
                    break
                val = val * cv
            if dead:
                continue
            for f in t.denoms:
                val = val / f.value(s1, s2, eps)
            acc_r.add(val.real)
            acc_i.add(val.imag)
        return acc_r.total() + 1j * acc_i.total()

    # -- symbolic singularity scan ----------------------------------------
    def scan_singular_s(self, var: str) -> List[Tuple[complex, float, Affine]]:
        """Roots (at eps=0 / eps-coefficient) of s-dependent singular factors.

        Returns (root at eps=0, d(root)/d(eps), form) for every denominator
        factor and every c-argument-hits-(+1) locus depending on ``var``.
        Used to certify contours stay clear of singular points.
        """
        out = []
        seen = set()
        bidx = 1 if var == "s1" else 2
        for t in self.terms:
            for f in t.denoms:
                b = (f.b1, f.b2)[bidx - 1]
                if b == 0:
                    continue
                key = f.key()
                if key in seen:
                    continue
                seen.add(key)
                root = -complex(f.value(0, 0, 0)) / float(b)
                deps = -f.eps_coeff() / float(b)
                out.append((root, deps, f))
            for f in t.m1_args + t.m2_args:
                b = (f.b1, f.b2)[bidx - 1]
                if b == 0:
                    continue
                key = ("pole",) + f.key()
                if key in seen:
                    continue
                seen.add(key)
                root = (1.0 - complex(f.value(0, 0, 0))) / float(b)
                deps = -f.eps_coeff() / float(b)
                out.append((root, deps, f))
        return out


# ---------------------------------------------------------------------------
# public numeric facade
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MsTerm:
    """One evaluated Maass-Selberg summand with its bookkeeping."""

    w1: WeylElement
    w2: WeylElement
    t_exponent: complex
    denom_factors: Tuple[Tuple[Affine, complex], ...]
    m1: IntertwiningValue
    m2: IntertwiningValue
    value: complex
    net_order: int


def _numeric_spec(lam: WeightVector) -> LambdaSpec:
    dirs = lam.eps_dir or (0.0,) * lam.n
    return LambdaSpec(lam.n, tuple(Affine(e, 0, 0, d) for e, d in zip(lam.entries, dirs)))


def ms_term(
    w1: WeylElement,
    w2: WeylElement,
    lam1: WeightVector,
    lam2: WeightVector,
    trunc: TruncationParam,
) -> MsTerm:
    """Assemble one summand I(w1,w2) in the eps -> 0 limit.

    The T-power is T^{<rho_vee, w1.lam1 + w2.lam2>}.  Raises SingularTerm
    when the term has an unresolvable pole (net order < 0).
    """
    n = lam1.n
    spec1, spec2 = _numeric_spec(lam1), _numeric_spec(lam2)
    term = _build_term(n, spec1, spec2, w1, w2)
    _classify(term, active=("s1", "s2"))
    if not term.dead and term.net_order < 0:
        raise SingularTerm(
            f"unresolvable pole in term ({w1.image},{w2.image})",
            factors=term.singular_factors,
        )
    m1 = m_op(w1, lam1)
    m2 = m_op(w2, lam2)
    texp = complex(term.texp.value(0, 0, 0))
    denoms = tuple((f, complex(f.value(0, 0, 0))) for f in term.denoms)
    if term.dead:
        value = 0.0 + 0j
    else:
        value = cmath.exp(trunc.log_T * texp) * term.prefactor
        for f in term.reg_cargs:
            value *= xifunc.c_value(complex(f.value(0, 0, 0)))
        for f in term.reg_denoms:
            value /= complex(f.value(0, 0, 0))
    return MsTerm(w1, w2, texp, denoms, m1, m2, value, term.net_order)


def extrapolate_to_zero(eps_schedule: Sequence[float], values: Sequence[complex]) -> Tuple[complex, float]:
    """Neville extrapolation of values(eps) to eps=0; returns (limit, delta).

    delta is the change from the last plain value to the extrapolant, the
    reported uncertainty of the limit.
    """
    xs = list(map(float, eps_schedule))
    tab = list(map(complex, values))
    m = len(tab)
    for level in range(1, m):
        new = []
        for i in range(m - level):
            x0, x1 = xs[i], xs[i + level]
            new.append((x0 * tab[i + 1] - x1 * tab[i]) / (x0 - x1))
        tab = new
    limit = tab[0]
    return limit, abs(values[-1] - limit)


def ms_sum(
    lam1: WeightVector,
    lam2: WeightVector,
    trunc: TruncationParam,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
) -> complex:
    """Full W x W Maass-Selberg sum with lam1 perturbed along rho.

    Evaluates at each eps in the schedule and extrapolates to eps -> 0.
    Raises DivergingLimit when successive extrapolants disagree beyond 1e-6
    relative.
    """
    n = lam1.n
    if math.factorial(n) ** 2 > 518400:
        raise InvalidParabolic(f"W x W too large for n={n} (cap n <= 6)")
    spec1 = _numeric_spec(lam1.plus_eps(rho(n)))
    spec2 = _numeric_spec(lam2)
    ev = WeylSumEvaluator(n, spec1, spec2, trunc)
    vals = [ev.eval_at_eps(e) for e in eps_schedule]
    limit, delta = extrapolate_to_zero(eps_schedule, vals)
    partial, _ = extrapolate_to_zero(eps_schedule[:-1], vals[:-1])
    scale = max(abs(limit), 1e-30)
    if abs(partial - limit) / scale > 1e-6:
        raise DivergingLimit(
            f"eps extrapolation unstable: {partial} vs {limit} (rel {abs(partial-limit)/scale:.2e})"
        )
    return limit


# ---------------------------------------------------------------------------
# truncated volume and its structure
# ---------------------------------------------------------------------------


def _volume_evaluator(n: int, trunc: TruncationParam, direction: Sequence[Fraction]) -> WeylSumEvaluator:
    """Sum over w of the volume summand with -rho_tilde = -rho + eps*direction."""
    spec1 = minus_rho_spec(n).perturbed(direction)
    spec2 = minus_rho_spec(n)
    e = WeylElement.identity(n)
    pairs = [(w, e) for w in all_weyl(n)]
    return WeylSumEvaluator(n, spec1, spec2, trunc, pairs)


def default_volume_direction(n: int) -> Tuple[Fraction, ...]:
    """-d where rho_tilde = rho - eps * act(w_*, rho), for the rank-1 block swap."""
    wρ = act_fractions(w_star(n, 1), rho_fractions(n))
    return tuple(x for x in wρ)


def truncated_volume_deficit(
    n: int,
    trunc: TruncationParam,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
    direction: Optional[Sequence[Fraction]] = None,
) -> float:
    """total_volume(n) - vol^C, summed directly over the non-leading terms.

    The leading term (the full reversal) converges to the untruncated
    volume; the deficit is the negated sum of all other eps -> 0 limits,
    which is well conditioned even when it is ~1e-13 of the volume.
    """
    direction = direction or default_volume_direction(n)
    ev = _volume_evaluator(n, trunc, direction)
    w0 = WeylElement(n, tuple(range(n, 0, -1)))
    deficit_r, deficit_i = [], []
    for t, (w, _) in zip(ev.terms, ev.pairs):
        if w == w0:
            continue
        _classify(t, active=("s1", "s2"))
        if t.dead:
            continue
        if t.net_order < 0:
            raise SingularTerm("volume term unresolvable", factors=t.singular_factors)
        val = cmath.exp(trunc.log_T * complex(t.texp.value(0, 0, 0))) * t.prefactor
        for f in t.reg_cargs:
            val *= xifunc.c_value(complex(f.value(0, 0, 0)))
        for f in t.reg_denoms:
            val /= complex(f.value(0, 0, 0))
        deficit_r.append(val.real)
        deficit_i.append(val.imag)
    d = -complex(math.fsum(deficit_r), math.fsum(deficit_i))
    if abs(d.imag) > 1e-8 * max(abs(d.real), 1e-300):
        raise PerturbationFailure(f"volume deficit not real: {d}")
    return d.real


def truncated_volume(
    n: int,
    trunc: TruncationParam,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
    validate: bool = False,
) -> float:
    """vol^C, the volume of the truncated fundamental domain.

    Computed from the eps -> 0 limit of the Weyl sum at -rho_tilde; the
    perturbation direction is act(w_*, rho), with a generic rational
    direction (and, under ``validate``, a finite-eps extrapolation along
    the schedule) cross-checked to 1e-7 relative.
    """
    vol = xifunc.total_volume(n)
    d1 = truncated_volume_deficit(n, trunc, eps_schedule)
    d2 = truncated_volume_deficit(n, trunc, eps_schedule, direction=generic_direction(n))
    if abs(d1 - d2) > 1e-7 * max(vol, abs(d1)):
        raise PerturbationFailure(
            f"perturbation-direction dependence in vol^C: {d1} vs {d2}"
        )
    out = vol - d1
    if validate:
        ev = _volume_evaluator(n, trunc, default_volume_direction(n))
        vals = [ev.eval_at_eps(e) for e in eps_schedule]
        lim, _ = extrapolate_to_zero(eps_schedule, vals)
        if abs(lim.real - out) > 1e-7 * max(abs(out), 1.0):
            raise PerturbationFailure(
                f"finite-eps extrapolation {lim.real} disagrees with limit {out}"
            )
    if not 0 < out <= vol:
        raise PerturbationFailure(f"vol^C = {out} outside (0, vol={vol}]")
    return out


def permissible_perms(n: int) -> List[WeylElement]:
    """All w whose descents are unit descents: w(h+1) < w(h) => w(h+1)+1 = w(h).

    These are exactly the images made of reversed contiguous blocks; there
    are 2^(n-1) of them, and they are the only elements surviving the
    eps -> 0 limit in the truncated-volume sum.
    """
    out = []
    for w in all_weyl(n):
        img = w.image
        if all(img[h] - img[h - 1] == -1 for h in range(1, n) if img[h] < img[h - 1]):
            out.append(w)
    return out


def subleading_volume_terms(
    n: int,
    trunc: TruncationParam,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
) -> Tuple[complex, complex]:
    """The two next-to-leading contributions to vol^C.

    Their images are (n-1,...,2,1,n) and (1,n,...,3,2); the values are
    asserted equal to 1e-8 relative and their combined T-degree is
    -n(n-1)/2.
    """
    phi1 = WeylElement(n, tuple(range(n - 1, 0, -1)) + (n,))
    phi2 = WeylElement(n, (1,) + tuple(range(n, 1, -1)))
    direction = default_volume_direction(n)
    ev = _volume_evaluator(n, trunc, direction)
    vals = {}
    for t, (w, _) in zip(ev.terms, ev.pairs):
        if w not in (phi1, phi2):
            continue
        _classify(t, active=("s1", "s2"))
        val = 0j
        if not t.dead:
            val = cmath.exp(trunc.log_T * complex(t.texp.value(0, 0, 0))) * t.prefactor
            for f in t.reg_cargs:
                val *= xifunc.c_value(complex(f.value(0, 0, 0)))
            for f in t.reg_denoms:
                val /= complex(f.value(0, 0, 0))
        vals[w] = val
    v1, v2 = vals[phi1], vals[phi2]
    if n > 2 and abs(v1 - v2) > 1e-8 * max(abs(v1), abs(v2)):
        raise PerturbationFailure(f"subleading contributions differ: {v1} vs {v2}")
    return v1, v2


# ---------------------------------------------------------------------------
# residue bundles at s = n
# ---------------------------------------------------------------------------


def _l1_evaluator(n: int, k: int, trunc: TruncationParam, direction=None) -> WeylSumEvaluator:
    """Single-sum evaluator: sum_w I(w) against the constant series (-rho)."""
    direction = direction or rho_fractions(n)
    spec1 = lambda_spec_of_s(n, k, "s1").perturbed(direction)
    spec2 = minus_rho_spec(n)
    e = WeylElement.identity(n)
    pairs = [(w, e) for w in all_weyl(n)]
    return WeylSumEvaluator(n, spec1, spec2, trunc, pairs)


def l1_sum_evaluator(n: int, k: int, trunc: TruncationParam) -> WeylSumEvaluator:
    """Public handle on the single-sum (series against constant-1) evaluator."""
    return _l1_evaluator(n, k, trunc)


def res_half_evaluator(n: int, k2: int, trunc: TruncationParam) -> WeylSumEvaluator:
    """sum_{w2} of the residual single-sum: -rho against lambda2(s2)."""
    spec1 = minus_rho_spec(n)
    spec2 = lambda_spec_of_s(n, k2, "s2")
    e = WeylElement.identity(n)
    pairs = [(e, w) for w in all_weyl(n)]
    return WeylSumEvaluator(n, spec1, spec2, trunc, pairs)


def inner_product_evaluator(n: int, k1: int, k2: int, trunc: TruncationParam) -> WeylSumEvaluator:
    """The full W x W evaluator with lambda1(s1)+eps*rho and lambda2(s2)."""
    spec1 = lambda_spec_of_s(n, k1, "s1").perturbed(rho_fractions(n))
    spec2 = lambda_spec_of_s(n, k2, "s2")
    return WeylSumEvaluator(n, spec1, spec2, trunc)


def _circle_nodes(center: complex, radius: float, m: int = 64) -> np.ndarray:
    th = 2 * np.pi * np.arange(m) / m
    return center + radius * np.exp(1j * th)


def _contour_integral_circle(fvals: np.ndarray, center: complex, radius: float) -> complex:
    """Raw contour integral oint f ds by the m-node trapezoid rule."""
    m = len(fvals)
    th = 2 * np.pi * np.arange(m) / m
    ds = 1j * radius * np.exp(1j * th) * (2 * np.pi / m)
    return complex(np.sum(fvals * ds))


def residue_bundle_at_n(
    lam_builder: LambdaBuilder,
    trunc: TruncationParam,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
    mf: Optional[Callable[[complex], complex]] = None,
    nodes: int = 64,
) -> complex:
    """Raw contour integral around the s = n residue cluster, eps -> 0.

    Integrates Mf(s) * sum_w I(w, s) over |s - n| = 1.5 n eps (enclosing
    the whole cluster at n, n±eps, ..., n±(n-1)eps and nothing else; a
    symbolic pre-scan verifies the latter and the radius auto-adjusts once
    on a near-collision).  Returns the raw integral; the caller divides by
    2 pi i exactly once.
    """
    n, k = lam_builder.n, lam_builder.k
    ev = _l1_evaluator(n, k, trunc)
    scan = ev.scan_singular_s("s1")
    outs = []
    for eps in eps_schedule:
        radius = 1.5 * n * eps
        for _attempt in range(2):
            ok = True
            for root0, deps, _f in scan:
                r = root0 + deps * eps
                gap = abs(abs(r - n) - radius)
                if gap < 0.1 * eps:
                    ok = False
                    break
            if ok:
                break
            radius *= 1.25
        else:
            raise ContourCollision("could not separate bundle contour from singular points")
        s_nodes = _circle_nodes(complex(n), radius, nodes)
        fvals = ev.eval_at_eps(eps, s1=s_nodes)
        if mf is not None:
            fvals = fvals * np.asarray([mf(s) for s in s_nodes])
        outs.append(_contour_integral_circle(fvals, complex(n), radius))
    limit, delta = extrapolate_to_zero(eps_schedule, outs)
    if delta > 1e-5 * max(abs(limit), 1e-12):
        # one refinement: halve the schedule
        finer = [e / 2 for e in eps_schedule]
        return residue_bundle_at_n(lam_builder, trunc, finer, mf, nodes)
    return limit


def residue_bundle_analytic(
    lam_builder: LambdaBuilder,
    trunc: TruncationParam,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
    mf: Optional[Callable[[complex], complex]] = None,
) -> complex:
    """Same bundle as `residue_bundle_at_n`, via per-point Laurent residues.

    Independent extraction route: every cluster point is a simple pole of
    each summand; the residue of a factor 1/(b(s-s*)) is read off
    analytically and the remaining factors are evaluated at s*.  Returns
    2*pi*i times the residue sum so the two routes are directly comparable.
    """
    n, k = lam_builder.n, lam_builder.k
    ev = _l1_evaluator(n, k, trunc)
    weight = mf if mf is not None else (lambda s: 1.0)
    vals = [_bundle_weighted(ev, trunc, eps, weight) for eps in eps_schedule]
    limit, _ = extrapolate_to_zero(eps_schedule, vals)
    return 2j * math.pi * limit


def _bundle_weighted(ev: WeylSumEvaluator, trunc: TruncationParam, eps: float, mf) -> complex:
    n = ev.n
    logT = trunc.log_T
    radius = 1.5 * n * eps
    total = 0j
    for t in ev.terms:
        locs = []
        for idx, f in enumerate(t.denoms):
            if f.b1 != 0:
                root = -(complex(f.value(0, 0, eps))) / float(f.b1)
                if abs(root - n) < radius:
                    locs.append((root, float(f.b1), "denom", idx))
        margs = t.m1_args + t.m2_args
        for idx, f in enumerate(margs):
            if f.b1 != 0:
                root = (1.0 - complex(f.value(0, 0, eps))) / float(f.b1)
                if abs(root - n) < radius:
                    locs.append((root, float(f.b1), "carg", idx))
        for root, b, kind, idx in locs:
            val = cmath.exp(logT * complex(t.texp.value(root, 0, eps))) * mf(root)
            for j, f in enumerate(margs):
                if kind == "carg" and j == idx:
                    val *= xifunc.C_POLE_COEFF / b
                else:
                    if f.is_exactly(-1, ("s1", "s2")):
                        val = 0.0
                        break
                    val *= xifunc.c_value(complex(f.value(root, 0, eps)))
            if val == 0.0:
                continue
            for j, f in enumerate(t.denoms):
                if kind == "denom" and j == idx:
                    val /= b
                else:
                    val /= complex(f.value(root, 0, eps))
            total += val
    return total
