"""Vertical-line quadrature and the two headline pipelines.

Pipeline 1 (the truncated first-moment formula): the series integral equals

    Mf(n) xi(n,k) vol^C  +  (shifted integral on Re s = n - eta),

cross-checked against direct quadrature of the spectral side at
Re s = n + 1/2.  Pipeline 2 (truncated inner product): the double-contour
sum equals

    Mf1(n) Mf2(n) xi(n,k1) xi(n,k2) vol^C        (main)
  + res-half line integral on Re s2 = n - eta2   (residue_extra)
  + remaining double integral                    (shifted_integral)
  + mirror line integral + cluster residuals     (slack),

cross-checked against direct double quadrature at the starting abscissas
c1 = n + 2 eta2 - eta2^2, c2 = n + eta2 (1 - eta2)^2.  The mirror piece is
the left-over single integral of the s2-main-residue after its own contour
shift; it is not itemized in the headline error term, so it lands in slack.

All line integrands pair conjugate-symmetrically (real test functions), so
integrals run over t > 0 and take twice the real part; every reported total
is real after that pairing.  Error bars combine embedded-quadrature
differences with certified Mellin decay tails ("certified" here means the
paper-shaped bound with a measured constant doubled).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import mellin as ml
from . import msrel, xifunc
from .errors import (
    ConditionUnsatisfied,
    PipelineInconsistency,
    QuadratureFailure,
    ScheduleViolation,
)
from .mellin import TestFunction
from .msrel import TruncationParam, WeylSumEvaluator
from .weyl import WeightVector, act, all_weyl, lambda_of_s, rho_covector_pairing

MAX_HEIGHT = 200.0  # special-function validity ceiling


@dataclass(frozen=True)
class ContourSpec:
    """One vertical line: abscissa, height cut, node budget, tail bound."""

    abscissa: float
    height_cut: float = 120.0
    node_budget: int = 4096
    tail_bound: float = 0.0

    def __post_init__(self):
        if self.height_cut > MAX_HEIGHT:
            raise ScheduleViolation(f"height cut {self.height_cut} > {MAX_HEIGHT}")


@dataclass
class FormulaBreakdown:
    """main + residue_extra + shifted_integral + slack = total (bookkeeping)."""

    main: float
    residue_extra: float
    shifted_integral: float
    slack: float
    total: float = 0.0
    checks: Dict[str, float] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.total == 0.0:
            self.total = self.main + self.residue_extra + self.shifted_integral + self.slack


# ---------------------------------------------------------------------------
# generic vertical-line quadrature
# ---------------------------------------------------------------------------

_GL8 = leggauss(8)
_GL16 = leggauss(16)


def _panel_value(F, c, a, b, rule):
    x, w = rule
    t = 0.5 * (b - a) * x + 0.5 * (a + b)
    vals = F(c + 1j * t)
    return 0.5 * (b - a) * np.sum(w * vals)


def vertical_integral(F: Callable[[np.ndarray], np.ndarray], spec: ContourSpec) -> Tuple[complex, float]:
    """(1/2 pi i) * integral of F over the vertical segment |Im s| <= height_cut.

    Adaptive bisection with embedded 8/16-point Gauss pairs; the returned
    error estimate adds the caller-certified tail bound.  Raises
    QuadratureFailure (with the worst panel) when refinement stalls against
    the node budget, or when the integrand shows no decay at the cut and no
    tail bound was certified.
    """
    c, L = spec.abscissa, spec.height_cut
    probe_half = np.max(np.abs(F(np.array([c + 0.5j * L]))))
    probe_full = np.max(np.abs(F(np.array([c + 1j * L]))))
    if spec.tail_bound == 0.0 and probe_full > 0.75 * probe_half and probe_full > 1e-300:
        raise QuadratureFailure(
            "integrand does not decay at the height cut and no tail bound is certified",
            worst_panel=(L / 2, L),
        )
    edges = [-L, -L / 2, -8.0, -2.0, -0.5, 0.5, 2.0, 8.0, L / 2, L]
    edges = sorted(set(e for e in edges if -L <= e <= L))
    panels = []
    nodes_used = 0
    for a, b in zip(edges[:-1], edges[1:]):
        v16 = _panel_value(F, c, a, b, _GL16)
        v8 = _panel_value(F, c, a, b, _GL8)
        panels.append((abs(v16 - v8), a, b, v16))
        nodes_used += 24
    tol = 1e-10 * max(1.0, sum(abs(p[3]) for p in panels))
    while sum(p[0] for p in panels) > tol:
        panels.sort(key=lambda p: -p[0])
        err, a, b, _ = panels.pop(0)
        if nodes_used + 48 > spec.node_budget:
            raise QuadratureFailure(
                f"panel refinement exhausted the node budget at panel ({a},{b})",
                worst_panel=(a, b),
            )
        m = 0.5 * (a + b)
        for aa, bb in ((a, m), (m, b)):
            v16 = _panel_value(F, c, aa, bb, _GL16)
            v8 = _panel_value(F, c, aa, bb, _GL8)
            panels.append((abs(v16 - v8), aa, bb, v16))
            nodes_used += 24
    total = sum(p[3] for p in panels)
    err = sum(p[0] for p in panels) + spec.tail_bound
    return complex(total) / (2 * math.pi), float(err)


# ---------------------------------------------------------------------------
# graded grids for the pipeline lines
# ---------------------------------------------------------------------------


def _graded_edges(feature: float, L: float, cap: float = math.inf) -> List[float]:
    """Panel edges on [0, L]: geometric growth from the feature scale,
    width-capped so Mellin oscillations e^{it log N} stay resolved."""
    f = min(max(feature, 2e-3), 0.5, cap)
    edges = [0.0]
    x = f / 2
    while x < L:
        edges.append(x)
        step = min(x, cap)  # doubling until the oscillation cap binds
        x += step
    edges.append(L)
    return sorted(set(min(e, L) for e in edges))


def _osc_cap(*fs: Optional[TestFunction]) -> float:
    """Half-period cap pi/log(max support) for the Mellin phase e^{it log N}."""
    logs = [math.log(max(f.support_max(), 2.0)) for f in fs if f is not None]
    if not logs:
        return math.inf
    return max(0.25, math.pi / max(logs))


def _refine_edges(edges: Sequence[float]) -> List[float]:
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        out += [a, 0.5 * (a + b)]
    out.append(edges[-1])
    return out


def _gl_nodes(edges: Sequence[float], order: int = 16) -> Tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(order)
    ns, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        ns.append(0.5 * (b - a) * x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    return np.concatenate(ns), np.concatenate(ws)


def _line_feature(ev: WeylSumEvaluator, var: str, c: float) -> float:
    """Distance from the line to the nearest line-local singular point.

    Mixed (s1,s2) denominators trace diagonal ridges, not line-local peaks;
    they are excluded here and certified separately by the schedule scan.
    """
    dists = []
    for root, _d, fm in ev.scan_singular_s(var):
        if fm.b1 != 0 and fm.b2 != 0:
            continue
        d = abs(c - root.real)
        if d > 1e-12:
            dists.append(d)
    return min(dists) if dists else 0.5


def _weyl_growth_cap(t: np.ndarray, vals: np.ndarray, exponent: float = 0.6) -> float:
    """Measured constant K with |S(c+it)| <= K (1+t)^exponent on the top decade."""
    sel = t >= max(np.max(t) / 10.0, 1.0)
    if not np.any(sel):
        sel = slice(None)
    return 2.0 * float(np.max(np.abs(vals[sel]) / (1.0 + t[sel]) ** exponent))


def spectral_line_values(
    ev: WeylSumEvaluator,
    var: str,
    c: float,
    f: Optional[TestFunction],
    log_T_list: Sequence[float],
    height: float = 120.0,
    tag: str = "",
) -> Tuple[List[float], float, float]:
    """(1/2 pi i) int Mf(s) S(s) ds on Re s = c, for each log T.

    Conjugate symmetry reduces to (1/pi) int_0^L Re(...) dt.  Returns the
    per-T values plus a shared quadrature-error estimate and certified tail.
    """
    feature = _line_feature(ev, var, c)
    base_edges = _graded_edges(feature, height, _osc_cap(f))
    growth_K = [0.0]

    def level_values(edges, label):
        t, w = _gl_nodes(edges)
        s = c + 1j * t
        kw = {var: s, "active": (var,), "grid_tag": f"{tag}:{label}:{len(t)}"}
        parts, shape, is_array = ev.limit_parts(**kw)
        mf = ml.mellin(f, s) if f is not None else np.ones_like(s)
        out = []
        for logT in log_T_list:
            S = msrel._combine_parts(parts, shape, is_array, logT)
            growth_K[0] = max(growth_K[0], _weyl_growth_cap(t, S))
            out.append(float(np.sum(w * (S * mf).real) / math.pi))
        return out

    base = level_values(base_edges, "b")
    fine = level_values(_refine_edges(base_edges), "f")
    err = max(abs(a - b) for a, b in zip(base, fine))
    if f is not None and f.kind == "smoothed":
        tail = growth_K[0] * (2.0**0.6) * ml.smoothed_tail_integral(f, c, height, 0.6) / math.pi
    else:
        tail = 0.0
    return fine, err, tail


def double_line_values(
    ev: WeylSumEvaluator,
    f1: TestFunction,
    f2: TestFunction,
    c1: float,
    c2: float,
    log_T_list: Sequence[float],
    height: float = 60.0,
    tag: str = "",
    refine: bool = True,
) -> Tuple[List[float], float, float]:
    """(1/2 pi i)^2 double integral of Mf1 Mf2 S on (Re s1, Re s2) = (c1, c2).

    Inner variable s2 runs over t2 > 0 with twice the real part (the full
    integrand is conjugation-symmetric under (t1,t2) -> (-t1,-t2)); the
    outer t1 grid is symmetric.  Returns per-T values, an embedded-grid
    error estimate, and a certified tail term.
    """
    feat1 = _line_feature(ev, "s1", c1)
    feat2 = _line_feature(ev, "s2", c2)
    cap1, cap2 = _osc_cap(f1), _osc_cap(f2)
    growth_K = [0.0, 0.0]

    def level(edges1, edges2, label):
        t2, w2 = _gl_nodes(edges2)
        s2 = c2 + 1j * t2
        mf2 = ml.mellin(f2, s2)
        t1_half, w1_half = _gl_nodes(edges1)
        t1 = np.concatenate([-t1_half[::-1], t1_half])
        w1 = np.concatenate([w1_half[::-1], w1_half])
        mf1 = ml.mellin(f1, c1 + 1j * t1)
        inner = np.zeros((len(log_T_list), len(t1)), dtype=complex)
        for i, tt1 in enumerate(t1):
            parts, shape, is_array = ev.limit_parts(
                s1=complex(c1, tt1), s2=s2, active=("s1", "s2"),
                grid_tag=f"{tag}:{label}:{len(t2)}",
            )
            for j, logT in enumerate(log_T_list):
                S = msrel._combine_parts(parts, shape, is_array, logT)
                if i == len(t1) // 2:
                    growth_K[0] = max(growth_K[0], _weyl_growth_cap(t2, S, 1.2))
                inner[j, i] = np.sum(w2 * S * mf2)
        out = []
        for j in range(len(log_T_list)):
            # (1/(2 pi i))^2 (i dt1)(i dt2) = +dt1 dt2/(4 pi^2); t2-half doubling
            val = np.sum(w1 * mf1 * inner[j, :]) / (4 * math.pi**2) * 2.0
            out.append(float(val.real))
        return out

    e1 = _graded_edges(feat1, height, cap1)
    e2 = _graded_edges(feat2, height, cap2)
    base = level(e1, e2, "b")
    if refine:
        fine = level(_refine_edges(e1), _refine_edges(e2), "f")
        err = max(abs(a - b) for a, b in zip(base, fine))
    else:
        fine, err = base, abs(base[0]) * 1e-6
    tails = []
    for f, c in ((f1, c1), (f2, c2)):
        tails.append(ml.smoothed_tail_integral(f, c, height, 1.2))
    # crude cross terms: each 1-D tail multiplies the other full line mass
    tail = growth_K[0] * (2.0**1.2) * (tails[0] + tails[1]) / (2 * math.pi**2)
    return fine, err, tail


# ---------------------------------------------------------------------------
# pipeline 1: truncated first moment
# ---------------------------------------------------------------------------


def truncated_l1(
    n: int,
    k: int,
    f: TestFunction,
    trunc: TruncationParam,
    eta: float,
    eps_schedule: Sequence[float] = msrel.DEFAULT_EPS_SCHEDULE,
    height: float = 120.0,
    crosscheck: bool = True,
) -> FormulaBreakdown:
    """Truncated first-moment formula as main + shifted integral (+ slack).

    main = Mf(n) xi(n,k) vol^C; the shifted integral runs on Re s = n - eta;
    slack is the residual between the finite-eps residue bundle and the
    analytic main term.  With ``crosscheck`` the total is validated against
    direct quadrature at Re s = n + 1/2 within 3x the combined error.
    """
    if f.kind != "smoothed":
        raise ConditionUnsatisfied("the first-moment pipeline requires a smoothed test function")
    if not 0 < eta < 1:
        raise ConditionUnsatisfied(f"eta={eta} outside (0,1)")
    res = truncated_l1_sweep(n, k, f, [trunc], eta, eps_schedule, height, crosscheck)
    return res[0]


def truncated_l1_sweep(
    n: int,
    k: int,
    f: TestFunction,
    truncs: Sequence[TruncationParam],
    eta: float,
    eps_schedule: Sequence[float] = msrel.DEFAULT_EPS_SCHEDULE,
    height: float = 120.0,
    crosscheck: bool = True,
) -> List[FormulaBreakdown]:
    """`truncated_l1` over several T values, sharing the spectral grids."""
    lb = msrel.lambda_builder(n, k)
    ev = msrel.l1_sum_evaluator(n, k, truncs[0])
    mf = lambda s: ml.mellin(f, s)
    mfn = float(ml.mellin(f, float(n)).real)
    xink = xifunc.xi_nk(n, k)
    logs = [tr.log_T for tr in truncs]
    shifted, err_s, tail_s = spectral_line_values(ev, "s1", n - eta, f, logs, height, tag="l1s")
    if crosscheck:
        direct, err_d, tail_d = spectral_line_values(ev, "s1", n + 0.5, f, logs, height, tag="l1d")
    out = []
    for i, tr in enumerate(truncs):
        volc = msrel.truncated_volume(n, tr, eps_schedule)
        main = mfn * xink * volc
        bundle = msrel.residue_bundle_at_n(lb, tr, eps_schedule, mf) / (2j * math.pi)
        bundle_alt = msrel.residue_bundle_analytic(lb, tr, eps_schedule, mf) / (2j * math.pi)
        bundle_err = abs(bundle - bundle_alt) + 1e-12 * abs(bundle)
        slack = float(bundle.real) - main
        bd = FormulaBreakdown(main=main, residue_extra=0.0, shifted_integral=shifted[i], slack=slack)
        bd.checks.update(
            err_shifted=err_s + tail_s,
            bundle_err=bundle_err,
            imag_residue=abs(bundle.imag),
        )
        if crosscheck:
            combined = 3.0 * (err_s + tail_s + err_d + tail_d + bundle_err)
            bd.checks.update(direct=direct[i], err_direct=err_d + tail_d, tolerance=combined)
            if abs(direct[i] - bd.total) > combined:
                raise PipelineInconsistency(
                    f"first-moment identity failed at T={tr.T}: direct={direct[i]} "
                    f"vs total={bd.total} (tol {combined})"
                )
        out.append(bd)
    return out


# ---------------------------------------------------------------------------
# pipeline 2: truncated inner product
# ---------------------------------------------------------------------------


def error_kappa(n: int, k1: int, k2: int, eta1: float, eta2: float) -> float:
    """T-degree of the remaining double integral, from the extremal Weyl pair.

    w2 is the identity (the only order-preserving shuffle maximizing the
    exponent); w1 sorts lambda1(n - eta1) descending.  Always bounded by
    n(n^2-1)/6.
    """
    lam1 = lambda_of_s(n, k1, n - eta1)
    lam2 = lambda_of_s(n, k2, n - eta2)
    order = sorted(range(1, n + 1), key=lambda i: -lam1.entries[i - 1].real)
    img = [0] * n
    for pos, i in enumerate(order, start=1):
        img[i - 1] = pos
    from .weyl import WeylElement

    w1 = WeylElement(n, tuple(img))
    kappa = (rho_covector_pairing(act(w1, lam1)) + rho_covector_pairing(lam2)).real
    cap = n * (n * n - 1) / 6.0
    if kappa > cap + 1e-9:
        raise ScheduleViolation(f"kappa={kappa} exceeds the cap {cap}")
    return float(kappa)


def _assert_schedule(ev: WeylSumEvaluator, n: int, eta1: float, eta2: float, c1: float, c2: float):
    """Certify the contour schedule: no stray singular loci in the strips.

    Mixed (s1,s2)-dependent denominators may only vanish on the documented
    loci: Re(s1+s2) and Re(s1-s2) integers.  During the c2 shift the only
    admissible crossing is Re s2 = n - (1-eta2)^2, which requires
    eta2 >= (1-eta2)^2; anything else is a schedule violation.  Lines used
    for quadrature must keep distance >= 5e-3 from every singular locus.
    """
    type2_allowed = eta2 >= (1 - eta2) ** 2
    for t in ev.terms:
        for fm in t.denoms:
            b1, b2 = fm.b1, fm.b2
            if b1 == 0 or b2 == 0:
                continue
            a0 = float(fm.const) if not isinstance(fm.const, complex) else fm.const.real
            root2 = -(a0 + float(b1) * c1) / float(b2)
            if n - eta2 + 1e-9 < root2 < c2 - 1e-9:
                if not type2_allowed:
                    raise ScheduleViolation(
                        f"unexpected mixed-denominator crossing at Re s2 = {root2} "
                        f"with eta2={eta2} < (1-eta2)^2"
                    )
    for var, line in (("s1", n - eta1), ("s2", n - eta2), ("s1", c1), ("s2", c2)):
        for root, _d, fm in ev.scan_singular_s(var):
            if abs(line - root.real) < 5e-3:
                raise ScheduleViolation(
                    f"quadrature line Re {var} = {line} passes within 5e-3 of "
                    f"the singular locus of {fm}"
                )


def inner_product_components(
    n: int,
    k1: int,
    k2: int,
    f1: TestFunction,
    f2: TestFunction,
    truncs: Sequence[TruncationParam],
    eta1: float,
    eta2: float,
    eps_schedule: Sequence[float] = msrel.DEFAULT_EPS_SCHEDULE,
    height: float = 60.0,
    crosscheck: bool = True,
) -> List[FormulaBreakdown]:
    """Shared implementation of the truncated inner product over a T sweep."""
    for f in (f1, f2):
        if f.kind != "smoothed":
            raise ConditionUnsatisfied("the inner-product pipeline requires smoothed test functions")
    if not 0 < eta1 < eta2 < 1:
        raise ConditionUnsatisfied(f"need 0 < eta1 < eta2 < 1, got {eta1}, {eta2}")
    c1_0 = n + 2 * eta2 - eta2 * eta2
    c2_0 = n + eta2 * (1 - eta2) ** 2
    ev = msrel.inner_product_evaluator(n, k1, k2, truncs[0])
    _assert_schedule(ev, n, eta1, eta2, c1_0, c2_0)
    ev_half = msrel.res_half_evaluator(n, k2, truncs[0])
    ev_mirror = msrel.l1_sum_evaluator(n, k1, truncs[0])
    logs = [tr.log_T for tr in truncs]

    mf1n = float(ml.mellin(f1, float(n)).real)
    mf2n = float(ml.mellin(f2, float(n)).real)
    xi1, xi2 = xifunc.xi_nk(n, k1), xifunc.xi_nk(n, k2)

    half_vals, err_h, tail_h = spectral_line_values(ev_half, "s2", n - eta2, f2, logs, height, tag="iph")
    mirror_vals, err_m, tail_m = spectral_line_values(ev_mirror, "s1", n - eta1, f1, logs, height, tag="ipm")
    remain_vals, err_r, tail_r = double_line_values(ev, f1, f2, n - eta1, n - eta2, logs, height, tag="ipr")
    if crosscheck:
        direct_vals, err_d, tail_d = double_line_values(ev, f1, f2, c1_0, c2_0, logs, height, tag="ipd")

    out = []
    for i, tr in enumerate(truncs):
        volc = msrel.truncated_volume(n, tr, eps_schedule)
        main = mf1n * mf2n * xi1 * xi2 * volc
        dbl = _double_bundle(n, k1, k2, tr, f1, f2, eps_schedule)
        slack_cluster = float(dbl.real) - main
        res_half = mf1n * xi1 * half_vals[i]
        mirror = mf2n * xi2 * mirror_vals[i]
        bd = FormulaBreakdown(
            main=main,
            residue_extra=res_half,
            shifted_integral=remain_vals[i],
            slack=slack_cluster + mirror,
        )
        bd.checks.update(
            mirror=mirror,
            cluster_slack=slack_cluster,
            err_half=(err_h + tail_h) * abs(mf1n * xi1),
            err_mirror=(err_m + tail_m) * abs(mf2n * xi2),
            err_remain=err_r + tail_r,
            imag_residue=abs(dbl.imag),
        )
        if crosscheck:
            combined = 3.0 * (
                bd.checks["err_half"]
                + bd.checks["err_mirror"]
                + err_r
                + tail_r
                + err_d
                + tail_d
                + abs(slack_cluster) * 0.5
                + 1e-9 * abs(main)
            )
            bd.checks.update(direct=direct_vals[i], err_direct=err_d + tail_d, tolerance=combined)
            if abs(direct_vals[i] - bd.total) > combined:
                raise PipelineInconsistency(
                    f"inner-product identity failed at T={tr.T}: direct={direct_vals[i]} "
                    f"vs total={bd.total} (tol {combined})"
                )
        out.append(bd)
    return out


def truncated_inner_product(
    n: int,
    k1: int,
    k2: int,
    f1: TestFunction,
    f2: TestFunction,
    trunc: TruncationParam,
    eta1: float,
    eta2: float,
    eps_schedule: Sequence[float] = msrel.DEFAULT_EPS_SCHEDULE,
    height: float = 60.0,
    crosscheck: bool = True,
) -> FormulaBreakdown:
    """Truncated inner product of two series; see module docstring."""
    return inner_product_components(
        n, k1, k2, f1, f2, [trunc], eta1, eta2, eps_schedule, height, crosscheck
    )[0]


def _double_bundle(
    n: int,
    k1: int,
    k2: int,
    trunc: TruncationParam,
    f1: TestFunction,
    f2: TestFunction,
    eps_schedule: Sequence[float],
    nodes: int = 48,
) -> complex:
    """(1/2 pi i)^2 double circle integral around (s1, s2) = (n, n).

    Picks the iterated main residue.  The inner s2 radius is twice the
    outer s1 radius so the diagonal clusters s2 = s1 - a*eps stay enclosed
    for every s1 on the outer circle; partial enclosure would break their
    orbit cancellation.  Extrapolated eps -> 0; converges to the analytic
    main term.
    """
    ev = msrel.inner_product_evaluator(n, k1, k2, trunc)
    vals = []
    for eps in eps_schedule:
        r1 = 1.5 * n * eps
        r2 = 3.0 * n * eps
        s1_nodes = msrel._circle_nodes(complex(n), r1, nodes)
        s2_nodes = msrel._circle_nodes(complex(n), r2, nodes)
        mf2 = ml.mellin(f2, s2_nodes)
        inner = np.zeros(nodes, dtype=complex)
        for i, s1 in enumerate(s1_nodes):
            S = ev.eval_at_eps(eps, s1=s1, s2=s2_nodes)
            inner[i] = msrel._contour_integral_circle(S * mf2, complex(n), r2)
        mf1 = ml.mellin(f1, s1_nodes)
        outer = msrel._contour_integral_circle(inner * mf1, complex(n), r1)
        vals.append(outer / (2j * math.pi) ** 2)
    limit, _ = msrel.extrapolate_to_zero(eps_schedule, vals)
    return limit


# ---------------------------------------------------------------------------
# second moment (the window estimate behind the discrepancy application)
# ---------------------------------------------------------------------------


def second_moment(
    n: int,
    k: int,
    window: TestFunction,
    trunc: TruncationParam,
    eta1: float,
    eta2: float,
    delta: float,
) -> Tuple[float, float]:
    """Second moment of the smoothed window series: (main, error budget).

    main = (Mf_{A,delta}(n) xi(n,k))^2; the budget assembles the two
    shifted-contour estimates: the half-residue line scales like
    delta^{-1} Mh_A(n-eta2) T^{-eta2 k(n-k)/2} and the double remainder
    like delta^{-1-0.501 eta1} delta^{-1-0.501 eta2} Mh_A(n-eta1)
    Mh_A(n-eta2) T^kappa.  Requires the window-narrowness hypothesis and
    the size condition Mh_A(n) T^{-eta2 k(n-k)/2} > Mh_A(n-eta1) T^kappa.
    """
    if window.kind not in ("sharp_upto", "sharp_window"):
        raise ConditionUnsatisfied("window must be a sharp test function")
    n1 = 0.0 if window.kind == "sharp_upto" else window.params[0]
    n2 = window.params[0] if window.kind == "sharp_upto" else window.params[1]
    for c in (n - eta1, n - eta2):
        if n1 > 0 and n2**c - n1**c > n1**c / 2:
            raise ConditionUnsatisfied(f"window too wide at c={c}")
    f = TestFunction.smoothed(window, delta)
    mh = lambda c: abs(ml.mellin(window, complex(c)))
    kap = error_kappa(n, k, k, eta1, eta2)
    lhs = mh(n) * trunc.T ** (-eta2 * k * (n - k) / 2.0)
    rhs = mh(n - eta1) * trunc.T**kap
    if not lhs > rhs:
        raise ConditionUnsatisfied(f"size condition violated: {lhs} <= {rhs}")
    main = (float(ml.mellin(f, float(n)).real) * xifunc.xi_nk(n, k)) ** 2

    def line_mass(c: float, growth: float) -> float:
        tmax = min((14.0 / math.sqrt(delta)) ** 2 / delta, 40.0 / delta)
        edges = np.linspace(0.0, tmax, 129)
        t, w = _gl_nodes(edges, 8)
        s = c + 1j * t
        vals = np.abs(ml.mellin(window, s)) * np.abs(ml.bump_fourier(-1j * delta * s))
        vals = vals * (1.0 + t) ** growth
        return 2.0 * float(np.sum(w * vals))

    est1 = (
        mh(n)
        * xifunc.xi_nk(n, k) ** 2
        * trunc.T ** (-eta2 * k * (n - k) / 2.0)
        * line_mass(n - eta2, -0.499 * eta2)
        / (2 * math.pi)
    )
    est2 = (
        trunc.T**kap
        * line_mass(n - eta1, 0.501 * eta1)
        * line_mass(n - eta2, 0.501 * eta2)
        / (4 * math.pi**2)
    )
    return main, est1 + est2
