"""Built-in invariant suite: quick, seeded, end-to-end sanity checks.

Each check exercises one contract the library is supposed to keep —
closed forms against quadrature, solver optimality conditions, window
transform identities, zeta accuracy — in a few seconds total.  `run_all`
returns (name, passed, detail) triples; the CLI prints them.
"""

from __future__ import annotations

import math

import numpy as np

from .criterion import OmegaCurve, dichotomy_sum, omega_curve_criterion
from .frequency import BoundProfile, build, counting_function
from .gram import Target, assemble, gram_entry, quad_oracle
from .solver import brute_oracle, kkt_residual, minimize
from .window import bn_bounds, build_window, convolve_series, discrete_transform
from .zeta import eta_series, hurwitz_em, interval_integral, reference_minimum, zeta_em

_CHECKS = []


def _check(fn):
    _CHECKS.append(fn)
    return fn


@_check
def gram_closed_form():
    """entries match adaptive quadrature on random (lam, mu, H)"""
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        lam, mu = rng.uniform(0.0, 50.0, size=2)
        big_h = rng.uniform(0.1, 10.0)
        got = gram_entry(lam, mu, big_h)
        ref = quad_oracle(lambda t: np.exp(1j * (mu - lam) * t), big_h)
        worst = max(worst, abs(got - ref) / big_h)
        assert gram_entry(mu, lam, big_h) == np.conj(got)
    assert worst < 1e-10, worst
    return f"max deviation {worst:.2e}"


@_check
def gram_series_seam():
    """series and closed-form branches agree across the small-gap cut"""
    big_h = 3.0
    worst = 0.0
    for gap in (0.99e-4 / big_h, 1.01e-4 / big_h):
        a = gram_entry(1.0, 1.0 + gap, big_h)
        ref = quad_oracle(lambda t: np.exp(1j * gap * t), big_h)
        worst = max(worst, abs(a - ref))
    assert worst < 1e-11, worst
    return f"seam deviation {worst:.2e}"


@_check
def solver_single_term():
    """N = 1 interior optimum matches m = H - |w|^2 / H"""
    big_h = 1.7
    gs = assemble(np.array([1.3]), Target.exponential(0.4), big_h)
    res = minimize(gs, np.array([5.0]), engine="numpy")
    expect = big_h - abs(gs.moments[0]) ** 2 / big_h
    assert abs(res.objective - expect) <= 1e-10 * big_h, (res.objective, expect)
    assert res.kkt_residual <= 1e-8
    return f"m = {res.objective:.12g}"


@_check
def solver_vs_grid():
    """coordinate descent matches a dense polar grid search at N = 2"""
    gs = assemble(np.array([0.8, 2.0]), Target.exponential_sum([1.0, 0.5], [0.3, 1.5]), 2.0)
    bounds = np.array([0.7, 0.9])
    res = minimize(gs, bounds, engine="numpy")
    ref = brute_oracle(gs, bounds)
    rel = abs(res.objective - ref.objective) / max(ref.objective, 1e-12)
    assert rel < 1e-3, rel
    return f"relative gap {rel:.2e}"


@_check
def solver_start_independence():
    """disc mode is convex: two starts give the same minimum"""
    rng = np.random.default_rng(11)
    # separated frequencies (gap*H >= 8) keep the Gram well conditioned,
    # so descent certifies the optimum instead of stalling near it
    freq = np.cumsum(rng.uniform(4.0, 8.0, 12))
    bounds = rng.uniform(0.2, 1.0, 12)
    gs = assemble(freq, Target.exponential_sum([1.0, 0.4], [0.7, 2.9]), 2.0)
    a0 = minimize(gs, bounds, engine="numpy")
    start = bounds * rng.uniform(0, 1, 12) * np.exp(2j * np.pi * rng.uniform(0, 1, 12))
    a1 = minimize(gs, bounds, start=start, engine="numpy")
    rel = abs(a0.objective - a1.objective) / max(a0.objective, 1e-12)
    assert rel < 1e-8, rel
    assert kkt_residual(gs, bounds, a1.coefficients) <= 1e-8
    return f"objectives agree to {rel:.2e}"


@_check
def solver_bound_monotonicity():
    """enlarging the feasible discs can only lower the minimum"""
    system = build("classical", phi=BoundProfile.unit(), n_terms=10)
    gs = assemble(system.frequencies, Target.constant(1.0), 1.0)
    m1 = minimize(gs, system.amplitudes, engine="numpy").objective
    m2 = minimize(gs, 2.0 * system.amplitudes, engine="numpy").objective
    assert m2 <= m1 + 1e-12, (m1, m2)
    return f"{m2:.6g} <= {m1:.6g}"


@_check
def window_transform_product():
    """sampled transform equals the sinc product; unit mass"""
    window = build_window(0.75, k_hint=3)
    mass = window.mass()
    assert abs(mass - 1.0) <= 1e-10, mass
    xi = np.geomspace(0.5, 40.0, 6)
    worst = max(abs(discrete_transform(window, x) - window.transform(x)) for x in xi)
    assert worst < 1e-9, worst
    return f"mass error {abs(mass - 1.0):.2e}, transform gap {worst:.2e}"


@_check
def coefficient_bound_mass():
    """sum of windowed coefficient bounds stays below 2"""
    system = build("classical", phi=BoundProfile.unit(), n_terms=400)
    _, total = bn_bounds(system)
    expect = math.pi**2 / 6.0 - 1.0
    assert total <= 2.0
    assert abs(total - expect) < 1e-2, total
    return f"total {total:.6f} (limit {expect:.6f})"


@_check
def convolution_identity():
    """windowed series equals the direct integral on a small instance"""
    system = build("custom", frequencies=[0.9, 2.1, 3.3], amplitudes=[0.8, 0.5, 0.3])
    window = build_window(1.0, k_hint=2)
    rng = np.random.default_rng(3)
    a = system.normalized_amplitudes * 0.5 * np.exp(2j * np.pi * rng.uniform(0, 1, 3))
    rep = convolve_series(a, system, window, np.linspace(0.0, 1.0, 9), big_h=2.0)
    assert rep.max_abs_diff < 1e-8, rep.max_abs_diff
    return f"pointwise gap {rep.max_abs_diff:.2e}"


@_check
def criterion_verdicts():
    """log-power amplitudes converge, power amplitudes diverge"""
    conv = dichotomy_sum("classical", BoundProfile.logpower(2.0), n_max=20_000)
    div = dichotomy_sum("classical", BoundProfile.power(0.5), n_max=20_000)
    curve = omega_curve_criterion(OmegaCurve.loglog_power(1.5))
    assert conv.verdict == "convergent", conv.verdict
    assert div.verdict == "divergent", div.verdict
    assert curve.verdict == "convergent", curve.verdict
    return f"logpower:2 {conv.verdict}, power:0.5 {div.verdict}, loglog:1.5 {curve.verdict}"


@_check
def zeta_accuracy():
    """zeta(2), a Hurwitz identity, and the alternating-series oracle"""
    err0 = abs(zeta_em(2.0 + 0.0j).value - math.pi**2 / 6.0)
    assert err0 < 1e-10, err0
    s = 2.3 + 1.7j
    gap = abs(hurwitz_em(s, 0.5).value - (2.0**s - 1.0) * zeta_em(s).value)
    assert gap < 1e-9, gap
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(10):
        s = complex(rng.uniform(0.6, 3.0), rng.uniform(-50.0, 50.0))
        ref = eta_series(s) / (1.0 - 2.0 ** (1.0 - s))
        worst = max(worst, abs(zeta_em(s).value - ref))
    assert worst < 1e-9, worst
    return f"zeta(2) err {err0:.1e}, oracle gap {worst:.1e}"


@_check
def interval_reference():
    """one short-interval integral sits above half the reference level"""
    rec = interval_integral(100.0, 0.25, 1.0)
    ref = reference_minimum(0.25)
    assert rec.value >= 0.5 * ref, (rec.value, ref)
    assert rec.quadrature_error <= 1e-6 * max(rec.value, 1e-12)
    return f"I = {rec.value:.6g} vs reference {ref:.6g}"


@_check
def counting_function_shape():
    """cumulative amplitude mass starts at 1 and never decreases"""
    system = build("classical", phi=BoundProfile.power(0.5), n_terms=50)
    xs = np.linspace(0.0, 5.0, 64)
    vals = counting_function(system, xs)
    assert vals[0] == 1.0
    assert np.all(np.diff(vals) >= 0.0)
    return f"range [{vals[0]:g}, {vals[-1]:g}]"


def run_all() -> list[tuple[str, bool, str]]:
    results = []
    for fn in _CHECKS:
        name = fn.__name__
        try:
            detail = fn() or ""
            results.append((name, True, detail))
        except AssertionError as exc:
            results.append((name, False, f"assertion failed: {exc}"))
        except Exception as exc:  # noqa: BLE001 - selftest must report, not crash
            results.append((name, False, f"{type(exc).__name__}: {exc}"))
    return results
