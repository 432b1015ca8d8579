import numpy as np
import pytest

from dirpoly import GramSystem, Target, assemble, brute_oracle, kkt_residual, minimize, sweep_N
from dirpoly.gram import quad_oracle
from dirpoly.solver import objective_value

from _instances import random_target, separated_instance, tiny_instance


def test_single_term_closed_form():
    # one coordinate: F(a) = g^2 + 2 Re(a conj(w)) + |a|^2 H, minimised at
    # a = -conj(w)/H when that fits in the disc, at the boundary otherwise
    gs = assemble([1.3], Target.exponential(0.4), 2.0)
    w = gs.moments[0]
    interior = minimize(gs, [10.0])
    assert abs(interior.coefficients[0] - (-np.conj(w) / 2.0)) < 1e-10
    assert interior.objective == pytest.approx(gs.g_norm_sq - abs(w) ** 2 / 2.0, rel=1e-12)
    assert interior.active_set.size == 0

    c = 0.25 * abs(w) / 2.0
    clipped = minimize(gs, [c])
    assert abs(clipped.coefficients[0] - (-c * np.conj(w) / abs(w))) < 1e-10
    ref = gs.g_norm_sq - 2.0 * c * abs(w) + c * c * 2.0
    assert clipped.objective == pytest.approx(ref, rel=1e-12)
    assert list(clipped.active_set) == [0]


def test_zero_bounds_pin_coefficients():
    rng = np.random.default_rng(501)
    gs, bounds = separated_instance(rng, 3, 8)
    res = minimize(gs, np.zeros(gs.n_terms))
    assert res.objective == pytest.approx(gs.g_norm_sq, rel=1e-14)
    assert np.all(res.coefficients == 0)
    # one coordinate freed: objective can only improve
    partial = np.zeros(gs.n_terms)
    partial[0] = bounds[0]
    res2 = minimize(gs, partial)
    assert res2.objective <= res.objective + 1e-12


def test_objective_matches_quadrature():
    # algebraic objective vs direct integration of |g + sum a_n e^{-i lam t}|^2
    rng = np.random.default_rng(502)
    for _ in range(8):
        n = int(rng.integers(1, 5))
        freq = np.sort(rng.uniform(0.3, 9.0, n))
        big_h = float(rng.uniform(0.5, 3.0))
        tgt = random_target(rng)
        gs = assemble(freq, tgt, big_h)
        a = rng.uniform(0.0, 1.0, n) * np.exp(2j * np.pi * rng.uniform(0.0, 1.0, n))
        val = objective_value(gs, a)

        def total(t):
            d = (a[:, None] * np.exp(-1j * freq[:, None] * t[None, :])).sum(axis=0)
            return np.abs(tgt(t) + d) ** 2 + 0j

        ref = quad_oracle(total, big_h, tol=1e-11).real
        assert val == pytest.approx(ref, rel=1e-8)


def test_matches_brute_oracle():
    rng = np.random.default_rng(503)
    for _ in range(12):
        n = int(rng.integers(1, 4))
        gs, bounds = tiny_instance(rng, n)
        cd = minimize(gs, bounds)
        ref = brute_oracle(gs, bounds)
        scale = max(ref.objective, 1e-12)
        assert cd.objective <= ref.objective * (1.0 + 1e-3) + 1e-12
        assert abs(cd.objective - ref.objective) / scale < 1e-3
    with pytest.raises(ValueError):
        brute_oracle(assemble(np.arange(1.0, 5.0), Target.constant(), 1.0), np.ones(4))


def test_start_independence_and_kkt():
    rng = np.random.default_rng(504)
    for _ in range(10):
        gs, bounds = separated_instance(rng, 2, 30)
        r0 = minimize(gs, bounds)
        start = bounds * rng.uniform(0, 1, gs.n_terms) * np.exp(
            2j * np.pi * rng.uniform(0, 1, gs.n_terms)
        )
        r1 = minimize(gs, bounds, start=start)
        assert r0.converged and r1.converged
        rel = abs(r0.objective - r1.objective) / max(r0.objective, 1e-12)
        assert rel < 1e-8, rel
        tol = 1e-9 * max(1.0, bounds.max())
        assert kkt_residual(gs, bounds, r0.coefficients) <= tol
        assert kkt_residual(gs, bounds, r1.coefficients) <= tol


def test_kkt_residual_properties():
    rng = np.random.default_rng(505)
    gs, bounds = separated_instance(rng, 3, 10)
    res = minimize(gs, bounds)
    at_opt = kkt_residual(gs, bounds, res.coefficients)
    feasible = 0.5 * bounds * np.exp(2j * np.pi * rng.uniform(0, 1, gs.n_terms))
    away = kkt_residual(gs, bounds, feasible)
    assert at_opt < 1e-8 < away
    with pytest.raises(ValueError):
        kkt_residual(gs, bounds, 2.0 * bounds + 0j)  # infeasible point
    with pytest.raises(ValueError):
        kkt_residual(gs, bounds, res.coefficients, mode="other")


def test_conjugation_symmetry():
    # conjugating the moments and transposing the Gram data mirrors every
    # feasible point a -> conj(a), so the minimum value is unchanged
    rng = np.random.default_rng(506)
    gs, bounds = separated_instance(rng, 2, 12)
    mirrored = GramSystem(
        gs.frequencies, gs.big_h, gs.matrix.T.copy(), np.conj(gs.moments), gs.g_norm_sq, gs.target
    )
    r0 = minimize(gs, bounds)
    r1 = minimize(mirrored, bounds)
    assert r1.objective == pytest.approx(r0.objective, rel=1e-9)
    assert np.max(np.abs(np.conj(r1.coefficients) - r0.coefficients)) < 1e-6


def test_mean_value_bridge():
    # Cauchy-Schwarz: (int |g + D|)^2 <= H * int |g + D|^2 = H * m
    rng = np.random.default_rng(507)
    gs, bounds = separated_instance(rng, 2, 10)
    res = minimize(gs, bounds)
    freq, big_h = gs.frequencies, gs.big_h
    a = res.coefficients

    def absval(t):
        d = (a[:, None] * np.exp(-1j * freq[:, None] * t[None, :])).sum(axis=0)
        return np.abs(gs.target(t) + d) + 0j

    l1 = quad_oracle(absval, big_h, tol=1e-10).real
    assert l1 * l1 <= big_h * res.objective * (1.0 + 1e-8)


def test_bound_monotonicity():
    rng = np.random.default_rng(508)
    gs, bounds = separated_instance(rng, 4, 12)
    wide = minimize(gs, 2.0 * bounds).objective
    base = minimize(gs, bounds).objective
    narrow = minimize(gs, 0.5 * bounds).objective
    assert wide <= base + 1e-12
    assert base <= narrow + 1e-12
    assert narrow <= gs.g_norm_sq + 1e-12


def test_circle_mode():
    gs = assemble([1.1], Target.exponential(0.3), 2.0)
    w = gs.moments[0]
    c = 0.7
    res = minimize(gs, [c], mode="circle", starts=4, seed=3)
    # best point on the circle is anti-parallel to conj(w)
    assert abs(res.coefficients[0] - (-c * np.conj(w) / abs(w))) < 1e-8
    assert res.mode == "circle"
    disc = minimize(gs, [c])
    assert disc.objective <= res.objective + 1e-12
    assert abs(res.coefficients[0]) == pytest.approx(c, rel=1e-12)


def test_circle_mode_respects_zero_bounds():
    rng = np.random.default_rng(509)
    gs, bounds = separated_instance(rng, 3, 6)
    b = bounds.copy()
    b[0] = 0.0
    res = minimize(gs, b, mode="circle", starts=2)
    assert res.coefficients[0] == 0
    assert np.all(np.abs(np.abs(res.coefficients[1:]) - b[1:]) < 1e-9)


def test_engines_agree():
    rng = np.random.default_rng(510)
    gs, bounds = separated_instance(rng, 8, 24)
    a = minimize(gs, bounds, engine="numpy")
    b = minimize(gs, bounds, engine="numba")
    assert a.engine == "numpy" and b.engine == "numba"
    assert b.objective == pytest.approx(a.objective, rel=1e-12)
    assert np.max(np.abs(a.coefficients - b.coefficients)) < 1e-10
    with pytest.raises(ValueError):
        minimize(gs, bounds, engine="gpu")


def test_sweep_orders_agree_when_converged():
    rng = np.random.default_rng(511)
    gs, bounds = separated_instance(rng, 6, 16)
    cyc = minimize(gs, bounds, order="cyclic")
    perm = minimize(gs, bounds, order="permuted")
    assert cyc.converged and perm.converged
    assert perm.objective == pytest.approx(cyc.objective, rel=1e-10)
    with pytest.raises(ValueError):
        minimize(gs, bounds, order="sorted")


def test_start_outside_disc_is_projected():
    rng = np.random.default_rng(512)
    gs, bounds = separated_instance(rng, 2, 8)
    huge = 50.0 * bounds * np.exp(2j * np.pi * rng.uniform(0, 1, gs.n_terms))
    res = minimize(gs, bounds, start=huge)
    ref = minimize(gs, bounds)
    assert np.all(np.abs(res.coefficients) <= bounds * (1 + 1e-12))
    assert res.objective == pytest.approx(ref.objective, rel=1e-8)


def test_validation_errors():
    rng = np.random.default_rng(513)
    gs, bounds = separated_instance(rng, 2, 5)
    with pytest.raises(ValueError):
        minimize(gs, bounds[:-1])
    with pytest.raises(ValueError):
        minimize(gs, -bounds)
    with pytest.raises(ValueError):
        minimize(gs, bounds, mode="ring")


def test_unconverged_is_reported_not_hidden():
    rng = np.random.default_rng(514)
    gs, bounds = separated_instance(rng, 20, 30)
    res = minimize(gs, bounds, max_sweeps=1)
    assert not res.converged
    assert res.iterations == 1
    assert res.kkt_residual > 0
    # the capped run is still feasible and no better than the true optimum
    full = minimize(gs, bounds)
    assert res.objective >= full.objective - 1e-12


def _separated_system(rng, n):
    freq = np.cumsum(rng.uniform(4.0, 8.0, n))
    amps = rng.uniform(0.2, 1.0, n)
    from dirpoly import build

    return build("custom", frequencies=freq, amplitudes=amps)


def test_sweep_curve_matches_direct_solves():
    rng = np.random.default_rng(515)
    system = _separated_system(rng, 10)
    tgt = Target.constant()
    schedule = [1, 2, 4, 8, 10]
    curve = sweep_N(system, tgt, 2.0, schedule)
    assert len(curve) == 5
    assert np.all(np.diff(curve.minima) <= 1e-12)
    assert np.all(curve.converged)
    for n, m, kkt, iters, conv in curve.rows():
        gs = assemble(system.frequencies[:n], tgt, 2.0)
        direct = minimize(gs, system.amplitudes[:n])
        assert m == pytest.approx(direct.objective, rel=1e-8)
        assert isinstance(n, int) and isinstance(conv, bool)


def test_sweep_schedule_validation():
    rng = np.random.default_rng(516)
    system = _separated_system(rng, 6)
    with pytest.raises(ValueError):
        sweep_N(system, None, 1.0, [4, 2])
    with pytest.raises(ValueError):
        sweep_N(system, None, 1.0, [])
    with pytest.raises(ValueError):
        sweep_N(system, None, 1.0, [2, 8])  # exceeds system size


def test_sweep_deterministic():
    rng = np.random.default_rng(517)
    system = _separated_system(rng, 8)
    c1 = sweep_N(system, None, 1.5, [2, 4, 8])
    c2 = sweep_N(system, None, 1.5, [2, 4, 8])
    assert np.array_equal(c1.minima, c2.minima)
    assert np.array_equal(c1.kkt_residuals, c2.kkt_residuals)
    assert np.array_equal(c1.iterations, c2.iterations)


def test_result_is_immutable():
    rng = np.random.default_rng(518)
    gs, bounds = separated_instance(rng, 2, 5)
    res = minimize(gs, bounds)
    with pytest.raises((ValueError, AttributeError)):
        res.coefficients[0] = 0.0
