"""End-to-end acceptance checks.

One test per numbered criterion; each prints a single verdict line of the
form ``acceptance N (<label>): PASS|FAIL — detail``.  Tolerances and runtime
budgets are stated inline.  Nothing here is tightened or loosened to make a
run green: where a qualitative expectation is not met at this scale, the
test states the measured numbers and fails.
"""

import json
import math
import shutil
import subprocess
import sys
import time

import numpy as np

from dirpoly import (
    BoundProfile,
    OmegaCurve,
    Target,
    bn_bounds,
    brute_oracle,
    build,
    build_window,
    convolve_series,
    gram_entry,
    eta_series,
    hurwitz_em,
    interval_integral,
    kkt_residual,
    minimize,
    omega_curve_criterion,
    quad_oracle,
    reference_minimum,
    running_minimum,
    scan,
    sweep_N,
    verify_decay,
    zeta_em,
)

from _instances import separated_instance, sparse_custom_system, tiny_instance


def _verdict(num, label, ok, detail):
    print(f"acceptance {num} ({label}): {'PASS' if ok else 'FAIL'} — {detail}")
    return ok


def test_1_solver_matches_oracles_and_certifies():
    t0 = time.monotonic()
    rng = np.random.default_rng(20260801)

    worst_brute = 0.0
    for _ in range(100):
        gs, bounds = tiny_instance(rng, int(rng.integers(1, 4)))
        cd = minimize(gs, bounds)
        # rounds=4: the smallest minima in this draw (~1e-3) need one more
        # grid refinement before the oracle's own resolution is below the
        # 1e-3 relative comparison being made here
        ref = brute_oracle(gs, bounds, rounds=4)
        scale = max(ref.objective, 1e-12)
        worst_brute = max(worst_brute, abs(cd.objective - ref.objective) / scale)

    worst_gap = 0.0
    worst_kkt_ratio = 0.0
    for _ in range(100):
        gs, bounds = separated_instance(rng, 2, 50)
        n = gs.n_terms
        starts = [
            bounds * rng.uniform(0, 1, n) * np.exp(2j * np.pi * rng.uniform(0, 1, n))
            for _ in range(2)
        ]
        r0 = minimize(gs, bounds, start=starts[0])
        r1 = minimize(gs, bounds, start=starts[1])
        worst_gap = max(
            worst_gap, abs(r0.objective - r1.objective) / max(r0.objective, 1e-12)
        )
        tol = 1e-9 * max(1.0, float(np.max(bounds)))
        for r in (r0, r1):
            worst_kkt_ratio = max(
                worst_kkt_ratio, kkt_residual(gs, bounds, r.coefficients) / tol
            )

    wall = time.monotonic() - t0
    ok = worst_brute < 1e-3 and worst_gap < 1e-8 and worst_kkt_ratio <= 1.0 and wall < 120
    assert _verdict(
        1,
        "solver vs oracles",
        ok,
        f"brute rel {worst_brute:.2e} (<1e-3), two-start rel {worst_gap:.2e} (<1e-8), "
        f"kkt/scale {worst_kkt_ratio:.2e} (<=1), {wall:.0f}s (<120s)",
    )


def test_2_bound_growth_dichotomy_curves():
    # H = 1, target identically 1, geometric schedule N = 2..4096.  The sweep
    # cap of 2000 sweeps per point keeps the runtime inside the budget and
    # perturbs the minima by < 5e-4 relative, far below every margin tested.
    t0 = time.monotonic()
    schedule = [2 ** k for k in range(1, 13)]
    target = Target.constant(1.0)

    grow = build("classical", phi=BoundProfile.power(0.5), n_terms=4096)
    curve_a = sweep_N(grow, target, 1.0, schedule, max_sweeps=2000)
    ma = curve_a.minima
    a_strict = bool(np.all(np.diff(ma) < 0))
    a_drop = ma[-1] < 0.2 * ma[0]

    flat = build("classical", phi=BoundProfile.unit(), n_terms=4096)
    curve_b = sweep_N(flat, target, 1.0, schedule, max_sweeps=2000)
    mb = curve_b.minima
    last3 = mb[-3:]
    plateau = float(np.max(last3)) <= 1.05 * float(np.min(last3))
    floor_ok = bool(np.all(last3 >= 0.5 * mb[-1]))
    noninc = bool(np.all(np.diff(ma) <= 0)) and bool(np.all(np.diff(mb) <= 0))

    wall = time.monotonic() - t0
    spread = float(np.max(last3)) / float(np.min(last3)) - 1.0
    ok = a_strict and a_drop and plateau and floor_ok and noninc and wall < 600
    assert _verdict(
        2,
        "growth dichotomy",
        ok,
        f"growing bounds: strict decrease {a_strict}, m_4096/m_2 {ma[-1] / ma[0]:.3f} (<0.2); "
        f"flat bounds: plateau within 5% {plateau} (spread {spread:.1%}), "
        f"last three >= 0.5*final {floor_ok}; nonincreasing {noninc}; {wall:.0f}s (<600s)",
    ), (
        "flat-bound minima are still sliding at N=4096: last three values "
        f"{np.array2string(last3, precision=6)} spread {spread:.1%} (need <=5%). "
        "The decrements dwarf the solver's certified suboptimality, so this is "
        "a property of the true minima at this scale, not of the solver."
    )


def test_3_windowed_coefficient_transfer():
    t0 = time.monotonic()
    rng = np.random.default_rng(20260803)

    # 1000 fuzzed systems: the per-frequency bounds B_n sum below the stated 2
    worst_total = 0.0
    families = ("classical", "primes", "divisor")
    for i in range(1000):
        if i % 2 == 0:
            cs = sparse_custom_system(rng, 2, 8)
        else:
            kind = families[int(rng.integers(0, 3))]
            p = (BoundProfile.unit(), BoundProfile.power(float(rng.uniform(0.0, 1.0))),
                 BoundProfile.logpower(float(rng.uniform(0.0, 3.0))))[int(rng.integers(0, 3))]
            cs = build(kind, phi=p, n_terms=int(rng.integers(2, 41)))
        _, total = bn_bounds(cs)
        worst_total = max(worst_total, total)

    # convolution identity against quadrature on small systems, and the
    # bound transfer |b_n| <= B_n wherever the window meets the decay demand
    worst_diff = 0.0
    transfer_ok = True
    for _ in range(25):
        cs = sparse_custom_system(rng, 2, 5)
        big_h = 2.0 * float(rng.uniform(0.6, 1.4))
        win = build_window(big_h / 2.0, k_hint=2)
        a = cs.normalized_amplitudes * rng.uniform(0.0, 1.0, cs.n_terms) * np.exp(
            2j * np.pi * rng.uniform(0.0, 1.0, cs.n_terms)
        )
        rep = convolve_series(a, cs, win, np.linspace(0.0, big_h / 2.0, 7), big_h)
        worst_diff = max(worst_diff, rep.max_abs_diff)
        transfer_ok = transfer_ok and rep.feasible and bool(np.all(rep.b_ok[rep.decay_ok]))

    # windows built for the system's own counting demand and verified by
    # verify_decay must bound every windowed coefficient; the frequencies
    # start past the transform's decay knee so the demand is met at all of
    # them, which is what makes every b-bound binding rather than vacuous
    verified_ok = True
    from dirpoly import DecayTarget

    for _ in range(10):
        n = int(rng.integers(2, 5))
        freq = 14.0 + np.cumsum(rng.uniform(1.0, 3.0, n))
        amps = rng.uniform(0.05, 0.6, n) / np.arange(1, n + 1)
        cs = build("custom", frequencies=freq, amplitudes=amps)
        tgt = DecayTarget.lambda_squared(cs)
        win = build_window(1.0, tgt)
        dec = verify_decay(win, tgt, np.linspace(0.0, 4.0 * freq[-1], 2049))
        rep = convolve_series(
            cs.normalized_amplitudes + 0j, cs, win, np.linspace(0.0, 1.0, 5), 2.0
        )
        verified_ok = (
            verified_ok
            and dec.passed
            and bool(np.all(rep.decay_ok))
            and bool(np.all(rep.b_ok))
        )

    wall = time.monotonic() - t0
    ok = worst_total <= 2.0 and worst_diff < 1e-8 and transfer_ok and verified_ok and wall < 120
    assert _verdict(
        3,
        "windowed transfer",
        ok,
        f"sum B_n max {worst_total:.6f} (<=2), convolution diff {worst_diff:.2e} (<1e-8), "
        f"bound transfer {transfer_ok and verified_ok}, {wall:.0f}s (<120s)",
    )


def test_4_gram_entries_exact():
    rng = np.random.default_rng(20260804)
    worst_h_rel = 0.0       # against the entry scale H = sup |entry|
    worst_true_rel = 0.0    # plain relative error where the entry is not tiny
    hermitian = True
    for _ in range(1000):
        lam_m, lam_n = np.sort(rng.uniform(0.0, 12.0, 2))
        big_h = float(rng.uniform(0.2, 4.0))
        got = gram_entry(lam_m, lam_n, big_h)
        ref = quad_oracle(lambda t: np.exp(-1j * (lam_m - lam_n) * t), big_h)
        diff = abs(got - ref)
        worst_h_rel = max(worst_h_rel, diff / big_h)
        if abs(ref) >= 0.01 * big_h:
            worst_true_rel = max(worst_true_rel, diff / abs(ref))
        hermitian = hermitian and gram_entry(lam_n, lam_m, big_h) == np.conj(got)

    seam = 0.0
    for sign in (+1.0, -1.0):
        lo = gram_entry(sign * 1e-4 * (1 - 1e-9), 0.0, 1.0)
        hi = gram_entry(sign * 1e-4 * (1 + 1e-9), 0.0, 1.0)
        seam = max(seam, abs(lo - hi))

    ok = worst_h_rel < 1e-10 and worst_true_rel < 1e-10 and hermitian and seam < 1e-11
    assert _verdict(
        4,
        "closed-form inner products",
        ok,
        f"rel err {worst_h_rel:.2e} vs scale H, {worst_true_rel:.2e} plain (<1e-10), "
        f"hermitian exact {hermitian}, branch seam {seam:.2e} (<1e-11)",
    )


def test_5_zeta_accuracy():
    rng = np.random.default_rng(20260805)
    e_basel = abs(zeta_em(2.0 + 0.0j).value - math.pi ** 2 / 6.0)

    e_hurwitz = 0.0
    for _ in range(20):
        s = complex(rng.uniform(0.6, 3.0), rng.uniform(-100.0, 100.0))
        e_hurwitz = max(e_hurwitz, abs(hurwitz_em(s, 1.0).value - zeta_em(s).value))

    e_eta = 0.0
    for _ in range(100):
        s = complex(rng.uniform(0.6, 3.0), rng.uniform(-100.0, 100.0))
        em = zeta_em(s).value
        ref = eta_series(s) / (1.0 - 2.0 ** (1.0 - s))
        e_eta = max(e_eta, abs(em - ref) / max(1.0, abs(em)))

    ok = e_basel < 1e-10 and e_hurwitz < 1e-10 and e_eta < 1e-9
    assert _verdict(
        5,
        "zeta evaluation",
        ok,
        f"zeta(2) err {e_basel:.2e} (<1e-10), alpha=1 vs zeta {e_hurwitz:.2e} (<1e-10), "
        f"vs alternating-series oracle {e_eta:.2e} (<1e-9) on 100 samples",
    )


def test_6_short_interval_lower_bound():
    t0 = time.monotonic()
    t_values = np.geomspace(10.0, 1e3, 200)
    margins = {}
    ok = True
    for delta in (0.1, 0.25, 0.5):
        records = scan(1.0, t_values, delta)
        floor = 0.5 * reference_minimum(delta)
        low = min(r.value for r in records)
        margins[delta] = low / floor
        ok = ok and low >= floor
    wall = time.monotonic() - t0
    ok = ok and wall < 300
    detail = ", ".join(f"delta={d}: min/floor {m:.1f}" for d, m in margins.items())
    assert _verdict(
        6,
        "short-interval floor",
        ok,
        f"{detail} (all >=1 required), {wall:.0f}s (<300s)",
    )


def test_7_sigma_curve_scans():
    t_values = np.geomspace(100.0, 1e4, 40)
    curve = OmegaCurve.loglog_power(1.5)

    rec_curve = scan(curve, t_values, 0.25)
    mins = [running_minimum(rec_curve[: i + 1])[0] for i in range(len(rec_curve))]
    curve_ok = all(r.value > 0 for r in rec_curve) and all(m > 0 for m in mins)

    hurwitz_ok = True
    h_mins = {}
    for alpha in (0.5, 1.0 / 3.0):
        recs = scan(1.0, t_values, 0.25, alpha=alpha)
        mn, at_t = running_minimum(recs)
        h_mins[alpha] = mn
        hurwitz_ok = hurwitz_ok and all(r.value > 0 for r in recs) and mn > 0

    verdict = omega_curve_criterion(curve)
    ok = curve_ok and hurwitz_ok and verdict.verdict == "convergent"
    assert _verdict(
        7,
        "sigma-curve scans",
        ok,
        f"level-curve integrals positive {curve_ok} (running min {mins[-1]:.3e}), "
        f"shifted alpha=1/2, 1/3 mins {h_mins[0.5]:.3e}, {h_mins[1.0 / 3.0]:.3e} (>0), "
        f"curve criterion {verdict.verdict} (need convergent)",
    )


def _run(args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "dirpoly", *args],
        cwd=cwd, capture_output=True, text=True, timeout=300,
    )


def test_8_reruns_are_byte_identical(tmp_path):
    commands = {
        "sweep": ["sweep", "--phi", "power:0.5", "--N", "2:8:x2", "--plot", "-o", "s.txt"],
        "criterion": ["criterion", "--phi", "logpower:2", "-o", "c.txt"],
        "minimize": ["minimize", "--N", "6", "-o", "m.txt"],
        "window": ["window", "--length", "0.5", "--decay", "poly:2", "-o", "w.txt"],
        "zeta-scan": ["zeta-scan", "--T", "10:40:n3", "--delta", "0.25", "--plot", "-o", "z.txt"],
    }
    ok = True
    checked = 0
    for name, args in commands.items():
        workdir = tmp_path / name.replace("-", "_")
        workdir.mkdir()
        r = _run(args, workdir)
        assert r.returncode == 0, (name, r.stderr)
        produced = {
            p.name: p.read_bytes()
            for p in workdir.iterdir()
            if p.name != "manifest.log"
        }
        assert len(produced) >= 2  # table + config, plus figure when plotted
        stash = tmp_path / f"{name}_stash"
        stash.mkdir()
        cfg = next(n for n in produced if n.endswith("_config.json"))
        for fname in produced:
            shutil.move(str(workdir / fname), str(stash / fname))
        shutil.copy(str(stash / cfg), str(workdir / cfg))
        r2 = _run([json.loads(produced[cfg])["command"], "--config", cfg], workdir)
        assert r2.returncode == 0, (name, r2.stderr)
        for fname, before in produced.items():
            same = (workdir / fname).read_bytes() == before
            ok = ok and same
            checked += 1
    assert _verdict(
        8,
        "config reruns",
        ok,
        f"{checked} artifacts across {len(commands)} commands byte-identical "
        "(tables, configs, figures; manifest log excluded as a timing record)",
    )
