"""Disc-constrained minimisation of the L2(0, H) approximation objective.

Minimises F(a) = ||g||^2 + 2 Re sum_n a_n w_n + sum_{m,n} a_m conj(a_n) G_mn
over coefficient vectors with |a_n| <= C_n, by cyclic coordinate descent.
Fixing every coordinate but a_n leaves

    F = const + 2 Re(a_n rho_n) + H |a_n|^2,
    rho_n = conj(w_n) + sum_{m != n} a_m G_mn,

whose disc-constrained minimiser is the projection of -rho_n / H — exact,
stepsize-free, and monotone, which is what survives the nearly collinear
exponentials that crowded frequency systems produce.  The moment vector
v = a^T G is maintained by rank-1 updates and recomputed every
FLUSH_EVERY sweeps to shed drift.

The convex disc mode ends at the global minimum (certified by the
fixed-point residual max_n |a_n - P_n(a_n - rho_n/H)|); the equal-modulus
mode (|a_n| = C_n exactly) is nonconvex, runs multi-start, and certifies
only stationarity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frequency import CoeffSystem
from .gram import GramSystem, Target, assemble

FLUSH_EVERY = 50
MAX_SWEEPS = 10_000
CIRCLE_STARTS = 8

#: per-coordinate (radial, angular) grid sizes for the brute oracle,
#: chosen so the joint product grid stays near ~5e6 points
_BRUTE_GRIDS = {1: (64, 64), 2: (44, 46), 3: (12, 14)}

#: how many well-separated coarse cells the brute oracle refines; one
#: window is not enough when a narrow diagonal valley makes the coarse
#: winner land outside the true basin
_BRUTE_SEEDS = 3


@dataclass(frozen=True, eq=False)
class SolveResult:
    coefficients: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    active_set: np.ndarray
    converged: bool
    mode: str = "disc"
    engine: str = "numpy"

    def __post_init__(self):
        a = np.asarray(self.coefficients, dtype=complex)
        a.setflags(write=False)
        object.__setattr__(self, "coefficients", a)


@dataclass(frozen=True, eq=False)
class SweepCurve:
    """m_N against N, one warm-started solve per schedule point."""

    n_values: np.ndarray
    minima: np.ndarray
    kkt_residuals: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    cold_restarts: np.ndarray   # points where the warm start had to be redone
    big_h: float
    engine: str

    def __len__(self) -> int:
        return int(self.n_values.size)

    def rows(self):
        """(N, m_N, kkt, iterations, converged) tuples, schedule order."""
        for k in range(len(self)):
            yield (
                int(self.n_values[k]),
                float(self.minima[k]),
                float(self.kkt_residuals[k]),
                int(self.iterations[k]),
                bool(self.converged[k]),
            )


# ----------------------------------------------------------------------
# objective plumbing


def objective_value(gs: GramSystem, coefficients) -> float:
    """F(a) evaluated by the dense quadratic form."""
    a = np.asarray(coefficients, dtype=complex)
    v = a @ gs.matrix
    val = gs.g_norm_sq + 2.0 * np.real(np.sum(a * gs.moments)) + np.real(np.vdot(a, v))
    return _clamp_objective(float(val), gs.g_norm_sq)


def _clamp_objective(val: float, scale: float) -> float:
    # the objective is an integral of |.|^2; tiny negatives are pure roundoff
    if val < -1e-10 * max(1.0, scale):
        raise FloatingPointError(f"objective {val} below the rounding floor")
    return max(val, 0.0)


def _project_disc(x: np.ndarray, radius: np.ndarray) -> np.ndarray:
    mag = np.abs(x)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(mag > radius, np.where(mag > 0, radius / np.maximum(mag, 1e-300), 0.0), 1.0)
    return x * scale


def _project_circle(x: np.ndarray, radius: np.ndarray, previous: np.ndarray) -> np.ndarray:
    mag = np.abs(x)
    out = np.empty_like(x)
    dead = mag == 0.0
    out[~dead] = radius[~dead] * x[~dead] / mag[~dead]
    # tie-break: keep the previous phase where the pull vanishes
    prev = previous[dead]
    pmag = np.abs(prev)
    phase = np.where(pmag > 0, prev / np.where(pmag > 0, pmag, 1.0), 1.0 + 0j)
    out[dead] = radius[dead] * phase
    return out


def kkt_residual(gs: GramSystem, bounds, coefficients, mode: str = "disc") -> float:
    """max_n |a_n - P_n(a_n - rho_n / H)| with rho = conj(w) + a G.

    Zero exactly at first-order points: interior coordinates need rho_n = 0,
    boundary ones need rho_n anti-parallel to a_n.
    """
    c = np.asarray(bounds, dtype=float)
    a = np.asarray(coefficients, dtype=complex)
    if np.any(np.abs(a) > c * (1.0 + 1e-12) + 1e-300):
        raise ValueError("coefficients violate the modulus bounds")
    rho = np.conj(gs.moments) + a @ gs.matrix
    pulled = a - rho / gs.big_h
    if mode == "disc":
        proj = _project_disc(pulled, c)
    elif mode == "circle":
        proj = _project_circle(pulled, c, a)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return float(np.max(np.abs(a - proj))) if a.size else 0.0


# ----------------------------------------------------------------------
# coordinate descent engines


def _resolve_engine(engine: str, n: int) -> str:
    if engine == "auto":
        if n >= 64 and _numba_kernel() is not None:
            return "numba"
        return "numpy"
    if engine == "numba":
        if _numba_kernel() is None:
            raise ImportError("numba requested but not importable")
        return "numba"
    if engine == "numpy":
        return "numpy"
    raise ValueError(f"unknown engine {engine!r}")


_PERM_POOL = 61  # coprime with FLUSH_EVERY, enough to break update-order resonances


def _perm_pool(n: int, order: str) -> np.ndarray:
    """Sweep orders as an array of permutation rows, cycled per sweep.

    "cyclic" is the single natural order; "permuted" prepends it to a fixed
    seeded pool, so the visiting order depends only on (n, sweep index) and
    solves stay bit-reproducible across engines.
    """
    if order == "cyclic" or n <= 2:
        return np.arange(n, dtype=np.int64)[None, :]
    if order != "permuted":
        raise ValueError(f"unknown sweep order {order!r}")
    rng = np.random.default_rng(0x5EED0 + n)
    pool = np.empty((_PERM_POOL, n), dtype=np.int64)
    pool[0] = np.arange(n)
    for i in range(1, _PERM_POOL):
        pool[i] = rng.permutation(n)
    return pool


def _cd_numpy(a, w_conj, matrix, bounds, big_h, tol, max_sweeps, circle, perms):
    n = a.size
    v = a @ matrix
    f_prev = math.inf
    kkt = math.inf
    sweep = 0
    for sweep in range(1, max_sweeps + 1):
        for k in perms[(sweep - 1) % perms.shape[0]]:
            s = w_conj[k] + v[k] - big_h * a[k]
            cand = -s / big_h
            if circle:
                mag = abs(cand)
                if mag > 0.0:
                    cand = bounds[k] * cand / mag
                elif abs(a[k]) > 0.0:
                    cand = bounds[k] * a[k] / abs(a[k])
                else:
                    cand = complex(bounds[k])
            else:
                mag = abs(cand)
                if mag > bounds[k]:
                    cand = cand * (bounds[k] / mag)
            d = cand - a[k]
            if d != 0.0:
                a[k] = cand
                v += d * matrix[k]
        if sweep % FLUSH_EVERY == 0:
            v = a @ matrix
        f_now = 2.0 * np.real(np.sum(a * np.conj(w_conj))) + np.real(np.vdot(a, v))
        if not circle and f_now > f_prev + 1e-8 * (1.0 + abs(f_prev)):
            v = a @ matrix
            f_now = 2.0 * np.real(np.sum(a * np.conj(w_conj))) + np.real(np.vdot(a, v))
            if f_now > f_prev + 1e-8 * (1.0 + abs(f_prev)):
                raise FloatingPointError("coordinate descent lost monotonicity")
        f_prev = min(f_prev, f_now)
        rho = w_conj + v
        pulled = a - rho / big_h
        if circle:
            proj = _project_circle(pulled, bounds, a)
        else:
            proj = _project_disc(pulled, bounds)
        kkt = float(np.max(np.abs(a - proj)))
        if kkt <= tol:
            return sweep, kkt, True
    return max_sweeps, kkt, False


_NUMBA_CACHE = []


def _numba_kernel():
    """Compile (once) and return the numba sweep kernel, or None."""
    if _NUMBA_CACHE:
        return _NUMBA_CACHE[0]
    try:
        import numba
    except ImportError:
        _NUMBA_CACHE.append(None)
        return None

    @numba.njit(cache=True, fastmath=False)
    def kernel(a, w_conj, matrix, bounds, big_h, tol, max_sweeps, circle, perms):  # pragma: no cover
        n = a.size
        v = np.zeros(n, dtype=np.complex128)
        for m in range(n):
            if a[m] != 0.0:
                for k in range(n):
                    v[k] += a[m] * matrix[m, k]
        f_prev = np.inf
        kkt = np.inf
        for sweep in range(1, max_sweeps + 1):
            row_order = perms[(sweep - 1) % perms.shape[0]]
            for ii in range(n):
                k = row_order[ii]
                s = w_conj[k] + v[k] - big_h * a[k]
                cand = -s / big_h
                mag = abs(cand)
                if circle:
                    if mag > 0.0:
                        cand = bounds[k] * cand / mag
                    elif abs(a[k]) > 0.0:
                        cand = bounds[k] * a[k] / abs(a[k])
                    else:
                        cand = complex(bounds[k])
                else:
                    if mag > bounds[k]:
                        cand = cand * (bounds[k] / mag)
                d = cand - a[k]
                if d != 0.0:
                    a[k] = cand
                    row = matrix[k]
                    for j in range(n):
                        v[j] += d * row[j]
            if sweep % FLUSH_EVERY == 0:
                for j in range(n):
                    v[j] = 0.0
                for m in range(n):
                    if a[m] != 0.0:
                        for j in range(n):
                            v[j] += a[m] * matrix[m, j]
            f_now = 0.0
            for j in range(n):
                f_now += 2.0 * (a[j] * np.conj(w_conj[j])).real + (np.conj(a[j]) * v[j]).real
            if (not circle) and f_now > f_prev + 1e-8 * (1.0 + abs(f_prev)):
                # flush v and re-measure before declaring monotonicity lost
                for j in range(n):
                    v[j] = 0.0
                for m in range(n):
                    if a[m] != 0.0:
                        for j in range(n):
                            v[j] += a[m] * matrix[m, j]
                f_now = 0.0
                for j in range(n):
                    f_now += 2.0 * (a[j] * np.conj(w_conj[j])).real + (np.conj(a[j]) * v[j]).real
                if f_now > f_prev + 1e-8 * (1.0 + abs(f_prev)):
                    return sweep, -1.0, False
            if f_now < f_prev:
                f_prev = f_now
            kkt = 0.0
            for j in range(n):
                rho = w_conj[j] + v[j]
                pulled = a[j] - rho / big_h
                mag = abs(pulled)
                if circle:
                    if mag > 0.0:
                        proj = bounds[j] * pulled / mag
                    elif abs(a[j]) > 0.0:
                        proj = bounds[j] * a[j] / abs(a[j])
                    else:
                        proj = complex(bounds[j])
                else:
                    proj = pulled
                    if mag > bounds[j]:
                        proj = pulled * (bounds[j] / mag)
                r = abs(a[j] - proj)
                if r > kkt:
                    kkt = r
            if kkt <= tol:
                return sweep, kkt, True
        return max_sweeps, kkt, False

    _NUMBA_CACHE.append(kernel)
    return kernel


# ----------------------------------------------------------------------
# public solves


def minimize(
    gs: GramSystem,
    bounds,
    start=None,
    tol: float | None = None,
    max_sweeps: int = MAX_SWEEPS,
    mode: str = "disc",
    starts: int = CIRCLE_STARTS,
    seed: int = 0,
    engine: str = "auto",
    order: str = "cyclic",
) -> SolveResult:
    """Minimise F over |a_n| <= C_n (mode "disc") or |a_n| = C_n ("circle").

    Disc mode is convex: any converged result is the global minimum.
    Circle mode restarts from ``starts`` random phase vectors and returns
    the best stationary point found — a report, not a certificate.
    C_n = 0 pins a_n = 0 in both modes.  A ``start`` vector outside the
    feasible set is projected onto it before descending.

    ``order`` picks the sweep visiting order: "cyclic" (natural) or
    "permuted" (a fixed pool of seeded permutations, one per sweep).
    Crowded frequency clusters make the natural order zigzag; permuting
    breaks the resonance at identical per-sweep cost.
    """
    c = np.asarray(bounds, dtype=float)
    n = gs.n_terms
    if c.shape != (n,):
        raise ValueError("bounds length mismatch")
    if np.any(c < 0) or np.any(~np.isfinite(c)):
        raise ValueError("bounds must be finite and nonnegative")
    if not (np.all(np.isfinite(gs.moments)) and np.all(np.isfinite(gs.matrix))):
        raise ValueError("non-finite Gram data")
    if mode not in ("disc", "circle"):
        raise ValueError(f"unknown mode {mode!r}")
    if tol is None:
        tol = 1e-9 * max(1.0, float(c.max()) if c.size else 1.0)
    resolved = _resolve_engine(engine, n)

    perms = _perm_pool(n, order)

    if mode == "disc":
        a0 = np.zeros(n, dtype=complex) if start is None else _project_disc(
            np.asarray(start, dtype=complex).copy(), c
        )
        return _descend(gs, c, a0, tol, max_sweeps, False, resolved, perms)

    rng = np.random.default_rng(seed)
    best = None
    for trial in range(max(1, int(starts))):
        if start is not None and trial == 0:
            a0 = np.asarray(start, dtype=complex).copy()
            mag = np.abs(a0)
            a0 = np.where(mag > 0, np.where(c > 0, c * a0 / np.maximum(mag, 1e-300), 0.0), c + 0j)
        else:
            a0 = c * np.exp(2j * np.pi * rng.random(n))
        a0[c == 0] = 0.0
        res = _descend(gs, c, a0, tol, max_sweeps, True, resolved, perms)
        if best is None or res.objective < best.objective:
            best = res
    return best


def _descend(gs, c, a0, tol, max_sweeps, circle, engine, perms) -> SolveResult:
    a = a0.astype(complex, copy=True)
    w_conj = np.conj(gs.moments)
    if engine == "numba":
        kernel = _numba_kernel()
        sweeps, kkt, ok = kernel(
            a, w_conj, gs.matrix, c, float(gs.big_h), float(tol), int(max_sweeps), bool(circle), perms
        )
        if kkt < 0:
            raise FloatingPointError("coordinate descent lost monotonicity")
    else:
        sweeps, kkt, ok = _cd_numpy(
            a, w_conj, gs.matrix, c, float(gs.big_h), float(tol), int(max_sweeps), bool(circle), perms
        )
    tiny = np.abs(a) < 1e-300
    a[tiny] = 0.0
    val = objective_value(gs, a)
    active = np.nonzero(np.abs(np.abs(a) - c) <= 1e-12 * np.maximum(c, 1e-300))[0]
    mode = "circle" if circle else "disc"
    return SolveResult(a, val, float(kkt), int(sweeps), active, bool(ok), mode, engine)


def sweep_N(
    system: CoeffSystem,
    target: Target | None,
    big_h: float,
    n_schedule,
    tol: float | None = None,
    max_sweeps: int = MAX_SWEEPS,
    engine: str = "auto",
    order: str = "permuted",
) -> SweepCurve:
    """m_N for each N in an increasing schedule, warm-starting each solve.

    The Gram data is assembled once at the largest N and sliced; each solve
    starts from the previous solution padded with zeros, so the curve is
    nonincreasing by construction.  A point that still comes out above its
    predecessor (pure roundoff can do this) is re-solved from a cold start
    and recorded in ``cold_restarts``.  Sweeps default to permuted visiting
    order: the log-frequency systems these curves are drawn for are exactly
    the crowded ones where the natural order stalls.
    """
    schedule = np.asarray(list(n_schedule), dtype=np.int64)
    if schedule.size == 0 or np.any(np.diff(schedule) <= 0) or schedule[0] < 1:
        raise ValueError("need a strictly increasing positive N schedule")
    if schedule[-1] > system.n_terms:
        raise ValueError("schedule exceeds the system size")
    target = Target.constant() if target is None else target
    full = assemble(system.frequencies[: int(schedule[-1])], target, big_h)
    engine_name = _resolve_engine(engine, int(schedule[-1]))

    minima = np.empty(schedule.size)
    kkts = np.empty(schedule.size)
    iters = np.zeros(schedule.size, dtype=np.int64)
    flags = np.zeros(schedule.size, dtype=bool)
    colds = np.zeros(schedule.size, dtype=bool)
    prev_a = None
    for i, n in enumerate(schedule):
        gs = full.head(int(n))
        c = system.amplitudes[: int(n)]
        start = None
        if prev_a is not None:
            start = np.zeros(int(n), dtype=complex)
            start[: prev_a.size] = prev_a
        res = minimize(gs, c, start=start, tol=tol, max_sweeps=max_sweeps, engine=engine_name, order=order)
        if i > 0 and res.objective > minima[i - 1]:
            res2 = minimize(gs, c, tol=tol, max_sweeps=max_sweeps, engine=engine_name, order=order)
            colds[i] = True
            if res2.objective < res.objective:
                res = res2
        minima[i] = res.objective
        kkts[i] = res.kkt_residual
        iters[i] = res.iterations
        flags[i] = res.converged
        prev_a = np.asarray(res.coefficients)
    return SweepCurve(schedule, minima, kkts, iters, flags, colds, float(big_h), engine_name)


# ----------------------------------------------------------------------
# exhaustive oracle for tiny systems


def brute_oracle(gs: GramSystem, bounds, rounds: int = 3) -> SolveResult:
    """Best point of a refined polar product grid, N <= 3 only.

    Each coordinate gets a modulus-by-phase grid over its disc and the
    joint product is scanned exhaustively.  The few best well-separated
    cells are then each re-gridded ``rounds`` times in a window of +-2
    cells of the current grid around the running winner (phases wrap,
    moduli clip to the disc); a single window is not enough because a
    narrow diagonal valley can put the coarse argmin outside the true
    basin.  Grid sizes shrink with N to keep the product near 5e6 points.
    Pure grid evaluation — an independent bound on the true minimum that
    shares no update formula with the descent solver.
    """
    n = gs.n_terms
    if n > 3:
        raise ValueError("brute oracle handles N <= 3 only")
    c = np.asarray(bounds, dtype=float)
    if c.shape != (n,):
        raise ValueError("bounds length mismatch")
    n_r, n_th = _BRUTE_GRIDS[max(n, 1)]

    def scan(r_lo, r_hi, th_lo, th_hi):
        grids = []
        for k in range(n):
            r = np.linspace(r_lo[k], r_hi[k], n_r) if r_hi[k] > 0 else np.zeros(1)
            th = np.linspace(th_lo[k], th_hi[k], n_th)
            grids.append((r, th, (r[:, None] * np.exp(1j * th[None, :])).ravel()))
        return grids, _joint_objective(gs, [g[2] for g in grids])

    full = (
        np.zeros(n),
        c.astype(float).copy(),
        np.zeros(n),
        np.full(n, 2.0 * np.pi * (1.0 - 1.0 / n_th)),  # endpoint would alias 0
    )
    grids0, f0 = scan(*full)

    def cell_dist(p, q):
        # max over (radial, wrapped angular) index distance on one axis
        pr, pt = divmod(int(p), n_th)
        qr, qt = divmod(int(q), n_th)
        dt = abs(pt - qt)
        return max(abs(pr - qr), min(dt, n_th - dt))

    seeds = []
    for flat in np.argsort(f0, axis=None)[:64]:
        idx = np.unravel_index(int(flat), f0.shape)
        if all(any(cell_dist(idx[k], s[k]) >= 2 for k in range(n)) for s in seeds):
            seeds.append(idx)
        if len(seeds) == _BRUTE_SEEDS:
            break

    best_idx = seeds[0]
    best_a = np.array([grids0[k][2][best_idx[k]] for k in range(n)], dtype=complex)
    best_f = float(f0[best_idx] + gs.g_norm_sq)

    for seed in seeds:
        grids, idx = grids0, seed
        for _ in range(max(1, int(rounds))):
            r_lo, r_hi = np.zeros(n), np.zeros(n)
            th_lo, th_hi = np.zeros(n), np.zeros(n)
            for k in range(n):
                r, th, _ = grids[k]
                ir, ith = divmod(idx[k], th.size)
                r_cell = (r[-1] - r[0]) / (r.size - 1) if r.size > 1 else 0.0
                t_cell = (th[-1] - th[0]) / (th.size - 1)
                r_lo[k] = max(0.0, r[ir] - 2.0 * r_cell)
                r_hi[k] = min(c[k], r[ir] + 2.0 * r_cell) if c[k] > 0 else 0.0
                th_lo[k] = th[ith] - 2.0 * t_cell
                th_hi[k] = th[ith] + 2.0 * t_cell
            grids, f_grid = scan(r_lo, r_hi, th_lo, th_hi)
            idx = np.unravel_index(int(np.argmin(f_grid)), f_grid.shape)
            f_here = float(f_grid[idx] + gs.g_norm_sq)
            if f_here < best_f:
                best_f = f_here
                best_a = np.array(
                    [grids[k][2][idx[k]] for k in range(n)], dtype=complex
                )

    val = _clamp_objective(best_f, gs.g_norm_sq)
    kkt = kkt_residual(gs, c, best_a)
    active = np.nonzero(np.abs(np.abs(best_a) - c) <= 1e-12 * np.maximum(c, 1e-300))[0]
    return SolveResult(best_a, val, kkt, rounds, active, True, "disc", "grid")


def _joint_objective(gs: GramSystem, cand: list[np.ndarray]) -> np.ndarray:
    """F - ||g||^2 on the product of candidate lists, broadcast per axis."""
    n = len(cand)
    big_h = gs.big_h
    shape = [1] * n
    total = np.zeros([len(a) for a in cand])
    for k, a in enumerate(cand):
        term = 2.0 * np.real(a * gs.moments[k]) + big_h * np.abs(a) ** 2
        sh = shape.copy()
        sh[k] = len(a)
        total += term.reshape(sh)
    for j in range(n):
        for k in range(j + 1, n):
            cross = 2.0 * np.real(
                cand[j][:, None] * np.conj(cand[k])[None, :] * gs.matrix[j, k]
            )
            sh = shape.copy()
            sh[j] = len(cand[j])
            sh[k] = len(cand[k])
            total += cross.reshape(sh)
    return total
