"""Convergence criteria deciding the large-N fate of the minima.

Three lenses on the same dichotomy:

* ``dichotomy_sum``         series of log Phi against the natural measure of
                            the system kind (one variant per kind),
* ``lambda_log_integral``   integral of log Lambda(x) / x^2 built from the
                            cumulative amplitude mass itself,
* ``omega_curve_criterion`` integral of (1 - omega(t)) / (t log t) for a
                            level curve omega.

Each returns a :class:`CriterionVerdict` carrying the partial value at the
horizon, a tail estimate, and the doubling-grid evidence.  For the preset
profile families the verdict is a closed-form fact independent of the
horizon; otherwise it comes from increment ratios over doubling windows
(ratio < 0.7 convergent trend, > 0.95 divergent trend), and staying
``inconclusive`` is an allowed, honest outcome.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frequency import BoundProfile, CoeffSystem, divisor_counts, primes_up_to

RATIO_CONVERGENT = 0.7
RATIO_DIVERGENT = 0.95


@dataclass(frozen=True, eq=False)
class CriterionVerdict:
    verdict: str              # "convergent" | "divergent" | "inconclusive"
    partial_value: float      # sum / integral accumulated up to the horizon
    tail_estimate: float      # geometric extrapolation; inf when divergent
    method: str               # "closed-form" | "doubling-ratio"
    evidence: np.ndarray | None = None   # rows of (grid point, partial value)
    note: str = ""

    def __bool__(self) -> bool:
        return self.verdict == "convergent"


def _closed_form_verdict(profile: BoundProfile) -> str | None:
    """Known classification of the preset families (same for every kind)."""
    if profile.family in ("unit", "logpower"):
        return "convergent"
    if profile.family == "power":
        return "divergent"
    if profile.family == "loglog":
        return "convergent" if profile.param > 1.0 else "divergent"
    return None


def _ratio_call(increments: np.ndarray) -> tuple[str, float, str]:
    """(verdict, tail estimate, note) from doubling-window increments."""
    inc = increments[np.isfinite(increments)]
    if inc.size and np.max(np.abs(inc)) == 0.0:
        return "convergent", 0.0, "all increments vanish"
    pos = inc[inc > 0]
    if pos.size < 4:
        return "inconclusive", math.nan, "too few usable doubling increments"
    ratios = pos[1:] / pos[:-1]
    r = float(np.median(ratios[-4:]))
    tail = float(pos[-1] * r / (1.0 - r)) if r < 1.0 else math.inf
    if r < RATIO_CONVERGENT:
        return "convergent", tail, f"median increment ratio {r:.3f} < {RATIO_CONVERGENT}"
    if r > RATIO_DIVERGENT:
        return "divergent", math.inf, f"median increment ratio {r:.3f} > {RATIO_DIVERGENT}"
    return "inconclusive", tail, f"median increment ratio {r:.3f} in the grey zone"


def _tail_from(increments: np.ndarray, verdict: str) -> float:
    if verdict == "divergent":
        return math.inf
    pos = increments[increments > 0]
    if pos.size < 2:
        return 0.0
    r = float(pos[-1] / pos[-2])
    return float(pos[-1] * r / (1.0 - r)) if r < 1.0 else math.inf


# ----------------------------------------------------------------------
# sum form


def dichotomy_sum(kind: str, phi: BoundProfile, n_max: int = 200_000) -> CriterionVerdict:
    """Partial sum of the kind's dichotomy series up to n_max.

    classical   sum_{n >= 2}  log Phi(n) / (n log^2 n)
    primes      sum_{p >= 2}  log Phi(p) / (p log p)
    divisor     sum_{n >= 2}  d(n) log Phi(n) / (n log^3 n)
    shifted     the classical series (an O(1/n) frequency shift is
                invisible to it)

    The n = 2 term is accumulated separately and the comparison machinery
    runs on n >= 3, where log n > 1; the value is the same either way.
    Evidence rows are (N, S(N)) on the doubling grid N = 100, 200, ...
    """
    if n_max < 100:
        raise ValueError("need n_max >= 100")
    if kind in ("classical", "shifted", "divisor"):
        n = np.arange(3, n_max + 1, dtype=float)
        logn = np.log(n)
        logphi = np.log(phi(n))
        if kind == "divisor":
            d = divisor_counts(n_max)[3:].astype(float)
            terms = d * logphi / (n * logn**3)
            first = 2.0 * math.log(phi(2.0)) / (2.0 * math.log(2.0) ** 3)
        else:
            terms = logphi / (n * logn**2)
            first = math.log(phi(2.0)) / (2.0 * math.log(2.0) ** 2)
        positions = n
    elif kind == "primes":
        p = primes_up_to(n_max).astype(float)
        terms = np.log(phi(p[1:])) / (p[1:] * np.log(p[1:]))
        first = math.log(phi(2.0)) / (2.0 * math.log(2.0))
        positions = p[1:]
    else:
        raise ValueError(f"no dichotomy series for kind {kind!r}")

    cum = first + np.concatenate(([0.0], np.cumsum(terms)))
    total = float(cum[-1])
    grid = 100.0 * 2.0 ** np.arange(0, int(math.log2(n_max / 100.0)) + 1)
    grid = grid[grid <= n_max]
    at = cum[np.searchsorted(positions, grid, side="right")]
    evidence = np.column_stack((grid, at))
    increments = np.diff(at)

    closed = _closed_form_verdict(phi)
    if closed is not None:
        return CriterionVerdict(closed, total, _tail_from(increments, closed), "closed-form", evidence)
    verdict, tail, note = _ratio_call(increments)
    return CriterionVerdict(verdict, total, tail, "doubling-ratio", evidence, note)


# ----------------------------------------------------------------------
# integral form


def _density(kind: str, phi: BoundProfile, alpha: float | None):
    """Unimodular amplitude mass per unit frequency, valid for large x.

    In the frequency variable x the terms near x contribute at rate

      classical   Phi(e^x)          (terms of size Phi(n)/n, one per unit log)
      primes      Phi(e^x) / x      (prime density thins by 1/log n)
      divisor     Phi(e^x) * x      (d(n) ~ log n on average)
      shifted     Phi(alpha e^x - alpha)   (n = alpha(e^x - 1) along x)
    """
    if kind == "classical":
        return lambda x: phi(np.exp(x))
    if kind == "primes":
        return lambda x: phi(np.exp(x)) / x
    if kind == "divisor":
        return lambda x: phi(np.exp(x)) * x
    if kind == "shifted":
        a = float(alpha)
        return lambda x: phi(np.maximum(a * np.expm1(x), 1.0))
    return None


def lambda_log_integral(
    system: CoeffSystem,
    x_max: float,
    grid_points: int = 4096,
) -> CriterionVerdict:
    """Integral of log Lambda(x) / x^2 over [1, x_max].

    Lambda is the unimodular cumulative mass 1 + sum_{lam_n <= x} C_n — a
    step function, so up to the largest frequency the integral is the exact
    sum of log(level) * (1/a - 1/b) over constancy segments.  Past the
    largest frequency the mass is continued with the kind's density (see
    ``_density``) and integrated on a trapezoid grid; custom systems have
    no density rule and must already cover [1, x_max].
    """
    if x_max <= 1.0:
        raise ValueError("need x_max > 1")
    lam = system.frequencies
    if lam.size == 0:
        return CriterionVerdict("convergent", 0.0, 0.0, "closed-form", None, "no terms: Lambda == 1")
    levels = 1.0 + np.concatenate(([0.0], np.cumsum(system.amplitudes)))
    x_exact = min(float(lam[-1]), x_max)

    def exact_cum(b: float) -> float:
        """Integral over [1, b] against the exact step mass, b <= lam_max."""
        if b <= 1.0:
            return 0.0
        inside = lam[(lam > 1.0) & (lam < b)]
        edges = np.concatenate(([1.0], inside, [b]))
        idx = np.searchsorted(lam, edges[:-1], side="right")
        return float(np.sum(np.log(levels[idx]) * (1.0 / edges[:-1] - 1.0 / edges[1:])))

    total = exact_cum(x_exact)

    ext_grid = ext_cum = None
    if x_max > float(lam[-1]):
        dens = _density(system.kind, system.profile, system.freq.alpha)
        if dens is None:
            raise ValueError(
                f"system reaches only x = {lam[-1]:.3g} < x_max = {x_max:.3g} and kind "
                f"{system.kind!r} has no extrapolation rule; supply more terms"
            )
        x0 = max(float(lam[-1]), 1.0)
        ext_grid = np.geomspace(x0, x_max, max(int(grid_points), 64))
        g = dens(ext_grid)
        mass = levels[-1] + np.concatenate(
            ([0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(ext_grid)))
        )
        integrand = np.log(mass) / ext_grid**2
        ext_cum = np.concatenate(
            ([0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(ext_grid)))
        )
        total += float(ext_cum[-1])

    # evidence: cumulative integral at doubling points X = 2, 4, 8, ...
    grid = 2.0 ** np.arange(1, max(int(math.log2(x_max)), 1) + 1)
    grid = grid[grid <= x_max]
    at = np.empty(grid.size)
    for i, b in enumerate(grid):
        val = exact_cum(min(b, x_exact))
        if ext_cum is not None and b > ext_grid[0]:
            val += float(np.interp(b, ext_grid, ext_cum))
        at[i] = val
    evidence = np.column_stack((grid, at))
    increments = np.diff(at)

    closed = _closed_form_verdict(system.profile)
    if closed is not None:
        return CriterionVerdict(closed, total, _tail_from(increments, closed), "closed-form", evidence)
    verdict, tail, note = _ratio_call(increments)
    return CriterionVerdict(verdict, total, tail, "doubling-ratio", evidence, note)


# ----------------------------------------------------------------------
# level-curve form


@dataclass(frozen=True, eq=False)
class OmegaCurve:
    """Nondecreasing level curve omega(t) <= 1."""

    kind: str
    param: float

    @staticmethod
    def constant(sigma: float) -> "OmegaCurve":
        if not 0.0 <= sigma <= 1.0:
            raise ValueError("need 0 <= sigma <= 1")
        return OmegaCurve("constant", float(sigma))

    @staticmethod
    def loglog_power(p: float) -> "OmegaCurve":
        if p <= 0:
            raise ValueError("need p > 0")
        return OmegaCurve("loglog_power", float(p))

    def __call__(self, t):
        ts = np.asarray(t, dtype=float)
        if self.kind == "constant":
            out = np.full_like(ts, self.param)
        else:
            # floored at t = 16 so log log stays >= 1 and omega stays in [0, 1)
            out = 1.0 - np.log(np.log(np.maximum(ts, 16.0))) ** (-self.param)
        return float(out) if np.isscalar(t) else out


def omega_curve_criterion(
    curve,
    t_max: float = 1e8,
    grid_points: int = 20_000,
) -> CriterionVerdict:
    """Integral of (1 - omega(t)) / (t log t) over [2, t_max].

    ``curve`` is an :class:`OmegaCurve` (closed-form verdict: constant
    sigma < 1 diverges like (1-sigma) log log t; loglog_power(p) is the
    Bertrand-type integral, convergent exactly when p > 1) or any callable
    with omega(t) <= 1, judged by increments over exp-doubling windows.
    """
    if t_max <= 2.0:
        raise ValueError("need t_max > 2")
    grid = np.geomspace(2.0, t_max, int(grid_points))
    om = np.asarray(curve(grid), dtype=float)
    if np.any(om > 1.0 + 1e-12):
        raise ValueError("omega exceeds 1 on the sample grid")
    integrand = (1.0 - om) / (grid * np.log(grid))
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(grid))))
    total = float(cum[-1])

    # exp-doubling windows: T_j = exp(2^j)
    marks = np.exp(2.0 ** np.arange(1, max(int(math.log2(math.log(t_max))), 1) + 1))
    marks = marks[marks <= t_max]
    at = np.interp(marks, grid, cum)
    evidence = np.column_stack((marks, at)) if marks.size else None

    if isinstance(curve, OmegaCurve):
        if curve.kind == "constant":
            verdict = "convergent" if curve.param >= 1.0 else "divergent"
        else:
            verdict = "convergent" if curve.param > 1.0 else "divergent"
        inc = np.diff(at) if marks.size > 1 else np.empty(0)
        return CriterionVerdict(verdict, total, _tail_from(inc, verdict), "closed-form", evidence)
    if marks.size < 5:
        return CriterionVerdict(
            "inconclusive", total, math.nan, "doubling-ratio", evidence, "t_max too small"
        )
    verdict, tail, note = _ratio_call(np.diff(at))
    return CriterionVerdict(verdict, total, tail, "doubling-ratio", evidence, note)
