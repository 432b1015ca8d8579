"""High-accuracy zeta / Hurwitz-zeta values and short-interval scans.

The workhorse is Euler-Maclaurin completion of the truncated Dirichlet
sum: with b = M + alpha,

    zeta(s, alpha) = sum_{n=0}^{M-1} (n+alpha)^{-s}
                   + b^{1-s}/(s-1) + b^{-s}/2
                   + sum_{k=1}^{10} B_{2k}/(2k)! (s)_{2k-1} b^{-s-2k+1},

truncated at M = max(50, ceil(2|t|/pi)) so the correction series is safely
asymptotic; the error carried on every value is the first omitted term
times |s+21|/(sigma+21), below 1e-10 whenever sigma >= 1/2 and |t| <= 1e4.
An independent route — the accelerated alternating series for eta(s) —
lives beside it for cross-checks, along with the bare truncated sum.

On top sit integrals of |zeta| over short intervals [T, T+delta] on a
constant or drifting line sigma = omega(T), with the small-delta reference
constant pi^2 e^{-gamma}/24 * delta^2 they are compared against.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .criterion import OmegaCurve, omega_curve_criterion

#: B_2, B_4, ..., B_22 as exact rationals
_BERNOULLI = (
    Fraction(1, 6),
    Fraction(-1, 30),
    Fraction(1, 42),
    Fraction(-1, 30),
    Fraction(5, 66),
    Fraction(-691, 2730),
    Fraction(7, 6),
    Fraction(-3617, 510),
    Fraction(43867, 798),
    Fraction(-174611, 330),
    Fraction(854513, 138),
)

#: B_{2k} / (2k)! for k = 1..11 (the 11th feeds the error term only)
_EM_COEF = tuple(float(b / Fraction(math.factorial(2 * k))) for k, b in enumerate(_BERNOULLI, start=1))

_EM_ORDER = 10
_ETA_CAP = 380          # (3+sqrt 8)^n overflows past this
_MAX_PANELS = 512
_NEAR_ZERO = 1e-3


@dataclass(frozen=True, eq=False)
class ZetaEval:
    s: complex
    value: complex
    method: str
    error_bound: float


@dataclass(frozen=True, eq=False)
class ScanRecord:
    big_t: float
    delta: float
    sigma: float
    alpha: float
    value: float            # integral of |zeta| over [T, T+delta]
    quadrature_error: float
    flags: str = ""


# ----------------------------------------------------------------------
# Euler-Maclaurin evaluation


def _em_batch(sigma: float, ts: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """zeta(sigma + i t, alpha) for a batch of t sharing one sigma."""
    if sigma <= 0:
        raise ValueError("need sigma > 0")
    if alpha <= 0:
        raise ValueError("need alpha > 0")
    ts = np.asarray(ts, dtype=float)
    if np.any((ts == 0.0) & (sigma == 1.0)):
        raise ValueError("pole at s = 1")
    t_max = float(np.max(np.abs(ts))) if ts.size else 0.0
    m_cut = max(50, int(math.ceil(2.0 * t_max / math.pi)))

    base = np.arange(m_cut, dtype=float) + alpha
    logb = np.log(base)
    amp = base**-sigma
    values = np.empty(ts.size, dtype=complex)
    block = max(1, int(4_000_000 // max(m_cut, 1)))
    for lo in range(0, ts.size, block):
        chunk = ts[lo : lo + block]
        values[lo : lo + block] = (np.exp(-1j * np.outer(chunk, logb)) * amp[None, :]).sum(axis=1)

    s = sigma + 1j * ts
    b = m_cut + alpha
    blog = math.log(b)
    values += np.exp((1.0 - s) * blog) / (s - 1.0) + 0.5 * np.exp(-s * blog)
    poch = s.copy()
    for k in range(1, _EM_ORDER + 1):
        values += _EM_COEF[k - 1] * poch * np.exp(-(s + (2 * k - 1)) * blog)
        poch = poch * (s + (2 * k - 1)) * (s + 2 * k)
    # poch is now (s)_21; the error is the first omitted term with the
    # standard |s + 2q + 1| / (sigma + 2q + 1) inflation
    omitted = abs(_EM_COEF[_EM_ORDER]) * np.abs(poch) * np.exp(-(sigma + 21.0) * blog)
    bounds = omitted * np.abs(s + 21.0) / (sigma + 21.0)
    if sigma >= 0.5 and t_max <= 1e4 and bounds.size and float(np.max(bounds)) > 1e-10:
        raise FloatingPointError("Euler-Maclaurin bound exceeded inside the supported range")
    return values, bounds


def hurwitz_em(s: complex, alpha: float) -> ZetaEval:
    """zeta(s, alpha) by Euler-Maclaurin, with a certified error bound.

    Supported accuracy range: sigma >= 1/2, |t| <= 1e4, where the bound is
    below 1e-10.  Outside it the value is still returned with its honest
    (larger) bound.
    """
    s = complex(s)
    if s == 1.0:
        raise ValueError("pole at s = 1")
    values, bounds = _em_batch(s.real, np.array([s.imag]), alpha)
    return ZetaEval(s, complex(values[0]), "euler-maclaurin", float(bounds[0]))


def zeta_em(s: complex) -> ZetaEval:
    """zeta(s) = zeta(s, 1) by Euler-Maclaurin."""
    return hurwitz_em(s, 1.0)


def zeta_truncated(s: complex, cutoff: float) -> complex:
    """Bare truncated Dirichlet sum over n < cutoff (no completion)."""
    s = complex(s)
    n = np.arange(1, int(math.ceil(cutoff)))
    if n.size == 0:
        return 0.0 + 0.0j
    return complex(np.sum(n ** (-s)))


def eta_series(s: complex, terms: int | None = None) -> complex:
    """Alternating series eta(s) = sum (-1)^{k} (k+1)^{-s}, accelerated.

    Chebyshev-weighted acceleration: n terms give roughly (3+sqrt 8)^{-n}
    accuracy for slowly oscillating s, degrading like e^{pi |t| / 2}; the
    term count grows with |t| accordingly and is capped where the weights
    overflow, so this oracle is for moderate |t| only.
    """
    s = complex(s)
    q = 3.0 + math.sqrt(8.0)
    if terms is None:
        terms = max(60, int(math.ceil(1.3 * (math.pi * abs(s.imag) / 2.0) / math.log(q))) + 40)
    n = int(terms)
    if n > _ETA_CAP:
        raise ValueError(f"|t| too large for the alternating-series oracle (needs {n} > {_ETA_CAP} terms)")
    d = (q**n + q**-n) / 2.0
    b = -1.0
    c = -d
    tot = 0.0 + 0.0j
    for k in range(n):
        c = b - c
        tot += c * (k + 1) ** (-s)
        b *= (k + n) * (k - n) / ((k + 0.5) * (k + 1.0))
    return complex(tot / d)


# ----------------------------------------------------------------------
# interval integrals


def reference_minimum(delta: float) -> float:
    """Small-delta reference level pi^2 e^{-gamma} / 24 * delta^2."""
    if delta <= 0.0:
        raise ValueError("need delta > 0")
    return math.pi**2 * math.exp(-np.euler_gamma) / 24.0 * delta**2


def interval_integral(
    big_t: float,
    delta: float,
    sigma_source,
    alpha: float = 1.0,
    tol: float = 1e-8,
) -> ScanRecord:
    """int_T^{T+delta} |zeta(sigma + i t, alpha)| dt by refined panels.

    16-point Gauss-Legendre panels double until two successive estimates
    agree to ``tol`` relative; node values |zeta| below 1e-3 hint at a
    nearby zero (the integrand kinks there), triggering two extra rounds
    and a "near-zero" flag.  Non-convergence is flagged, not raised.
    ``sigma_source`` is a number or a curve evaluated at T.
    """
    if big_t < 2.0:
        raise ValueError("need T >= 2")
    if delta <= 0.0:
        raise ValueError("need delta > 0")
    sigma = float(sigma_source(big_t)) if callable(sigma_source) else float(sigma_source)
    nodes, weights = np.polynomial.legendre.leggauss(16)

    def estimate(panels: int) -> tuple[float, float]:
        edges = np.linspace(big_t, big_t + delta, panels + 1)
        half = 0.5 * (edges[1] - edges[0])
        t = ((0.5 * (edges[1:] + edges[:-1]))[:, None] + half * nodes[None, :]).ravel()
        vals, _ = _em_batch(sigma, t, alpha)
        mods = np.abs(vals)
        return float(half * np.sum(mods.reshape(-1, 16) @ weights)), float(np.min(mods))

    panels = 2
    prev = None
    flags = []
    value = err = math.inf
    low = math.inf
    while panels <= _MAX_PANELS:
        value, low = estimate(panels)
        if prev is not None:
            err = abs(value - prev)
            if err <= tol * max(abs(value), 1e-300):
                break
        prev = value
        panels *= 2
    else:
        flags.append("unconverged")
    if low < _NEAR_ZERO and "unconverged" not in flags:
        flags.append("near-zero")
        for _ in range(2):
            panels *= 2
            if panels > 4 * _MAX_PANELS:
                break
            prev = value
            value, low = estimate(panels)
            err = abs(value - prev)
    return ScanRecord(float(big_t), float(delta), sigma, float(alpha), value, err, ",".join(flags))


def scan(
    sigma_source,
    t_schedule,
    delta: float,
    alpha: float = 1.0,
    tol: float = 1e-8,
    workers: int = 1,
) -> list[ScanRecord]:
    """One interval integral per schedule point, in schedule order.

    ``sigma_source`` may be a constant or a curve omega(T); a curve (or
    constant) whose criterion integral diverges gets a warning, since the
    scan then probes a regime with no positivity guarantee.  Points are
    independent; ``workers`` > 1 evaluates them concurrently with the
    output order unchanged.
    """
    schedule = [float(t) for t in t_schedule]
    if isinstance(sigma_source, OmegaCurve):
        if omega_curve_criterion(sigma_source).verdict == "divergent":
            warnings.warn("omega curve fails the convergence criterion", stacklevel=2)
    elif not callable(sigma_source) and float(sigma_source) < 1.0:
        warnings.warn("constant sigma < 1 fails the convergence criterion", stacklevel=2)
    if not schedule:
        return []
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            return list(pool.map(lambda t: interval_integral(t, delta, sigma_source, alpha, tol), schedule))
    return [interval_integral(t, delta, sigma_source, alpha, tol) for t in schedule]


def running_minimum(records: list[ScanRecord]) -> tuple[float, float]:
    """(smallest integral, its T) over a scan."""
    if not records:
        raise ValueError("empty scan")
    best = min(records, key=lambda r: r.value)
    return best.value, best.big_t
