"""Frequency systems and coefficient bound profiles.

A system is a strictly increasing list of positive frequencies lam_1 < ... <
lam_N together with two coupled amplitude vectors derived from a bound
profile Phi:

* ``amplitudes`` C_n  -- the modulus bounds on the coefficients of the
  unimodular exponentials exp(-i*lam_n*t) that the solver consumes, and
* ``normalized_amplitudes`` A_n -- the same bounds restated over the classically
  normalised basis (n^{it-1} style), i.e. A_n = C_n * denom_n.

The cumulative mass Lambda(x) = 1 + sum_{lam_n <= x} A_n (the leading 1 is
the constant term's amplitude A_0) drives the tail bounds in
:mod:`dirpoly.window` and the regularity checks below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

SIEVE_CAP = 10_000_000

_VALID_KINDS = ("classical", "primes", "divisor", "shifted", "custom")


# ----------------------------------------------------------------------
# sieves


@lru_cache(maxsize=8)
def _prime_sieve(limit: int) -> np.ndarray:
    """All primes <= limit, ascending."""
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    mask = np.ones(limit + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, int(limit**0.5) + 1):
        if mask[p]:
            mask[p * p :: p] = False
    return np.nonzero(mask)[0].astype(np.int64)


def primes_up_to(limit: int) -> np.ndarray:
    if limit > SIEVE_CAP:
        raise ValueError(f"sieve limit {limit} exceeds cap {SIEVE_CAP}")
    return _prime_sieve(int(limit)).copy()


def first_n_primes(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("need n >= 1")
    # p_n < n (ln n + ln ln n) for n >= 6
    guess = 15 if n < 6 else int(n * (math.log(n) + math.log(math.log(n))) * 1.2) + 10
    if guess > SIEVE_CAP:
        raise ValueError(f"prime sieve bound {guess} exceeds cap {SIEVE_CAP}")
    primes = _prime_sieve(guess)
    while primes.size < n:
        guess *= 2
        if guess > SIEVE_CAP:
            raise ValueError(f"prime sieve bound {guess} exceeds cap {SIEVE_CAP}")
        primes = _prime_sieve(guess)
    return primes[:n].copy()


@lru_cache(maxsize=4)
def _divisor_sieve(limit: int) -> np.ndarray:
    """d(m) for m = 0..limit (d(0) = 0)."""
    counts = np.zeros(limit + 1, dtype=np.int64)
    for d in range(1, limit + 1):
        counts[d::d] += 1
    return counts


def divisor_counts(limit: int) -> np.ndarray:
    if limit > SIEVE_CAP:
        raise ValueError(f"sieve limit {limit} exceeds cap {SIEVE_CAP}")
    return _divisor_sieve(int(limit)).copy()


# ----------------------------------------------------------------------
# bound profiles


@dataclass(frozen=True, eq=False)
class BoundProfile:
    """Positive nondecreasing bound profile Phi(n), n >= 1.

    Families:
      unit            Phi(n) = 1
      power(delta)    Phi(n) = n^delta,          delta > 0
      logpower(c)     Phi(n) = (log n)^c,        c > 0, clamped at n = 2 below
      loglog(theta)   Phi(n) = exp(log n / (log log n)^theta), theta > 0,
                      clamped to its value at the first index where the
                      formula is increasing (n_min ~ exp(exp(theta)))
      table           explicit (n, Phi(n)) pairs

    The clamps keep every family positive and nondecreasing on n >= 1
    without changing any tail behaviour.
    """

    family: str
    param: float = 0.0
    table_index: np.ndarray | None = None
    table_value: np.ndarray | None = None
    floor_index: int = field(default=2, repr=False)

    @staticmethod
    def unit() -> "BoundProfile":
        return BoundProfile("unit")

    @staticmethod
    def power(delta: float) -> "BoundProfile":
        if delta <= 0:
            raise ValueError("power profile needs delta > 0")
        return BoundProfile("power", float(delta))

    @staticmethod
    def logpower(c: float) -> "BoundProfile":
        if c <= 0:
            raise ValueError("logpower profile needs c > 0")
        return BoundProfile("logpower", float(c))

    @staticmethod
    def loglog_threshold(theta: float) -> "BoundProfile":
        if theta <= 0:
            raise ValueError("loglog profile needs theta > 0")
        n_min = int(math.ceil(math.exp(math.exp(theta)))) + 1
        return BoundProfile("loglog", float(theta), floor_index=max(n_min, 16))

    @staticmethod
    def from_table(index: np.ndarray, value: np.ndarray) -> "BoundProfile":
        index = np.asarray(index, dtype=np.int64)
        value = np.asarray(value, dtype=float)
        if index.size == 0:
            raise ValueError("empty profile table")
        if np.any(np.diff(index) <= 0):
            raise ValueError("profile table indices must be strictly increasing")
        if np.any(value <= 0):
            raise ValueError("profile values must be positive")
        if np.any(np.diff(value) < 0):
            raise ValueError("profile values must be nondecreasing")
        return BoundProfile("table", 0.0, index, value)

    def __call__(self, n):
        scalar = np.isscalar(n)
        m = np.asarray(n, dtype=float)
        if np.any(m < 1):
            raise ValueError("profiles are defined for n >= 1")
        if self.family == "unit":
            out = np.ones_like(m)
        elif self.family == "power":
            out = m**self.param
        elif self.family == "logpower":
            out = np.log(np.maximum(m, 2.0)) ** self.param
        elif self.family == "loglog":
            mm = np.maximum(m, float(self.floor_index))
            out = np.exp(np.log(mm) / np.log(np.log(mm)) ** self.param)
        elif self.family == "table":
            pos = np.searchsorted(self.table_index, np.asarray(n, dtype=np.int64))
            if np.any(pos >= self.table_index.size) or np.any(
                self.table_index[pos] != np.asarray(n, dtype=np.int64)
            ):
                raise ValueError("index missing from profile table")
            out = self.table_value[pos]
        else:  # pragma: no cover
            raise ValueError(f"unknown profile family {self.family!r}")
        return float(out) if scalar else out

    def describe(self) -> str:
        if self.family in ("unit", "table"):
            return self.family
        return f"{self.family}:{self.param:g}"


# ----------------------------------------------------------------------
# systems


@dataclass(frozen=True, eq=False)
class FrequencySystem:
    """Strictly increasing positive frequencies with their index labels.

    ``labels`` maps internal position k = 0..N-1 to the integer the bound
    profile is evaluated at (classical: n = k+2; primes: p_k; shifted: k+1).
    """

    kind: str
    frequencies: np.ndarray
    labels: np.ndarray
    alpha: float | None = None

    def __post_init__(self):
        freq = np.asarray(self.frequencies, dtype=float)
        if freq.size:
            if np.any(freq <= 0) or np.any(~np.isfinite(freq)):
                raise ValueError("frequencies must be positive and finite")
            if np.any(np.diff(freq) <= 0):
                raise ValueError("frequencies must be strictly increasing")
        freq.setflags(write=False)
        object.__setattr__(self, "frequencies", freq)
        labels = np.asarray(self.labels, dtype=np.int64)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n_terms(self) -> int:
        return int(self.frequencies.size)


@dataclass(frozen=True, eq=False)
class CoeffSystem:
    """Frequency system plus the two coupled amplitude vectors."""

    freq: FrequencySystem
    profile: BoundProfile
    amplitudes: np.ndarray        # C_n, bounds for exp(-i lam_n t) coefficients
    normalized_amplitudes: np.ndarray  # A_n = C_n * denom_n
    denominators: np.ndarray

    def __post_init__(self):
        for name in ("amplitudes", "normalized_amplitudes", "denominators"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.size != self.freq.n_terms:
                raise ValueError(f"{name} length mismatch")
            if np.any(arr < 0) or np.any(~np.isfinite(arr)):
                raise ValueError(f"{name} must be finite and nonnegative")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def kind(self) -> str:
        return self.freq.kind

    @property
    def frequencies(self) -> np.ndarray:
        return self.freq.frequencies

    @property
    def n_terms(self) -> int:
        return self.freq.n_terms

    def head(self, n: int) -> "CoeffSystem":
        """First n terms as a system of their own."""
        if not 0 <= n <= self.n_terms:
            raise ValueError("head size out of range")
        sub = FrequencySystem(
            self.freq.kind, self.freq.frequencies[:n], self.freq.labels[:n], self.freq.alpha
        )
        return CoeffSystem(
            sub,
            self.profile,
            self.amplitudes[:n],
            self.normalized_amplitudes[:n],
            self.denominators[:n],
        )


def build(
    kind: str,
    phi: BoundProfile | None = None,
    n_terms: int | None = None,
    alpha: float | None = None,
    frequencies=None,
    amplitudes=None,
    sieve_cap: int = SIEVE_CAP,
) -> CoeffSystem:
    """Build a coefficient system of one of the preset kinds.

    classical  lam_k = log(k+1),   C_k = Phi(k+1)/(k+1),        k = 1..N
    primes     lam_k = log(p_k),   C_k = Phi(p_k)/p_k
    divisor    lam_k = log(k+1),   C_k = d(k+1) Phi(k+1)/(k+1)
    shifted    lam_k = log(k+alpha) - log(alpha),  C_k = Phi(k)/(k+alpha)
    custom     frequencies supplied directly; amplitudes supplied or Phi(k+1)

    The shifted convention is pinned by the alpha = 1 identity: it must
    reproduce the classical system exactly (same frequencies, same bounds),
    mirroring zeta(s, 1) = zeta(s).
    """
    if kind not in _VALID_KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    phi = phi if phi is not None else BoundProfile.unit()

    if kind == "custom":
        freq = np.asarray(frequencies, dtype=float)
        labels = np.arange(1, freq.size + 1, dtype=np.int64)
        fs = FrequencySystem("custom", freq, labels)
        if amplitudes is not None:
            c = np.asarray(amplitudes, dtype=float)
            denom = np.ones_like(c)
        else:
            c = np.asarray(phi(labels + 1), dtype=float)
            denom = np.ones_like(c)
        return CoeffSystem(fs, phi, c, c * denom, denom)

    if n_terms is None or n_terms < 1:
        raise ValueError("preset kinds need n_terms >= 1")
    n = int(n_terms)

    if kind == "classical":
        labels = np.arange(2, n + 2, dtype=np.int64)
        freq = np.log(labels.astype(float))
        denom = labels.astype(float)
        a = np.asarray(phi(labels), dtype=float)
    elif kind == "primes":
        labels = first_n_primes(n)
        if labels[-1] > sieve_cap:
            raise ValueError("prime system exceeds sieve cap")
        freq = np.log(labels.astype(float))
        denom = labels.astype(float)
        a = np.asarray(phi(labels), dtype=float)
    elif kind == "divisor":
        labels = np.arange(2, n + 2, dtype=np.int64)
        if labels[-1] > sieve_cap:
            raise ValueError("divisor system exceeds sieve cap")
        freq = np.log(labels.astype(float))
        denom = labels.astype(float)
        d = _divisor_sieve(int(labels[-1]))[labels]
        a = d.astype(float) * np.asarray(phi(labels), dtype=float)
    else:  # shifted
        if alpha is None or alpha <= 0:
            raise ValueError("shifted kind needs alpha > 0")
        labels = np.arange(1, n + 1, dtype=np.int64)
        freq = np.log(labels + alpha) - math.log(alpha)
        denom = labels + float(alpha)
        a = np.asarray(phi(labels), dtype=float)

    c = a / denom
    fs = FrequencySystem(kind, freq, labels, alpha if kind == "shifted" else None)
    return CoeffSystem(fs, phi, c, a, denom)


def counting_function(system: CoeffSystem, x, amplitudes: str = "normalized"):
    """Cumulative amplitude mass Lambda(x) = 1 + sum_{lam_n <= x} A_n.

    The constant term contributes the leading 1 (its amplitude is one by
    normalisation).  ``amplitudes`` selects which vector is accumulated:
    "normalized" (default) sums A_n, "unimodular" sums C_n.  Nondecreasing and
    right-continuous in x.
    """
    if amplitudes == "normalized":
        vec = system.normalized_amplitudes
    elif amplitudes == "unimodular":
        vec = system.amplitudes
    else:
        raise ValueError("amplitudes must be 'normalized' or 'unimodular'")
    scalar = np.isscalar(x)
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0):
        raise ValueError("counting function is defined for x >= 0")
    cum = np.concatenate(([0.0], np.cumsum(vec)))
    idx = np.searchsorted(system.frequencies, xs, side="right")
    out = 1.0 + cum[idx]
    return float(out) if scalar else out


# ----------------------------------------------------------------------
# regularity of the counting function


@dataclass(frozen=True, eq=False)
class RegularityProfile:
    """Window floor eps(x) for increment sampling, decreasing to 0."""

    name: str
    delta: float

    @staticmethod
    def log_power(delta: float) -> "RegularityProfile":
        if delta <= 0:
            raise ValueError("need delta > 0")
        return RegularityProfile("logpower", float(delta))

    @staticmethod
    def power(delta: float) -> "RegularityProfile":
        if delta <= 0:
            raise ValueError("need delta > 0")
        return RegularityProfile("power", float(delta))

    def __call__(self, x):
        xs = np.asarray(x, dtype=float)
        if np.any(xs <= 0):
            raise ValueError("eps(x) needs x > 0")
        if self.name == "logpower":
            out = np.log(xs + 1.0) ** (-1.0 - self.delta)
        else:
            out = xs ** (-self.delta)
        return float(out) if np.isscalar(x) else out

    def tail_increments(self, x_max: float, n_windows: int = 12) -> np.ndarray:
        """Increments of int_1^X eps(x)/x dx over doubling windows."""
        edges = np.geomspace(1.0, x_max, n_windows + 1)
        out = np.empty(n_windows)
        for i in range(n_windows):
            grid = np.linspace(edges[i], edges[i + 1], 257)
            out[i] = np.trapezoid(self(grid) / grid, grid)
        return out


@dataclass(frozen=True, eq=False)
class RegularityReport:
    rows: np.ndarray          # columns: X, Y, ratio
    min_ratio: float
    argmin: tuple[float, float]
    flagged: np.ndarray       # rows with ratio below the floor
    floor: float


def check_regularity(
    system: CoeffSystem,
    reg: RegularityProfile,
    x_grid,
    samples_per_x: int = 3,
    floor: float = 1e-3,
    amplitudes: str = "normalized",
) -> RegularityReport:
    """Sample increment ratios (Lambda(X+Y) - Lambda(X)) / (Y * Lambda(X)).

    Y ranges over a geometric sample of [eps(X), 1] (clamped to [.,1]).
    Ratios below ``floor`` are flagged, never errored: sparse systems
    legitimately produce empty increments.
    """
    xs = np.asarray(x_grid, dtype=float)
    if xs.size == 0:
        raise ValueError("empty X grid")
    lam_max = system.frequencies[-1] if system.n_terms else 0.0
    if np.any(xs + 1.0 > lam_max):
        raise ValueError("X + 1 exceeds the largest frequency; extend the system")
    rows = []
    for x in xs:
        lo = min(float(reg(x)), 1.0)
        ys = np.geomspace(lo, 1.0, samples_per_x) if lo < 1.0 else np.array([1.0])
        lam_x = counting_function(system, x, amplitudes)
        for y in ys:
            inc = counting_function(system, x + y, amplitudes) - lam_x
            rows.append((x, y, inc / (y * lam_x)))
    table = np.asarray(rows, dtype=float)
    k = int(np.argmin(table[:, 2]))
    flagged = table[table[:, 2] < floor]
    return RegularityReport(
        rows=table,
        min_ratio=float(table[k, 2]),
        argmin=(float(table[k, 0]), float(table[k, 1])),
        flagged=flagged,
        floor=floor,
    )


# ----------------------------------------------------------------------
# two-column tables


def load_table(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column (index, value) text table.

    Lines starting with '#' and blank lines are skipped.  Indices must be
    integers; values are parsed as decimal literals.
    """
    idx, val = [], []
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected two columns, got {len(parts)}")
        try:
            idx.append(int(parts[0]))
            val.append(float(parts[1]))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not idx:
        raise ValueError(f"{path}: no data rows")
    return np.asarray(idx, dtype=np.int64), np.asarray(val, dtype=float)
