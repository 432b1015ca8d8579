"""Inner products of exponentials exp(-i*lam*t) in L2(0, H).

Everything the quadratic objective

    F(a) = ||g||^2 + 2 Re sum_n a_n w_n + sum_{m,n} a_m conj(a_n) G_mn

needs is collected here: the pairwise closed form

    gram_entry(lam_m, lam_n, H) = int_0^H exp(-i (lam_m - lam_n) t) dt
                                = H                                  (gap = 0)
                                = (1 - exp(-i gap H)) / (i gap)      (else)

evaluated in a cancellation-free split, the target moments
w_n = int_0^H exp(-i lam_n t) conj(g(t)) dt, and an adaptive panel
quadrature ``quad_oracle`` that recomputes any of these integrals without
touching the closed forms, so tests can compare the two routes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

#: below this |gap|*H the closed form switches to its Taylor series
SERIES_CUT = 1e-4

#: dense-matrix size cap for assemble()
MAX_TERMS = 20_000

#: quadrature refuses to go past this many panels
MAX_PANELS = 1 << 15

_FACT = (1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0)

_DUMP_MAGIC = b"GRM1"


class QuadratureError(Exception):
    """Panel refinement hit its cap before reaching the tolerance."""


def gram_entry(lam_m, lam_n, big_h: float):
    """<exp(-i lam_m t), exp(-i lam_n t)> on [0, H], vectorised.

    With z = (lam_m - lam_n) * H the stable split is

        Re = H sin(z) / z,    Im = -2 H sin^2(z/2) / z,

    exact at z = 0 by the diagonal value H; for 0 < |z| < SERIES_CUT the
    truncated series H * sum_{k<=6} (-iz)^k / (k+1)!  is used (the first
    omitted term is ~1e-32 there).  sin is odd exactly in IEEE arithmetic,
    so swapping the arguments conjugates the result to the last bit.
    """
    if big_h <= 0:
        raise ValueError("need H > 0")
    scalar = np.isscalar(lam_m) and np.isscalar(lam_n)
    gap = np.atleast_1d(np.asarray(lam_m, dtype=float) - np.asarray(lam_n, dtype=float))
    z = gap * big_h
    out = np.empty(z.shape, dtype=complex)

    small = np.abs(z) < SERIES_CUT
    if np.any(small):
        zs = -1j * z[small]
        acc = np.zeros(zs.shape, dtype=complex)
        term = np.ones(zs.shape, dtype=complex)
        for k in range(7):
            acc += term / _FACT[k + 1]
            term = term * zs
        out[small] = big_h * acc

    rest = ~small
    if np.any(rest):
        zb = z[rest]
        half = np.sin(0.5 * zb)
        out[rest] = big_h * (np.sin(zb) / zb - 2j * half * half / zb)

    return complex(out[0]) if scalar else out


def quad_oracle(f, big_h: float, tol: float = 1e-12) -> complex:
    """int_0^H f(t) dt by composite 12-point Gauss-Legendre panels.

    The panel count doubles until two successive refinements agree to
    ``tol`` relative to max(|estimate|, H).  Deliberately ignorant of the
    closed forms above — this is the independent route.
    """
    if big_h <= 0:
        raise ValueError("need H > 0")
    prev = None
    panels = 4
    while panels <= MAX_PANELS:
        val = _gl_panels(f, big_h, panels)
        if prev is not None and abs(val - prev) <= tol * max(abs(val), big_h):
            return complex(val)
        prev = val
        panels *= 2
    raise QuadratureError(f"no convergence to {tol:g} within {MAX_PANELS} panels")


def _gl_panels(f, big_h: float, panels: int) -> complex:
    nodes, weights = np.polynomial.legendre.leggauss(12)
    edges = np.linspace(0.0, big_h, panels + 1)
    half = 0.5 * (edges[1] - edges[0])
    t = (0.5 * (edges[1:] + edges[:-1]))[:, None] + half * nodes[None, :]
    vals = np.asarray(f(t.ravel())).reshape(t.shape)
    return complex(half * np.sum(weights[None, :] * vals))


# ----------------------------------------------------------------------
# targets


@dataclass(frozen=True, eq=False)
class Target:
    """Target g(t) on [0, H]: an exponential sum or a sampled table.

    kind "exponentials": g(t) = sum_k coeff_k exp(-i mu_k t); every moment
    and the norm reduce to gram_entry calls, so nothing is quadratured in
    the solver path.  Covers constant targets (mu = 0) and the one-term
    oscillating targets with any real mu.

    kind "sampled": g is the linear interpolant of (sample_t, sample_v);
    moments go through refined panel quadrature at assembly time.
    """

    kind: str
    coefficients: np.ndarray | None = None
    frequencies: np.ndarray | None = None
    sample_t: np.ndarray | None = None
    sample_v: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "exponentials":
            c = np.asarray(self.coefficients, dtype=complex)
            mu = np.asarray(self.frequencies, dtype=float)
            if c.size != mu.size or c.size == 0:
                raise ValueError("coefficient / frequency length mismatch")
            if np.unique(mu).size != mu.size:
                raise ValueError("target frequencies must be distinct")
            c.setflags(write=False)
            mu.setflags(write=False)
            object.__setattr__(self, "coefficients", c)
            object.__setattr__(self, "frequencies", mu)
        elif self.kind == "sampled":
            t = np.asarray(self.sample_t, dtype=float)
            v = np.asarray(self.sample_v, dtype=complex)
            if t.size != v.size or t.size < 2:
                raise ValueError("need at least two samples")
            if np.any(np.diff(t) <= 0):
                raise ValueError("sample times must be strictly increasing")
            t.setflags(write=False)
            v.setflags(write=False)
            object.__setattr__(self, "sample_t", t)
            object.__setattr__(self, "sample_v", v)
        else:
            raise ValueError(f"unknown target kind {self.kind!r}")

    # -- constructors

    @staticmethod
    def constant(value: complex = 1.0) -> "Target":
        return Target("exponentials", np.array([value], dtype=complex), np.array([0.0]))

    @staticmethod
    def exponential(mu: float, amplitude: complex = 1.0) -> "Target":
        """g(t) = amplitude * exp(-i mu t) for any real mu."""
        return Target("exponentials", np.array([amplitude], dtype=complex), np.array([float(mu)]))

    @staticmethod
    def exponential_sum(coefficients, frequencies) -> "Target":
        return Target(
            "exponentials",
            np.asarray(coefficients, dtype=complex),
            np.asarray(frequencies, dtype=float),
        )

    @staticmethod
    def sampled(times, values) -> "Target":
        return Target("sampled", sample_t=np.asarray(times, float), sample_v=np.asarray(values, complex))

    # -- evaluation

    def __call__(self, t):
        ts = np.asarray(t, dtype=float)
        if self.kind == "exponentials":
            out = np.exp(-1j * np.outer(ts.ravel(), self.frequencies)) @ self.coefficients
            out = out.reshape(ts.shape)
        else:
            out = np.interp(ts, self.sample_t, self.sample_v.real) + 1j * np.interp(
                ts, self.sample_t, self.sample_v.imag
            )
        return complex(out) if np.isscalar(t) else out

    def norm_sq(self, big_h: float) -> float:
        """||g||^2 on [0, H].

        Exponential sums use the pairwise closed form.  Sampled targets are
        piecewise linear, so each segment integrates exactly as
        (|v0|^2 + |v1|^2 + Re v0 conj(v1)) * dt / 3.
        """
        if self.kind == "exponentials":
            gap = self.frequencies[:, None] - self.frequencies[None, :]
            gm = gram_entry(gap.ravel(), 0.0, big_h).reshape(gap.shape)
            return float(np.real(np.conj(self.coefficients) @ gm.T @ self.coefficients))
        if self.sample_t[0] > 0.0 or self.sample_t[-1] < big_h:
            raise ValueError("sampled target does not cover [0, H]")
        inside = (self.sample_t > 0.0) & (self.sample_t < big_h)
        t = np.concatenate(([0.0], self.sample_t[inside], [big_h]))
        v = self(t)
        v0, v1 = v[:-1], v[1:]
        seg = (np.abs(v0) ** 2 + np.abs(v1) ** 2 + np.real(v0 * np.conj(v1))) / 3.0
        return float(np.sum(seg * np.diff(t)))

    def moments(self, frequencies, big_h: float, tol: float = 1e-10) -> np.ndarray:
        """w_n = int_0^H exp(-i lam_n t) conj(g(t)) dt for each lam_n."""
        lam = np.asarray(frequencies, dtype=float)
        if self.kind == "exponentials":
            gap = lam[:, None] - self.frequencies[None, :]
            gm = gram_entry(gap.ravel(), 0.0, big_h).reshape(gap.shape)
            return gm @ np.conj(self.coefficients)
        out = np.empty(lam.size, dtype=complex)
        for k, freq in enumerate(lam):
            out[k] = quad_oracle(
                lambda t, f=freq: np.exp(-1j * f * t) * np.conj(self(t)), big_h, tol
            )
        return out


# ----------------------------------------------------------------------
# assembled systems


@dataclass(frozen=True, eq=False)
class GramSystem:
    """Gram matrix, target moments and target norm for one (system, g, H).

    This is the complete data of the quadratic objective; the solver never
    needs to see the underlying functions again.
    """

    frequencies: np.ndarray
    big_h: float
    matrix: np.ndarray
    moments: np.ndarray
    g_norm_sq: float
    target: Target

    def __post_init__(self):
        lam = np.asarray(self.frequencies, dtype=float)
        lam.setflags(write=False)
        object.__setattr__(self, "frequencies", lam)
        m = np.asarray(self.matrix, dtype=complex)
        w = np.asarray(self.moments, dtype=complex)
        if m.shape != (lam.size, lam.size) or w.size != lam.size:
            raise ValueError("matrix / moments shape mismatch")
        w.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "moments", w)
        if not np.isfinite(self.g_norm_sq) or self.g_norm_sq < 0:
            raise ValueError("target norm must be finite and nonnegative")

    @property
    def n_terms(self) -> int:
        return int(self.frequencies.size)

    def head(self, n: int) -> "GramSystem":
        """Leading n-by-n principal block (same target)."""
        if not 0 <= n <= self.n_terms:
            raise ValueError("head size out of range")
        return GramSystem(
            self.frequencies[:n],
            self.big_h,
            self.matrix[:n, :n],
            self.moments[:n],
            self.g_norm_sq,
            self.target,
        )


def assemble(frequencies, target: Target, big_h: float, max_terms: int = MAX_TERMS) -> GramSystem:
    """Build the dense Gram matrix and target moments on [0, H].

    ``frequencies`` is a frequency array or anything with a ``frequencies``
    attribute (a CoeffSystem).  Sampled targets must supply at least
    16 * max(lam_max, 1) samples per time unit so the moment quadrature has
    something to resolve.
    """
    lam = np.asarray(getattr(frequencies, "frequencies", frequencies), dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise ValueError("need a nonempty 1-d frequency list")
    if lam.size > max_terms:
        raise ValueError(f"{lam.size} terms exceeds the dense cap {max_terms}")
    if big_h <= 0:
        raise ValueError("need H > 0")
    if target.kind == "sampled":
        density = (target.sample_t.size - 1) / big_h
        need = 16.0 * max(float(np.max(lam)), 1.0)
        if density < need:
            raise ValueError(
                f"sampled target too sparse: {density:.1f} samples/unit < required {need:.1f}"
            )
    norm = target.norm_sq(big_h)
    if not np.isfinite(norm):
        raise ValueError("target norm is not finite")
    gap = lam[:, None] - lam[None, :]
    matrix = gram_entry(gap.ravel(), 0.0, big_h).reshape(gap.shape)
    w = target.moments(lam, big_h)
    return GramSystem(lam, float(big_h), matrix, w, norm, target)


def min_rayleigh(gram: GramSystem, samples: int | None = None, seed: int = 0) -> float:
    """Floor of the Rayleigh quotient of the Gram matrix.

    Exact smallest eigenvalue by default; with ``samples`` set, the minimum
    quotient over that many random complex unit vectors instead (an upper
    bound on the eigenvalue — cheap screen for gross indefiniteness).
    """
    if samples is None:
        return float(np.linalg.eigvalsh(gram.matrix)[0])
    rng = np.random.default_rng(seed)
    n = gram.n_terms
    best = np.inf
    for _ in range(int(samples)):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v /= np.linalg.norm(v)
        best = min(best, float(np.real(np.vdot(v, gram.matrix @ v))))
    return best


# ----------------------------------------------------------------------
# debugging dump: 16-byte header (magic, N, H) + little-endian complex128 rows


def dump_gram(gram: GramSystem, path) -> None:
    header = _DUMP_MAGIC + struct.pack("<I", gram.n_terms) + struct.pack("<d", gram.big_h)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(gram.matrix.astype("<c16").tobytes())


def load_gram(path) -> tuple[float, np.ndarray]:
    """Read back a :func:`dump_gram` file as (H, matrix)."""
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != _DUMP_MAGIC:
            raise ValueError(f"{path}: not a gram dump")
        n = struct.unpack("<I", header[4:8])[0]
        big_h = struct.unpack("<d", header[8:16])[0]
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != n * n:
        raise ValueError(f"{path}: expected {n * n} entries, found {data.size}")
    matrix = data.reshape(n, n).astype(complex)
    err = np.max(np.abs(matrix - matrix.conj().T))
    if err > 1e-12 * max(big_h, 1.0):
        raise ValueError(f"{path}: matrix fails the Hermitian check ({err:.3g})")
    return big_h, matrix
