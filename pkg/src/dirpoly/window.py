"""Compactly supported windows with prescribed transform decay.

A window is the K-fold convolution of normalized box indicators
chi_[0, 2a_k] / (2a_k), supported exactly on [0, L] with L = sum 2a_k.
Its transform factorizes,

    fhat(xi) = exp(-i xi L / 2) * prod_k sin(a_k xi) / (a_k xi),

so |fhat| is a product of sinc moduli and can be driven below 1/S(xi) for
any decay target S of polynomial growth by taking K a little past the
growth order.  The module also carries the tail machinery the windows
exist for: the normalized bounds B_n = A_n / Lambda(lam_n)^2 with their
unconditional sum bound, and the convolution identity mapping a Dirichlet
polynomial 1 + sum a_n exp(-i lam_n t) to b_0 + sum b_n exp(-i lam_n t)
with b_n = a_n fhat(lam_n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frequency import CoeffSystem, counting_function

DEFAULT_MESH = 1 << 14
K_CAP = 40


class WindowBuildError(ValueError):
    """No K within the cap meets the decay target; carries the best margin."""

    def __init__(self, message: str, best_k: int, best_margin: float):
        super().__init__(message)
        self.best_k = best_k
        self.best_margin = best_margin


# ----------------------------------------------------------------------
# decay targets


@dataclass(frozen=True, eq=False)
class DecayTarget:
    """Positive increasing decay demand S(xi); windows must get |fhat| <= 1/S.

    Presets: polynomial S = (1 + x)^p and the squared counting function
    S = Lambda(x)^2 of a coefficient system (mass-normalized amplitudes).
    Arbitrary callables are accepted for experiments; they are classified
    by the same slope fit as Lambda targets.
    """

    kind: str
    exponent: float = math.nan
    system: CoeffSystem | None = None
    func: object | None = None

    @staticmethod
    def polynomial(p: float) -> "DecayTarget":
        if p < 0:
            raise ValueError("need exponent p >= 0")
        return DecayTarget("polynomial", float(p))

    @staticmethod
    def lambda_squared(system: CoeffSystem) -> "DecayTarget":
        if system.n_terms == 0:
            raise ValueError("empty system")
        return DecayTarget("lambda-squared", system=system)

    @staticmethod
    def custom(func) -> "DecayTarget":
        return DecayTarget("custom", func=func)

    def __call__(self, x):
        xs = np.asarray(x, dtype=float)
        if self.kind == "polynomial":
            out = (1.0 + xs) ** self.exponent
        elif self.kind == "lambda-squared":
            out = counting_function(self.system, np.maximum(xs, 0.0)) ** 2
        else:
            # arbitrary callables may overflow to inf on wide spans; inf is
            # a legitimate answer here (an unmeetable demand), not an error
            with np.errstate(over="ignore"):
                out = np.asarray(self.func(xs), dtype=float)
        return float(out) if np.isscalar(x) else out

    def fit_span(self) -> float:
        """Largest x the target is naturally defined/fitted on."""
        if self.kind == "lambda-squared":
            return float(self.system.frequencies[-1])
        return 4096.0

    def log_integral(self, x_max: float | None = None, n_windows: int = 12):
        """(total, increments) of int log S(x) / (1 + x^2) dx over doubling windows.

        Decaying increments are the numeric evidence that S is admissible
        (a finite-K window can beat it); flat increments mean it is not.
        """
        hi = float(x_max) if x_max is not None else self.fit_span()
        edges = np.concatenate(([0.0], np.geomspace(1.0, max(hi, 2.0), n_windows)))
        inc = np.empty(edges.size - 1)
        for i in range(edges.size - 1):
            grid = np.linspace(edges[i], edges[i + 1], 257)
            vals = np.log(np.clip(self(grid), 1e-300, np.finfo(float).max)) / (1.0 + grid**2)
            inc[i] = np.trapezoid(vals, grid)
        return float(np.sum(inc)), inc


# ----------------------------------------------------------------------
# windows


@dataclass(frozen=True, eq=False)
class Window:
    """K-fold box convolution on [0, L]: widths, mesh samples, transform.

    ``widths`` holds the full box widths 2a_k.  Samples live on a uniform
    mesh over [0, L] whose cells divide every kink location; they store the
    inside-limit values, and evaluation outside [0, L] is exactly 0.
    """

    widths: np.ndarray
    mesh: np.ndarray
    samples: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.widths, dtype=float)
        if w.size == 0 or np.any(w <= 0):
            raise ValueError("box widths must be positive")
        t = np.asarray(self.mesh, dtype=float)
        f = np.asarray(self.samples, dtype=float)
        if t.size != f.size or t.size < 9:
            raise ValueError("mesh / samples mismatch")
        if np.any(f < 0):
            raise ValueError("window samples must be nonnegative")
        steps = np.diff(t)
        if abs(t[0]) > 1e-15 or abs(t[-1] - np.sum(w)) > 1e-12 * np.sum(w):
            raise ValueError("mesh must span [0, L]")
        # linspace leaves ulp-level jitter in the diffs when the count is
        # not a power of two, so allow a few ulp of the span on top
        if np.max(steps) - np.min(steps) > 1e-12 * np.max(steps) + 8.0 * np.spacing(t[-1]):
            raise ValueError("mesh must be uniform")
        for arr in (w, t, f):
            arr.setflags(write=False)
        object.__setattr__(self, "widths", w)
        object.__setattr__(self, "mesh", t)
        object.__setattr__(self, "samples", f)

    @property
    def length(self) -> float:
        return float(np.sum(self.widths))

    @property
    def order(self) -> int:
        return int(self.widths.size)

    def __call__(self, t):
        ts = np.asarray(t, dtype=float)
        out = np.interp(ts, self.mesh, self.samples, left=0.0, right=0.0)
        out = np.where((ts < 0.0) | (ts > self.length), 0.0, out)
        return float(out) if np.isscalar(t) else out

    def transform(self, xi):
        """fhat(xi) = exp(-i xi L/2) prod_k sin(a_k xi)/(a_k xi)."""
        xs = np.asarray(xi, dtype=float)
        half = 0.5 * self.widths  # a_k
        prod = np.ones_like(xs, dtype=float)
        for a in half:
            prod = prod * np.sinc(a * xs / np.pi)
        out = np.exp(-0.5j * xs * self.length) * prod
        return complex(out) if np.isscalar(xi) else out

    def envelope(self, xi):
        """Upper bound prod_k min(1, 1/(a_k |xi|)) on |fhat|."""
        xs = np.abs(np.asarray(xi, dtype=float))
        prod = np.ones_like(xs)
        for a in 0.5 * self.widths:
            with np.errstate(divide="ignore"):
                prod = prod * np.minimum(1.0, np.where(xs > 0, 1.0 / (a * xs), np.inf))
        return float(prod) if np.isscalar(xi) else prod

    def mass(self) -> float:
        return float(np.trapezoid(self.samples, self.mesh))


def _bspline_samples(order: int, cells: int) -> np.ndarray:
    """Cardinal B-spline M_order on the grid j/cells, j = 0..order*cells.

    M_1 = chi_[0,1);  M_k(u) = (u M_{k-1}(u) + (k-u) M_{k-1}(u-1)) / (k-1).
    All contributions are nonnegative, so the recursion is stable, and the
    u-1 shift is an exact grid shift of ``cells`` samples.
    """
    cur = np.ones(cells + 1)
    cur[-1] = 0.0
    for k in range(2, order + 1):
        n_new = k * cells + 1
        p1 = np.concatenate((cur, np.zeros(n_new - cur.size)))
        p2 = np.concatenate((np.zeros(cells), cur, np.zeros(n_new - cur.size - cells)))
        u = np.arange(n_new) / cells
        cur = (u * p1 + (k - u) * p2) / (k - 1)
    return cur


def _construct(length: float, order: int, cells: int) -> Window:
    mesh = np.linspace(0.0, length, order * cells + 1)
    if order == 1:
        samples = np.full(mesh.size, 1.0 / length)  # inside-limit values at both ends
    else:
        samples = _bspline_samples(order, cells) * (order / length)
    widths = np.full(order, length / order)
    return Window(widths, mesh, samples)


def _round_cells(n: int) -> int:
    return max(16, ((n + 15) // 16) * 16)


def build_window(
    length: float,
    decay: DecayTarget | None = None,
    k_hint: int | None = None,
    mesh_points: int = DEFAULT_MESH,
    xi_max: float | None = None,
    k_cap: int = K_CAP,
) -> Window:
    """Equal-width window on [0, L] meeting ``decay``, if any K <= k_cap can.

    K comes from the target: polynomial degree p needs K = ceil(p) + 2;
    Lambda^2 and custom targets get K from the slope of log S against
    log(1 + x) on the target's natural span.  The construction mesh starts
    at ``mesh_points`` samples and doubles (up to 3 times) until the mass
    and transform-product self-checks pass at 1e-10.

    With a decay target, the returned window is the smallest K at or above
    the rule that verifies; if none does, WindowBuildError reports the best
    (K, margin) pair seen.  The margin convention is verify_decay's.
    """
    if length <= 0:
        raise ValueError("need L > 0")
    if k_hint is not None:
        k_first = int(k_hint)
        if k_first < 1:
            raise ValueError("need K >= 1")
    elif decay is None:
        k_first = 2
    elif decay.kind == "polynomial":
        k_first = int(math.ceil(decay.exponent)) + 2
    else:
        span = decay.fit_span()
        xs = np.geomspace(1.0, max(span, 2.0), 128)
        logs = np.log(np.maximum(np.asarray(decay(xs), dtype=float), 1e-300))
        keep = np.isfinite(logs)
        if np.count_nonzero(keep) >= 2:
            slope = np.polyfit(np.log1p(xs[keep]), logs[keep], 1)[0]
            k_first = max(2, int(math.ceil(slope)) + 2)
        else:
            # the target overflows everywhere we can fit: demand the cap
            k_first = k_cap
    if k_first > k_cap:
        k_first = k_cap

    if decay is None:
        return _self_checked(length, k_first, mesh_points)

    hi = xi_max if xi_max is not None else max(2.0 * decay.fit_span(), 64.0 * k_first / length)
    grid = np.linspace(0.0, hi, 4097)
    best_k, best_margin = k_first, -math.inf
    k_values = [k_first] if k_hint is not None else list(range(k_first, k_cap + 1))
    for k in k_values:
        win = _self_checked(length, k, mesh_points)
        report = verify_decay(win, decay, grid)
        if report.passed:
            return win
        if report.margin > best_margin:
            best_k, best_margin = k, report.margin
    raise WindowBuildError(
        f"no window of order <= {k_values[-1]} on [0, {length:g}] meets the decay target "
        f"(best: K = {best_k}, margin {best_margin:.3g})",
        best_k,
        best_margin,
    )


def _self_checked(length: float, order: int, mesh_points: int) -> Window:
    cells = _round_cells(int(math.ceil(mesh_points / order)))
    for _ in range(4):
        win = _construct(length, order, cells)
        if abs(win.mass() - 1.0) > 1e-10:
            cells *= 2
            continue
        a = length / (2.0 * order)
        probes = np.geomspace(0.25 / length, 8.0 * math.pi / a, 8)
        exact = np.abs(win.transform(probes))
        oracle = np.abs(discrete_transform(win, probes))
        if np.max(np.abs(exact - oracle)) > 1e-10:
            cells *= 2
            continue
        return win
    raise RuntimeError("window self-checks failed to converge under mesh refinement")


def discrete_transform(window: Window, xi, levels: int = 4):
    """fhat(xi) from the mesh samples alone: trapezoid sums + Richardson.

    The mesh is kink-aligned at every stride 2^j (cells are multiples of
    16), so the trapezoid error expands in even powers of the spacing and
    ``levels`` rounds of extrapolation drive it near machine precision.
    Independent of the sinc product formula by construction.
    """
    xs = np.atleast_1d(np.asarray(xi, dtype=float))
    n = window.samples.size - 1
    if n % (1 << (levels - 1)) != 0:
        raise ValueError("mesh does not support this many extrapolation levels")
    dt = window.mesh[1] - window.mesh[0]
    out = np.empty(xs.size, dtype=complex)
    for i, x in enumerate(xs):
        g = window.samples * np.exp(-1j * x * window.mesh)
        rows = []
        for j in range(levels - 1, -1, -1):
            stride = 1 << j
            sub = g[::stride]
            h = dt * stride
            rows.append(h * (np.sum(sub) - 0.5 * (sub[0] + sub[-1])))
        column = rows  # coarsest first
        for level in range(1, levels):
            factor = 4.0**level
            column = [
                (factor * column[m + 1] - column[m]) / (factor - 1.0)
                for m in range(len(column) - 1)
            ]
        out[i] = column[0]
    return complex(out[0]) if np.isscalar(xi) else out


# ----------------------------------------------------------------------
# decay verification


@dataclass(frozen=True, eq=False)
class DecayReport:
    passed: bool
    crossover: float        # smallest grid xi with |fhat| S <= 1 from there on
    margin: float           # min of 1/S - scale|fhat| past the crossover (grid-wide if failed)
    worst_low: float        # max of scale|fhat| S below the crossover
    worst_ratio: float      # max of scale|fhat| S anywhere on the grid
    scale: float            # the applied c0 rescale


def verify_decay(window: Window, decay, grid, scale: float = 1.0) -> DecayReport:
    """Compare scale * |fhat| against 1/S on a grid of xi >= 0.

    Success means some crossover xi0 exists with scale|fhat(xi)| S(xi) <= 1
    at every grid point from xi0 on; the low-frequency rest is reported,
    not judged (fhat(0) = 1 forces a violation wherever S > 1/scale near
    0).  ``scale`` is the c0 rescale knob; the report only describes the
    grid it was given.
    """
    xs = np.asarray(grid, dtype=float)
    if xs.size < 2 or np.any(xs < 0):
        raise ValueError("need a nonnegative xi grid")
    s_vals = np.asarray(decay(xs), dtype=float)
    if np.any(s_vals <= 0):
        raise ValueError("decay target must be positive")
    mod = scale * np.abs(window.transform(xs))
    ratio = mod * s_vals
    ok = ratio <= 1.0
    # smallest index from which ok holds to the end
    bad = np.nonzero(~ok)[0]
    first = bad[-1] + 1 if bad.size else 0
    if first >= xs.size:
        gap = 1.0 / s_vals - mod
        return DecayReport(False, math.inf, float(np.min(gap)), float(np.max(ratio)), float(np.max(ratio)), scale)
    tail_gap = 1.0 / s_vals[first:] - mod[first:]
    low = float(np.max(ratio[:first])) if first > 0 else 0.0
    return DecayReport(
        True, float(xs[first]), float(np.min(tail_gap)), low, float(np.max(ratio)), scale
    )


# ----------------------------------------------------------------------
# tail bounds and the convolution identity


def bn_bounds(system: CoeffSystem) -> tuple[np.ndarray, float]:
    """B_n = A_n / Lambda(lam_n)^2 and their total.

    Since A_n = Lambda(lam_n) - Lambda(lam_n - 0) the terms telescope:
    B_n <= 1/Lambda(lam_{n-1}) - 1/Lambda(lam_n), so the total is at most
    1/Lambda(0) = 1 for every system whatsoever — asserted here against
    the looser classical ceiling of 2.
    """
    lam = system.frequencies
    big = counting_function(system, lam) if lam.size else np.empty(0)
    b = system.normalized_amplitudes / big**2
    total = float(np.sum(b))
    if total > 2.0:
        raise AssertionError(f"tail bound total {total} exceeds 2 — broken counting function")
    return b, total


@dataclass(frozen=True, eq=False)
class ConvolutionReport:
    t_grid: np.ndarray
    lhs: np.ndarray             # quadrature of the smoothed polynomial
    rhs: np.ndarray             # b_0 + sum b_n exp(-i lam_n t)
    max_abs_diff: float
    b_moduli: np.ndarray        # |a_n fhat(lam_n)|
    b_limits: np.ndarray        # B_n
    b_ok: np.ndarray            # |b_n| <= B_n pointwise
    feasible: bool              # whether |a_n| <= A_n held on input
    decay_ok: np.ndarray        # |fhat(lam_n)| Lambda(lam_n)^2 <= 1 pointwise


def convolve_series(coefficients, system: CoeffSystem, window: Window, t_grid, big_h: float) -> ConvolutionReport:
    """Both sides of the smoothing identity for A(t) = 1 + sum a_n e^{-i lam_n t}.

    Left: int_0^L A(t + x) f(x) dx by mesh quadrature (Richardson-extrapolated
    trapezoid on the window mesh).  Right: fhat(0) + sum a_n fhat(lam_n)
    e^{-i lam_n t} from the closed-form transform.  Coefficients are in the
    mass normalization (|a_n| <= A_n makes the b-bounds meaningful).
    Requires the window to live on [0, H/2].
    """
    a = np.asarray(coefficients, dtype=complex)
    lam = system.frequencies
    if a.size != lam.size:
        raise ValueError("coefficient count does not match the system")
    if window.length > big_h / 2.0 + 1e-12 * big_h:
        raise ValueError(f"window support [0, {window.length:g}] exceeds [0, H/2]")
    ts = np.asarray(t_grid, dtype=float)

    # left side: rows index t, columns index the window mesh
    mesh = window.mesh
    phases = np.exp(-1j * np.outer(ts, lam))            # (T, N)
    mesh_ph = np.exp(-1j * np.outer(lam, mesh))         # (N, n_mesh)
    a_vals = 1.0 + (phases * a[None, :]) @ mesh_ph      # A(t_j + x_m)
    lhs = _romberg_rows(a_vals * window.samples[None, :], mesh[1] - mesh[0])

    fhat = window.transform(lam)
    rhs = window.transform(0.0) + phases @ (a * fhat)
    diff = float(np.max(np.abs(lhs - rhs))) if ts.size else 0.0

    b_lim, _ = bn_bounds(system)
    b_mod = np.abs(a * fhat)
    big = counting_function(system, lam)
    decay_ok = np.abs(fhat) * big**2 <= 1.0 + 1e-12
    feasible = bool(np.all(np.abs(a) <= system.normalized_amplitudes * (1.0 + 1e-12)))
    b_ok = b_mod <= b_lim * (1.0 + 1e-12)
    return ConvolutionReport(ts, lhs, rhs, diff, b_mod, b_lim, b_ok, feasible, decay_ok)


def _romberg_rows(rows: np.ndarray, dt: float, levels: int = 4) -> np.ndarray:
    """Richardson-extrapolated trapezoid along the last axis."""
    n = rows.shape[-1] - 1
    if n % (1 << (levels - 1)) != 0:
        raise ValueError("row length does not support this many levels")
    column = []
    for j in range(levels - 1, -1, -1):
        stride = 1 << j
        sub = rows[..., ::stride]
        h = dt * stride
        column.append(h * (np.sum(sub, axis=-1) - 0.5 * (sub[..., 0] + sub[..., -1])))
    for level in range(1, levels):
        factor = 4.0**level
        column = [
            (factor * column[m + 1] - column[m]) / (factor - 1.0)
            for m in range(len(column) - 1)
        ]
    return column[0]


def dump_window(window: Window, path, extra_header: tuple[str, ...] = ()) -> None:
    """Two-column (t, f) text table with a widths header line.

    ``extra_header`` lines (already '#'-prefixed) go above the widths line.
    """
    widths = " ".join(f"{w:.17g}" for w in window.widths)
    with open(path, "w") as fh:
        for line in extra_header:
            fh.write(line.rstrip("\n") + "\n")
        fh.write(f"# window order={window.order} L={window.length:.17g} widths={widths}\n")
        for t, v in zip(window.mesh, window.samples):
            fh.write(f"{t:.17g} {v:.17g}\n")
