"""Figure rendering for sweeps, criterion evidence, windows, and scans.

Everything draws through the Agg backend into PNG files placed next to
the tabular output, with fixed metadata so repeated runs of the same
configuration produce identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_META = {"Software": "dirpoly"}
_DPI = 144


def _save(fig, path: str) -> None:
    fig.savefig(path, dpi=_DPI, metadata=_META)
    plt.close(fig)


def sweep_figure(curve, path: str) -> None:
    """log-log decay curve of the constrained minima m_N."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0), constrained_layout=True)
    ax.loglog(curve.n_values, np.maximum(curve.minima, 1e-300), marker="o", ms=3.5, lw=1.0)
    ax.set_xlabel("N")
    ax.set_ylabel("m_N")
    ax.set_title(f"constrained minima, H = {curve.big_h:g}")
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)


def criterion_figure(verdict, path: str) -> None:
    """Partial sums/integrals against their grid, with the verdict."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0), constrained_layout=True)
    ev = verdict.evidence
    if ev is not None and len(ev):
        ax.semilogx(ev[:, 0], ev[:, 1], marker="o", ms=3.5, lw=1.0)
    ax.set_xlabel("grid point")
    ax.set_ylabel("partial value")
    ax.set_title(f"{verdict.method}: {verdict.verdict}")
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)


def window_figure(window, path: str, xi_max: float | None = None) -> None:
    """Two panels: the window itself and its transform against the envelope."""
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.0, 3.6), constrained_layout=True)
    ax0.plot(window.mesh, window.samples, lw=1.0)
    ax0.set_xlabel("t")
    ax0.set_ylabel("f(t)")
    ax0.set_title(f"order {window.order}, support [0, {window.length:g}]")
    ax0.grid(True, alpha=0.3)

    hi = xi_max if xi_max is not None else 256.0 * window.order / window.length
    xi = np.geomspace(1e-2 / window.length, hi, 2048)
    ax1.loglog(xi, np.maximum(np.abs(window.transform(xi)), 1e-300), lw=0.8, label="|transform|")
    ax1.loglog(xi, window.envelope(xi), lw=0.8, ls="--", label="envelope")
    ax1.set_xlabel("xi")
    ax1.legend(loc="lower left", fontsize=8)
    ax1.grid(True, which="both", alpha=0.3)
    _save(fig, path)


def scan_figure(records, delta: float, path: str, reference: float | None = None) -> None:
    """Interval integrals against T with the small-delta reference level."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0), constrained_layout=True)
    ts = [r.big_t for r in records]
    vals = [r.value for r in records]
    ax.semilogx(ts, vals, marker="o", ms=3.5, lw=1.0, label="integral")
    if reference is not None:
        ax.axhline(reference, color="C3", lw=1.0, ls="--", label="reference level")
    if vals:
        k = int(np.argmin(vals))
        ax.plot([ts[k]], [vals[k]], marker="v", ms=8, color="C1", ls="none", label="running minimum")
    ax.set_xlabel("T")
    ax.set_ylabel(f"integral over [T, T+{delta:g}]")
    ax.set_ylim(bottom=0.0)
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)


def coefficients_figure(result, bounds, frequencies, path: str) -> None:
    """Solution moduli against their disc bounds, per frequency."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0), constrained_layout=True)
    mods = np.abs(result.coefficients)
    ax.stem(frequencies, mods, basefmt=" ", label="|a_n|")
    ax.plot(frequencies, bounds, lw=0.8, ls="--", color="C3", label="bound")
    ax.set_xlabel("frequency")
    ax.set_ylabel("modulus")
    ax.set_title(f"m = {result.objective:.6g}, kkt = {result.kkt_residual:.2e}")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    _save(fig, path)
