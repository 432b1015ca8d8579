"""Deterministic command-line driver.

Each subcommand reads a flat configuration (flags, optionally seeded from
a JSON file via --config), runs one experiment, and emits:

  * a tabular text file whose first line is a comment embedding the
    canonical JSON of the exact configuration used,
  * that same JSON next to it as ``<stem>_config.json`` (re-running with
    ``--config <stem>_config.json`` reproduces every output byte for byte),
  * optionally a PNG figure (``--plot``),
  * one appended line in ``manifest.log`` recording command, config,
    versions, and wall time (the only file allowed to differ between
    identical runs).

Numbers are printed with 17 significant digits.  Exit codes: 0 success,
1 runtime failure, 2 bad usage/config, 3 unconverged solve or quadrature.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .criterion import OmegaCurve, dichotomy_sum, omega_curve_criterion
from .frequency import BoundProfile, build, load_table
from .gram import Target, assemble
from .solver import minimize, sweep_N
from .window import DecayTarget, WindowBuildError, build_window, dump_window
from .zeta import reference_minimum, running_minimum, scan

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_UNCONVERGED = 3

_DEFAULTS: dict[str, dict] = {
    "criterion": {
        "command": "criterion",
        "freq": "classical",
        "phi": "unit",
        "alpha": None,
        "n_max": 200_000,
        "omega": None,
        "t_max": 1e8,
        "out": "criterion.txt",
        "plot": False,
    },
    "minimize": {
        "command": "minimize",
        "freq": "classical",
        "phi": "unit",
        "alpha": None,
        "n": 16,
        "H": 1.0,
        "target": "one",
        "mode": "disc",
        "tol": None,
        "max_sweeps": 10_000,
        "starts": 8,
        "seed": 0,
        "engine": "auto",
        "out": "minimize.txt",
        "plot": False,
    },
    "sweep": {
        "command": "sweep",
        "freq": "classical",
        "phi": "unit",
        "alpha": None,
        "H": 1.0,
        "N": "2:256:x2",
        "target": "one",
        "tol": None,
        "max_sweeps": 10_000,
        "engine": "auto",
        "out": "sweep.txt",
        "plot": False,
    },
    "window": {
        "command": "window",
        "length": 1.0,
        "decay": "none",
        "k": None,
        "mesh": 16384,
        "out": "window.txt",
        "plot": False,
    },
    "zeta-scan": {
        "command": "zeta-scan",
        "sigma": 1.0,
        "omega": None,
        "T": "100:10000:x2",
        "delta": 0.25,
        "alpha": 1.0,
        "tol": 1e-8,
        "workers": 1,
        "out": "zeta_scan.txt",
        "plot": False,
    },
    "selftest": {"command": "selftest"},
}


# ----------------------------------------------------------------------
# small parsers and formatters


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def parse_schedule(text: str, integer: bool = False) -> list:
    """``start:stop:x2`` geometric, ``start:stop:+5`` arithmetic,
    ``start:stop:n40`` log-spaced with a point count."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ValueError(f"schedule must be start:stop:rule, got {text!r}")
    start, stop, rule = float(parts[0]), float(parts[1]), parts[2]
    if start <= 0 or stop < start:
        raise ValueError(f"need 0 < start <= stop in schedule {text!r}")
    vals: list[float] = []
    if rule.startswith("x"):
        factor = float(rule[1:])
        if factor <= 1.0:
            raise ValueError("geometric schedule needs factor > 1")
        v = start
        while v <= stop * (1.0 + 1e-12):
            vals.append(v)
            v *= factor
    elif rule.startswith("+"):
        step = float(rule[1:])
        if step <= 0.0:
            raise ValueError("arithmetic schedule needs step > 0")
        v = start
        while v <= stop + 1e-12 * stop:
            vals.append(v)
            v += step
    elif rule.startswith("n"):
        count = int(rule[1:])
        if count < 1:
            raise ValueError("count schedule needs n >= 1")
        vals = [start] if count == 1 else [float(v) for v in np.geomspace(start, stop, count)]
    else:
        raise ValueError(f"unknown schedule rule {rule!r}")
    if integer:
        return sorted({int(round(v)) for v in vals})
    return vals


def parse_phi(text: str) -> BoundProfile:
    family, _, param = str(text).partition(":")
    if family == "unit":
        return BoundProfile.unit()
    if family == "power":
        return BoundProfile.power(float(param))
    if family == "logpower":
        return BoundProfile.logpower(float(param))
    if family == "loglog":
        return BoundProfile.loglog_threshold(float(param))
    if family == "table":
        index, value = load_table(param)
        return BoundProfile.from_table(index, value)
    raise ValueError(f"unknown amplitude profile {text!r}")


def parse_target(text: str) -> Target:
    head, _, rest = str(text).partition(":")
    if head == "one":
        return Target.constant(1.0)
    if head == "const":
        return Target.constant(float(rest))
    if head == "exp":
        bits = rest.split(":")
        mu = float(bits[0])
        amp = float(bits[1]) if len(bits) > 1 else 1.0
        return Target.exponential(mu, amp)
    if head == "expsum":
        mus, amps = [], []
        for pair in rest.split(";"):
            m, a = pair.split(",")
            mus.append(float(m))
            amps.append(float(a))
        return Target.exponential_sum(amps, mus)
    raise ValueError(f"unknown target {text!r}")


def parse_omega(text: str) -> OmegaCurve:
    head, _, rest = str(text).partition(":")
    if head in ("const", "constant"):
        return OmegaCurve.constant(float(rest))
    if head == "loglog":
        return OmegaCurve.loglog_power(float(rest))
    raise ValueError(f"unknown omega curve {text!r}")


# ----------------------------------------------------------------------
# emission


def _canon(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def _config_line(cfg: dict) -> str:
    return "# config " + _canon(cfg)


def _emit(out: Path, header: list[str], rows: list[str], cfg: dict) -> None:
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        for line in header:
            fh.write(line + "\n")
        for row in rows:
            fh.write(row + "\n")
    with open(out.with_name(out.stem + "_config.json"), "w") as fh:
        fh.write(_canon(cfg) + "\n")


def _manifest(out: Path, cfg: dict, wall: float) -> None:
    line = {
        "command": cfg["command"],
        "config": cfg,
        "version": __version__,
        "numpy": np.__version__,
        "python": "%d.%d.%d" % sys.version_info[:3],
        "wall_s": round(wall, 3),
    }
    with open(out.parent / "manifest.log", "a") as fh:
        fh.write(json.dumps(line, sort_keys=True) + "\n")


def _resolve(ns: argparse.Namespace, defaults: dict) -> dict:
    cfg = dict(defaults)
    path = getattr(ns, "config", None)
    if path:
        loaded = json.loads(Path(path).read_text())
        extra = loaded.get("command")
        if extra is not None and extra != cfg["command"]:
            raise ValueError(f"config file is for {extra!r}, not {cfg['command']!r}")
        cfg.update({k: v for k, v in loaded.items() if k in cfg})
    for key in defaults:
        if key == "command":
            continue
        val = getattr(ns, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


# ----------------------------------------------------------------------
# subcommands


def _cmd_criterion(ns: argparse.Namespace) -> int:
    cfg = _resolve(ns, _DEFAULTS["criterion"])
    t0 = time.perf_counter()
    if cfg["omega"]:
        curve = parse_omega(cfg["omega"])
        verdict = omega_curve_criterion(curve, t_max=float(cfg["t_max"]))
        family, params = "omega", cfg["omega"]
    else:
        phi = parse_phi(cfg["phi"])
        verdict = dichotomy_sum(cfg["freq"], phi, n_max=int(cfg["n_max"]))
        family, params = cfg["freq"], phi.describe()
    out = Path(cfg["out"])
    header = [_config_line(cfg), "# columns: family, parameters, verdict, partial_value, tail_estimate"]
    if verdict.evidence is not None:
        for gx, gv in verdict.evidence:
            header.append(f"# evidence {_fmt(gx)} {_fmt(gv)}")
    rows = [
        ", ".join(
            (family, params, verdict.verdict, _fmt(verdict.partial_value), _fmt(verdict.tail_estimate))
        )
    ]
    _emit(out, header, rows, cfg)
    if cfg["plot"]:
        from . import report

        report.criterion_figure(verdict, str(out.with_suffix(".png")))
    _manifest(out, cfg, time.perf_counter() - t0)
    print(f"{family}, {params}: {verdict.verdict}")
    return EXIT_OK


def _cmd_minimize(ns: argparse.Namespace) -> int:
    cfg = _resolve(ns, _DEFAULTS["minimize"])
    t0 = time.perf_counter()
    phi = parse_phi(cfg["phi"])
    system = build(cfg["freq"], phi=phi, n_terms=int(cfg["n"]), alpha=cfg["alpha"])
    gs = assemble(system.frequencies, parse_target(cfg["target"]), float(cfg["H"]))
    res = minimize(
        gs,
        system.amplitudes,
        tol=cfg["tol"],
        max_sweeps=int(cfg["max_sweeps"]),
        mode=cfg["mode"],
        starts=int(cfg["starts"]),
        seed=int(cfg["seed"]),
        engine=cfg["engine"],
    )
    cfg["engine"] = res.engine
    out = Path(cfg["out"])
    header = [
        _config_line(cfg),
        "# columns: m_N, kkt_residual, iterations, converged",
        "# then:    index, frequency, re_a, im_a, modulus, bound",
    ]
    rows = [", ".join((_fmt(res.objective), _fmt(res.kkt_residual), _fmt(res.iterations), _fmt(res.converged)))]
    for k, a in enumerate(res.coefficients):
        rows.append(
            ", ".join(
                (
                    _fmt(k + 1),
                    _fmt(system.frequencies[k]),
                    _fmt(a.real),
                    _fmt(a.imag),
                    _fmt(abs(a)),
                    _fmt(system.amplitudes[k]),
                )
            )
        )
    _emit(out, header, rows, cfg)
    if cfg["plot"]:
        from . import report

        report.coefficients_figure(res, system.amplitudes, system.frequencies, str(out.with_suffix(".png")))
    _manifest(out, cfg, time.perf_counter() - t0)
    print(f"m = {_fmt(res.objective)}  kkt = {_fmt(res.kkt_residual)}  engine = {res.engine}")
    return EXIT_OK if res.converged else EXIT_UNCONVERGED


def _cmd_sweep(ns: argparse.Namespace) -> int:
    cfg = _resolve(ns, _DEFAULTS["sweep"])
    t0 = time.perf_counter()
    phi = parse_phi(cfg["phi"])
    schedule = parse_schedule(cfg["N"], integer=True)
    system = build(cfg["freq"], phi=phi, n_terms=schedule[-1], alpha=cfg["alpha"])
    curve = sweep_N(
        system,
        parse_target(cfg["target"]),
        float(cfg["H"]),
        schedule,
        tol=cfg["tol"],
        max_sweeps=int(cfg["max_sweeps"]),
        engine=cfg["engine"],
    )
    cfg["engine"] = curve.engine
    out = Path(cfg["out"])
    header = [_config_line(cfg), "# columns: N, m_N, kkt_residual, iterations, converged"]
    rows = [", ".join(_fmt(x) for x in row) for row in curve.rows()]
    _emit(out, header, rows, cfg)
    if cfg["plot"]:
        from . import report

        report.sweep_figure(curve, str(out.with_suffix(".png")))
    _manifest(out, cfg, time.perf_counter() - t0)
    ok = bool(np.all(curve.converged))
    print(f"sweep N={schedule[0]}..{schedule[-1]}: m ranges {_fmt(curve.minima[0])} -> {_fmt(curve.minima[-1])}")
    return EXIT_OK if ok else EXIT_UNCONVERGED


def _cmd_window(ns: argparse.Namespace) -> int:
    cfg = _resolve(ns, _DEFAULTS["window"])
    t0 = time.perf_counter()
    decay = None
    spec = str(cfg["decay"])
    if spec not in ("", "none"):
        head, _, rest = spec.partition(":")
        if head != "poly":
            raise ValueError(f"unknown decay target {spec!r} (use none or poly:p)")
        decay = DecayTarget.polynomial(float(rest))
    k_hint = int(cfg["k"]) if cfg["k"] is not None else None
    window = build_window(float(cfg["length"]), decay=decay, k_hint=k_hint, mesh_points=int(cfg["mesh"]))
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    dump_window(window, out, extra_header=(_config_line(cfg),))
    with open(out.with_name(out.stem + "_config.json"), "w") as fh:
        fh.write(_canon(cfg) + "\n")
    if cfg["plot"]:
        from . import report

        report.window_figure(window, str(out.with_suffix(".png")))
    _manifest(out, cfg, time.perf_counter() - t0)
    print(f"window order {window.order}, support [0, {window.length:g}], mesh {window.mesh.size}")
    return EXIT_OK


def _cmd_zeta_scan(ns: argparse.Namespace) -> int:
    cfg = _resolve(ns, _DEFAULTS["zeta-scan"])
    t0 = time.perf_counter()
    source = parse_omega(cfg["omega"]) if cfg["omega"] else float(cfg["sigma"])
    schedule = parse_schedule(cfg["T"])
    records = scan(
        source,
        schedule,
        float(cfg["delta"]),
        alpha=float(cfg["alpha"]),
        tol=float(cfg["tol"]),
        workers=int(cfg["workers"]),
    )
    out = Path(cfg["out"])
    header = [_config_line(cfg), "# columns: T, sigma, delta, integral, quadrature_error, flags"]
    rows = [
        ", ".join(
            (_fmt(r.big_t), _fmt(r.sigma), _fmt(r.delta), _fmt(r.value), _fmt(r.quadrature_error), r.flags or "-")
        )
        for r in records
    ]
    low, at = running_minimum(records)
    rows.append(f"# running minimum {_fmt(low)} at T = {_fmt(at)} (reference {_fmt(reference_minimum(float(cfg['delta'])))})")
    _emit(out, header, rows, cfg)
    if cfg["plot"]:
        from . import report

        report.scan_figure(records, float(cfg["delta"]), str(out.with_suffix(".png")), reference_minimum(float(cfg["delta"])))
    _manifest(out, cfg, time.perf_counter() - t0)
    print(f"scan of {len(records)} intervals: running minimum {_fmt(low)} at T = {_fmt(at)}")
    return EXIT_OK if all("unconverged" not in r.flags for r in records) else EXIT_UNCONVERGED


def _cmd_selftest(ns: argparse.Namespace) -> int:
    from .selftest import run_all

    results = run_all()
    for name, ok, detail in results:
        print(f"{'ok  ' if ok else 'FAIL'} {name}: {detail}")
    passed = sum(1 for _, ok, _ in results if ok)
    print(f"passed {passed}/{len(results)}")
    return EXIT_OK if passed == len(results) else EXIT_ERROR


_COMMANDS = {
    "criterion": _cmd_criterion,
    "minimize": _cmd_minimize,
    "sweep": _cmd_sweep,
    "window": _cmd_window,
    "zeta-scan": _cmd_zeta_scan,
    "selftest": _cmd_selftest,
}


# ----------------------------------------------------------------------
# argument wiring


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config to seed parameters (flags still override)")
    sub.add_argument("-o", "--out", help="output file path")
    sub.add_argument("--plot", action="store_const", const=True, help="render a PNG next to the output")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dirpoly", description="Dirichlet-polynomial experiments")
    parser.add_argument("--version", action="version", version=f"dirpoly {__version__}")
    subs = parser.add_subparsers(dest="command")

    p = subs.add_parser("criterion", help="convergence/divergence verdict for an amplitude profile or sigma-curve")
    p.add_argument("--freq", choices=("classical", "primes", "divisor", "shifted"))
    p.add_argument("--phi", help="unit | power:d | logpower:c | loglog:t | table:PATH")
    p.add_argument("--alpha", type=float)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--omega", help="const:s | loglog:p (overrides --phi)")
    p.add_argument("--t-max", dest="t_max", type=float)
    _add_common(p)

    p = subs.add_parser("minimize", help="one constrained minimisation at fixed N")
    p.add_argument("--freq", choices=("classical", "primes", "divisor", "shifted"))
    p.add_argument("--phi")
    p.add_argument("--alpha", type=float)
    p.add_argument("--N", dest="n", type=int)
    p.add_argument("--H", dest="H", type=float)
    p.add_argument("--target", help="one | const:v | exp:mu[:amp] | expsum:mu,a;mu,a")
    p.add_argument("--mode", choices=("disc", "circle"))
    p.add_argument("--tol", type=float)
    p.add_argument("--max-sweeps", dest="max_sweeps", type=int)
    p.add_argument("--starts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--engine", choices=("auto", "numpy", "numba"))
    _add_common(p)

    p = subs.add_parser("sweep", help="minima across an N schedule")
    p.add_argument("--freq", choices=("classical", "primes", "divisor", "shifted"))
    p.add_argument("--phi")
    p.add_argument("--alpha", type=float)
    p.add_argument("--H", dest="H", type=float)
    p.add_argument("--N", dest="N", help="schedule start:stop:x2 | start:stop:+step | start:stop:nCOUNT")
    p.add_argument("--target")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-sweeps", dest="max_sweeps", type=int)
    p.add_argument("--engine", choices=("auto", "numpy", "numba"))
    _add_common(p)

    p = subs.add_parser("window", help="build a compactly supported window")
    p.add_argument("--length", type=float)
    p.add_argument("--decay", help="none | poly:p")
    p.add_argument("--k", type=int, help="force the convolution order")
    p.add_argument("--mesh", type=int)
    _add_common(p)

    p = subs.add_parser("zeta-scan", help="short-interval integrals of |zeta| along a sigma level")
    p.add_argument("--sigma", type=float)
    p.add_argument("--omega", help="const:s | loglog:p (overrides --sigma)")
    p.add_argument("--T", dest="T", help="schedule start:stop:x2 | +step | nCOUNT")
    p.add_argument("--delta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--workers", type=int)
    _add_common(p)

    subs.add_parser("selftest", help="run the built-in invariant suite")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[ns.command](ns)
    except WindowBuildError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
