"""Command-line front end for figure data, sweeps and validation.

Exit codes: 0 success, 2 validation failure, 3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from spdc_herald import svg
from spdc_herald.bogoliubov import TimeGrid, bloch_messiah, build_kernels, check_commutation_identities
from spdc_herald.correlators import CWCorrelators, DeltaCorrelators, GaussianCorrelators, GridCorrelators
from spdc_herald.heralded import (
    independent_modes_herald,
    rho_conditional_at_click,
    rho_time_averaged,
    rho_windowed_cw,
)
from spdc_herald.metrics import characterize, cw_closed_forms
from spdc_herald.modes_model import VARIANTS, BinModel, model_report
from spdc_herald.oracle import exact_moments, oracle_density
from spdc_herald.pump import CW, Delta, Gaussian

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG = 0, 2, 3
WORKERS_ENV = "SPDC_HERALD_WORKERS"
FORMATS = ("csv", "json", "svg")
SCENARIOS = ("delta", "gaussian", "cw")

DEFAULT_SIGMAS = (0.01, 0.1, 0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0)
DEFAULT_WINDOWS = (0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0)


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by all subcommands.

    Attributes:
        scenario: ``delta``, ``gaussian`` or ``cw``.
        x: Pump strength; ``None`` selects the command default.
        sigmas: Pulse widths for the Gaussian sweep.
        windows: Acceptance windows for the CW sweep.
        grid_points: Nodes per axis of sampled kernels.
        extent: Multiplier on the default time span of sampled kernels.
        out: Output directory.
        formats: Output formats.
        tolerance: Pass threshold scale for validation.
    """

    scenario: str = "gaussian"
    x: float | None = None
    sigmas: tuple = DEFAULT_SIGMAS
    windows: tuple = DEFAULT_WINDOWS
    grid_points: int = 81
    extent: float = 1.0
    out: Path = Path("out")
    formats: tuple = ("csv", "json")
    tolerance: float = 1.0
    workers: int = field(default=1, compare=False)

    def validate(self) -> "RunConfig":
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}")
        if self.x is not None and not self.x >= 0:
            raise ConfigError("x must be nonnegative")
        if not self.sigmas or any(not s > 0 for s in self.sigmas):
            raise ConfigError("sigma list must be nonempty and positive")
        if not self.windows or any(not t > 0 for t in self.windows):
            raise ConfigError("window list must be nonempty and positive")
        if self.grid_points < 3:
            raise ConfigError("grid-points must be at least 3")
        if not self.extent > 0 or not self.tolerance > 0:
            raise ConfigError("extent and tolerance must be positive")
        bad = set(self.formats) - set(FORMATS)
        if not self.formats or bad:
            raise ConfigError(f"formats must be drawn from {FORMATS}")
        if self.workers < 1:
            raise ConfigError("worker count must be at least 1")
        return self


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


_KEYS = {
    "scenario": ("scenario", str),
    "x": ("x", float),
    "sigma": ("sigmas", _floats),
    "window": ("windows", _floats),
    "grid_points": ("grid_points", int),
    "grid-points": ("grid_points", int),
    "extent": ("extent", float),
    "out": ("out", Path),
    "format": ("formats", lambda s: tuple(v.strip() for v in s.split(",") if v.strip())),
    "tolerance": ("tolerance", float),
}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _apply(cfg: RunConfig, raw: dict) -> RunConfig:
    updates = {}
    for key, value in raw.items():
        name, conv = _KEYS[key]
        try:
            updates[name] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return replace(cfg, **updates)


def _workers() -> int:
    text = os.environ.get(WORKERS_ENV, "1")
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be an integer") from exc


def build_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then command-line flags."""
    cfg = RunConfig(workers=_workers())
    if args.config:
        cfg = _apply(cfg, read_config_file(args.config))
    flags = {}
    for key in ("scenario", "x", "sigma", "window", "grid_points", "extent", "out", "format", "tolerance"):
        value = getattr(args, key, None)
        if value is not None:
            flags[key] = value
    return _apply(cfg, flags).validate()


# ------------------------------------------------------------------ output

def _num(v):
    return float(f"{v:.12g}")


def _cell(v):
    if isinstance(v, str):
        return v
    return f"{v:.12g}"


def write_table(cfg: RunConfig, name: str, columns, rows, plot=None) -> list:
    """Write rows as CSV/JSON and optionally an SVG line plot.

    Args:
        cfg: Run configuration.
        name: Base file name.
        columns: Column names.
        rows: Sequence of row tuples.
        plot: ``(x column, [y columns], title)`` for the SVG output.

    Returns:
        Written paths.
    """
    cfg.out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in cfg.formats:
        path = cfg.out / f"{name}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
        written.append(path)
    if "json" in cfg.formats:
        path = cfg.out / f"{name}.json"
        records = [{c: (v if isinstance(v, str) else _num(v)) for c, v in zip(columns, row)} for row in rows]
        path.write_text(json.dumps(records, indent=1, sort_keys=True) + "\n")
        written.append(path)
    if "svg" in cfg.formats and plot is not None:
        xcol, ycols, title = plot
        ix = columns.index(xcol)
        xs = [r[ix] for r in rows]
        series = {c: [r[columns.index(c)] for r in rows] for c in ycols}
        path = cfg.out / f"{name}.svg"
        path.write_text(svg.line_plot(xs, series, title=title, xlabel=xcol))
        written.append(path)
    return written


def _map(cfg: RunConfig, func, items):
    if cfg.workers == 1:
        return [func(i) for i in items]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(func, items))


# ---------------------------------------------------------------- commands

def correlation_grid(cfg: RunConfig):
    """Times and ``<a^dag(t) a(t')>`` at leading order, divided by ``x**2``."""
    e = cfg.extent
    if cfg.scenario == "delta":
        cs, lo, hi = DeltaCorrelators(1.0), 0.0, 8.0 * e
    elif cfg.scenario == "cw":
        cs, lo, hi = CWCorrelators(1.0), -4.0 * e, 4.0 * e
    else:
        s = cfg.sigmas[0]
        cs, lo, hi = GaussianCorrelators(1.0, s), -4.0 * s * e, (4.0 * s + 8.0) * e
    t = np.linspace(lo, hi, cfg.grid_points)
    return t, cs.corr_aa(t[:, None], t[None, :], 2)


def numerical_rank(z, rtol=1e-8) -> int:
    s = np.linalg.svd(z, compute_uv=False)
    return int(np.sum(s > rtol * s[0])) if s[0] > 0 else 0


def cmd_correlations(cfg: RunConfig) -> list:
    """Emit the two-time signal correlation map for one scenario."""
    t, z = correlation_grid(cfg)
    rows = [(t[i], t[j], z[i, j].real, z[i, j].imag) for i in range(len(t)) for j in range(len(t))]
    name = f"correlations_{cfg.scenario}"
    cfg2 = replace(cfg, formats=tuple(f for f in cfg.formats if f != "svg"))
    written = write_table(cfg2, name, ["t", "t_prime", "re", "im"], rows)
    if "svg" in cfg.formats:
        path = cfg.out / f"{name}.svg"
        path.write_text(svg.heatmap(t, t, np.abs(z), title=f"{cfg.scenario} |<a^dag a>| / x^2",
                                    xlabel="t", ylabel="t'"))
        written.append(path)
    return written


GAUSSIAN_COLUMNS = ["kappa_sigma", "P_S", "P1", "P2", "upsilon", "purity", "w1", "w2", "w3", "w4",
                    "F", "Q11", "Q12", "Q22", "V0", "g2_pulse"]


def gaussian_point(x: float, sigma: float) -> tuple:
    ch = characterize(rho_time_averaged(GaussianCorrelators(x, sigma)))
    w = np.zeros(4)
    w[: min(4, len(ch.weights))] = ch.weights[:4]
    Q = np.zeros((2, 2))
    k = min(2, ch.Q.shape[0])
    Q[:k, :k] = ch.Q[:k, :k].real
    return (sigma, ch.P_S, ch.P1, ch.P2, ch.upsilon, ch.purity, *w, ch.F, Q[0, 0], Q[0, 1], Q[1, 1],
            ch.V0, ch.g2_pulse)


def purity_crossings(sigmas, purities, levels=(0.99, 0.95)) -> dict:
    """Pulse widths where the purity first falls through each level (linear interpolation)."""
    out = {}
    for level in levels:
        found = None
        for i in range(1, len(sigmas)):
            a, b = purities[i - 1], purities[i]
            if a >= level > b:
                found = sigmas[i - 1] + (level - a) * (sigmas[i] - sigmas[i - 1]) / (b - a)
                break
        out[f"{level:g}"] = found
    return out


def cmd_gaussian_sweep(cfg: RunConfig) -> list:
    """Characterization versus pulse width."""
    x = 0.1 if cfg.x is None else cfg.x
    rows = _map(cfg, lambda s: gaussian_point(x, s), cfg.sigmas)
    written = write_table(cfg, "gaussian_sweep", GAUSSIAN_COLUMNS, rows,
                          plot=("kappa_sigma", ["purity", "F", "Q11"], f"Gaussian pump, x={x:g}"))
    ip = GAUSSIAN_COLUMNS.index("purity")
    cross = purity_crossings([r[0] for r in rows], [r[ip] for r in rows])
    if "json" in cfg.formats:
        path = cfg.out / "gaussian_purity_crossings.json"
        path.write_text(json.dumps({k: (None if v is None else _num(v)) for k, v in cross.items()},
                                   indent=1, sort_keys=True) + "\n")
        written.append(path)
    return written


CW_COLUMNS = ["kappa_T", "x", "P1", "P2_over_x2", "beta", "purity", "Q11", "Q12", "F"]
MODEL_COLUMNS = ["model", "kappa_T", "modes_per_time", "upsilon_N", "beta_tilde"]


def figure_drive(T: float) -> float:
    """Drive with a fixed per-unit-time success probability, ``2 x**2 T = 1e-3``."""
    return float(np.sqrt(1e-3 / (2.0 * T)))


def cw_point(x: float | None, T: float) -> tuple:
    x = figure_drive(T) if x is None else x
    cf = cw_closed_forms(x, T)
    ch = characterize(rho_windowed_cw(x, T))
    q12 = float(ch.Q[0, 1].real) if ch.Q.shape[0] > 1 else 0.0
    return (T, x, cf.P1, cf.P2 / (x * x) if x > 0 else float("nan"), cf.beta, cf.purity, cf.Q11, q12, ch.F)


def cmd_cw_sweep(cfg: RunConfig) -> list:
    """CW window sweep and the independent time-bin models."""
    rows = _map(cfg, lambda T: cw_point(cfg.x, T), cfg.windows)
    written = write_table(cfg, "cw_sweep", CW_COLUMNS, rows,
                          plot=("kappa_T", ["P1", "Q11", "F"], "CW pump"))
    mrows = []
    for variant in VARIANTS:
        for T in cfg.windows:
            r = model_report(BinModel(variant, figure_drive(T), T))
            mrows.append((variant, T, r.modes_per_time, r.upsilon_N, r.beta_tilde))
    written += write_table(replace(cfg, formats=tuple(f for f in cfg.formats if f != "svg")),
                           "cw_models", MODEL_COLUMNS, mrows)
    return written


def run_validation(cfg: RunConfig) -> list:
    """Run the invariant suites; returns ``(name, passed, detail)`` triples."""
    tol = cfg.tolerance
    results = []

    def record(name, value, limit):
        results.append((name, bool(value < limit * tol), f"{value:.3e} < {limit * tol:.1e}"))

    grids = {
        "delta": (Delta(0.1), TimeGrid(-2.0, 20.0, 221)),
        "gaussian": (Gaussian(0.1, 1.0), TimeGrid(-8.0, 24.0, 321)),
        "cw": (CW(0.1), TimeGrid(-20.0, 20.0, 800)),
    }
    kernels = {}
    for name, (prof, grid) in grids.items():
        kernels[name] = build_kernels(prof, grid)
        record(f"identities[{name}]", check_commutation_identities(kernels[name]).worst, 1e-6)
    dec = bloch_messiah(kernels["gaussian"])
    record("bloch-messiah reconstruction", dec.reconstruction_error, 1e-6)
    cd = rho_time_averaged(GaussianCorrelators(0.1, 1.0))
    md = independent_modes_herald(bloch_messiah(build_kernels(Gaussian(0.1, 1.0), TimeGrid(-8.0, 30.0, 400))))
    record("route equivalence P1", abs(cd.P1 - md.P1), 1e-4)
    x = 0.02
    k = build_kernels(Delta(x), TimeGrid(-2.0, 20.0, 221))
    od = oracle_density(exact_moments(k))
    pert = rho_time_averaged(GridCorrelators(k))
    record("oracle P1 (delta)", abs(od.P1 - pert.P1), 10 * x**4)
    for T in (0.5, 2.0, 8.0):
        num = characterize(rho_conditional_at_click(CWCorrelators(0.01), 0.0, window=(-T / 2, T / 2)),
                           basis="leading")
        cf = cw_closed_forms(0.01, T)
        record(f"cw closed form T={T:g}", max(abs(num.P1 - cf.P1), abs(num.P2 - cf.P2),
                                              abs(num.purity - cf.purity), abs(num.Q[0, 0] - cf.Q11)), 1e-6)
    return results


def cmd_validate(cfg: RunConfig) -> int:
    results = run_validation(cfg)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_VALIDATION


# ------------------------------------------------------------------- entry

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spdc-herald", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("correlations", "two-time signal correlation map"),
        ("gaussian-sweep", "characterization versus Gaussian pulse width"),
        ("cw-sweep", "characterization versus CW acceptance window, plus bin models"),
        ("validate", "run the invariant suites"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value settings file")
        p.add_argument("--scenario", choices=SCENARIOS)
        p.add_argument("--x", help="pump strength")
        p.add_argument("--sigma", help="comma-separated pulse widths")
        p.add_argument("--window", help="comma-separated acceptance windows")
        p.add_argument("--grid-points", dest="grid_points", help="nodes per axis")
        p.add_argument("--extent", help="multiplier on the default time span")
        p.add_argument("--out", help="output directory")
        p.add_argument("--format", help="comma-separated subset of csv,json,svg")
        p.add_argument("--tolerance", help="scale applied to validation thresholds")
    return parser


COMMANDS = {
    "correlations": cmd_correlations,
    "gaussian-sweep": cmd_gaussian_sweep,
    "cw-sweep": cmd_cw_sweep,
}


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        return cmd_validate(cfg)
    for path in COMMANDS[args.command](cfg):
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
