"""Command-line harness.

    telesim <command> [--config PATH] --out PATH [--seed N] [--grid AXIS=START:STOP:STEPS ...]

Commands: fringe, scan-theta, sweep, budget, oracle-check. Output is CSV
with a header row. Exit codes: 0 success, 1 input or I/O error, 2 oracle
verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from telesim.errors import ConfigError, DomainError, UndefinedVisibilityError
from telesim.oracle import compare, run_oracle
from telesim.protocol import polarization_scan_rate, threefold_fringe
from telesim.sources import (
    WINDOW_NS,
    DfgSpec,
    dfg_efficiency,
    evaluate_budget,
    qubit_source_chain,
    raman_noise_rate,
)
from telesim.visibility import ExperimentConfig, evaluate, sweep, threefold_rates

COMMANDS = ("fringe", "scan-theta", "sweep", "budget", "oracle-check")

EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2

_EXPERIMENT_KEYS = {f.name for f in fields(ExperimentConfig)}
_FLOAT_KEYS = _EXPERIMENT_KEYS | {"pump_mw"}
_INT_KEYS = {"trials", "seed"}
_KAPPA_MODES = ("peak450", "fit350")

DEFAULT_GRIDS = {
    "fringe": {"phi": (0.0, 4 * math.pi, 201)},
    "scan-theta": {"theta": (0.0, math.pi, 181)},
    "sweep": {"p1": (0.005, 0.05, 50), "l1": (0.0025, 0.1, 50)},
}


@dataclass(frozen=True)
class Settings:
    """Everything a config file can set."""

    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    pump_mw: float = 350.0
    kappa_mode: str = "fit350"
    trials: int = 1_000_000
    seed: int = 42


def parse_settings(text: str) -> Settings:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key in lines:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            if key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key in _INT_KEYS:
                values[key] = int(value)
            elif key == "kappa_mode":
                if value not in _KAPPA_MODES:
                    raise ValueError(f"must be one of {', '.join(_KAPPA_MODES)}")
                values[key] = value
            else:
                raise ConfigError(f"unknown key {key!r}", lineno)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})", lineno) from None
        lines[key] = lineno

    exp = {k: v for k, v in values.items() if k in _EXPERIMENT_KEYS}
    try:
        experiment = ExperimentConfig(**exp)
    except DomainError as exc:
        # name the key even when the message comes from a nested spec
        bad = next((k for k in exp if k in str(exc)), None)
        raise DomainError(f"{bad or 'config'}: {exc}") from None
    if values.get("pump_mw", 0.0) < 0:
        raise DomainError("pump_mw: must be non-negative")
    if values.get("trials", 1) < 1:
        raise DomainError("trials: must be >= 1")
    rest = {k: v for k, v in values.items() if k not in _EXPERIMENT_KEYS}
    return Settings(experiment=experiment, **rest)


def parse_config(text: str) -> ExperimentConfig:
    return parse_settings(text).experiment


@dataclass(frozen=True)
class RunManifest:
    command: str
    output_path: str
    config_path: str | None = None
    seed: int | None = None
    grid: dict[str, tuple[float, float, int]] = field(default_factory=dict)
    tilt: float | None = 0.5
    sigma: float = 3.0
    workers: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        for axis, (start, stop, steps) in self.grid.items():
            if steps < 1:
                raise ConfigError(f"grid {axis}: steps must be >= 1")
            if start > stop:
                raise ConfigError(f"grid {axis}: start > stop")


def _number(token: str) -> float:
    token = token.strip()
    if token.endswith("pi"):
        head = token[:-2].strip()
        return (float(head) if head else 1.0) * math.pi
    return float(token)


def parse_grid(spec: str) -> tuple[str, tuple[float, float, int]]:
    """``"p1=0.01:0.03:3"`` -> ``("p1", (0.01, 0.03, 3))``; ``4pi`` is accepted."""
    try:
        axis, rng = spec.split("=", 1)
        start, stop, steps = rng.split(":")
        return axis.strip(), (_number(start), _number(stop), int(steps))
    except ValueError:
        raise ConfigError(f"bad grid spec {spec!r}, expected axis=start:stop:steps") from None


def _axis(grid, name):
    start, stop, steps = grid[name]
    return np.linspace(start, stop, steps)


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    return format(float(x), ".12g")


def _fringe(settings, grid, _manifest):
    res = evaluate(settings.experiment)
    rows = []
    for phi in _axis(grid, "phi"):
        p = threefold_fringe(0.0, phi, 0.0)
        rows.append((phi, p,
                     res.raw.c_min + (res.raw.c_max - res.raw.c_min) * p,
                     res.net.c_min + (res.net.c_max - res.net.c_min) * p))
    return ("phi_rad", "p123", "c_raw", "c_net"), rows


def _scan_theta(settings, grid, _manifest):
    res = evaluate(settings.experiment)
    rows = []
    for theta in _axis(grid, "theta"):
        s = polarization_scan_rate(theta, "H")
        rows.append((theta,
                     res.raw.c_min + (res.raw.c_max - res.raw.c_min) * s,
                     res.net.c_min + (res.net.c_max - res.net.c_min) * s))
    return ("theta_rad", "rate_raw", "rate_net"), rows


_SWEEP_FIELDS = ("c_max", "c_min", "v_two_photon", "v_ent", "fidelity")


def _sweep(settings, grid, _manifest):
    header = ("p1", "l1",
              *(f"{f}_raw" for f in _SWEEP_FIELDS),
              *(f"{f}_net" for f in _SWEEP_FIELDS), "error")
    rows = []
    for row in sweep(settings.experiment, _axis(grid, "p1"), _axis(grid, "l1")):
        if row.ok:
            vals = [getattr(row.raw, f) for f in _SWEEP_FIELDS]
            vals += [getattr(row.net, f) for f in _SWEEP_FIELDS]
        else:
            vals = [math.nan] * (2 * len(_SWEEP_FIELDS))
        rows.append((row.p1, row.l1, *vals, row.error or ""))
    return header, rows


def _budget(settings, _grid, _manifest):
    dfg = DfgSpec.calibrated(settings.kappa_mode)
    chain = qubit_source_chain(conversion=dfg_efficiency(settings.pump_mw, dfg))
    rows = [("input", chain.input_rate)]
    rows += evaluate_budget(chain)
    exp = settings.experiment
    rows.append(("raman_noise_unfiltered", raman_noise_rate(settings.pump_mw, dfg) * WINDOW_NS))
    rows.append(("detector_dark", exp.dark1 * exp.window_ns))
    return ("stage_label", "rate_per_window"), rows


def _oracle_check(settings, _grid, manifest):
    seed = manifest.seed if manifest.seed is not None else settings.seed
    analytic = threefold_rates(settings.experiment, include_dark=True)
    est = run_oracle(settings.experiment, settings.trials, seed,
                     tilt=manifest.tilt, workers=manifest.workers)
    report = compare(analytic, est, manifest.sigma)
    rows = [(c.regime, c.analytic, c.estimate, c.std_err, c.z) for c in report.checks]
    return ("regime", "analytic", "estimate", "std_err", "z"), rows, report.passed


_HANDLERS = {
    "fringe": _fringe,
    "scan-theta": _scan_theta,
    "sweep": _sweep,
    "budget": _budget,
    "oracle-check": _oracle_check,
}


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def run(manifest: RunManifest) -> int:
    """Execute one manifest; returns the process exit code."""
    try:
        text = Path(manifest.config_path).read_text() if manifest.config_path else ""
        settings = parse_settings(text)
        grid = dict(DEFAULT_GRIDS.get(manifest.command, {}))
        unknown = set(manifest.grid) - set(grid)
        if unknown:
            raise ConfigError(f"{manifest.command} has no grid axis {sorted(unknown)}")
        grid.update(manifest.grid)
        out = _HANDLERS[manifest.command](settings, grid, manifest)
    except (ConfigError, DomainError, UndefinedVisibilityError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    header, rows, *verdict = out
    text = render_csv(header, rows)
    try:
        if manifest.output_path == "-":
            sys.stdout.write(text)
        else:
            Path(manifest.output_path).write_text(text)
    except OSError as exc:
        print(f"error: cannot write {manifest.output_path}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if verdict and not verdict[0]:
        print("oracle-check failed", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # exit code 2 is reserved for verification failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="telesim", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--out", required=True, help="output CSV path, '-' for stdout")
    parser.add_argument("--seed", type=int, help="overrides the config seed")
    parser.add_argument("--grid", action="append", default=[],
                        metavar="AXIS=START:STOP:STEPS")
    parser.add_argument("--tilt", type=float, default=0.5,
                        help="oracle importance tilt; 0 for plain analog sampling")
    parser.add_argument("--sigma", type=float, default=3.0,
                        help="oracle-check tolerance in standard errors")
    parser.add_argument("--workers", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        grid = dict(parse_grid(g) for g in args.grid)
        manifest = RunManifest(
            command=args.command,
            output_path=args.out,
            config_path=args.config,
            seed=args.seed,
            grid=grid,
            tilt=args.tilt or None,
            sigma=args.sigma,
            workers=args.workers,
        )
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return run(manifest)


if __name__ == "__main__":
    sys.exit(main())
