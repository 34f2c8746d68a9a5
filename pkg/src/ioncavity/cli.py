"""Command-line front end.

Subcommands::

    ioncavity simulate --config <path|preset> --out <dir> [--seed N] [--traj N] [--emit csv,plot]
    ioncavity sweep    --config <path|preset> --out <dir> [...]
    ioncavity scaling  [--config <path|preset>] --out <dir> [...]

``--config`` accepts a file path or the name of a shipped preset
(``fig3`` .. ``fig11``).  Exit codes: 0 success, 2 configuration parse
error, 3 validation error, 4 numerical failure.  The only environment
override is ``IONCAVITY_WORKERS`` (trajectory worker count).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .config import (
    ConfigParseError,
    ConfigValidationError,
    RunConfig,
    build_scenario,
    build_sweep,
    echo_config,
    parse_config,
)
from .engines import IntegrationError, jump_statistics
from .experiments import Engine, run_scenario, scaling_report, sweep as run_sweep
from .params import ParameterError
from .reduction import derive_effective_params
from .tables import check_csv, write_csv

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4

PRESETS = tuple(f"fig{i}" for i in range(3, 12))


def load_config_text(spec: str) -> str:
    if spec in PRESETS:
        return resources.files("ioncavity.presets").joinpath(f"{spec}.ini").read_text()
    path = Path(spec)
    if not path.is_file():
        raise ConfigParseError(f"config {spec!r} is neither a file nor a preset name")
    return path.read_text(encoding="utf-8")


def _worker_count() -> int:
    raw = os.environ.get("IONCAVITY_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _effective_summary(params) -> dict:
    eff = derive_effective_params(params)
    return {
        "xi": eff.xi,
        "beta": [[b.real, b.imag] for b in eff.beta],
        "beta_t": eff.beta_t,
        "g_eff_abs": abs(eff.g_eff),
        "alpha_eff_abs": [abs(a) for a in eff.alpha_eff],
        "omega_c_eff": eff.omega_c_eff,
        "omega_a_eff": list(eff.omega_a_eff),
        "delta_eff": list(eff.delta_eff),
        "gamma_s_eff": list(eff.gamma_s_eff),
        "gamma_d_eff": list(eff.gamma_d_eff),
        "stark_cavity": eff.stark_cavity,
        "stark_ion": list(eff.stark_ion),
        "validity_ratio": eff.validity_ratio,
    }


def _write_manifest(out_dir: Path, config: RunConfig, derived: dict,
                    warnings: list[str], outputs: list[str], wall: float,
                    seed) -> None:
    manifest = {
        "tool": "ioncavity",
        "version": __version__,
        "kernel": _kernels.backend,
        "kind": config.kind,
        "label": config.label,
        "seed": seed,
        "config_ini": echo_config(config),
        "derived": derived,
        "validity_warnings": warnings,
        "outputs": outputs,
        "wall_time_s": wall,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _validity_warnings(derived: dict) -> list[str]:
    warnings = []
    ratio = derived.get("validity_ratio", 0.0)
    if ratio > 0.1:
        warnings.append(
            f"adiabatic validity ratio max(coupling)/Delta = {ratio:.3f} exceeds 0.1; "
            "the reduced model may deviate from the three-level dynamics"
        )
    return warnings


GNUPLOT_HEADER = """# gnuplot script, written by ioncavity {version}
set datafile separator comma
set key autotitle columnhead
set xlabel "t (us)"
set grid
"""


def _plot_script_timeseries(out_dir: Path, files: list[str], column: str,
                            ylabel: str) -> str:
    lines = [GNUPLOT_HEADER.format(version=__version__)]
    lines.append(f'set ylabel "{ylabel}"')
    plots = []
    for name in files:
        plots.append(f'"{name}" using "t_us":"{column}" with lines title "{Path(name).stem}"')
    lines.append("plot " + ", \\\n     ".join(plots))
    path = out_dir / "plot_timeseries.gp"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path.name


_PLOT_COLUMN_SETS = {
    "concurrence": ["concurrence"],
    "populations": ["rho_00_00", "rho_01_01", "rho_10_10"],
    "coherences": ["rho_01_10_re", "rho_01_10_im", "concurrence"],
}


def _plot_script_surface(out_dir: Path, axis: str, columns: list[str]) -> str:
    lines = [GNUPLOT_HEADER.format(version=__version__)]
    lines.append(f'set ylabel "{axis}"')
    lines.append("set view map")
    lines.append(f'splot "surface.csv" using "t_us":"{axis}":"{columns[0]}" with points palette')
    path = out_dir / "plot_surface.gp"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path.name


def _plot_script_scaling(out_dir: Path) -> str:
    lines = [
        GNUPLOT_HEADER.format(version=__version__),
        'set xlabel "Raman detuning (2pi MHz)"',
        'set ylabel "rate (2pi MHz)"',
        "set logscale xy",
        'plot "scaling.csv" using "delta_raman":"g_eff_abs" with lines, \\',
        '     "scaling.csv" using "delta_raman":"gamma_s_eff" with lines, \\',
        '     "scaling.csv" using "delta_raman":"kappa" with lines',
    ]
    path = out_dir / "plot_scaling.gp"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path.name


def cmd_simulate(config: RunConfig, out_dir: Path, n_workers: int) -> list[str]:
    outputs = []
    names = [(None, None)] + config.curves  # base curve first
    csv_files = []
    for curve_name, overrides in names:
        scenario = build_scenario(config, name=curve_name, overrides=overrides)
        scenario = replace(scenario, n_workers=n_workers)
        result = run_scenario(scenario)
        fname = "timeseries.csv" if curve_name is None else f"timeseries_{curve_name}.csv"
        result.table.to_csv(out_dir / fname)
        check_csv(out_dir / fname)
        outputs.append(fname)
        csv_files.append(fname)
        if result.ensemble is not None and curve_name is None:
            stats = jump_statistics(result.ensemble)
            jname = "jumps.csv"
            stats.table().to_csv(out_dir / jname)
            check_csv(out_dir / jname)
            outputs.append(jname)
    if "plot" in config.emit:
        column = _PLOT_COLUMN_SETS.get(config.plot_columns, ["concurrence"])[0]
        if config.plot_columns == "jumps":
            column = "concurrence"
        outputs.append(
            _plot_script_timeseries(out_dir, csv_files, column, config.plot_columns)
        )
    return outputs


def cmd_sweep(config: RunConfig, out_dir: Path, n_workers: int) -> list[str]:
    spec = build_sweep(config)
    spec = replace(spec, template=replace(spec.template, n_workers=n_workers))
    result = run_sweep(spec)
    outputs = []

    # long-format surface: time fastest, one block per grid point
    axis = spec.axis
    first = result.results[0].table
    obs_names = [n for n in first.names if not n.endswith("_se")]
    se_names = [n for n in first.names if n.endswith("_se")]
    col_names = ["t_us", axis, *obs_names, *se_names]
    blocks = {name: [] for name in col_names}
    for value, res in zip(spec.values, result.results):
        n = len(res.table.t)
        blocks["t_us"].append(res.table.t)
        blocks[axis].append(np.full(n, value))
        for name in obs_names + se_names:
            blocks[name].append(res.table[name])
    columns = [np.concatenate(blocks[name]) for name in col_names]
    write_csv(out_dir / "surface.csv", col_names, columns)
    check_csv(out_dir / "surface.csv", grouped=True)
    outputs.append("surface.csv")

    summary = result.summary()
    if result.results[0].ensemble is not None:
        totals = []
        labels = result.results[0].ensemble.channel_labels
        for res in result.results:
            stats = jump_statistics(res.ensemble)
            totals.append(stats.mean[:, -1])
        totals = np.array(totals)
        for i, label in enumerate(labels):
            summary[f"jumps_{label}"] = totals[:, i]
    write_csv(out_dir / "summary.csv", list(summary), list(summary.values()))
    outputs.append("summary.csv")

    if "plot" in config.emit:
        outputs.append(
            _plot_script_surface(
                out_dir, axis, _PLOT_COLUMN_SETS.get(config.plot_columns, ["concurrence"])
            )
        )
    return outputs


def cmd_scaling(config: RunConfig, out_dir: Path) -> list[str]:
    from .config import build_model_params

    params = build_model_params(config.model) if config.model else None
    lo = config.scaling.get("delta_min", 20.0)
    hi = config.scaling.get("delta_max", 20000.0)
    n = config.scaling.get("n_points", 31)
    if lo <= 0 or hi <= lo or n < 2:
        raise ConfigValidationError("scaling grid needs 0 < delta_min < delta_max, n >= 2")
    grid = np.geomspace(lo, hi, n)
    report = scaling_report(grid, params)
    write_csv(out_dir / "scaling.csv", list(report), list(report.values()))
    outputs = ["scaling.csv"]
    if "plot" in config.emit:
        outputs.append(_plot_script_scaling(out_dir))
    return outputs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ioncavity",
        description="Two-ion lossy-cavity dynamics: simulate, sweep, scaling report.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "sweep", "scaling"):
        p = sub.add_parser(name)
        p.add_argument(
            "--config",
            required=name != "scaling",
            default=None,
            help="config file path or preset name (fig3..fig11)",
        )
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override scenario seed")
        p.add_argument("--traj", type=int, default=None, help="override trajectory count")
        p.add_argument("--emit", default=None, help="comma list: csv,plot")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        if args.config is None:
            config = parse_config("[run]\nkind = scaling\n")
        else:
            config = parse_config(load_config_text(args.config))
        if config.kind != args.command:
            raise ConfigValidationError(
                f"config kind {config.kind!r} does not match subcommand {args.command!r}"
            )
        if args.seed is not None:
            config.scenario["seed"] = args.seed
        if args.traj is not None:
            config.scenario["n_traj"] = args.traj
        if args.emit is not None:
            emit = tuple(p.strip() for p in args.emit.split(",") if p.strip())
            for part in emit:
                if part not in ("csv", "plot"):
                    raise ConfigParseError(f"unknown emit target {part!r}")
            config.emit = emit
    except ConfigParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    n_workers = _worker_count()
    try:
        derived = {}
        warnings: list[str] = []
        if config.kind in ("simulate", "sweep"):
            scenario = build_scenario(config)
            derived = _effective_summary(scenario.params)
            warnings = _validity_warnings(derived)
        if config.kind == "simulate":
            outputs = cmd_simulate(config, out_dir, n_workers)
        elif config.kind == "sweep":
            outputs = cmd_sweep(config, out_dir, n_workers)
        else:
            outputs = cmd_scaling(config, out_dir)
    except (ConfigParseError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigValidationError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (IntegrationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    seed = config.scenario.get("seed", 0)
    _write_manifest(
        out_dir, config, derived, warnings, outputs,
        time.perf_counter() - started, seed,
    )
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"wrote {', '.join(outputs)} to {out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
