"""Command-line front end.

Four modes, selected with ``--mode``:

* ``simulate``  -- integrate one chain from the ground state and write the
  population time trace; a steady-state summary goes to the metadata sidecar.
* ``sweep``     -- steady-state transport imbalance over a parameter grid.
* ``fluctuate`` -- disorder-averaged imbalance statistics over the same grid.
* ``validate``  -- compare the linear amplitude model against the full
  density-matrix solution over a list of drive strengths.

Data goes to ``--out`` (or stdout when omitted); a one-line status report is
printed to stderr.  CSV output is strictly tabular: numbers use repr-faithful
"%.17g" formatting, undefined quantities become empty cells plus a ``flag``
column, never NaN.  With ``--out file.csv`` a ``file.meta.json`` sidecar
records the resolved configuration, row counts, and run status; with
``--format json`` a single JSON document carries metadata and rows together.
Exit codes: 0 success (even when some rows are flagged undefined), 2 for
configuration errors, 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .config import MODES, ConfigError, RunConfig, load_config_file, parse_config
from .dynamics import IntegrationError, NoSteadyState, evolve, steady_state, validity_check
from .lindblad import NoUniqueSteadyState, compare_with_amplitude_model
from .model import ChiralCoupling, DriveParams, FluctuationSpec, build_geometry, build_interaction_matrix
from .transport import (
    SweepGrid,
    UndefinedTransportError,
    fluctuation_ensemble,
    sweep,
)

__all__ = ["main", "build_parser", "run_mode", "render_csv", "render_json"]

SCHEMA_VERSION = 1

# Table = (column names, rows).  Cells are int, float, str, or None; None
# renders as an empty CSV cell / JSON null.
Cell = Any
Table = tuple[list[str], list[list[Cell]]]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chiralchain",
        description="Excitation transport in weakly driven chiral atomic chains.",
        epilog=(
            "example: chiralchain --mode sweep --n-atoms 10 --directionality 1 "
            "--delta 0 --xi-grid 0.1:6.2:100 --out sweep.csv"
        ),
    )
    parser.add_argument("--config", help="JSON config file (lowest-precedence layer)")
    parser.add_argument("--mode", choices=MODES, help="what to run")
    parser.add_argument("--n-atoms", help="chain length(s), comma separated")
    parser.add_argument("--xi", help="nearest-neighbour phase(s) k*d, comma separated")
    parser.add_argument("--xi-grid", help="phase grid as start:stop:count (inclusive)")
    parser.add_argument("--delta", help="detuning value(s); per-atom list in simulate/validate")
    parser.add_argument("--directionality", help="right/left asymmetry value(s) in [-1, 1]")
    parser.add_argument("--gamma-l", help="left-going decay fraction(s) in [0, 1]; alternative to --directionality")
    parser.add_argument("--rabi", help="drive strength(s); validate mode accepts a list")
    parser.add_argument("--fluctuation", type=float, help="position noise as a fraction of the spacing")
    parser.add_argument("--samples", type=int, help="disorder realizations per grid point")
    parser.add_argument("--seed", type=int, help="base random seed")
    parser.add_argument("--t-final", type=float, help="simulate: end time in inverse total decay rates")
    parser.add_argument("--n-steps", type=int, help="simulate: number of output intervals")
    parser.add_argument("--workers", type=int, help="sweep: worker threads (output is identical for any value)")
    parser.add_argument("--out", help="output path; stdout when omitted")
    parser.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    return parser


_FLAG_KEYS = (
    "mode", "n_atoms", "xi", "xi_grid", "delta", "directionality", "gamma_l",
    "rabi", "fluctuation", "samples", "seed", "t_final", "n_steps", "workers",
    "out", "format",
)


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    file_values = load_config_file(args.config) if args.config else None
    flags = {key: getattr(args, key) for key in _FLAG_KEYS}
    return parse_config(file_values=file_values, flag_values=flags)


def _coupling(directionality: float) -> ChiralCoupling:
    return ChiralCoupling.from_directionality(directionality)


def _run_simulate(cfg: RunConfig) -> tuple[Table, dict[str, Any], int]:
    n = cfg.n_atoms[0]
    fluct = FluctuationSpec(cfg.fluctuation, cfg.seed) if cfg.fluctuation > 0 else None
    geometry = build_geometry(n, cfg.xi_values[0], fluct)
    coupling = _coupling(cfg.directionality[0])
    drive = DriveParams(detunings=np.asarray(cfg.detunings_for_point(), dtype=float), rabi=cfg.rabi_values[0])
    matrix = build_interaction_matrix(geometry, coupling, drive)

    states = evolve(matrix, cfg.rabi_values[0], cfg.t_final, cfg.n_steps)
    columns = ["t"] + [f"pop_{i + 1}" for i in range(n)] + ["total"]
    rows: list[list[Cell]] = []
    for state in states:
        pops = state.populations()
        rows.append([state.time, *map(float, pops), float(pops.sum())])

    try:
        solution = steady_state(matrix, cfg.rabi_values[0])
    except NoSteadyState as exc:
        summary: dict[str, Any] = {"status": "undefined", "reason": str(exc)}
    else:
        pops = solution.populations()
        report = validity_check(solution)
        summary = {
            "status": "ok",
            "populations": [float(p) for p in pops],
            "total_population": report.total_population,
            "max_population": report.max_population,
            "saturation": report.level,
            "condition_number": solution.condition_number,
        }
    return (columns, rows), {"steady_state": summary}, 0


def _run_sweep(cfg: RunConfig) -> tuple[Table, dict[str, Any], int]:
    grid = SweepGrid(cfg.n_atoms, cfg.directionality, cfg.delta_values, cfg.xi_values)
    results = sweep(grid, rabi=cfg.rabi_values[0], max_workers=cfg.workers)
    columns = ["n_atoms", "xi", "delta", "directionality",
               "imbalance", "total_population", "max_population", "flag"]
    rows: list[list[Cell]] = []
    n_undefined = 0
    for row in results:
        if row.result is None:
            n_undefined += 1
            rows.append([row.n_atoms, row.spacing, row.detuning, row.directionality,
                         None, None, None, row.flag])
        else:
            sat = row.result.saturation
            rows.append([row.n_atoms, row.spacing, row.detuning, row.directionality,
                         row.result.imbalance, sat.total_population,
                         sat.max_population, row.flag])
    return (columns, rows), {}, n_undefined


def _run_fluctuate(cfg: RunConfig) -> tuple[Table, dict[str, Any], int]:
    grid = SweepGrid(cfg.n_atoms, cfg.directionality, cfg.delta_values, cfg.xi_values)
    columns = ["n_atoms", "xi", "delta", "directionality",
               "mean_imbalance", "std_imbalance", "n_samples", "n_undefined", "flag"]
    fluct = FluctuationSpec(cfg.fluctuation, cfg.seed)

    def one_point(point: tuple[int, float, float, float]) -> list[Cell]:
        n, d, delta, xi = point
        try:
            stats = fluctuation_ensemble(
                n, xi, _coupling(d), delta, fluct,
                n_samples=cfg.samples, base_seed=cfg.seed, rabi=cfg.rabi_values[0],
            )
        except UndefinedTransportError:
            return [n, xi, delta, d, None, None, cfg.samples, None, "undefined"]
        return [n, xi, delta, d, stats.mean_imbalance, stats.std_imbalance,
                stats.n_samples, stats.n_undefined, "ok"]

    # Sample seeds derive from (base seed, sample index) and grid points map
    # in order, so the output is identical for any worker count.
    points = list(grid.points())
    if cfg.workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(one_point, points))
    else:
        rows = [one_point(point) for point in points]
    n_undefined = sum(1 for row in rows if row[-1] == "undefined")
    return (columns, rows), {}, n_undefined


def _run_validate(cfg: RunConfig) -> tuple[Table, dict[str, Any], int]:
    n = cfg.n_atoms[0]
    geometry = build_geometry(n, cfg.xi_values[0])
    coupling = _coupling(cfg.directionality[0])
    detunings = np.asarray(cfg.detunings_for_point(), dtype=float)
    report = compare_with_amplitude_model(geometry, coupling, detunings, cfg.rabi_values)
    columns = ["rabi", "max_rel_population_gap", "imbalance_amplitude", "imbalance_lindblad"]
    rows: list[list[Cell]] = [
        [row.rabi, row.max_rel_population_gap, row.imbalance_amplitude, row.imbalance_lindblad]
        for row in report.rows
    ]
    return (columns, rows), {"fit_exponent": report.exponent}, 0


def run_mode(cfg: RunConfig) -> tuple[Table, dict[str, Any], int]:
    """Execute the configured mode; returns (table, extra metadata, undefined-row count)."""
    runner = {
        "simulate": _run_simulate,
        "sweep": _run_sweep,
        "fluctuate": _run_fluctuate,
        "validate": _run_validate,
    }[cfg.mode]
    return runner(cfg)


def _format_cell(value: Cell) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if not np.isfinite(value):
        raise RuntimeError(f"refusing to write non-finite value {value!r}")
    return format(value, ".17g")


def render_csv(table: Table) -> str:
    columns, rows = table
    lines = [",".join(columns)]
    lines.extend(",".join(_format_cell(cell) for cell in row) for row in rows)
    return "\n".join(lines) + "\n"


def _json_cell(value: Cell) -> Any:
    if value is None or isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    return float(value)


def render_json(table: Table, meta: dict[str, Any]) -> str:
    columns, rows = table
    doc = {
        "meta": meta,
        "columns": columns,
        "rows": [[_json_cell(cell) for cell in row] for row in rows],
    }
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _build_meta(cfg: RunConfig, table: Table, extra: dict[str, Any], n_undefined: int) -> dict[str, Any]:
    from . import __version__

    meta = {
        "schema_version": SCHEMA_VERSION,
        "library_version": __version__,
        "mode": cfg.mode,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "n_rows": len(table[1]),
        "n_undefined": n_undefined,
        "status": "ok_with_undefined" if n_undefined else "ok",
    }
    meta.update(extra)
    return meta


def _emit(cfg: RunConfig, table: Table, extra: dict[str, Any], n_undefined: int) -> None:
    meta = _build_meta(cfg, table, extra, n_undefined)
    if cfg.format == "json":
        payload = render_json(table, meta)
        if cfg.out is None:
            sys.stdout.write(payload)
        else:
            Path(cfg.out).write_text(payload)
    else:
        payload = render_csv(table)
        if cfg.out is None:
            sys.stdout.write(payload)
        else:
            out = Path(cfg.out)
            out.write_text(payload)
            sidecar = out.with_suffix(".meta.json")
            sidecar.write_text(json.dumps(meta, indent=2, allow_nan=False) + "\n")

    status = f"{cfg.mode}: {len(table[1])} rows, {n_undefined} undefined"
    if cfg.mode == "validate" and extra.get("fit_exponent") is not None:
        status += f", fit exponent {extra['fit_exponent']:.3f}"
    if cfg.out is not None:
        status += f" -> {cfg.out}"
    print(status, file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    try:
        table, extra, n_undefined = run_mode(cfg)
        _emit(cfg, table, extra, n_undefined)
    except (NoSteadyState, NoUniqueSteadyState, UndefinedTransportError,
            IntegrationError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
