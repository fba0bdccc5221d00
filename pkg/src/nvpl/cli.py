"""Command-line front end.

Commands::

    nvpl run FILE.seq            trajectory CSV + JSON summary
    nvpl sweep BUILDER --grid p=start:stop:steps
                                 one CSV row per grid point + JSON with fits
    nvpl verify                  acceptance report, exit status 0 iff all pass
    nvpl export-builders         write the reference sequences as .seq files

Numbers in CSV files use 12 significant digits. Identical arguments give
byte-identical output files.
"""

from __future__ import annotations

import argparse
import inspect
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import fits, seqfile
from . import phase as ph
from . import verify as acceptance
from .model import RabiConvention
from .quantum import I_ZERO, Subspace, bloch_vector
from .sequences import (
    BUILDERS,
    DEFAULT_RABI,
    Mode,
    Pulse,
    RunResult,
    SegmentError,
    run,
    sample_population,
    sweep,
)

TRAJECTORY_COLUMNS = (
    "t_s",
    "re_c_plus1",
    "im_c_plus1",
    "re_c_0",
    "im_c_0",
    "re_c_minus1",
    "im_c_minus1",
    "bloch_x_plus",
    "bloch_y_plus",
    "bloch_z_plus",
    "bloch_x_minus",
    "bloch_y_minus",
    "bloch_z_minus",
    "segment_label",
)
SWEEP_VALUE_COLUMNS = ("population0", "phi_total", "phi_dyn", "phi_aa", "solid_angle")


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    return "%.12g" % value


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _clean(obj):
    """Replace non-finite floats by None so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(_clean(data), indent=2) + "\n", encoding="utf-8")


def _subspace_bloch(states: np.ndarray, subspace: Subspace) -> np.ndarray:
    pairs = states[:, list(subspace.indices)]
    norms = np.linalg.norm(pairs, axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(norms > 1e-12, pairs / norms, np.nan)
    return bloch_vector(unit, subspace)


# -------------------------------------------------------------------- run


def _segment_summary(result: RunResult, rec) -> dict:
    seg = rec.segment
    entry = {
        "index": rec.index,
        "label": rec.label,
        "kind": type(seg).__name__.lower(),
        "subspace": rec.subspace.value,
        "t_start": rec.t_start,
        "t_end": rec.t_end,
        "decomposition": None,
    }
    if rec.trajectory is None:
        entry["note"] = "instantaneous pulse" if isinstance(seg, Pulse) else "no trajectory"
        return entry
    try:
        entry["decomposition"] = ph.decompose(rec.trajectory.restrict(rec.subspace)).as_dict()
    except (ValueError, ph.PhaseConsistencyError) as exc:
        entry["note"] = str(exc)
    return entry


def _total_summary(result: RunResult) -> dict:
    traj = result.trajectory
    overlap = complex(np.vdot(result.schedule.initial_state, result.final))
    phi_total = float(np.angle(overlap)) if abs(overlap) > 1e-15 else math.nan
    dyn = 0.0
    for rec in result.records:
        if rec.reference_trajectory is not None and len(rec.reference_trajectory) > 1:
            dyn += ph.dynamic_phase(rec.reference_trajectory)
    residual = 1.0 - abs(overlap)
    return {
        "phi_total": phi_total,
        "phi_dyn": dyn,
        "phi_aa": ph.wrap(phi_total - dyn) if math.isfinite(phi_total) else math.nan,
        "cyclicity_residual": residual,
        "cyclic": residual <= ph.CYCLIC_TOL,
        "duration_s": float(traj.times[-1] - traj.times[0]) if traj is not None else 0.0,
    }


def _run_summary(result: RunResult, doc_name: str, args, convention: RabiConvention) -> dict:
    pops = result.populations
    summary = {
        "sequence": doc_name,
        "mode": result.schedule.mode.value,
        "dt_s": args.dt,
        "rabi_convention": convention.value,
        "final_populations": {"plus1": pops[0], "zero": pops[1], "minus1": pops[2]},
        "stepped_vs_exact_fidelity": result.oracle_fidelity,
        "max_norm_drift": result.trajectory.max_norm_drift,
        "segments": [_segment_summary(result, rec) for rec in result.records],
        "total": _total_summary(result),
    }
    if args.shots:
        rng = np.random.default_rng(args.seed)
        summary["shots"] = args.shots
        summary["seed"] = args.seed
        summary["population0_sampled"] = float(sample_population(pops[I_ZERO], args.shots, rng))
    return summary


def cmd_run(args) -> int:
    path = Path(args.file)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return 1
    parsed = seqfile.parse(text)
    for diag in parsed.diagnostics:
        print(f"{path}:{diag}", file=sys.stderr)
    if not parsed.ok:
        return 1
    docs = parsed.docs
    if args.sequence:
        try:
            docs = [parsed.doc(args.sequence)]
        except KeyError:
            print(f"error: no sequence named {args.sequence!r} in {path}", file=sys.stderr)
            return 1
    if not docs:
        print(f"error: {path} contains no sequences", file=sys.stderr)
        return 1
    convention = RabiConvention(args.rabi_convention)
    prefix = Path(args.output) if args.output else Path(path.stem)
    for doc in docs:
        try:
            schedule = seqfile.to_schedule(doc, Mode(args.mode))
        except seqfile.SeqFileError as exc:
            for diag in exc.diagnostics:
                print(f"{path}:{diag}", file=sys.stderr)
            return 1
        try:
            result = run(schedule, args.dt, convention=convention)
        except (SegmentError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        stem = prefix if len(docs) == 1 else prefix.with_name(f"{prefix.name}.{doc.name}")
        traj = result.trajectory
        bp = _subspace_bloch(traj.states, Subspace.PLUS)
        bm = _subspace_bloch(traj.states, Subspace.MINUS)
        rows = []
        for k in range(len(traj)):
            c = traj.states[k]
            rows.append(
                [traj.times[k], c[0].real, c[0].imag, c[1].real, c[1].imag, c[2].real, c[2].imag]
                + list(bp[k])
                + list(bm[k])
                + [traj.labels[k].replace(",", ";")]
            )
        csv_path = stem.with_name(stem.name + ".csv")
        json_path = stem.with_name(stem.name + ".json")
        _write_csv(csv_path, TRAJECTORY_COLUMNS, rows)
        _write_json(json_path, _run_summary(result, doc.name, args, convention))
        written = [csv_path, json_path]
        if args.plot:
            from .plotting import plot_run

            written.append(plot_run(traj.times, traj.states, bp, bm, stem.with_name(stem.name + ".png"), doc.name))
        print(" ".join(str(p) for p in written))
    return 0


# ------------------------------------------------------------------ sweep


def parse_grid(spec: str, rng: np.random.Generator | None = None) -> tuple[str, np.ndarray]:
    """``name=start:stop:steps`` (inclusive, evenly spaced) or ``name=random:start:stop:count``."""
    if "=" not in spec:
        raise ValueError(f"malformed grid {spec!r}: expected name=start:stop:steps")
    name, body = spec.split("=", 1)
    parts = body.split(":")
    try:
        if parts[0] == "random":
            if len(parts) != 4:
                raise ValueError
            lo, hi, count = float(parts[1]), float(parts[2]), int(parts[3])
            if count < 1 or not hi > lo:
                raise ValueError
            rng = rng or np.random.default_rng(0)
            return name.strip(), np.sort(rng.uniform(lo, hi, count))
        if len(parts) != 3:
            raise ValueError
        start, stop, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ValueError(
            f"malformed grid {spec!r}: expected name=start:stop:steps or name=random:lo:hi:count"
        ) from None
    if steps < 1 or (steps > 1 and start == stop):
        raise ValueError(f"malformed grid {spec!r}: need steps >= 1 and distinct endpoints")
    return name.strip(), np.linspace(start, stop, steps)


def _parse_value(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def parse_series(spec: str) -> tuple[str, list]:
    if "=" not in spec:
        raise ValueError(f"malformed series {spec!r}: expected name=v1,v2,...")
    name, body = spec.split("=", 1)
    try:
        values = [_parse_value(v) for v in body.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"malformed series {spec!r}: values must be numbers") from None
    if not values:
        raise ValueError(f"malformed series {spec!r}: no values")
    return name.strip(), values


def _sweep_fit(builder: str, parameter: str, x, pops, fixed: dict) -> dict | None:
    rabi = float(fixed.get("rabi", DEFAULT_RABI))
    try:
        if builder in ("seq1", "seq2") and parameter == "delta":
            return fits.fit_cone_fringes(x, pops, float(fixed.get("n_cycles", 1)), rabi, builder == "seq2")
        if builder in ("seq1", "seq2") and parameter == "n_cycles":
            return {"model": "sin^2(N * phi / 2)", "phi": fits.fit_per_cycle_phase(x, pops)}
        if builder == "free_fringes" and parameter == "tau":
            delta = float(fixed.get("delta", 0.0))
            out = fits.fit_fringe_period(x, pops, 1 / abs(delta))
            out["expected_period"] = 1 / abs(delta)
            return out
        if builder == "nested_se" and parameter == "delta":
            return fits.fit_echo_fringes(x, pops, float(fixed.get("tau_se", 10e-6)))
        if builder == "seq4" and parameter == "eta":
            return {"population_spread": float(np.ptp(pops))}
    except Exception as exc:  # noqa: BLE001 - a failed fit is reported, not fatal
        return {"error": str(exc)}
    return None


def cmd_sweep(args, parser) -> int:
    rng = np.random.default_rng(args.seed)
    try:
        param, grid = parse_grid(args.grid, rng)
        series_name, series_values = parse_series(args.series) if args.series else (None, [None])
        fixed = {}
        for item in args.set or []:
            if "=" not in item:
                raise ValueError(f"malformed --set {item!r}: expected key=value")
            k, v = item.split("=", 1)
            fixed[k.strip()] = _parse_value(v)
    except ValueError as exc:
        parser.error(str(exc))
    accepted = set(inspect.signature(BUILDERS[args.builder]).parameters) - {"mode"}
    for name in [param, series_name, *fixed]:
        if name is not None and name not in accepted:
            parser.error(f"builder {args.builder!r} has no parameter {name!r}; choose from {sorted(accepted)}")
    fixed["mode"] = Mode(args.mode)
    convention = RabiConvention(args.rabi_convention)

    header = [param] + ([series_name] if series_name else []) + list(SWEEP_VALUE_COLUMNS)
    rows, table, fit_list = [], {h: [] for h in header}, []
    for sval in series_values:
        point_fixed = dict(fixed)
        if series_name:
            point_fixed[series_name] = sval
        try:
            res = sweep(args.builder, param, grid, point_fixed, args.dt, convention=convention)
        except (RuntimeError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        pops = res.population0
        if args.shots:
            pops = sample_population(pops, args.shots, rng)
        columns = [pops] + [res.column(c) for c in SWEEP_VALUE_COLUMNS[1:]]
        for k, value in enumerate(grid):
            row = [value] + ([sval] if series_name else []) + [col[k] for col in columns]
            rows.append(row)
            for h, v in zip(header, row):
                table[h].append(v)
        fit = _sweep_fit(args.builder, param, grid, pops, point_fixed)
        if fit is not None:
            if series_name:
                fit = {series_name: sval, **fit}
            fit_list.append(fit)

    prefix = Path(args.output) if args.output else Path(f"{args.builder}_{param}_sweep")
    csv_path = prefix.with_name(prefix.name + ".csv")
    json_path = prefix.with_name(prefix.name + ".json")
    _write_csv(csv_path, header, rows)
    sidecar = {
        "builder": args.builder,
        "parameter": param,
        "grid": args.grid,
        "series": args.series,
        "fixed": {k: (v.value if isinstance(v, Mode) else v) for k, v in fixed.items()},
        "dt_s": args.dt,
        "rabi_convention": convention.value,
        "shots": args.shots,
        "seed": args.seed,
        "fits": fit_list,
    }
    _write_json(json_path, sidecar)
    written = [csv_path, json_path]
    if args.plot:
        from .plotting import plot_sweep

        written.append(
            plot_sweep(table, param, prefix.with_name(prefix.name + ".png"), series_name, args.builder)
        )
    print(" ".join(str(p) for p in written))
    return 0


# ----------------------------------------------------------------- verify


def cmd_verify(args) -> int:
    settings = acceptance.Settings(args.dt, RabiConvention(args.rabi_convention))
    numbers = None
    if args.only:
        numbers = [int(n) for n in args.only.split(",")]
        unknown = [n for n in numbers if n not in acceptance.CRITERIA]
        if unknown:
            print(f"error: unknown criteria {unknown}", file=sys.stderr)
            return 2
    lines = []
    results = []
    for number in numbers or sorted(acceptance.CRITERIA):
        result = acceptance.evaluate(number, settings)
        results.append(result)
        report = result.report()
        print(report, flush=True)
        lines.append(report)
    note = "info: embedding consistency, " + acceptance.embedding_note()
    if settings.convention is RabiConvention.LITERAL:
        note += "; the literal convention drives each transition sqrt 2 slower than the two-level blocks"
    passed = sum(r.passed for r in results)
    tail = f"{passed}/{len(results)} criteria passed"
    print(note)
    print(tail)
    lines += [note, tail]
    if args.output:
        Path(args.output).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0 if passed == len(results) else 1


def cmd_export(args) -> int:
    paths = seqfile.export_builders(args.output or "sequences", args.delta, args.rabi)
    for path in paths.values():
        print(path)
    return 0


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=[m.value for m in Mode], default="hard", help="pulse model")
    common.add_argument("--dt", type=float, default=1e-9, help="integrator step in seconds (default 1e-9)")
    common.add_argument("--seed", type=int, default=0, help="seed for shot noise and random grids")
    common.add_argument(
        "--rabi-convention",
        choices=[c.value for c in RabiConvention],
        default=RabiConvention.EFFECTIVE.value,
        help="how a Rabi frequency enters the three-level Hamiltonian",
    )
    common.add_argument("--output", "-o", help="output prefix (run, sweep), report file (verify) or directory")
    common.add_argument("--shots", type=int, default=0, help="binomial readout with this many shots (0 = exact)")
    common.add_argument("--plot", action="store_true", help="also render a PNG figure (needs matplotlib)")

    parser = argparse.ArgumentParser(
        prog="nvpl", description="NV spin-1 pulse sequences and their geometric phases."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="simulate a .seq file")
    p.add_argument("file")
    p.add_argument("--sequence", help="only run the sequence with this name")

    p = sub.add_parser("sweep", parents=[common], help="sweep a builder parameter")
    p.add_argument("builder", choices=sorted(BUILDERS))
    p.add_argument("--grid", required=True, help="name=start:stop:steps or name=random:lo:hi:count")
    p.add_argument("--series", help="name=v1,v2,... repeats the sweep for each value")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="fixed builder argument")

    p = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    p.add_argument("--only", help="comma-separated criterion numbers")

    p = sub.add_parser("export-builders", parents=[common], help="write the reference .seq files")
    p.add_argument("--delta", type=float, default=250e3, help="detuning in Hz (default 250e3)")
    p.add_argument("--rabi", type=float, default=DEFAULT_RABI, help="Rabi frequency in Hz (default 500e3)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.dt <= 0:
        parser.error("--dt must be positive")
    if args.shots < 0:
        parser.error("--shots must be non-negative")
    if args.command == "run":
        return cmd_run(args)
    if args.command == "sweep":
        return cmd_sweep(args, parser)
    if args.command == "verify":
        return cmd_verify(args)
    return cmd_export(args)


if __name__ == "__main__":
    sys.exit(main())
