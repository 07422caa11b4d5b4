"""Command-line front end emitting deterministic CSV/JSON artifacts.

Commands map one-to-one onto the toolkit's figure-class computations:

* ``patterns``        eight diffraction curves + pointwise statistics
* ``sorkin``          statistics of one measured counts file
* ``run``             virtual repeated experiment, counts + rho series
* ``sweep-power``     power-fluctuation propagation across the pattern
* ``sweep-mask``      leakage + misalignment sweep (seeded)
* ``sweep-detector``  dead-time / nonlinearity sweep
* ``hierarchy``       sum-rule audit over random amplitude sets

Artifacts are byte-identical for identical (command, config, seed)
regardless of the BORNLAB_THREADS worker cap: floats are serialized with
17 significant digits, row values never depend on the work split, and
the manifest carries no timestamps or machine identifiers.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from ._streams import TAG_HIERARCHY, substream
from .config import (
    ConfigError,
    RunConfig,
    build_objects,
    load_config,
    probability_rule,
)
from .experiment import estimate_rho_series, rho_per_repetition, run_experiment
from .interference import (
    COMBINATIONS,
    ProbabilityVector,
    sorkin,
    sorkin_curves,
)
from .optics import pattern_set, stack_patterns
from .systematics import (
    RhoSweep,
    detector_rho_sweep,
    misalignment_rho_sweep,
    power_sigma_curves,
    uniform_displacement_sampler,
)

COMMANDS = (
    "patterns",
    "sorkin",
    "run",
    "sweep-power",
    "sweep-mask",
    "sweep-detector",
    "hierarchy",
)

#: Fixed column order of every sweep table; extra per-command columns
#: append after ``rho_defined``.
SWEEP_COLUMNS = (
    "position_u",
    "p0", "pA", "pB", "pC", "pAB", "pBC", "pCA", "pABC",
    "iAB", "iBC", "iCA",
    "epsilon", "delta", "rho", "rho_defined",
)

COUNTS_COLUMNS = ("combination", "counts", "dwell_s")


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _cell(name: str, value) -> str:
    if name.endswith("_defined"):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return _fmt(value)


def _json_value(name: str, value):
    if name == "combination":
        return value
    if name.endswith("_defined"):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    v = float(value)
    return None if math.isnan(v) else v


def _write_table(path: Path, header, rows, fmt: str) -> None:
    if fmt == "csv":
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(
                v if isinstance(v, str) else _cell(name, v)
                for name, v in zip(header, row)
            ))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        payload = [
            {name: (v if isinstance(v, str) else _json_value(name, v))
             for name, v in zip(header, row)}
            for row in rows
        ]
        path.write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def _sweep_rows(sweep: RhoSweep, extras: dict[str, np.ndarray]):
    c = sweep.curves
    for i in range(sweep.u.size):
        row = [
            sweep.u[i],
            *(sweep.patterns[j, i] for j in range(8)),
            c.i_ab[i], c.i_bc[i], c.i_ca[i],
            c.epsilon[i], c.delta[i], c.rho[i], c.rho_defined[i],
        ]
        row.extend(extras[name][i] for name in extras)
        yield row


def _write_sweep(path: Path, sweep: RhoSweep, fmt: str,
                 extras: dict[str, np.ndarray] | None = None) -> dict:
    extras = extras or {}
    header = SWEEP_COLUMNS + tuple(extras)
    _write_table(path, header, _sweep_rows(sweep, extras), fmt)
    defined = sweep.curves.rho_defined
    n_def = int(np.count_nonzero(defined))
    summary = {
        "points": int(sweep.u.size),
        "rho_defined_points": n_def,
        "max_abs_epsilon": float(np.max(np.abs(sweep.curves.epsilon))),
        "max_abs_rho": (
            float(np.max(np.abs(sweep.curves.rho[defined]))) if n_def else None
        ),
    }
    return summary


def _u_grid(cfg: RunConfig) -> np.ndarray:
    if cfg.u_points == 1:
        return np.array([cfg.u_min])
    return np.linspace(cfg.u_min, cfg.u_max, cfg.u_points)


def _manifest(out: Path, command: str, cfg: RunConfig, summary: dict,
              outputs: list[str]) -> None:
    payload = {
        "command": command,
        "config": dataclasses.asdict(cfg),
        "seed": cfg.seed,
        "versions": {"bornlab": __version__, "numpy": np.__version__,
                     "backend": BACKEND},
        "summary": summary,
        "outputs": outputs,
    }
    (out / "manifest.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True, allow_nan=False,
                   default=str) + "\n",
        encoding="utf-8",
    )


def _clean(obj):
    """Replace NaN by None so the manifest stays strict JSON."""
    if isinstance(obj, float) and math.isnan(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def cmd_patterns(cfg: RunConfig, out: Path, fmt: str) -> dict:
    plate, mask, _optical, _power, _detector = build_objects(cfg)
    u = _u_grid(cfg)
    stacked = stack_patterns(pattern_set(plate, mask, u, normalize=True))
    sweep = RhoSweep(u, stacked, sorkin_curves(stacked, cfg.guard))
    name = f"patterns.{fmt}"
    summary = _write_sweep(out / name, sweep, fmt)
    return {"summary": summary, "outputs": [name]}


def cmd_sweep_power(cfg: RunConfig, out: Path, fmt: str) -> dict:
    plate, mask, _optical, power, _detector = build_objects(cfg)
    u = _u_grid(cfg)
    stacked = stack_patterns(pattern_set(plate, mask, u, normalize=True))
    curves = sorkin_curves(stacked, cfg.guard)
    unit = power_sigma_curves(stacked, curves, 1.0)
    sweep = RhoSweep(u, stacked, curves)
    extras = {
        "delta_rho_unit": unit,
        "delta_rho": unit * power.relative_fluctuation,
    }
    name = f"power_sweep.{fmt}"
    summary = _write_sweep(out / name, sweep, fmt, extras)
    defined = curves.rho_defined
    summary["max_delta_rho_unit"] = (
        float(np.max(unit[defined])) if np.any(defined) else None
    )
    return {"summary": summary, "outputs": [name]}


def cmd_sweep_mask(cfg: RunConfig, out: Path, fmt: str) -> dict:
    plate, mask, _optical, _power, _detector = build_objects(cfg)
    sampler = uniform_displacement_sampler(
        cfg.displacement_low, cfg.displacement_high
    )
    sweep, displacements = misalignment_rho_sweep(
        plate, mask, sampler, _u_grid(cfg), seed=cfg.seed, guard=cfg.guard
    )
    name = f"mask_sweep.{fmt}"
    summary = _write_sweep(out / name, sweep, fmt)
    summary["displacements"] = {k: displacements[k] for k in COMBINATIONS}
    return {"summary": summary, "outputs": [name]}


def cmd_sweep_detector(cfg: RunConfig, out: Path, fmt: str) -> dict:
    plate, mask, _optical, _power, detector = build_objects(cfg)
    u = _u_grid(cfg)
    sweep = detector_rho_sweep(
        plate, mask, detector, u,
        peak_rate=cfg.peak_rate, dynamic_range=cfg.dynamic_range, guard=cfg.guard,
    )
    name = f"detector_sweep.{fmt}"
    summary = _write_sweep(out / name, sweep, fmt)
    center = int(np.argmin(np.abs(u)))
    if sweep.curves.rho_defined[center]:
        summary["rho_at_center"] = float(sweep.curves.rho[center])
    else:
        summary["rho_at_center"] = None
    return {"summary": summary, "outputs": [name]}


def cmd_run(cfg: RunConfig, out: Path, fmt: str) -> dict:
    plate, mask, _optical, power, detector = build_objects(cfg)
    records = run_experiment(
        plate, mask, power, detector,
        detector_u=cfg.detector_u, repetitions=cfg.repetitions,
        seed=cfg.seed, poisson=cfg.poisson,
    )
    counts_name = f"run_counts.{fmt}"
    header = ("repetition", "combination", "counts", "dwell_s",
              "timestamp_index", "monitor_counts")

    def count_rows():
        for rec in records:
            for idx, combo in enumerate(COMBINATIONS):
                mon = math.nan if rec.monitor is None else rec.monitor[idx]
                yield (rec.repetition, combo, rec.counts[idx],
                       rec.dwell_time, int(rec.timestamps[idx]), mon)

    _write_table(out / counts_name, header, count_rows(), fmt)

    rho, defined = rho_per_repetition(records, cfg.guard)
    series_name = f"run_rho.{fmt}"
    _write_table(
        out / series_name,
        ("repetition", "rho", "rho_defined"),
        ((i, rho[i], defined[i]) for i in range(len(records))),
        fmt,
    )
    summary: dict = {
        "repetitions": cfg.repetitions,
        "rho_defined_repetitions": int(np.count_nonzero(defined)),
    }
    try:
        series = estimate_rho_series(records, cfg.guard)
        summary.update(
            mean_rho=series.mean,
            sample_std=series.sample_std,
            sem=series.sem,
            n_undefined=series.n_undefined,
        )
    except ValueError:
        print("warning: rho undefined in every repetition", file=sys.stderr)
        summary.update(mean_rho=None, sample_std=None, sem=None,
                       n_undefined=len(records))
    return {"summary": summary, "outputs": [counts_name, series_name]}


def read_counts_file(path) -> ProbabilityVector:
    """Counts file -> rate vector (one row per combination)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split(",") != list(COUNTS_COLUMNS):
        raise ConfigError(
            f"counts file must start with header {','.join(COUNTS_COLUMNS)}"
        )
    rates: dict[str, float] = {}
    for ln in lines[1:]:
        parts = [p.strip() for p in ln.split(",")]
        if len(parts) != 3:
            raise ConfigError(f"counts row must have 3 fields (got {ln!r})")
        combo, counts_raw, dwell_raw = parts
        if combo not in COMBINATIONS:
            raise ConfigError(f"unknown combination label {combo!r}")
        if combo in rates:
            raise ConfigError(f"duplicate combination {combo!r}")
        counts = float(counts_raw)
        dwell = float(dwell_raw)
        if counts < 0:
            raise ConfigError(f"{combo}: counts must be >= 0 (got {counts})")
        if not dwell > 0:
            raise ConfigError(f"{combo}: dwell_s must be > 0 (got {dwell})")
        rates[combo] = counts / dwell
    missing = [c for c in COMBINATIONS if c not in rates]
    if missing:
        raise ConfigError(f"counts file missing combinations: {', '.join(missing)}")
    return ProbabilityVector.from_array([rates[c] for c in COMBINATIONS])


def cmd_sorkin(cfg: RunConfig, out: Path, fmt: str, counts_path) -> dict:
    pv = read_counts_file(counts_path)
    res = sorkin(pv, cfg.guard)
    stacked = pv.array.reshape(8, 1)
    sweep = RhoSweep(np.array([math.nan]), stacked, sorkin_curves(stacked, cfg.guard))
    name = f"sorkin.{fmt}"
    _write_sweep(out / name, sweep, fmt)
    if not res.rho_defined:
        print("warning: rho undefined (delta below guard)", file=sys.stderr)
    print(
        f"epsilon = {_fmt(res.epsilon)}  delta = {_fmt(res.delta)}  rho = "
        + (_fmt(res.rho) if res.rho_defined else "undefined")
    )
    summary = {
        "epsilon": res.epsilon,
        "delta": res.delta,
        "rho": res.rho if res.rho_defined else None,
        "rho_defined": res.rho_defined,
        "signs": {"AB": res.s_ab, "BC": res.s_bc, "CA": res.s_ca},
    }
    return {"summary": summary, "outputs": [name]}


def _order_k_max(rule, rng, k: int, samples: int) -> tuple[float, float]:
    """Max |order-k term| and max scale over random amplitude draws."""
    amps = rng.standard_normal((samples, k)) + 1j * rng.standard_normal((samples, k))
    total = np.zeros(samples)
    scale = np.ones(samples)
    for mask_bits in range(1, 2 ** k):
        members = [j for j in range(k) if mask_bits >> j & 1]
        psi = amps[:, members].sum(axis=1)
        mag2 = psi.real**2 + psi.imag**2
        p = mag2 if rule.alpha == 0.0 else mag2 + rule.alpha * mag2 * np.sqrt(mag2)
        total += (-1.0) ** (k - len(members)) * p
        scale = np.maximum(scale, p)
    rel = np.abs(total) / scale
    return float(np.max(np.abs(total))), float(np.max(rel))


def cmd_hierarchy(cfg: RunConfig, out: Path, fmt: str) -> dict:
    rule = probability_rule(cfg)
    rng = substream(cfg.seed, TAG_HIERARCHY)
    tol = 1e-12
    orders = {}
    for k, samples in ((3, 10000), (4, 2000), (5, 2000)):
        max_abs, max_rel = _order_k_max(rule, rng, k, samples)
        null_ok = max_rel <= tol
        orders[str(k)] = {
            "samples": samples,
            "max_abs": max_abs,
            "max_abs_relative": max_rel,
            "tolerance_relative": tol,
            "null_satisfied": null_ok,
        }
        print(
            f"order-{k} sum rule over {samples} random draws: "
            f"max |I_{k}| = {max_rel:.3e} x scale "
            f"({'<=' if null_ok else '>'} {tol:.0e} x scale)"
        )
    # order-2 reference point: equal unit amplitudes interfere maximally
    pair = 4.0 - 1.0 - 1.0
    print(f"order-2 term for equal unit amplitudes = {_fmt(pair)} (nonzero)")
    payload = {
        "rule": cfg.rule,
        "alpha": cfg.alpha,
        "order_2_equal_amplitudes": pair,
        "orders": orders,
    }
    name = "hierarchy.json"
    (out / name).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return {"summary": payload, "outputs": [name]}


def dispatch(command: str, cfg: RunConfig, out_dir=None, fmt: str = "csv",
             counts_path=None) -> int:
    """Run one command; writes artifacts + manifest, returns exit status."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if command == "patterns":
            result = cmd_patterns(cfg, out, fmt)
        elif command == "sorkin":
            if counts_path is None:
                raise ConfigError("sorkin requires a counts file")
            result = cmd_sorkin(cfg, out, fmt, counts_path)
        elif command == "run":
            result = cmd_run(cfg, out, fmt)
        elif command == "sweep-power":
            result = cmd_sweep_power(cfg, out, fmt)
        elif command == "sweep-mask":
            result = cmd_sweep_mask(cfg, out, fmt)
        elif command == "sweep-detector":
            result = cmd_sweep_detector(cfg, out, fmt)
        elif command == "hierarchy":
            result = cmd_hierarchy(cfg, out, fmt)
        else:
            print(f"error: unknown command {command!r}", file=sys.stderr)
            return 2
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: i/o failure: {exc}", file=sys.stderr)
        return 2
    try:
        _manifest(out, command, cfg, _clean(result["summary"]), result["outputs"])
    except OSError as exc:
        print(f"error: cannot write manifest: {exc}", file=sys.stderr)
        return 2
    for name in result["outputs"]:
        print(f"wrote {out / name}")
    return 0


def _add_common_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # registered on the main parser and again on every subparser so the
    # flags work on either side of the command; SUPPRESS keeps a
    # subparser from clobbering values parsed before the command
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=d,
                        help="key = value config file")
    parser.add_argument("--seed", type=int, default=d,
                        help="override the config seed")
    parser.add_argument("--out", metavar="DIR", default=d,
                        help="output directory")
    parser.add_argument("--format", choices=("csv", "json"),
                        default=argparse.SUPPRESS if suppress else "csv",
                        help="artifact table format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bornlab",
        description="Triple-slit interference null-test toolkit",
    )
    _add_common_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _add_common_flags(p, suppress=True)
        if name == "sorkin":
            p.add_argument("counts", help="counts file (combination,counts,dwell_s)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(f"seed: must be >= 0 (got {args.seed})")
            cfg = dataclasses.replace(cfg, seed=args.seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    return dispatch(
        args.command, cfg, out_dir=args.out, fmt=args.format,
        counts_path=getattr(args, "counts", None),
    )


def entry() -> None:
    raise SystemExit(main())
