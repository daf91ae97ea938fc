"""Command-line front end: single runs, seeded sweeps, and analysis checks.

Exit codes: 0 success, 2 configuration or argument error, 3 an analysis check
failed its tolerance, 4 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import math
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

from . import averaged as averaged_mod
from . import config as config_mod
from . import report, sim
from .averaged import AuditBox, TuningInputs, UnboundedSample
from .config import ConfigError, ScenarioConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK = 3
EXIT_RUNTIME = 4


class CheckFailure(Exception):
    """An analysis subcommand failed its tolerance or verdict."""


def _presets_dir() -> Path:
    return Path(__file__).parent / "presets"


def resolve_scenario(name_or_path: Optional[str]) -> ScenarioConfig:
    """Load a scenario file, a bundled preset name, or the built-in defaults."""
    if name_or_path is None:
        return ScenarioConfig()
    path = Path(name_or_path)
    if path.exists():
        return config_mod.load(path)
    bundled = _presets_dir() / f"{name_or_path}.cfg"
    if bundled.exists():
        return config_mod.load(bundled)
    raise ConfigError([f"scenario: no such file or bundled preset: {name_or_path!r}"])


def _prepare_config(args) -> ScenarioConfig:
    cfg = resolve_scenario(args.scenario)
    config_mod.apply_overrides(cfg, args.override)
    if args.seed is not None:
        cfg.noise.seed = args.seed
    cfg.validate()
    return cfg


def _range_threshold(args, cfg: ScenarioConfig) -> float:
    if args.range_threshold is not None:
        return args.range_threshold
    return 2.0 * cfg.surge.eps


def cmd_run(args) -> int:
    cfg = _prepare_config(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    tr = sim.simulate(cfg)
    m = sim.metrics(tr, _range_threshold(args, cfg))

    sim.write_trajectory_csv(tr, outdir / "trajectory.csv")
    config_mod.save(cfg, outdir / "scenario_resolved.cfg")
    summary = report.format_summary(
        m,
        extra={
            "scenario": args.scenario or "builtin-defaults",
            "mode": cfg.sim.mode,
            "seed": cfg.noise.seed,
            "samples": len(tr),
        },
    )
    (outdir / "summary.txt").write_text(summary)
    if not args.no_plot:
        report.save_run_figures(tr, cfg, outdir)
    if not args.quiet:
        sys.stdout.write(summary)
        sys.stdout.write(f"outputs written to {outdir}\n")
    return EXIT_OK


def _parse_axis(arg: str) -> tuple[str, list[str]]:
    if "=" not in arg:
        raise ConfigError([f"axis {arg!r} must look like section.key=v1,v2,..."])
    path, raw = arg.split("=", 1)
    values = [v.strip() for v in raw.split(",") if v.strip()]
    if not values:
        raise ConfigError([f"axis {arg!r} has no values"])
    return path.strip(), values


def _parse_seeds(arg: str) -> list[int]:
    arg = arg.strip()
    if not arg:
        raise ConfigError(["seeds: empty seed list"])
    try:
        if "," in arg:
            seeds = [int(v) for v in arg.split(",") if v.strip()]
        else:
            count = int(arg)
            seeds = list(range(count))
    except ValueError as exc:
        raise ConfigError([f"seeds: cannot parse {arg!r} ({exc})"]) from exc
    if not seeds:
        raise ConfigError(["seeds: empty seed list"])
    return seeds


def _run_cell(payload) -> dict:
    """Run one (axis values, seed) cell; exceptions are recorded, not raised."""
    cfg_text, assignments, seed, threshold = payload
    row = dict(assignments)
    row["seed"] = seed
    try:
        cfg = config_mod.parse_text(cfg_text)
        for path, raw in assignments.items():
            config_mod.apply_override(cfg, path, raw)
        cfg.noise.seed = seed
        cfg.validate()
        tr = sim.simulate(cfg)
        m = sim.metrics(tr, threshold)
        row.update(
            success=int(m.success),
            time_to_range="" if m.time_to_range is None else f"{m.time_to_range:.9g}",
            final_range=f"{m.final_range:.9g}",
            mean_abs_u=f"{m.mean_abs_u:.9g}",
            sign_flips=m.sign_flips,
            path_length=f"{m.path_length:.9g}",
            end_reason=m.end_reason,
        )
    except Exception as exc:  # per-cell failures must not kill the sweep
        row.update(
            success=0, time_to_range="", final_range="", mean_abs_u="",
            sign_flips="", path_length="", end_reason=f"error: {exc}",
        )
    return row


def cmd_sweep(args) -> int:
    base = _prepare_config(args)
    axes = [_parse_axis(arg) for arg in args.axis]
    seeds = _parse_seeds(args.seeds)
    threshold = _range_threshold(args, base)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    # Cartesian product of axis values, in axis order.
    cells: list[dict[str, str]] = [{}]
    for path, values in axes:
        cells = [dict(cell, **{path: value}) for cell in cells for value in values]

    base_text = config_mod.to_text(base)
    payloads = [(base_text, cell, seed, threshold) for cell in cells for seed in seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_run_cell, payloads))
    else:
        rows = [_run_cell(p) for p in payloads]

    axis_names = [path for path, _ in axes]
    fieldnames = axis_names + [
        "seed", "success", "time_to_range", "final_range",
        "mean_abs_u", "sign_flips", "path_length", "end_reason",
    ]
    with open(outdir / "sweep.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)

    # Aggregate per cell, preserving cell order.
    labels, fractions, med_times, lines = [], [], [], []
    for cell in cells:
        group = [r for r in rows if all(r[k] == v for k, v in cell.items())]
        wins = [r for r in group if r["success"] == 1]
        times = sorted(float(r["time_to_range"]) for r in wins if r["time_to_range"] != "")
        frac = len(wins) / len(group) if group else 0.0
        med = statistics.median(times) if times else None
        label = ", ".join(f"{k}={v}" for k, v in cell.items()) or "base"
        labels.append(label)
        fractions.append(frac)
        med_times.append(med)
        med_text = "none" if med is None else f"{med:.9g}"
        lines.append(
            f"cell [{label}]: success {len(wins)}/{len(group)}, "
            f"median_time_to_range = {med_text}"
        )
    failures = sum(1 for r in rows if str(r["end_reason"]).startswith("error:"))
    lines.append(f"range_threshold = {threshold:.9g}")
    lines.append(f"runs = {len(rows)}, cell_errors = {failures}")
    summary = "\n".join(lines) + "\n"
    (outdir / "summary.txt").write_text(summary)
    if not args.no_plot:
        report.save_sweep_figure(labels, fractions, med_times, outdir)
    if not args.quiet:
        sys.stdout.write(summary)
        sys.stdout.write(f"outputs written to {outdir}\n")
    return EXIT_OK


def _parse_kv(pairs: list[str], schema: dict[str, object], command: str) -> dict:
    """Parse positional key=value arguments against a defaults schema."""
    values = dict(schema)
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError([f"{command}: argument {pair!r} must look like key=value"])
        key, raw = pair.split("=", 1)
        key = key.strip()
        if key not in schema:
            raise ConfigError([f"{command}: unknown key {key!r} (expected one of {sorted(schema)})"])
        default = schema[key]
        try:
            if isinstance(default, bool):
                values[key] = raw.strip().lower() in ("1", "true", "yes")
            elif isinstance(default, int) and not isinstance(default, bool):
                values[key] = int(raw)
            elif isinstance(default, float):
                values[key] = float(raw)
            elif isinstance(default, str):
                values[key] = raw.strip()
            else:  # comma list of floats
                values[key] = [float(v) for v in raw.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError([f"{command}: cannot parse {pair!r} ({exc})"]) from exc
    return values


def cmd_gradcheck(args) -> int:
    p = _parse_kv(
        args.params,
        {
            "d": 1.0, "z": 5.0, "rmin": 10.0, "rmax": 100.0, "rstep": 10.0,
            "amax": 1.4, "astep": 0.1, "exclude": 0.05, "fd_step": 1e-5, "tol": 0.02,
        },
        "gradcheck",
    )
    from . import geometry

    worst = 0.0
    count = 0
    r = p["rmin"]
    while r <= p["rmax"] + 1e-12:
        alpha = -p["amax"]
        while alpha <= p["amax"] + 1e-12:
            if abs(math.sin(2.0 * alpha)) >= p["exclude"]:
                grad = averaged_mod.cost_gradient_alpha(r, alpha, p["d"], p["z"])
                hs = p["fd_step"]
                f_hi = geometry.cost(geometry.delta_from_polar(r, alpha + hs, p["d"], p["z"]))
                f_lo = geometry.cost(geometry.delta_from_polar(r, alpha - hs, p["d"], p["z"]))
                fd = (f_hi - f_lo) / (2.0 * hs)
                worst = max(worst, abs(grad - fd) / max(abs(fd), 1e-300))
                count += 1
            alpha += p["astep"]
        r += p["rstep"]
    print(f"points = {count}")
    print(f"max_relative_error = {worst:.6g}")
    print(f"tolerance = {p['tol']:.6g}")
    if worst > p["tol"]:
        raise CheckFailure(f"gradient check failed: {worst:.6g} > {p['tol']:.6g}")
    print("verdict = pass")
    return EXIT_OK


def cmd_tuning(args) -> int:
    p = _parse_kv(
        args.params,
        {"u0": 0.5, "d": 5.0, "z": 5.0, "a": 0.15, "k": -1.0, "eps": 4.0, "delta": math.pi / 3.0},
        "tuning",
    )
    try:
        inputs = TuningInputs(p["u0"], p["d"], p["z"], p["a"], p["k"], p["eps"], p["delta"])
    except ValueError as exc:
        raise ConfigError([f"tuning: {exc}"]) from exc
    lhs = averaged_mod.tuning_lhs(inputs)
    ok = averaged_mod.tuning_condition(inputs)
    print(f"lhs = {lhs:.6g}")
    print(f"verdict = {'satisfied' if ok else 'violated'}")
    if not ok:
        raise CheckFailure(f"gain condition violated: lhs = {lhs:.6g} > 0")
    return EXIT_OK


def cmd_bounds(args) -> int:
    p = _parse_kv(
        args.params,
        {
            "rmax": 100.0, "xmax": 1.0, "mu": 100.0, "samples": 100000,
            "d": 1.0, "z": 5.0, "u0": 0.5, "m": 1.0, "eps": 4.0, "q": 1,
            "a": 0.15, "k": -1.0, "h": 0.19, "seed": 0,
        },
        "bounds",
    )
    try:
        rep = averaged_mod.bounds_audit(
            AuditBox(p["rmax"], p["xmax"]), p["mu"], p["samples"],
            d=p["d"], depth=p["z"], u0=p["u0"], m=p["m"], eps=p["eps"], q=p["q"],
            a=p["a"], k=p["k"], h=p["h"], seed=p["seed"],
        )
    except UnboundedSample as exc:
        raise CheckFailure(str(exc)) from exc
    sys.stdout.write(rep.to_text())
    return EXIT_OK


def cmd_refinement(args) -> int:
    p = _parse_kv(
        args.params,
        {
            "omegas": [2.0 * math.pi / 16.0, 2.0 * math.pi / 4.0, 2.0 * math.pi],
            "horizon": 300.0, "d": 5.0, "z": 5.0, "r0": 40.0, "alpha0": 1.0,
        },
        "refinement",
    )
    cfg = resolve_scenario(args.scenario)
    cfg.baseline.d = p["d"]
    cfg.source.x = cfg.source.y = 0.0
    cfg.source.depth = p["z"]
    cfg.vehicle.x = p["r0"]
    cfg.vehicle.y = 0.0
    cfg.vehicle.heading = p["alpha0"] - math.pi
    cfg.sim.t_max = p["horizon"]
    cfg.validate()
    results = sim.refinement_study(cfg, list(p["omegas"]))
    for omega, err in results:
        print(f"omega = {omega:.9g}  sup_error = {err:.9g}")
    errs = [err for _, err in results]
    if not all(errs[i] > errs[i + 1] for i in range(len(errs) - 1)):
        raise CheckFailure("sup-norm error is not strictly decreasing with frequency")
    print("verdict = strictly decreasing")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdoaseek",
        description="Simulate and analyze two-receiver acoustic source seeking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--scenario", help="scenario file path or bundled preset name")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--seed", type=int, help="override noise.seed")
        p.add_argument(
            "--override", action="append", default=[], metavar="K=V",
            help="dotted-path config override, repeatable; composes left to right",
        )
        p.add_argument("--quiet", action="store_true", help="suppress stdout summary")
        p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
        p.add_argument(
            "--range-threshold", type=float,
            help="success range threshold in meters (default: 2 * surge.eps)",
        )

    p_run = sub.add_parser("run", help="run one scenario, write CSV, summary, figures")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a seeded grid over one or more config axes")
    common(p_sweep)
    p_sweep.add_argument(
        "--axis", action="append", default=[], metavar="K=V1,V2",
        help="sweep axis: dotted path with comma-separated values, repeatable",
    )
    p_sweep.add_argument(
        "--seeds", required=True,
        help="seed count N (seeds 0..N-1) or explicit comma list",
    )
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_sweep.set_defaults(func=cmd_sweep)

    p_an = sub.add_parser("analyze", help="gradient, tuning, bounds, and refinement checks")
    an_sub = p_an.add_subparsers(dest="subcommand", required=True)
    for name, func, doc in (
        ("gradcheck", cmd_gradcheck, "compare the closed-form cost gradient to finite differences"),
        ("tuning", cmd_tuning, "evaluate the surge/heading gain condition"),
        ("bounds", cmd_bounds, "sample vector-field bounds over a compact box"),
        ("refinement", cmd_refinement, "full-vs-averaged deviation across frequencies"),
    ):
        sp = an_sub.add_parser(name, help=doc)
        sp.add_argument("params", nargs="*", metavar="key=value")
        if name == "refinement":
            sp.add_argument("--scenario", help="base scenario file or preset name")
        sp.set_defaults(func=func)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
