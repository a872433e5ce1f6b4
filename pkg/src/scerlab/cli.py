"""Command-line front end: ``scerlab {calibrate,pd-curve,required,analyze}``.

Data outputs are deterministic; timestamps only appear in the
``<output>.manifest.json`` written next to each output. The default output
directory is ``$SCERLAB_OUTPUT_DIR`` (falls back to the working directory).
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from pathlib import Path

from . import __version__
from .analysis import (
    KeyAssumption,
    OsnmaConfig,
    osnma_symbol_budget,
    time_to_detect,
    timing_analysis,
)
from .calibration import FingerprintMismatch, ThresholdSet, calibrate, rayleigh_scale_for
from .campaign import (
    CalibrationCache,
    pd_curve,
    required_symbols,
    write_manifest,
    write_pd_curve_csv,
    write_required_csv,
)
from .channel import coherence_time
from .config import ConfigError, load_config
from .detector import DETECTORS
from .reference import reference_cases

OUTPUT_DIR_ENV = "SCERLAB_OUTPUT_DIR"


class UsageError(Exception):
    pass


def parse_grid(text: str) -> list[int]:
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    text = text.strip()
    if not text:
        raise UsageError("empty N_b grid")
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError
            start, stop, step = parts
            grid = list(range(start, stop + 1, step))
        else:
            grid = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"cannot parse grid {text!r}; use start:stop:step or a,b,c") from None
    if not grid:
        raise UsageError("empty N_b grid")
    if grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError("grid must be strictly increasing positive integers")
    return grid


def _out_path(given: str | None, default_name: str) -> Path:
    if given:
        p = Path(given)
    else:
        p = Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / default_name
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _manifest_for(path: Path) -> Path:
    return path.with_name(path.name + ".manifest.json")


def cmd_calibrate(args) -> int:
    cfg = load_config(args.config)
    if args.n_b is not None:
        cfg = cfg.replace(n_symbols=args.n_b)
    if not 0 < args.pfa < 1:
        raise UsageError("--pfa must lie in (0, 1)")
    started = time.time()
    ts = calibrate(cfg, pfa=args.pfa, trials=args.trials, workers=args.threads)
    out = _out_path(args.out, f"thresholds_{ts.fingerprint}.json")
    ts.save(out)
    write_manifest(_manifest_for(out), cfg, [out], started)
    print(f"scenario {ts.fingerprint}  N_b={cfg.n_symbols}  pfa={args.pfa}  H0 trials={args.trials}")
    for d in DETECTORS:
        print(f"  {d}: gamma = {ts.thresholds[d]:.6g}")
    if ts.rayleigh_r3 is not None:
        emp = ts.thresholds["R3"]
        s = rayleigh_scale_for(cfg)
        print(f"  R3 Rayleigh: scale = {s:.6g}, gamma = {ts.rayleigh_r3:.6g} "
              f"({100 * (ts.rayleigh_r3 / emp - 1):+.2f} % vs empirical)")
    print(f"wrote {out}")
    return 0


def _gnuplot_script(csv_path: Path) -> str:
    lines = [
        "set datafile separator ','",
        "set key bottom right",
        "set xlabel 'number of unpredictable symbols'",
        "set ylabel 'detection probability'",
        "set yrange [0:1]",
        "plot " + ", \\\n     ".join(
            f"'< grep ^{d}, {csv_path.name}' using 2:3 with linespoints title '{d}'" for d in DETECTORS
        ),
    ]
    return "\n".join(lines) + "\n"


def cmd_pd_curve(args) -> int:
    cfg = load_config(args.config)
    grid = parse_grid(args.grid)
    provided: dict[int, ThresholdSet] = {}
    by_fp = {}
    for p in args.thresholds or []:
        ts = ThresholdSet.load(p)
        by_fp[ts.fingerprint] = ts
    for n_b in grid:
        fp = cfg.replace(n_symbols=n_b).fingerprint()
        if fp in by_fp:
            provided[n_b] = by_fp[fp]
        elif not args.auto_calibrate:
            raise FingerprintMismatch(
                f"no threshold file matches N_b={n_b} (scenario {fp}); pass --auto-calibrate or run calibrate"
            )
    started = time.time()
    curve = pd_curve(cfg, grid, trials_per_point=args.trials, pfa=args.pfa,
                     calibration_trials=args.calibration_trials, workers=args.threads,
                     cache=CalibrationCache(), thresholds=provided)
    out = _out_path(args.out, "pd_curve.csv")
    write_pd_curve_csv(curve, out)
    outputs = [out]
    if args.gnuplot:
        gp = out.with_suffix(".gp")
        gp.write_text(_gnuplot_script(out))
        outputs.append(gp)
    write_manifest(_manifest_for(out), cfg, outputs, started)
    for d in DETECTORS:
        print(f"{d}: " + " ".join(f"{p.n_b}:{p.pd:.3f}" for p in curve.points[d]))
    print(f"wrote {out}")
    return 0


def cmd_required(args) -> int:
    if args.detector not in DETECTORS:
        raise UsageError(f"unknown detector {args.detector!r}; valid names: {', '.join(DETECTORS)}")
    if not 0 < args.target_pd < 1:
        raise UsageError("--target-pd must lie in (0, 1)")
    if args.batch:
        cases = [(c.case_id, c.config) for c in reference_cases()]
    elif args.config:
        cases = [(Path(args.config).stem, load_config(args.config))]
    else:
        raise UsageError("give a config path or --batch")
    started = time.time()
    cache = CalibrationCache()
    rows = []
    for case_id, cfg in cases:
        res = required_symbols(cfg, args.detector, args.target_pd, trials_per_point=args.trials,
                               pfa=args.pfa, calibration_trials=args.calibration_trials, cap=args.cap,
                               resolution=args.resolution, workers=args.threads, cache=cache)
        rows.append((case_id, res))
        shown = res.n_b if res.reached else "not_reached"
        crossing = "" if res.crossing is None else f" (Pd estimate crosses the target near {res.crossing:.0f})"
        print(f"{case_id}: {args.detector} needs {shown} symbols for Pd >= {args.target_pd}{crossing}", flush=True)
    out = _out_path(args.out, "required_symbols.csv")
    write_required_csv(rows, out)
    write_manifest(_manifest_for(out), cases[0][1] if len(cases) == 1 else None, [out], started,
                   extra={"cases": [c for c, _ in cases]})
    print(f"wrote {out}")
    return 0


def _write_rows(path: Path | None, header, rows) -> None:
    if path is None:
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def cmd_analyze(args) -> int:
    out = Path(args.out) if args.out else None
    if args.what == "timing":
        if not 0 < args.pe < 0.5:
            raise UsageError("--pe must lie in (0, 0.5)")
        if not args.stability > 0:
            raise UsageError("--stability must be > 0")
        t = timing_analysis(args.cn0, args.pe, args.stability)
        print("T_spof = erfc_inv(2 Pe)^2 / (C/N0)")
        print(f"  C/N0 = {args.cn0:g} dB-Hz, Pe = {args.pe:g}")
        print(f"  T_spof = {t.t_spof * 1e6:.2f} us")
        print(f"masking time = T_spof / stability ({args.stability:g}) = {t.masking_time:.4g} s")
        _write_rows(out, ("cn0_dbhz", "pe", "t_spof_s", "clock_stability", "masking_time_s"),
                    [(args.cn0, args.pe, repr(t.t_spof), args.stability, repr(t.masking_time))])
    elif args.what == "osnma":
        key = KeyAssumption.FIRST_64_UNPREDICTABLE if args.key_unpredictable else KeyAssumption.PREDICTABLE
        cfg = OsnmaConfig(key_assumption=key)
        try:
            budget = osnma_symbol_budget(cfg, args.duration)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        print(f"{cfg.symbols_per_block} unpredictable symbols per {cfg.block_period_s:g} s block "
              f"(key {key.value})")
        print(f"budget over {args.duration:g} s: {budget}")
        row = [args.duration, key.value, budget, ""]
        if args.required is not None:
            ttd = time_to_detect(args.required, cfg)
            print(f"{args.required} symbols collected after {ttd.seconds:g} s")
            row[3] = ttd.seconds
        _write_rows(out, ("duration_s", "key_assumption", "unpredictable_symbols", "time_to_detect_s"), [row])
    elif args.what == "coherence":
        speed = args.speed_mps if args.speed_mps is not None else args.speed_kmh / 3.6
        if speed < 0:
            raise UsageError("speed must be >= 0")
        tc = coherence_time(speed, args.carrier_hz)
        shown = "inf" if math.isinf(tc) else f"{tc * 1e3:.3f} ms"
        print("T_c = c / (v f_c)")
        print(f"  v = {speed:.4g} m/s, f_c = {args.carrier_hz:.6g} Hz -> T_c = {shown}")
        _write_rows(out, ("speed_mps", "carrier_hz", "coherence_time_s"), [(speed, args.carrier_hz, repr(tc))])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scerlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"scerlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--threads", type=int, default=1, help="worker processes (results do not change)")
        sp.add_argument("--pfa", type=float, default=0.02)

    c = sub.add_parser("calibrate", help="calibrate per-detector thresholds on H0 trials")
    c.add_argument("config")
    c.add_argument("--trials", type=int, default=10_000)
    c.add_argument("--n-b", type=int, default=None, help="override the config's number of symbols")
    c.add_argument("--out")
    common(c)
    c.set_defaults(func=cmd_calibrate)

    c = sub.add_parser("pd-curve", help="detection probability vs number of symbols")
    c.add_argument("config")
    c.add_argument("--grid", required=True, help="start:stop:step (inclusive) or a,b,c")
    c.add_argument("--trials", type=int, default=2000)
    c.add_argument("--calibration-trials", type=int, default=10_000)
    c.add_argument("--thresholds", action="append", help="threshold file (repeatable, matched by fingerprint)")
    c.add_argument("--auto-calibrate", action="store_true")
    c.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script")
    c.add_argument("--out")
    common(c)
    c.set_defaults(func=cmd_pd_curve)

    c = sub.add_parser("required", help="symbols needed to reach a target Pd")
    c.add_argument("config", nargs="?")
    c.add_argument("--batch", action="store_true", help="run every bundled reference case")
    c.add_argument("--detector", default="R3")
    c.add_argument("--target-pd", type=float, default=0.9)
    c.add_argument("--trials", type=int, default=2000)
    c.add_argument("--calibration-trials", type=int, default=10_000)
    c.add_argument("--cap", type=int, default=1000)
    c.add_argument("--resolution", type=int, default=10)
    c.add_argument("--out")
    common(c)
    c.set_defaults(func=cmd_required)

    c = sub.add_parser("analyze", help="closed-form timing / OSNMA / coherence calculators")
    asub = c.add_subparsers(dest="what", required=True)
    a = asub.add_parser("timing")
    a.add_argument("--cn0", type=float, required=True)
    a.add_argument("--pe", type=float, required=True)
    a.add_argument("--stability", type=float, default=1e-7)
    a.add_argument("--out")
    a = asub.add_parser("osnma")
    a.add_argument("--duration", type=float, required=True)
    a.add_argument("--key-unpredictable", action="store_true")
    a.add_argument("--required", type=int)
    a.add_argument("--out")
    a = asub.add_parser("coherence")
    g = a.add_mutually_exclusive_group(required=True)
    g.add_argument("--speed-kmh", type=float)
    g.add_argument("--speed-mps", type=float)
    a.add_argument("--carrier-hz", type=float, default=1.57542e9)
    a.add_argument("--out")
    c.set_defaults(func=cmd_analyze)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("invalid configuration:", file=sys.stderr)
        for e in exc.errors:
            print(f"  {e}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FingerprintMismatch, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
