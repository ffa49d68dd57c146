"""Command line entry point: ``mmwsim pattern-cut | run | sweep``.

Exit codes: 0 success, 2 configuration or usage error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from contextlib import contextmanager
from pathlib import Path

from .antenna import AmplitudeProfile, Direction, export_pattern_cut, make_weights, write_pattern_cut
from .channel import ConfigurationError
from .config import ConfigError, env_overrides, load_config, parse_bits, scenario_to_dict
from .sim import PATTERNS, RunResult, Scenario, sweep_bits

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _floats(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("list is empty")
    return vals


def _bits_list(text: str):
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("list is empty")
    try:
        return [parse_bits(t) for t in items]
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _patterns(text: str) -> list[str]:
    items = [t.strip().lower() for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("list is empty")
    bad = [p for p in items if p not in PATTERNS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown pattern(s) {bad}; choose from {PATTERNS}")
    return items


def _quantiles(text: str) -> list[float]:
    qs = _floats(text)
    if any(not 0 < q < 1 for q in qs):
        raise argparse.ArgumentTypeError("quantiles must lie in (0, 1)")
    return qs


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML/JSON scenario file")
    common.add_argument("--seed", type=int)
    common.add_argument("--drops", type=int)
    common.add_argument("--out", type=Path, help="output path (default: stdout)")
    common.add_argument("--pattern", choices=PATTERNS)
    common.add_argument("--pattern-file", help="tabulated pattern CSV")
    common.add_argument("--threads", type=int, help="worker threads (env MMWSIM_THREADS)")

    p = argparse.ArgumentParser(prog="mmwsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    cut = sub.add_parser("pattern-cut", parents=[common], help="horizontal cut of the BS array pattern")
    cut.add_argument("--steer", type=_floats, default=[0.0], help="steering azimuth(s), degrees")
    cut.add_argument("--theta", type=float, default=90.0)
    cut.add_argument("--phi-step", type=float, default=1.0)
    cut.add_argument("--bits", type=parse_bits, default=None)

    run = sub.add_parser("run", parents=[common], help="Monte Carlo drops for one scenario")
    run.add_argument("--density", type=float, help="BS per km^2")
    run.add_argument("--bits", type=_bits_list, help="comma list, e.g. 3,4,8,inf")
    run.add_argument("--quantiles", type=_quantiles, default=[0.05, 0.5])
    run.add_argument("--ecdf-csv", type=Path, help="write every ECDF sample here")

    sw = sub.add_parser("sweep", parents=[common], help="density or resolution sweep")
    sw.add_argument("--densities", type=_floats, help="comma list of BS per km^2")
    sw.add_argument("--patterns", type=_patterns)
    sw.add_argument("--bits", type=_bits_list)
    sw.add_argument("--quantiles", type=_quantiles, default=[0.05, 0.5])
    return p


def _scenario(args) -> Scenario:
    s = load_config(args.config) if args.config else Scenario()
    over = env_overrides()
    for key in ("seed", "drops", "pattern"):
        val = getattr(args, key, None)
        if val is not None:
            over[key] = val
    if args.pattern_file is not None:
        over["pattern_file"] = args.pattern_file
    if getattr(args, "density", None) is not None:
        over["density"] = args.density
    try:
        s = s.with_(**over)
    except ConfigurationError as exc:
        raise ConfigError(str(exc)) from None
    s.element_model  # surface pattern file problems as config errors
    return s


@contextmanager
def _output(path: Path | None):
    if path is None:
        yield sys.stdout
        return
    buf = io.StringIO()
    yield buf
    try:
        path.write_text(buf.getvalue())
    except OSError as exc:
        raise RuntimeError(f"cannot write {path}: {exc.strerror or exc}") from None


def _finite(x):
    return float(x) if math.isfinite(x) else None


def _qkey(q: float) -> str:
    return f"q{q * 100:g}".replace(".", "p")


def _summary(r: RunResult, quantiles) -> dict:
    out = {
        "drops": len(r.drops),
        "n_sinr_samples": len(r.sinr),
        "outage_count": r.sinr.outage_count,
        "outage_fraction": r.outage_fraction,
        "bits": "inf" if r.scenario.bits is None else r.scenario.bits,
        "density_per_km2": r.scenario.density,
        "pattern": r.scenario.pattern,
    }
    if len(r.inr):
        out["noise_limited_probability"] = r.p_nl
        for q in quantiles:
            out[f"sinr_{_qkey(q)}_db"] = _finite(r.sinr.quantile(q))
            out[f"inr_{_qkey(q)}_db"] = _finite(r.inr.quantile(q))
    return out


def cmd_pattern_cut(args) -> int:
    s = _scenario(args)
    cfg, model = s.bs_cfg, s.element_model
    amp = AmplitudeProfile.uniform(cfg.n)
    with _output(args.out) as fh:
        if len(args.steer) == 1:
            w = make_weights(cfg, Direction(90.0, args.steer[0]), args.bits)
            write_pattern_cut(export_pattern_cut(model, cfg, amp, w, args.theta, args.phi_step), fh)
        else:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["steer_deg", "phi_deg", "element_db", "af_db", "array_db"])
            for steer in args.steer:
                w = make_weights(cfg, Direction(90.0, steer), args.bits)
                for row in export_pattern_cut(model, cfg, amp, w, args.theta, args.phi_step):
                    writer.writerow([f"{steer:g}", f"{row['phi_deg']:.6g}"]
                                    + [f"{row[k]:.6f}" for k in ("element_db", "af_db", "array_db")])
    return 0


def _write_ecdf(path: Path, results: list[RunResult]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["pattern", "density_per_km2", "bits", "metric", "value_db", "cdf"])
    for r in results:
        bits = "inf" if r.scenario.bits is None else r.scenario.bits
        for name, series in (("sinr", r.sinr), ("inr", r.inr)):
            n = len(series)
            for i, v in enumerate(series.samples, start=1):
                w.writerow([r.scenario.pattern, f"{r.scenario.density:g}", bits, name, f"{v:.6f}", f"{i / n:.6f}"])
    try:
        path.write_text(buf.getvalue())
    except OSError as exc:
        raise RuntimeError(f"cannot write {path}: {exc.strerror or exc}") from None


def cmd_run(args) -> int:
    s = _scenario(args)
    bits_list = args.bits if args.bits else [s.bits]
    results = list(sweep_bits(s, bits_list, args.threads).values())
    doc = {
        "scenario": scenario_to_dict(s),
        "results": [_summary(r, args.quantiles) for r in results],
    }
    with _output(args.out) as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    if args.ecdf_csv:
        _write_ecdf(args.ecdf_csv, results)
    return 0


def cmd_sweep(args) -> int:
    s = _scenario(args)
    if args.densities is None and args.bits is None:
        raise ConfigError("sweep needs --densities and/or --bits")
    densities = args.densities or [s.density]
    patterns = args.patterns or [s.pattern]
    bits_list = args.bits or [s.bits]
    cols = ["pattern", "density_per_km2", "bits", "drops", "noise_limited_probability", "outage_fraction"]
    cols += [f"sinr_{_qkey(q)}_db" for q in args.quantiles]
    rows = []
    for pattern in patterns:
        for density in densities:
            for b, r in sweep_bits(s.with_(pattern=pattern, density=density), bits_list, args.threads).items():
                summ = _summary(r, args.quantiles)
                rows.append([summ.get(c) for c in cols])
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow(["" if v is None else (f"{v:.6g}" if isinstance(v, float) else v) for v in row])
    return 0


COMMANDS = {"pattern-cut": cmd_pattern_cut, "run": cmd_run, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads is None:
            from .sim import default_threads

            try:
                args.threads = default_threads()
            except ValueError:
                raise ConfigError("MMWSIM_THREADS: not an integer") from None
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"mmwsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, OSError, ValueError) as exc:
        print(f"mmwsim: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
