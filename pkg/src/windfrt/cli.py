"""Command-line front end: scenario execution, CSV/report emission, envelope checks.

Subcommands: run, compare, check, sweep.  Reports are JSON (self-contained:
config echo + tool version + metrics + verdicts); time series are CSV with
units embedded in the headers, written at full round-trip precision.
"""

from __future__ import annotations

import argparse
import copy
import itertools
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .config import ScenarioConfig, paper_preset, parse_config
from .errors import ConfigError, InvalidInputError
from .network import FaultSpec
from .sim import FrtEnvelope, Scenario, TimeSeries, compute_metrics, grid_code_check, run_scenario


def write_csv(ts: TimeSeries, path: str) -> None:
    """One header row (name[unit]) then one row per sample; repr() floats so
    re-parsing reproduces the values exactly."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(ts.header()) + "\n")
            names = [name for name, _ in ts.columns]
            cols = [ts[name] for name in names]
            for row in zip(*cols):
                fh.write(",".join(repr(float(x)) for x in row) + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write CSV '{path}': {exc}") from exc


def read_csv(path: str) -> TimeSeries:
    """Parse a CSV produced by write_csv (or any file with name[unit] headers)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    except OSError as exc:
        raise ConfigError(f"cannot read CSV '{path}': {exc}") from exc
    if not lines:
        raise ConfigError(f"CSV '{path}' is empty")
    header = lines[0].split(",")
    columns = []
    for h in header:
        if "[" in h and h.endswith("]"):
            name, unit = h[:-1].split("[", 1)
        else:
            name, unit = h, ""
        columns.append((name, unit))
    values = [[] for _ in columns]
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(columns):
            raise ConfigError(f"CSV '{path}': row width {len(parts)} != header width {len(columns)}")
        for k, part in enumerate(parts):
            values[k].append(float(part))
    data = {name: np.asarray(vals, dtype=float) for (name, _), vals in zip(columns, values)}
    return TimeSeries(tuple(columns), data)


def _apply_overrides(tree: dict, overrides: list[str]) -> dict:
    """Apply dotted-path key=value overrides onto a configuration tree."""
    out = copy.deepcopy(tree)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' must look like section.key=value")
        key, raw = item.split("=", 1)
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            if p not in node or not isinstance(node[p], dict):
                raise ConfigError(f"unknown configuration key '{key}'")
            node = node[p]
        if parts[-1] not in node:
            raise ConfigError(f"unknown configuration key '{key}'")
        node[parts[-1]] = json.loads(raw) if raw not in ("",) else None
    return out


def _load_config(args) -> ScenarioConfig:
    if getattr(args, "config", None):
        cfg = parse_config(args.config)
    else:
        cfg = paper_preset()  # --preset paper is the only bundled preset
        if getattr(args, "preset", "paper") != "paper":
            raise ConfigError(f"unknown preset '{args.preset}'")
    overrides = getattr(args, "set", None) or []
    if overrides:
        cfg = ScenarioConfig.from_dict(_apply_overrides(cfg.tree, overrides))
    return cfg


def _report_for(ts: TimeSeries, scn: Scenario, cfg: ScenarioConfig, csv_name: str) -> dict:
    metrics = compute_metrics(ts, scn.fault)
    verdict = grid_code_check(ts, scn.envelope, scn.fault)
    audit = ts.energy
    return {
        "scenario": ts.meta.get("name", scn.name),
        "statcom_enabled": scn.statcom_enabled,
        "expect_unstable": scn.expect_unstable,
        "metrics": metrics.to_dict(),
        "grid_code": {
            "passed": verdict.passed,
            "truncated": verdict.truncated,
            "violations": [
                {"t": v.t, "v_pu": v.v_pu, "bound": v.bound, "margin": v.margin}
                for v in verdict.violations[:25]
            ],
            "violation_count": len(verdict.violations),
        },
        "events": [{"t": e.t, "kind": e.kind, "detail": e.detail} for e in ts.events],
        "energy": {
            "mismatch_j": audit.mismatch(),
            "relative_mismatch": audit.relative_mismatch(),
            "throughput_j": audit.throughput(),
        },
        "reference_limit_violations": ts.limit_violations,
        "diverged": ts.diverged,
        "source_voltage_v": ts.meta.get("e_source"),
        "csv": csv_name,
    }


def _emit(report: dict, cfg: ScenarioConfig, out_dir: str, stem: str) -> None:
    report_full = {"tool": "windfrt", "version": __version__, "config": cfg.tree, **report}
    path = os.path.join(out_dir, f"{stem}.report.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_full, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_one(cfg: ScenarioConfig, out_dir: str, verbose: bool,
             statcom_enabled: bool | None = None, name: str | None = None) -> tuple[TimeSeries, Scenario, dict]:
    scn = cfg.build_scenario(statcom_enabled=statcom_enabled, name=name, verbose=verbose)
    ts = run_scenario(scn)
    os.makedirs(out_dir, exist_ok=True)
    stem = ts.meta["name"]
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    write_csv(ts, csv_path)
    report = _report_for(ts, scn, cfg, os.path.basename(csv_path))
    return ts, scn, report


def cmd_run(args) -> int:
    cfg = _load_config(args)
    ts, scn, report = _run_one(cfg, args.out, args.verbose)
    _emit(report, cfg, args.out, ts.meta["name"])
    verdict = "PASS" if report["grid_code"]["passed"] else "FAIL"
    print(f"{ts.meta['name']}: grid-code {verdict}, "
          f"v in [{report['metrics']['v_min_pu']:.3f}, {report['metrics']['v_max_pu']:.3f}] pu, "
          f"recovery {report['metrics']['recovery_time_s']:.3f} s, "
          f"events {len(report['events'])}")
    if ts.diverged and not scn.expect_unstable:
        print("unexpected divergence", file=sys.stderr)
        return 1
    return 0


def cmd_compare(args) -> int:
    """Run the with/without-STATCOM pair on the same configuration."""
    cfg = _load_config(args)
    base = cfg.tree["scenario"]["name"]
    ts_on, scn_on, rep_on = _run_one(cfg, args.out, args.verbose, True, f"{base}_with_statcom")
    ts_off, scn_off, rep_off = _run_one(cfg, args.out, args.verbose, False, f"{base}_without_statcom")
    # Reproducing the published negative result: the unsupported case is
    # allowed (expected, even) to misbehave.
    m_on = rep_on["metrics"]
    m_off = rep_off["metrics"]
    ratio = math.inf
    if m_on["post_fault_max_deviation_pu"] and not math.isnan(m_on["post_fault_max_deviation_pu"]):
        ratio = m_off["max_deviation_pu"] / max(m_on["post_fault_max_deviation_pu"], 1e-12)
    comparison = {
        "with_statcom": rep_on,
        "without_statcom": rep_off,
        "deviation_ratio_without_over_with_post_fault": ratio,
    }
    _emit(comparison, cfg, args.out, f"{base}_compare")
    for rep in (rep_on, rep_off):
        verdict = "PASS" if rep["grid_code"]["passed"] else "FAIL"
        print(f"{rep['scenario']}: grid-code {verdict}, max deviation "
              f"{rep['metrics']['max_deviation_pu']:.3f} pu, diverged={rep['diverged']}")
    print(f"deviation ratio (without / with, post-fault): {ratio:.2f}")
    if ts_on.diverged:
        print("unexpected divergence in the supported case", file=sys.stderr)
        return 1
    return 0


def cmd_check(args) -> int:
    """Grid-code verdict for an externally supplied CSV trace."""
    cfg = _load_config(args)
    scn = cfg.build_scenario()
    ts = read_csv(args.trace)
    if "pcc_v" not in ts.data or "time" not in ts.data:
        raise ConfigError("trace must contain 'time' and 'pcc_v' columns")
    verdict = grid_code_check(ts, scn.envelope, scn.fault)
    if verdict.passed:
        print("grid-code check: PASS")
        return 0
    print(f"grid-code check: FAIL ({len(verdict.violations)} violating samples)")
    for v in verdict.violations[:20]:
        print(f"  t={v.t:.4f}s v={v.v_pu:.4f}pu bound={v.bound:.2f} margin={v.margin:+.4f}")
    return 1


def cmd_sweep(args) -> int:
    """Cartesian parameter grid over --set key=v1,v2,... overrides."""
    cfg = _load_config(args)
    axes = []
    for item in args.values:
        if "=" not in item:
            raise ConfigError(f"sweep axis '{item}' must look like section.key=v1,v2,...")
        key, raw = item.split("=", 1)
        axes.append((key, raw.split(",")))
    os.makedirs(args.out, exist_ok=True)
    summary = []
    status = 0
    for combo in itertools.product(*[vals for _, vals in axes]):
        overrides = [f"{key}={val}" for (key, _), val in zip(axes, combo)]
        sub = ScenarioConfig.from_dict(_apply_overrides(cfg.tree, overrides))
        tag = "_".join(v.replace(".", "p") for v in combo)
        name = f"{cfg.tree['scenario']['name']}_sweep_{tag}"
        ts, scn, report = _run_one(sub, args.out, False, name=name)
        _emit(report, sub, args.out, name)
        summary.append({"overrides": overrides, "metrics": report["metrics"],
                        "grid_code_passed": report["grid_code"]["passed"]})
        if ts.diverged and not scn.expect_unstable:
            status = 1
        print(f"{name}: v_min={report['metrics']['v_min_pu']:.3f} "
              f"v_max={report['metrics']['v_max_pu']:.3f} "
              f"grid-code={'PASS' if report['grid_code']['passed'] else 'FAIL'}")
    with open(os.path.join(args.out, "sweep_summary.json"), "w", encoding="utf-8") as fh:
        json.dump({"tool": "windfrt", "version": __version__, "runs": summary}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="windfrt",
        description="Fixed-speed wind generator + STATCOM fault-ride-through simulator",
    )
    parser.add_argument("--version", action="version", version=f"windfrt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="scenario configuration file (JSON)")
        p.add_argument("--preset", default="paper", help="bundled preset name (default: paper)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--verbose", action="store_true", help="record controller internals")
        p.add_argument("--seed", type=int, default=None,
                       help="reserved; the simulator has no stochastic components")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a configuration key (JSON value), repeatable")

    p_run = sub.add_parser("run", help="run one scenario")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="run the with/without-STATCOM pair")
    common(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)

    p_chk = sub.add_parser("check", help="grid-code verdict for a CSV trace")
    common(p_chk)
    p_chk.add_argument("trace", help="CSV file with time and pcc_v columns")
    p_chk.set_defaults(func=cmd_check)

    p_swp = sub.add_parser("sweep", help="parameter grid")
    common(p_swp)
    p_swp.add_argument("values", nargs="+", metavar="KEY=V1,V2,...",
                       help="sweep axes (cartesian product)")
    p_swp.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
