"""Command-line entry point.

Runs one experiment mode, writes an RFC 4180 CSV (when the mode is tabular),
a JSON sidecar carrying the resolved config, its hash, and seed/sample
provenance, and a rendered PNG figure next to the CSV.  Exit codes: 0 on
success, 1 on configuration errors, 2 when a built-in check fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .experiments import (
    MODES,
    ConfigError,
    ExperimentResult,
    build_config,
    config_digest,
    run_mode,
)
from .plotting import render_result

__all__ = ["main", "build_parser", "write_outputs"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="misorelay",
        description="Capacity experiments for mean-feedback MISO relaying.",
    )
    parser.add_argument("--mode", choices=MODES, help="experiment to run")
    parser.add_argument("--config", help="path to a flat key = value config file")
    parser.add_argument("--seed", type=int, help="root RNG seed")
    parser.add_argument("--samples", type=int, help="Monte Carlo samples per estimate")
    parser.add_argument("--out", help="output stem (writes <out>.csv/.json/.png)")
    parser.add_argument("--workers", type=int, help="RNG streams per estimate")
    parser.add_argument("--instances", type=int, help="instance count for the order suite")
    parser.add_argument("--plot", dest="plot", action="store_true", default=None,
                        help="render the PNG figure (default)")
    parser.add_argument("--no-plot", dest="plot", action="store_false",
                        help="skip figure rendering")
    return parser


def _format_cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_outputs(result: ExperimentResult, config, out_stem: str) -> dict:
    """Write CSV, JSON sidecar, and figure; returns the written paths."""
    stem = Path(out_stem)
    if stem.parent != Path("."):
        stem.parent.mkdir(parents=True, exist_ok=True)
    paths: dict = {}
    if result.rows:
        csv_path = stem.with_suffix(".csv")
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)  # csv default line terminator is CRLF per RFC 4180
            writer.writerow(result.columns)
            for row in result.rows:
                writer.writerow([_format_cell(row[c]) for c in result.columns])
        paths["csv"] = str(csv_path)
    sidecar = {
        "mode": result.mode,
        "config": config.to_json_dict(),
        "config_sha256": config_digest(config),
        "seed": config.seed,
        "samples": config.n_samples,
        "passed": result.passed,
        "failures": list(result.failures),
        "outputs": {k: Path(v).name for k, v in paths.items()},
    }
    if result.report:
        sidecar["report"] = result.report
    if config.make_plots and result.rows:
        png_path = stem.with_suffix(".png")
        if render_result(result, png_path):
            paths["png"] = str(png_path)
            sidecar["outputs"]["png"] = png_path.name
    json_path = stem.with_suffix(".json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths["json"] = str(json_path)
    return paths


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {
        "mode": args.mode,
        "seed": args.seed,
        "n_samples": args.samples,
        "out": args.out,
        "workers": args.workers,
        "n_instances": args.instances,
        "make_plots": args.plot,
    }
    try:
        config = build_config(args.mode, args.config, overrides)
        result = run_mode(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    out_stem = config.out or f"results/{config.mode}"
    paths = write_outputs(result, config, out_stem)
    for name in ("csv", "png", "json"):
        if name in paths:
            print(f"wrote {paths[name]}")
    if result.failures:
        for failure in result.failures:
            print(f"check failed: {failure}", file=sys.stderr)
        return 2
    print("all built-in checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
