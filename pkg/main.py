"""
vortexline — LIA/LLIA vortex-filament simulator and diagnostics

CLI entry point, one subcommand per scenario:
  1. Read and validate the scenario document (TOML)
  2. Python: run the scenario (steppers, observables, kernels, Biot–Savart)
  3. Python: post-run plausibility checks
  4. Python: timeseries.csv, metadata.json, report.md, ψ snapshots

Exit codes: 0 success, 1 config/validation error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

SCENARIOS = {
    "evolve": "evolve a filament with the linear or nonlinear stepper",
    "dispersion": "tabulate (and optionally measure) ω_n and ω_l over a sweep",
    "validity": "characteristic time T₀ and the LLIA amplitude bound",
    "observables": "V, p_z, L_z, H, ħ_eff, m_eff and operator identities of one state",
    "propagate": "path-integral kernel vs. spectral evolution",
    "biot-savart-compare": "direct Biot–Savart velocity vs. the LIA law on a helix",
    "phase-divergence": "linear/nonlinear phase gap of a Kelvin wave over time",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="vortexline — LIA/LLIA vortex-filament simulator and diagnostics"
    )
    sub = parser.add_subparsers(dest="scenario", required=True, metavar="SCENARIO")
    for tag, help_text in SCENARIOS.items():
        p = sub.add_parser(tag, help=help_text)
        p.add_argument("--config", required=True, help="Path to the scenario document (TOML)")
        p.add_argument("--out", default=None,
                       help="Output directory (default: output.dir, $VORTEXLINE_OUT or ./output)")
        p.add_argument("--workers", type=int, default=None,
                       help="Worker threads for sweeps and Biot–Savart blocks (default: $VORTEXLINE_WORKERS)")
        p.add_argument("--quiet", action="store_true", help="Only log warnings and errors")
        p.add_argument("--verbose", "-v", action="store_true")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    # Setup logging
    if args.quiet:
        level = logging.WARNING
    elif args.verbose:
        level = logging.DEBUG
    else:
        level = logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    logging.getLogger().setLevel(level)
    log = logging.getLogger("vortexline")

    load_dotenv()

    # Imports (after arg parsing so --help is fast)
    from src.config import ConfigError, load_config
    from src.io_readers import read_text
    from src.reporting import write_outputs
    from src.scenarios import run_scenario
    from src.validate import run_checks

    # ── Config ─────────────────────────────────────────────────────────
    try:
        config = load_config(read_text(args.config), scenario=args.scenario)
    except (FileNotFoundError, ConfigError) as exc:
        log.error("%s", exc)
        return 1

    out_dir = Path(args.out or config.output.dir or os.getenv("VORTEXLINE_OUT") or "./output")
    workers = args.workers
    if workers is None and os.getenv("VORTEXLINE_WORKERS"):
        try:
            workers = int(os.environ["VORTEXLINE_WORKERS"])
        except ValueError:
            log.error("VORTEXLINE_WORKERS must be an integer, got %r", os.environ["VORTEXLINE_WORKERS"])
            return 1

    # ── Run ────────────────────────────────────────────────────────────
    try:
        record = run_scenario(config, workers=workers)
        checks = run_checks(record)
        paths = write_outputs(record, out_dir, checks)
    except FileNotFoundError as exc:
        log.error("%s", exc)
        return 1
    except (ValueError, RuntimeError, OSError) as exc:
        log.error("%s", exc)
        return 2

    # Done
    log.info("━━━ Scenario '%s' complete ━━━", config.scenario)
    log.info("  Outputs in: %s (%d files)", out_dir, len(paths))
    return 0


if __name__ == "__main__":
    sys.exit(main())
