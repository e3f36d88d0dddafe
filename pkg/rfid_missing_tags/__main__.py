"""
CLI entry point.

Usage:
    python -m rfid_missing_tags run --protocol ssmti --n 10000 -q 0.1 --trials 500
    python -m rfid_missing_tags run --config experiment.cfg --output result.csv
    python -m rfid_missing_tags sweep --protocol ismti -q 0.1:0.9:0.1 --output q_sweep.csv
    python -m rfid_missing_tags sweep --protocol ssmti --w 8,16,32,64,96 --dry-run
    python -m rfid_missing_tags optimize --protocol ismti --output curve.csv
    python -m rfid_missing_tags trace --protocol ssmti --n 20 -q 0.25 --seed 7
    python -m rfid_missing_tags trace --inventory tags.txt --protocol ismti

Exit codes: 0 success, 1 configuration error, 2 I/O error.
"""

import argparse
import sys

from . import __version__
from .analysis import (
    PRINTED_STRING_SLOT_MS,
    REFERENCE_TIMES_S,
    efficiency_curve,
    ismti_p_opt,
    ssmti_arrangement_cost,
    ssmti_p_opt,
    ssmti_predicted_time,
)
from .baseline import run_edfsa
from .config import ConfigError, ExperimentConfig, parse_range, resolve_experiment_config
from .core import InvalidParameterError, make_inventory, read_inventory, write_inventory
from .experiment import TrialReport, run_experiment, sweep
from .exporter import check_output_path, write_curve_csv, write_report_csv
from .ismti import run_ismti
from .ssmti import run_ssmti

EXIT_CONFIG_ERROR = 1
EXIT_IO_ERROR = 2


def _print_banner(mode: str, config: ExperimentConfig, dry_run: bool = False) -> None:
    """Print a startup banner with run configuration."""
    print()
    print("=" * 60)
    print(f"  RFID Missing-Tag Simulator v{__version__}")
    print("=" * 60)
    print(f"  Mode:         {mode}")
    print(f"  Protocol:     {config.protocol}")
    print(f"  N:            {config.n}")
    print(f"  Missing rate: {config.missing_rate}")
    print(f"  w:            {config.w}")
    print(f"  Load factor:  {'optimal' if config.p_override is None else config.p_override}")
    if config.detect_err or config.capture:
        print(f"  Channel:      detect_err={config.detect_err} capture={config.capture}")
    print(f"  Trials:       {config.trials} (seed {config.master_seed}, {config.workers} worker(s))")
    print(f"  Output:       {config.output or '(stdout)'}")
    if dry_run:
        print(f"  Dry run:      YES (no files will be written)")
    print("=" * 60)
    print()


def _print_summary(report: TrialReport) -> None:
    """Print the aggregates of one configuration cell."""
    c = report.config
    print(f"  {c.protocol}  N={c.n}  q={c.missing_rate}  w={c.w}")
    print(f"    Time:     {report.mean_ms:.2f} ms (std {report.std_ms:.2f})")
    print(f"    Reader:   {report.mean_reader_bits:.0f} bits")
    print(f"    Tags:     {report.mean_tag_bits:.0f} bits")
    print(f"    Slots:    {report.mean_slots:.1f}")
    print(f"    Rounds:   {report.mean_rounds:.1f}")
    print(f"    Accuracy: {report.accuracy:.6f} (FP {report.false_positives}, FN {report.false_negatives})")
    print()


def _progress(done: int, total: int) -> None:
    if done == total or done % max(1, total // 10) == 0:
        print(f"[experiment] {done}/{total} trials")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def run_run(config: ExperimentConfig, dry_run: bool = False) -> TrialReport:
    """Run one configuration and write its CSV row."""
    if not dry_run:
        check_output_path(config.output)
    _print_banner("Run", config, dry_run)
    report = run_experiment(config, on_trial=_progress)
    print()
    print("--- Summary ---")
    _print_summary(report)
    write_report_csv([report], config.output, dry_run=dry_run)

    print()
    print("=" * 60)
    print("  Run complete!")
    print("=" * 60)
    return report


def run_sweep(config: ExperimentConfig, dry_run: bool = False) -> list[TrialReport]:
    """Run every cell of a ranged configuration."""
    if not dry_run:
        check_output_path(config.output)
    _print_banner("Sweep", config, dry_run)

    def on_cell(i: int, total: int, cell: ExperimentConfig) -> None:
        print()
        print(f"{'─' * 60}")
        print(f"  Cell {i}/{total}: N={cell.n} q={cell.missing_rate} w={cell.w} "
              f"p={cell.p_override} detect_err={cell.detect_err} capture={cell.capture}")
        print(f"{'─' * 60}")

    reports = sweep(config, on_cell=on_cell, on_trial=_progress)
    print()
    print("--- Sweep Summary ---")
    for report in reports:
        _print_summary(report)
    write_report_csv(reports, config.output, dry_run=dry_run)

    print()
    print("=" * 60)
    print(f"  Sweep complete! {len(reports)} cell(s)")
    print("=" * 60)
    return reports


def run_optimize(
    protocol: str,
    p_range: str,
    q_range: str,
    n: int,
    output: str | None,
    dry_run: bool = False,
) -> None:
    """Report optimal load factors and dump efficiency curves."""
    ps = parse_range(p_range, float)
    qs = parse_range(q_range, float)
    if min(ps) <= 0:
        raise ConfigError(f"load factors must be > 0, got {p_range!r}")

    print()
    print("=" * 60)
    print(f"  Load-factor optimization ({protocol})")
    print("=" * 60)

    points = []
    if protocol in ("ssmti", "both"):
        p_opt = ssmti_p_opt()
        print(f"[optimize] SSMTI p_opt = {p_opt:.4f} (f2 = N*/{p_opt:.2f})")
        print(f"[optimize] SSMTI arrangement cost = {ssmti_arrangement_cost():.4f} ms/tag")
        print(f"[optimize] SSMTI predicted time at N={n}: "
              f"{ssmti_predicted_time(n):.1f} ms "
              f"({ssmti_predicted_time(n, string_slot_ms=PRINTED_STRING_SLOT_MS):.1f} ms "
              f"with {PRINTED_STRING_SLOT_MS} ms string slots)")
        points.extend(efficiency_curve("ssmti", ps))
    if protocol in ("ismti", "both"):
        for q in qs:
            print(f"[optimize] ISMTI q={q:.3f}  p_opt = {ismti_p_opt(q):.4f}")
        points.extend(efficiency_curve("ismti", ps, qs))

    print()
    print("--- Reference times at N=10000, q=0.1 ---")
    for name, seconds in REFERENCE_TIMES_S.items():
        print(f"  {name:<8} {seconds:6.2f} s")
    print()

    write_curve_csv(points, output, dry_run=dry_run)


def run_trace(
    config: ExperimentConfig,
    inventory_path: str | None = None,
    save_inventory: str | None = None,
) -> None:
    """Single seeded run printing one [trace] line per round."""
    if config.is_ranged:
        raise ConfigError("trace runs a single configuration; drop the ranges")
    if inventory_path:
        inventory = read_inventory(inventory_path)
        print(f"[trace] Loaded {inventory.n} tags ({inventory.m} missing) from {inventory_path}")
    else:
        inventory = make_inventory(config.n, config.missing_rate, config.master_seed)
    if save_inventory:
        write_inventory(inventory, save_inventory)
        print(f"[trace] Saved inventory to {save_inventory}")

    channel = config.channel(rng_seed=config.master_seed)

    def on_round(record) -> None:
        print(f"[trace] {config.protocol} {record.as_trace()}")

    def on_frame(frame) -> None:
        print(f"[trace] edfsa round={frame.round} frame={frame.frame} empty={frame.empty} "
              f"singleton={frame.singleton} collision={frame.collision} ms={frame.elapsed_ms:.3f}")

    if config.protocol == "ssmti":
        result = run_ssmti(inventory, config.w, channel, config.master_seed,
                           load_factor=config.p_override, on_round=on_round)
    elif config.protocol == "ismti":
        result = run_ismti(inventory, config.w, channel, config.master_seed,
                           q_prior=config.q_prior,
                           missing_rate_oracle=config.missing_rate_oracle,
                           load_factor=config.p_override, on_round=on_round)
    else:
        result = run_edfsa(inventory, config.master_seed, on_frame=on_frame)

    print()
    print("--- Trace Summary ---")
    print(f"  Protocol:  {result.protocol}")
    print(f"  Tags:      {result.n} ({len(result.identified_missing)} identified missing)")
    print(f"  Time:      {result.elapsed_ms:.3f} ms")
    print(f"  Rounds:    {result.rounds}")
    print(f"  Bits:      reader {result.reader_bits}, tags {result.tag_bits}")
    print(f"  Accuracy:  {result.accuracy:.6f} "
          f"(FP {result.false_positives}, FN {result.false_negatives})")
    print()


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _add_experiment_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file (CLI flags win over it)", default=None)
    parser.add_argument("--protocol", choices=["ssmti", "ismti", "edfsa"], default=None)
    parser.add_argument("--n", help="candidate tags, e.g. 10000 or 1000,5000,10000", default=None)
    parser.add_argument("-q", "--missing-rate", dest="missing_rate",
                        help="missing rate, e.g. 0.1 or 0.1:0.9:0.1", default=None)
    parser.add_argument("--w", help="string length in bits (1-96)", default=None)
    parser.add_argument("--p", dest="p_override", help="fixed load factor instead of the optimum", default=None)
    parser.add_argument("--detect-err", dest="detect_err", help="per-tag detection error probability", default=None)
    parser.add_argument("--capture", help="per-slot capture probability", default=None)
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--seed", dest="master_seed", type=int, default=None)
    parser.add_argument("--output", help="CSV output path", default=None)
    parser.add_argument("--workers", type=int, help="worker processes for trials", default=None)
    parser.add_argument("--q-prior", dest="q_prior", type=float, default=None,
                        help="initial missing-rate guess for ISMTI (default 0.5)")
    parser.add_argument("--given-rate", dest="missing_rate_oracle", action="store_const", const=True,
                        default=None, help="size ISMTI frames with the true missing rate")
    parser.add_argument("--dry-run", action="store_true", help="print CSV rows instead of writing files")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfid_missing_tags",
        description="Simulate and analyse string-based RFID missing-tag identification",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_experiment_args(sub.add_parser("run", help="run repeated trials of one configuration"))
    _add_experiment_args(sub.add_parser("sweep", help="run every cell of ranged axes"))

    opt = sub.add_parser("optimize", help="optimal load factors and efficiency curves")
    opt.add_argument("--protocol", choices=["ssmti", "ismti", "both"], default="both")
    opt.add_argument("--p-range", default="0.1:10:0.1", help="load factors to sample")
    opt.add_argument("--q-range", default="0:0.9:0.1", help="missing rates for ISMTI curves")
    opt.add_argument("--n", type=int, default=10_000, help="N for the predicted SSMTI time")
    opt.add_argument("--output", default=None, help="CSV output path")
    opt.add_argument("--dry-run", action="store_true")

    trace = sub.add_parser("trace", help="one seeded run with per-round logs")
    _add_experiment_args(trace)
    trace.add_argument("--inventory", default=None, help="read the inventory from this file")
    trace.add_argument("--save-inventory", default=None, help="write the inventory to this file")
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, object]:
    keys = ("protocol", "n", "missing_rate", "w", "p_override", "detect_err", "capture",
            "trials", "master_seed", "output", "workers", "q_prior", "missing_rate_oracle")
    return {key: getattr(args, key) for key in keys}


def main(argv: list[str] | None = None) -> None:
    args = _build_parser().parse_args(argv)

    try:
        if args.command == "optimize":
            run_optimize(args.protocol, args.p_range, args.q_range, args.n, args.output, args.dry_run)
            return

        config = resolve_experiment_config(_overrides(args), args.config)
        if args.command == "run":
            run_run(config, dry_run=args.dry_run)
        elif args.command == "sweep":
            run_sweep(config, dry_run=args.dry_run)
        else:
            run_trace(config, args.inventory, args.save_inventory)
    except (ConfigError, InvalidParameterError) as e:
        print(f"[error] {e}")
        sys.exit(EXIT_CONFIG_ERROR)
    except OSError as e:
        print(f"[error] {e}")
        sys.exit(EXIT_IO_ERROR)


if __name__ == "__main__":
    main()
