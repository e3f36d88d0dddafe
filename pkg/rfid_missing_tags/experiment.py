"""
Repeated-trial runner.

Trial k of an experiment draws all of its randomness from
SeedSequence(master_seed, spawn_key=(k,)): the inventory, the protocol
seeds and the channel impairments. Trials are independent of each other
and of execution order, so they can run in worker processes and be
aggregated in index order.
"""

from __future__ import annotations

from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass

import numpy as np

from .baseline import run_edfsa
from .config import ConfigError, ExperimentConfig
from .core import IdentificationResult, make_inventory
from .ismti import run_ismti
from .ssmti import run_ssmti

CSV_COLUMNS = (
    "protocol", "n", "q", "w", "p", "detect_err", "capture", "trials",
    "mean_ms", "std_ms", "mean_reader_bits", "mean_tag_bits", "mean_slots", "accuracy",
)


@dataclass(frozen=True)
class TrialReport:
    config: ExperimentConfig
    trials: int
    mean_ms: float
    std_ms: float
    mean_reader_bits: float
    mean_tag_bits: float
    mean_slots: float
    mean_rounds: float
    accuracy: float
    false_positives: int
    false_negatives: int

    def row(self) -> dict[str, object]:
        c = self.config
        return {
            "protocol": c.protocol,
            "n": c.n,
            "q": c.missing_rate,
            "w": c.w,
            "p": "" if c.p_override is None else c.p_override,
            "detect_err": c.detect_err,
            "capture": c.capture,
            "trials": self.trials,
            "mean_ms": f"{self.mean_ms:.4f}",
            "std_ms": f"{self.std_ms:.4f}",
            "mean_reader_bits": f"{self.mean_reader_bits:.2f}",
            "mean_tag_bits": f"{self.mean_tag_bits:.2f}",
            "mean_slots": f"{self.mean_slots:.2f}",
            "accuracy": f"{self.accuracy:.6f}",
        }


def trial_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(index,))


def run_trial(config: ExperimentConfig, index: int) -> IdentificationResult:
    """One seeded protocol run for a single-valued configuration."""
    inventory_seed, protocol_seed, channel_seed = (
        int(s) for s in trial_seed(config.master_seed, index).generate_state(3, dtype=np.uint64)
    )
    inventory = make_inventory(config.n, config.missing_rate, inventory_seed)
    channel = config.channel(rng_seed=channel_seed)
    rng = np.random.default_rng(protocol_seed)

    if config.protocol == "ssmti":
        return run_ssmti(inventory, config.w, channel, rng, load_factor=config.p_override)
    if config.protocol == "ismti":
        return run_ismti(
            inventory, config.w, channel, rng,
            q_prior=config.q_prior,
            missing_rate_oracle=config.missing_rate_oracle,
            load_factor=config.p_override,
        )
    if config.protocol == "edfsa":
        return run_edfsa(inventory, rng)
    raise ConfigError(f"unknown protocol {config.protocol!r}")


def _aggregate(config: ExperimentConfig, results: list[IdentificationResult]) -> TrialReport:
    elapsed = np.array([r.elapsed_ms for r in results])
    return TrialReport(
        config=config,
        trials=len(results),
        mean_ms=float(elapsed.mean()),
        std_ms=float(elapsed.std()),
        mean_reader_bits=float(np.mean([r.reader_bits for r in results])),
        mean_tag_bits=float(np.mean([r.tag_bits for r in results])),
        mean_slots=float(np.mean([r.slots_used for r in results])),
        mean_rounds=float(np.mean([r.rounds for r in results])),
        accuracy=float(np.mean([r.accuracy for r in results])),
        false_positives=sum(r.false_positives for r in results),
        false_negatives=sum(r.false_negatives for r in results),
    )


def run_experiment(
    config: ExperimentConfig,
    on_trial: Callable[[int, int], None] | None = None,
) -> TrialReport:
    """
    Run config.trials independent trials and aggregate them.

    With workers > 1 the trials run in a process pool. *on_trial* is called
    as ``on_trial(done, total)`` after each finished trial.
    """
    if config.is_ranged:
        raise ConfigError("configuration has ranged axes; use sweep()")

    total = config.trials
    results: list[IdentificationResult | None] = [None] * total

    if config.workers == 1:
        for index in range(total):
            results[index] = run_trial(config, index)
            if on_trial:
                on_trial(index + 1, total)
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            future_to_index = {
                executor.submit(run_trial, config, index): index for index in range(total)
            }
            for done, future in enumerate(as_completed(future_to_index), 1):
                results[future_to_index[future]] = future.result()
                if on_trial:
                    on_trial(done, total)

    return _aggregate(config, results)


def sweep(
    config: ExperimentConfig,
    on_cell: Callable[[int, int, ExperimentConfig], None] | None = None,
    on_trial: Callable[[int, int], None] | None = None,
) -> list[TrialReport]:
    """One TrialReport per cell of the Cartesian product of the config's axes."""
    cells = list(config.cells())
    if not cells:
        raise ConfigError("sweep has no cells (an axis is empty)")
    reports = []
    for i, cell in enumerate(cells, 1):
        if on_cell:
            on_cell(i, len(cells), cell)
        reports.append(run_experiment(cell, on_trial=on_trial))
    return reports
