"""
Reference points for the string protocols.

run_edfsa collects every present tag's ID with frame slotted Aloha and calls
the rest missing. oracle_decode recomputes slot readings by brute force for
small instances, independently of the channel module.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Collection, Mapping
from dataclasses import dataclass

import numpy as np

from .channel import BitSymbol, Verdict
from .core import (
    ID_BITS,
    ConsistencyError,
    IdentificationResult,
    InvalidParameterError,
    Inventory,
    TagId,
    draw_seed,
    round_half_up,
    slot_indices,
    tags_at,
)

PROTOCOL = "edfsa"
MAX_FRAMES = 10_000
ORACLE_MAX_TAGS = 64


@dataclass(frozen=True)
class EdfsaConfig:
    """Frame length = frame_factor x unidentified count; per-slot durations in ms."""
    frame_factor: float = 1.0
    empty_slot_ms: float = 0.4
    singleton_slot_ms: float = 2.4
    collision_slot_ms: float = 2.4

    def __post_init__(self):
        if self.frame_factor <= 0:
            raise InvalidParameterError(f"frame factor must be > 0, got {self.frame_factor}")


@dataclass(frozen=True)
class EdfsaFrame:
    round: int
    frame: int
    empty: int
    singleton: int
    collision: int
    elapsed_ms: float


def run_edfsa(
    inventory: Inventory,
    rng: np.random.Generator | int = 0,
    config: EdfsaConfig = EdfsaConfig(),
    on_frame: Callable[[EdfsaFrame], None] | None = None,
) -> IdentificationResult:
    """
    Read IDs frame by frame until a frame comes back completely empty.

    Every frame has one slot per candidate not yet collected. A present tag
    answers in slot H(id, r) mod f + 1 with its full ID; singleton slots
    collect it, collided tags retry in the next frame.
    """
    rng = np.random.default_rng(rng)
    uncollected = np.arange(inventory.n)
    collected: list[TagId] = []
    elapsed = 0.0
    tag_bits = slots_used = 0
    rounds = 0
    warned = False
    round_bound = 10 * math.log2(inventory.n) if inventory.n > 1 else 1

    while uncollected.size:
        rounds += 1
        if rounds > MAX_FRAMES:
            raise ConsistencyError(f"EDFSA did not finish within {MAX_FRAMES} frames")
        if rounds > round_bound and not warned:
            print(f"[edfsa] WARNING: {rounds} frames exceed the expected bound of {round_bound:.0f}")
            warned = True

        f = max(1, round_half_up(config.frame_factor * uncollected.size))
        responders = uncollected[inventory.present_mask[uncollected]]
        slots = slot_indices(inventory.hi[responders], inventory.lo[responders], draw_seed(rng), f)
        counts = np.bincount(slots, minlength=f + 1)[1:]

        empty = int((counts == 0).sum())
        singleton = int((counts == 1).sum())
        collision = f - empty - singleton
        frame_ms = (
            empty * config.empty_slot_ms
            + singleton * config.singleton_slot_ms
            + collision * config.collision_slot_ms
        )
        elapsed += frame_ms
        slots_used += f
        tag_bits += int(responders.size) * ID_BITS
        if on_frame:
            on_frame(EdfsaFrame(rounds, f, empty, singleton, collision, frame_ms))

        if responders.size == 0:
            break
        heard = responders[counts[slots - 1] == 1]
        collected.extend(tags_at(inventory.candidates, heard))
        uncollected = np.setdiff1d(uncollected, heard, assume_unique=True)

    present = frozenset(collected)
    return IdentificationResult.scored(
        inventory,
        PROTOCOL,
        identified_missing=frozenset(inventory.candidates) - present,
        identified_present=present,
        elapsed_ms=elapsed,
        reader_bits=0,
        tag_bits=tag_bits,
        slots_used=slots_used,
        rounds=rounds,
    )


# ---------------------------------------------------------------------------
# Brute-force decoding oracle
# ---------------------------------------------------------------------------

def oracle_symbols(
    assignments: Mapping[TagId, tuple[int, int]],
    present: Collection[TagId],
    w: int,
) -> dict[tuple[int, int], BitSymbol]:
    """
    Reader symbol at every (slot, bit) up to the last assigned slot.

    A present tag assigned (s, j) sends '1' at bit j and '0' elsewhere in
    slot s. Missing tags send nothing.
    """
    if w < 1:
        raise InvalidParameterError(f"string length must be >= 1, got {w}")
    if len(assignments) > ORACLE_MAX_TAGS:
        raise InvalidParameterError(f"oracle handles at most {ORACLE_MAX_TAGS} tags")
    for tag, (slot, bit) in assignments.items():
        if slot < 1 or not 1 <= bit <= w:
            raise InvalidParameterError(f"tag {tag:x} assigned outside the frame: ({slot}, {bit})")

    last_slot = max((slot for slot, _ in assignments.values()), default=0)
    symbols: dict[tuple[int, int], BitSymbol] = {}
    for slot in range(1, last_slot + 1):
        senders = [bit for tag, (s, bit) in assignments.items() if s == slot and tag in present]
        for bit in range(1, w + 1):
            values = {1 if own == bit else 0 for own in senders}
            if not values:
                symbols[(slot, bit)] = BitSymbol.SILENCE
            elif values == {1}:
                symbols[(slot, bit)] = BitSymbol.ONE
            elif values == {0}:
                symbols[(slot, bit)] = BitSymbol.ZERO
            else:
                symbols[(slot, bit)] = BitSymbol.COLLISION
    return symbols


def oracle_decode(
    assignments: Mapping[TagId, tuple[int, int]],
    present: Collection[TagId],
    w: int,
) -> dict[tuple[int, int], Verdict]:
    """Per-bit verdicts: a '1' or a collision means a tag answered."""
    return {
        position: Verdict.PRESENT if symbol in (BitSymbol.ONE, BitSymbol.COLLISION) else Verdict.ABSENT
        for position, symbol in oracle_symbols(assignments, present, w).items()
    }
