"""
Sequential string based missing tag identification (SSMTI).

Stages 1-3 run round by round and give every candidate tag a unique value
chi in 1..N:

    1. construct  - the reader hashes the unarranged tags into a main vector
                    F2 (1 = singleton bucket, 2 = two tags, 0 = otherwise)
    2. reconcile  - a two-tag bucket whose tags disagree on H(id, r2) mod 2
                    becomes 4, otherwise 3; the append vector A records one
                    bit per 1/4 element
    3. arrange    - F2 and A are merged into the indicator vector V2 (codes
                    0, 10, 11) which tags decode into their chi

Stage 4 lets each present tag answer with a one-hot string in slot
ceil(chi / w) and bit ((chi - 1) mod w) + 1; the reader reads every '1' or
collision as a present tag and every '0' or silence as a missing one.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .analysis import TIMING, TimingModel, vector_broadcast_time
from .channel import ERROR_FREE, ChannelConfig, ReceivedString, TagString, Verdict, transmit_one_hot, verdict
from .core import (
    ConsistencyError,
    IdentificationResult,
    InvalidParameterError,
    Inventory,
    Seed,
    TagId,
    binary_values,
    ceil_div,
    check_string_length,
    draw_seed,
    hash_binary,
    hash_slot,
    round_half_up,
    slot_indices,
    split_ids,
)

PROTOCOL = "ssmti"
DEFAULT_LOAD_FACTOR = 1.5
MAX_ROUNDS = 10_000

# Main-vector element codes
EMPTY = 0
SINGLE = 1
PAIR = 2
UNRECONCILABLE = 3
RECONCILABLE = 4

# Indicator-vector codes
WAIT_CODE = 0
SINGLE_CODE = 10
PAIR_CODE = 11

Arrangement = dict[TagId, int]


# ---------------------------------------------------------------------------
# Data structures
# ---------------------------------------------------------------------------

@dataclass
class MainVector:
    elements: np.ndarray
    buckets: dict[int, tuple[TagId, ...]] = field(default_factory=dict)

    @classmethod
    def of(cls, codes: Sequence[int]) -> MainVector:
        """A vector from its codes alone, without bucket bookkeeping."""
        return cls(elements=np.array(codes, dtype=np.int64))

    @property
    def f2(self) -> int:
        return len(self.elements)

    def codes(self) -> list[int]:
        return [int(c) for c in self.elements]

    def __str__(self) -> str:
        return "".join(str(c) for c in self.codes())


@dataclass(frozen=True)
class AppendVector:
    elements: tuple[int, ...]

    @property
    def a(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class IndicatorV2:
    elements: tuple[int, ...]   # codes 0, 10, 11

    @property
    def f2(self) -> int:
        return len(self.elements)

    @property
    def a(self) -> int:
        return sum(1 for c in self.elements if c != WAIT_CODE)

    @property
    def bit_length(self) -> int:
        """Broadcast length: one bit per code 0, two per code 10/11."""
        return self.f2 + self.a

    @property
    def naive_bit_length(self) -> int:
        """Length if every element were sent as a fixed two-bit code."""
        return 2 * self.f2


@dataclass(frozen=True)
class SsmtiParams:
    f2: int
    r1: Seed
    r2: Seed
    w: int = 96
    mu: int = 0

    def __post_init__(self):
        if self.f2 < 1:
            raise InvalidParameterError(f"main vector length must be >= 1, got {self.f2}")
        check_string_length(self.w)
        if self.mu < 0:
            raise InvalidParameterError(f"arranged count must be >= 0, got {self.mu}")


@dataclass(frozen=True)
class ArrangementRound:
    round: int
    unarranged: int
    f2: int
    a: int
    arranged: int
    reader_bits: int
    elapsed_ms: float

    def as_trace(self) -> str:
        return (
            f"round={self.round} unarranged={self.unarranged} f2={self.f2} "
            f"a={self.a} arranged={self.arranged} bits={self.reader_bits} "
            f"ms={self.elapsed_ms:.3f}"
        )


class ArrangementOutcome(NamedTuple):
    arrangement: Arrangement
    reader_bits: int
    elapsed_ms: float
    rounds: int


class VerificationOutcome(NamedTuple):
    missing: frozenset[TagId]
    present: frozenset[TagId]
    elapsed_ms: float
    slots: int
    received: tuple[ReceivedString, ...]


# ---------------------------------------------------------------------------
# Stage 1-3 building blocks
# ---------------------------------------------------------------------------

def _main_codes(positions: np.ndarray, f2: int) -> np.ndarray:
    counts = np.bincount(positions, minlength=f2 + 1)[1:]
    return np.where(counts == 1, SINGLE, np.where(counts == 2, PAIR, EMPTY)).astype(np.int64)


def build_main_vector(unarranged: Sequence[TagId], f2: int, r1: Seed) -> MainVector:
    """Hash the unarranged tags into F2; buckets with three or more tags read 0."""
    if f2 < 1:
        raise InvalidParameterError(f"main vector length must be >= 1, got {f2}")
    unarranged = list(unarranged)
    if not unarranged:
        return MainVector(elements=np.zeros(f2, dtype=np.int64))

    hi, lo = split_ids(unarranged)
    positions = slot_indices(hi, lo, r1, f2)
    buckets: dict[int, list[TagId]] = {}
    for tag, pos in zip(unarranged, positions.tolist()):
        buckets.setdefault(pos, []).append(tag)
    return MainVector(
        elements=_main_codes(positions, f2),
        buckets={pos: tuple(tags) for pos, tags in buckets.items()},
    )


def reconcile(main: MainVector, r2: Seed) -> MainVector:
    """Turn every 2 into 4 (tags disagree on H(id, r2) mod 2) or 3."""
    elements = main.elements.copy()
    for index in np.flatnonzero(elements == PAIR).tolist():
        tags = main.buckets.get(index + 1)
        if tags is None or len(tags) != 2:
            raise ConsistencyError(f"position {index + 1} is coded 2 without a two-tag bucket")
        first, second = (hash_binary(t, r2) for t in tags)
        elements[index] = RECONCILABLE if first != second else UNRECONCILABLE
    return MainVector(elements=elements, buckets=dict(main.buckets))


def build_append_vector(main: MainVector) -> AppendVector:
    if np.any(main.elements == PAIR):
        raise ConsistencyError("main vector must be reconciled before building A")
    kept = main.elements[(main.elements == SINGLE) | (main.elements == RECONCILABLE)]
    return AppendVector(elements=tuple(int(c == RECONCILABLE) for c in kept.tolist()))


def build_indicator_v2(main: MainVector, append: AppendVector) -> IndicatorV2:
    """Merge F2 and A into V2 (4 -> 11, 1 -> 10, anything else -> 0)."""
    arrangeable = main.elements[(main.elements == SINGLE) | (main.elements == RECONCILABLE)]
    if len(arrangeable) != append.a:
        raise ConsistencyError(
            f"append vector has {append.a} elements, main vector needs {len(arrangeable)}"
        )
    expected = [int(c == RECONCILABLE) for c in arrangeable.tolist()]
    if list(append.elements) != expected:
        raise ConsistencyError("append vector does not match the main vector")

    codes = np.where(
        main.elements == RECONCILABLE, PAIR_CODE,
        np.where(main.elements == SINGLE, SINGLE_CODE, WAIT_CODE),
    )
    return IndicatorV2(elements=tuple(int(c) for c in codes))


def tag_process_v2(tag: TagId, v2: IndicatorV2, params: SsmtiParams) -> int | None:
    """
    What a tag does on receiving V2: its chi, or None to wait for the next round.

    chi = mu + chi10 + 2*chi11 + 1 where chi10 / chi11 count codes 10 / 11
    before the tag's own position; a tag in an 11 bucket adds one more when
    H(id, r2) mod 2 is 1.
    """
    i = hash_slot(tag, params.r1, params.f2)
    code = v2.elements[i - 1]
    if code == WAIT_CODE:
        return None
    before = v2.elements[: i - 1]
    chi10 = sum(1 for c in before if c == SINGLE_CODE)
    chi11 = sum(1 for c in before if c == PAIR_CODE)
    chi = params.mu + chi10 + 2 * chi11 + 1
    if code == PAIR_CODE and hash_binary(tag, params.r2) == 1:
        chi += 1
    return chi


# ---------------------------------------------------------------------------
# Stages 1-3, round by round
# ---------------------------------------------------------------------------

def _frame_length(n_star: int, load_factor: float) -> int:
    return max(1, round_half_up(n_star / load_factor))


def _arrange_round(
    hi: np.ndarray,
    lo: np.ndarray,
    f2: int,
    r1: Seed,
    r2: Seed,
    mu: int,
) -> tuple[np.ndarray, int]:
    """
    Reader-side mirror of one round for every unarranged tag at once.

    Returns (chi per tag with 0 meaning "wait", a). Equivalent to running
    build_main_vector, reconcile, build_append_vector, build_indicator_v2
    and tag_process_v2 for each tag.
    """
    positions = slot_indices(hi, lo, r1, f2)
    binaries = binary_values(hi, lo, r2)
    counts = np.bincount(positions, minlength=f2 + 1)[1:]
    ones = np.bincount(positions, weights=binaries, minlength=f2 + 1)[1:]

    single = counts == 1
    pair = (counts == 2) & (ones == 1)
    chi10_before = np.cumsum(single) - single
    chi11_before = np.cumsum(pair) - pair

    at = positions - 1
    base = mu + chi10_before[at] + 2 * chi11_before[at] + 1
    chi = np.where(single[at], base, np.where(pair[at], base + binaries, 0))
    return chi.astype(np.int64), int(single.sum() + pair.sum())


def run_arrangement(
    candidates: Sequence[TagId],
    rng: np.random.Generator | int = 0,
    load_factor: float | None = None,
    on_round: Callable[[ArrangementRound], None] | None = None,
    timing: TimingModel = TIMING,
) -> ArrangementOutcome:
    """
    Run stages 1-3 until every candidate holds a unique chi.

    Only stored IDs are used, so present and missing candidates are arranged
    alike. A round that arranges nobody is charged and retried with new seeds.
    """
    candidates = list(candidates)
    if not candidates:
        raise InvalidParameterError("cannot arrange an empty candidate set")
    load = DEFAULT_LOAD_FACTOR if load_factor is None else load_factor
    if load <= 0:
        raise InvalidParameterError(f"load factor must be > 0, got {load}")

    rng = np.random.default_rng(rng)
    hi, lo = split_ids(candidates)
    chi_of = np.zeros(len(candidates), dtype=np.int64)
    pending = np.arange(len(candidates))
    mu = 0
    reader_bits = 0
    elapsed = 0.0
    rounds = 0

    while pending.size:
        rounds += 1
        if rounds > MAX_ROUNDS:
            raise ConsistencyError(f"arrangement did not finish within {MAX_ROUNDS} rounds")

        f2 = _frame_length(pending.size, load)
        r1, r2 = draw_seed(rng), draw_seed(rng)
        chi, a = _arrange_round(hi[pending], lo[pending], f2, r1, r2, mu)

        done = chi > 0
        chi_of[pending[done]] = chi[done]
        arranged = int(done.sum())

        bits = f2 + a
        round_ms = vector_broadcast_time(bits, timing)
        reader_bits += bits
        elapsed += round_ms
        if on_round:
            on_round(ArrangementRound(
                round=rounds,
                unarranged=int(pending.size),
                f2=f2,
                a=a,
                arranged=arranged,
                reader_bits=bits,
                elapsed_ms=round_ms,
            ))

        mu += arranged
        pending = pending[~done]

    if not np.array_equal(np.sort(chi_of), np.arange(1, len(candidates) + 1)):
        raise ConsistencyError("unique values are not a permutation of 1..N")

    arrangement = {tag: int(c) for tag, c in zip(candidates, chi_of.tolist())}
    return ArrangementOutcome(arrangement, reader_bits, elapsed, rounds)


# ---------------------------------------------------------------------------
# Stage 4: verification
# ---------------------------------------------------------------------------

def chi_position(chi: int, w: int) -> tuple[int, int]:
    """(slot, bit) for a unique value, both 1-based."""
    if chi < 1 or w < 1:
        raise InvalidParameterError(f"need chi >= 1 and w >= 1, got chi={chi}, w={w}")
    return ceil_div(chi, w), (chi - 1) % w + 1


def string_for_chi(chi: int, w: int, owner: TagId | None = None) -> tuple[int, TagString]:
    slot, bit = chi_position(chi, w)
    return slot, TagString.one_hot(bit, w, owner=owner)


def decode_verification(
    received: Sequence[ReceivedString],
    n: int,
    w: int,
) -> tuple[frozenset[int], frozenset[int]]:
    """
    Split chi values 1..n into (missing, present) from the slot readings.

    Bits past chi = n in the last slot carry nobody and are skipped.
    """
    missing: set[int] = set()
    present: set[int] = set()
    for slot, string in enumerate(received, 1):
        if string.w != w:
            raise InvalidParameterError(f"slot {slot} holds {string.w} symbols, expected {w}")
        for bit, symbol in enumerate(string.symbols, 1):
            chi = (slot - 1) * w + bit
            if chi > n:
                break
            if verdict(symbol) is Verdict.PRESENT:
                present.add(chi)
            else:
                missing.add(chi)
    return frozenset(missing), frozenset(present)


def verify_stage(
    arrangement: Mapping[TagId, int],
    inventory: Inventory,
    w: int = 96,
    channel: ChannelConfig = ERROR_FREE,
    timing: TimingModel = TIMING,
) -> VerificationOutcome:
    """Collect ceil(N/w) strings from the present tags and classify every candidate."""
    check_string_length(w)
    n = inventory.n
    if len(arrangement) != n:
        raise ConsistencyError(f"arrangement covers {len(arrangement)} of {n} candidates")

    chis = np.array([arrangement[tag] for tag in inventory.candidates], dtype=np.int64)
    present_chis = chis[inventory.present_mask]
    slots_of = (present_chis - 1) // w + 1
    bits_of = (present_chis - 1) % w + 1

    slots = ceil_div(n, w)
    received = tuple(
        transmit_one_hot(bits_of[slots_of == slot], w, channel, slot_index=slot)
        for slot in range(1, slots + 1)
    )
    missing_chis, _ = decode_verification(received, n, w)

    owner = {chi: tag for tag, chi in arrangement.items()}
    missing = frozenset(owner[chi] for chi in missing_chis)
    present = frozenset(inventory.candidates) - missing
    return VerificationOutcome(missing, present, slots * timing.t_w(w), slots, received)


# ---------------------------------------------------------------------------
# Whole protocol
# ---------------------------------------------------------------------------

def run_ssmti(
    inventory: Inventory,
    w: int = 96,
    channel: ChannelConfig = ERROR_FREE,
    rng: np.random.Generator | int = 0,
    load_factor: float | None = None,
    on_round: Callable[[ArrangementRound], None] | None = None,
    timing: TimingModel = TIMING,
) -> IdentificationResult:
    check_string_length(w)
    arranged = run_arrangement(
        inventory.candidates, rng, load_factor=load_factor, on_round=on_round, timing=timing,
    )
    verified = verify_stage(arranged.arrangement, inventory, w, channel, timing)
    return IdentificationResult.scored(
        inventory,
        PROTOCOL,
        identified_missing=verified.missing,
        identified_present=verified.present,
        elapsed_ms=arranged.elapsed_ms + verified.elapsed_ms,
        reader_bits=arranged.reader_bits,
        tag_bits=inventory.n * w,
        slots_used=verified.slots,
        rounds=arranged.rounds,
    )
