"""
Interactive string based missing tag identification (ISMTI).

Each round the reader hashes the unresolved tags onto an f3-bit expected
vector EV (0 / 1 / 2 = none / one / several tags per bit). Present tags
answer with one-hot strings, w bits per slot, which give the actual vector
AV. Comparing the two:

    EV >= 1, AV = 0  -> every tag mapped to the bit is missing
    EV = 1,  AV = 1  -> the tag is present
    EV = 2,  AV = 1  -> undecided, the tags try again next round

The indicator vector V3 tells resolved tags to go silent. Singleton bits
also give an estimate of the missing rate, which sizes the next frame.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .analysis import TIMING, TimingModel, ismti_p_opt, vector_broadcast_time
from .channel import ERROR_FREE, ChannelConfig, ReceivedString, TagString, Verdict, transmit_one_hot, verdict
from .core import (
    ConsistencyError,
    IdentificationResult,
    InvalidParameterError,
    Inventory,
    Seed,
    TagId,
    ceil_div,
    check_string_length,
    draw_seed,
    hash_slot,
    round_half_up,
    slot_indices,
    split_ids,
    tags_at,
)

PROTOCOL = "ismti"
DEFAULT_Q_PRIOR = 0.5
MAX_ROUNDS = 10_000
# Fewer singleton bits than this give too noisy an estimate to size a frame.
MIN_SINGLETON_BITS = 10
# Missing rates are quantized before the optimizer lookup.
Q_RESOLUTION = 3


# ---------------------------------------------------------------------------
# Data structures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IsmtiParams:
    f3: int
    r: Seed
    w: int = 96

    def __post_init__(self):
        if self.f3 < 1:
            raise InvalidParameterError(f"vector length must be >= 1, got {self.f3}")
        check_string_length(self.w)

    @property
    def slots(self) -> int:
        return ceil_div(self.f3, self.w)


class TagMapping(NamedTuple):
    slot: int
    bit: int
    global_bit: int


@dataclass
class ExpectedVector:
    elements: np.ndarray
    members: dict[int, tuple[TagId, ...]] = field(default_factory=dict)

    @property
    def f3(self) -> int:
        return len(self.elements)

    def candidates_at(self, global_bit: int) -> tuple[TagId, ...]:
        return self.members.get(global_bit, ())

    def __str__(self) -> str:
        return "".join(str(int(c)) for c in self.elements)


@dataclass
class ActualVector:
    elements: np.ndarray
    received: tuple[ReceivedString, ...] = ()

    @property
    def f3(self) -> int:
        return len(self.elements)

    def __str__(self) -> str:
        return "".join(str(int(c)) for c in self.elements)


@dataclass(frozen=True)
class IndicatorV3:
    elements: tuple[int, ...]

    def __str__(self) -> str:
        return "".join(str(c) for c in self.elements)


class RoundResolution(NamedTuple):
    missing: tuple[TagId, ...]
    present: tuple[TagId, ...]
    carryover: tuple[TagId, ...]


@dataclass(frozen=True)
class MissingRateEstimate:
    n_star: int
    n1: int
    n11: int
    missing: float   # estimated missing count among the round's tags
    rate: float


@dataclass(frozen=True)
class IsmtiRound:
    round: int
    unresolved: int
    f3: int
    q_used: float
    p: float
    n1: int
    n11: int
    q_hat: float
    missing: int
    present: int
    carryover: int
    elapsed_ms: float

    def as_trace(self) -> str:
        return (
            f"round={self.round} unresolved={self.unresolved} f3={self.f3} "
            f"q_used={self.q_used:.4f} p={self.p:.4f} n1={self.n1} n11={self.n11} "
            f"q_hat={self.q_hat:.4f} missing={self.missing} present={self.present} "
            f"carryover={self.carryover} ms={self.elapsed_ms:.3f}"
        )


# ---------------------------------------------------------------------------
# Tag side
# ---------------------------------------------------------------------------

def tag_map(tag: TagId, r: Seed, f3: int, w: int) -> TagMapping:
    """Global bit g = H(id, r) mod f3 + 1, answered in slot ceil(g/w) at bit ((g-1) mod w) + 1."""
    if w < 1:
        raise InvalidParameterError(f"string length must be >= 1, got {w}")
    g = hash_slot(tag, r, f3)
    return TagMapping(slot=ceil_div(g, w), bit=(g - 1) % w + 1, global_bit=g)


def tag_string(tag: TagId, params: IsmtiParams) -> tuple[int, TagString]:
    mapping = tag_map(tag, params.r, params.f3, params.w)
    return mapping.slot, TagString.one_hot(mapping.bit, params.w, owner=tag)


# ---------------------------------------------------------------------------
# Reader side
# ---------------------------------------------------------------------------

def _expected_from_positions(
    tags: Sequence[TagId],
    positions: np.ndarray,
    f3: int,
) -> ExpectedVector:
    counts = np.bincount(positions, minlength=f3 + 1)[1:]
    order = np.argsort(positions, kind="stable")
    ordered = positions[order]
    starts = np.flatnonzero(np.r_[True, ordered[1:] != ordered[:-1]]) if ordered.size else ordered
    ends = np.r_[starts[1:], ordered.size] if ordered.size else ordered
    members = {
        int(ordered[s]): tuple(tags[i] for i in order[s:e].tolist())
        for s, e in zip(starts.tolist(), ends.tolist())
    }
    return ExpectedVector(elements=np.minimum(counts, 2).astype(np.int64), members=members)


def build_expected_vector(unresolved: Sequence[TagId], params: IsmtiParams) -> ExpectedVector:
    unresolved = list(unresolved)
    if not unresolved:
        return ExpectedVector(elements=np.zeros(params.f3, dtype=np.int64))
    hi, lo = split_ids(unresolved)
    return _expected_from_positions(unresolved, slot_indices(hi, lo, params.r, params.f3), params.f3)


def _actual_from_positions(
    positions: np.ndarray,
    params: IsmtiParams,
    channel: ChannelConfig,
    slot_offset: int,
) -> ActualVector:
    w = params.w
    elements = np.zeros(params.slots * w, dtype=np.int64)
    received = []
    slot_of = (positions - 1) // w + 1
    bit_of = (positions - 1) % w + 1
    for slot in range(1, params.slots + 1):
        string = transmit_one_hot(bit_of[slot_of == slot], w, channel, slot_index=slot_offset + slot)
        received.append(string)
        start = (slot - 1) * w
        elements[start:start + w] = [verdict(s) is Verdict.PRESENT for s in string.symbols]
    return ActualVector(elements=elements[: params.f3], received=tuple(received))


def collect_actual_vector(
    present_unresolved: Sequence[TagId],
    params: IsmtiParams,
    channel: ChannelConfig = ERROR_FREE,
    slot_offset: int = 0,
) -> ActualVector:
    """
    Run the ceil(f3/w) response slots and mark each bit heard as '1' or 'X'.

    Channel draws use slot indices slot_offset + 1, slot_offset + 2, ...
    """
    present_unresolved = list(present_unresolved)
    if present_unresolved:
        hi, lo = split_ids(present_unresolved)
        positions = slot_indices(hi, lo, params.r, params.f3)
    else:
        positions = np.zeros(0, dtype=np.int64)
    return _actual_from_positions(positions, params, channel, slot_offset)


def _check_lengths(ev: ExpectedVector, av: ActualVector) -> None:
    if ev.f3 != av.f3:
        raise ConsistencyError(f"EV has {ev.f3} bits but AV has {av.f3}")


def build_indicator_v3(ev: ExpectedVector, av: ActualVector) -> IndicatorV3:
    """1 where the bit's tags are settled (missing, or a lone present tag), else 0."""
    _check_lengths(ev, av)
    settled = (ev.elements > 0) & ((av.elements == 0) | (ev.elements == 1))
    return IndicatorV3(elements=tuple(int(s) for s in settled))


def resolve_round(ev: ExpectedVector, av: ActualVector) -> RoundResolution:
    _check_lengths(ev, av)
    missing: list[TagId] = []
    present: list[TagId] = []
    carryover: list[TagId] = []
    for g in sorted(ev.members):
        tags = ev.members[g]
        if av.elements[g - 1] == 0:
            missing.extend(tags)
        elif len(tags) == 1:
            present.extend(tags)
        else:
            carryover.extend(tags)
    return RoundResolution(tuple(missing), tuple(present), tuple(carryover))


def count_singletons(ev: ExpectedVector, av: ActualVector) -> tuple[int, int]:
    """(N1, N11): bits with EV = 1, and those among them with AV = 1."""
    _check_lengths(ev, av)
    single = ev.elements == 1
    return int(single.sum()), int((single & (av.elements == 1)).sum())


def estimate_missing(
    n_star: int,
    n1: int,
    n11: int,
    previous: float = DEFAULT_Q_PRIOR,
) -> MissingRateEstimate:
    """
    M* = N* (1 - N11/N1), clamped to [0, N*].

    The share of silent singleton bits estimates the share of missing tags.
    With no singleton bit the previous rate is reused.
    """
    if n_star < 1:
        raise InvalidParameterError(f"unresolved count must be >= 1, got {n_star}")
    if not 0 <= n11 <= n1:
        raise InvalidParameterError(f"need 0 <= N11 <= N1, got N1={n1}, N11={n11}")
    if n1 == 0:
        rate = min(max(previous, 0.0), 1.0)
        return MissingRateEstimate(n_star, n1, n11, missing=rate * n_star, rate=rate)
    missing = min(max(n_star * (1 - n11 / n1), 0.0), float(n_star))
    return MissingRateEstimate(n_star, n1, n11, missing=missing, rate=missing / n_star)


def frame_length(n_star: int, p: float, w: int) -> int:
    """round(N*/p) rounded up to a whole number of w-bit slots, at least w."""
    if p <= 0:
        raise InvalidParameterError(f"load factor must be > 0, got {p}")
    return max(w, ceil_div(round_half_up(n_star / p), w) * w)


# ---------------------------------------------------------------------------
# Whole protocol
# ---------------------------------------------------------------------------

def run_ismti(
    inventory: Inventory,
    w: int = 96,
    channel: ChannelConfig = ERROR_FREE,
    rng: np.random.Generator | int = 0,
    q_prior: float = DEFAULT_Q_PRIOR,
    missing_rate_oracle: bool = False,
    load_factor: float | None = None,
    on_round: Callable[[IsmtiRound], None] | None = None,
    timing: TimingModel = TIMING,
) -> IdentificationResult:
    """
    Identify missing tags round by round until nothing is carried over.

    Frames are sized with the optimal load factor for the current missing
    rate: the estimate by default, the true rate of the unresolved tags when
    *missing_rate_oracle* is set, or a fixed *load_factor*. After a round
    that settles nobody the next frame holds at least one bit per tag.
    """
    check_string_length(w)
    if not 0.0 <= q_prior <= 1.0:
        raise InvalidParameterError(f"q_prior must lie in [0, 1], got {q_prior}")
    if load_factor is not None and load_factor <= 0:
        raise InvalidParameterError(f"load factor must be > 0, got {load_factor}")

    rng = np.random.default_rng(rng)
    ids = inventory.candidates
    unresolved = np.arange(inventory.n)
    missing: list[TagId] = []
    present: list[TagId] = []

    q_hat = q_prior
    expected_missing = q_prior * inventory.n
    stalled = False
    slot_offset = 0
    elapsed = 0.0
    reader_bits = tag_bits = slots_used = 0
    rounds = 0

    while unresolved.size:
        rounds += 1
        if rounds > MAX_ROUNDS:
            raise ConsistencyError(f"identification did not finish within {MAX_ROUNDS} rounds")

        n_star = int(unresolved.size)
        responders = unresolved[inventory.present_mask[unresolved]]
        if missing_rate_oracle:
            q_used = 1.0 - responders.size / n_star
        else:
            q_used = min(max(expected_missing / n_star, 0.0), 1.0)
        p = load_factor if load_factor is not None else ismti_p_opt(round(q_used, Q_RESOLUTION))
        if stalled:
            p = min(p, 1.0)

        params = IsmtiParams(f3=frame_length(n_star, p, w), r=draw_seed(rng), w=w)
        positions = slot_indices(inventory.hi[unresolved], inventory.lo[unresolved], params.r, params.f3)
        tags = tags_at(ids, unresolved)
        ev = _expected_from_positions(tags, positions, params.f3)
        av = _actual_from_positions(
            positions[inventory.present_mask[unresolved]], params, channel, slot_offset,
        )
        resolution = resolve_round(ev, av)
        if len(resolution.missing) + len(resolution.present) + len(resolution.carryover) != n_star:
            raise ConsistencyError("round outcome does not partition the unresolved tags")

        round_ms = params.slots * timing.t_w(w) + vector_broadcast_time(params.f3, timing)
        elapsed += round_ms
        reader_bits += params.f3
        tag_bits += int(responders.size) * w
        slots_used += params.slots
        slot_offset += params.slots

        n1, n11 = count_singletons(ev, av)
        estimate = estimate_missing(n_star, n1, n11, previous=q_hat)
        q_hat = estimate.rate

        missing.extend(resolution.missing)
        present.extend(resolution.present)
        carried = set(resolution.carryover)
        unresolved = np.array([i for i in unresolved.tolist() if ids[i] in carried], dtype=np.int64)

        stalled = not resolution.missing and not resolution.present
        if stalled:
            expected_missing = q_prior * unresolved.size
        else:
            basis = estimate.missing if n1 >= MIN_SINGLETON_BITS else expected_missing
            # each carried bit was answered, so it hides at least one present tag
            carried_bits = int(((ev.elements == 2) & (av.elements == 1)).sum())
            ceiling = max(unresolved.size - carried_bits, 0)
            expected_missing = min(max(basis - len(resolution.missing), 0.0), float(ceiling))

        if on_round:
            on_round(IsmtiRound(
                round=rounds,
                unresolved=n_star,
                f3=params.f3,
                q_used=q_used,
                p=p,
                n1=n1,
                n11=n11,
                q_hat=q_hat,
                missing=len(resolution.missing),
                present=len(resolution.present),
                carryover=len(resolution.carryover),
                elapsed_ms=round_ms,
            ))

    return IdentificationResult.scored(
        inventory,
        PROTOCOL,
        identified_missing=missing,
        identified_present=present,
        elapsed_ms=elapsed,
        reader_bits=reader_bits,
        tag_bits=tag_bits,
        slots_used=slots_used,
        rounds=rounds,
    )
