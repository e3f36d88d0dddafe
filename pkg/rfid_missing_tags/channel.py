"""
Bit-tracking channel.

Tags answering in the same slot send synchronized w-bit Manchester strings.
The reader sees, per bit position, either a clean value (every transmitter
sent the same bit), a collision, or silence (nobody transmitted). Optional
impairments: per-tag detection errors and per-slot capture.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import InvalidParameterError, TagId


class BitSymbol(Enum):
    ZERO = "0"
    ONE = "1"
    COLLISION = "X"
    SILENCE = "-"


class Verdict(Enum):
    PRESENT = "present"
    ABSENT = "absent"


_CODED = (BitSymbol.ZERO, BitSymbol.ONE, BitSymbol.COLLISION)


@dataclass(frozen=True)
class TagString:
    """A w-bit string sent by one tag."""
    bits: tuple[int, ...]
    owner: TagId | None = None

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise InvalidParameterError(f"string bits must be 0/1, got {self.bits!r}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def one_hot(cls, bit: int, w: int, owner: TagId | None = None) -> TagString:
        """String with only the *bit*-th position (1-based) set."""
        if not 1 <= bit <= w:
            raise InvalidParameterError(f"bit {bit} outside string of length {w}")
        return cls(bits=tuple(1 if j == bit else 0 for j in range(1, w + 1)), owner=owner)

    @property
    def w(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)


@dataclass(frozen=True)
class ReceivedString:
    """What the reader decodes in one slot."""
    symbols: tuple[BitSymbol, ...]

    @classmethod
    def parse(cls, text: str) -> ReceivedString:
        """Build from the printable form, e.g. ``"XXX0X0"`` or ``"---"``."""
        try:
            return cls(symbols=tuple(BitSymbol(ch) for ch in text))
        except ValueError as e:
            raise InvalidParameterError(f"not a received string: {text!r}") from e

    @property
    def w(self) -> int:
        return len(self.symbols)

    def __str__(self) -> str:
        return "".join(s.value for s in self.symbols)


@dataclass(frozen=True)
class ChannelConfig:
    detection_error_prob: float = 0.0
    capture_prob: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("detection_error_prob", "capture_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParameterError(f"{name} must lie in [0, 1], got {value}")

    @property
    def error_free(self) -> bool:
        return self.detection_error_prob == 0.0 and self.capture_prob == 0.0


ERROR_FREE = ChannelConfig()


# ---------------------------------------------------------------------------
# Superposition
# ---------------------------------------------------------------------------

def _silence(w: int) -> ReceivedString:
    return ReceivedString(symbols=(BitSymbol.SILENCE,) * w)


def _from_counts(ones: np.ndarray, transmitters: int) -> ReceivedString:
    """Symbols from per-bit counts of '1' among *transmitters* strings."""
    if transmitters == 0:
        return _silence(len(ones))
    codes = np.where(ones == 0, 0, np.where(ones == transmitters, 1, 2))
    return ReceivedString(symbols=tuple(_CODED[c] for c in codes.tolist()))


def superpose(strings: Iterable[TagString], w: int) -> ReceivedString:
    """Combine simultaneous strings bit by bit into the reader's view."""
    strings = list(strings)
    for s in strings:
        if s.w != w:
            raise InvalidParameterError(f"string length {s.w} does not match w={w}")
    if not strings:
        return _silence(w)
    ones = np.array([s.bits for s in strings], dtype=np.int64).sum(axis=0)
    return _from_counts(ones, len(strings))


def _surviving(count: int, config: ChannelConfig, slot_index: int) -> np.ndarray:
    """Indices of transmitters the reader actually hears in this slot."""
    survivors = np.arange(count)
    if config.error_free or count == 0:
        return survivors
    rng = np.random.default_rng((config.rng_seed, slot_index))
    survivors = survivors[rng.random(count) >= config.detection_error_prob]
    if len(survivors) >= 2 and rng.random() < config.capture_prob:
        survivors = survivors[[int(rng.integers(len(survivors)))]]
    return survivors


def transmit_slot(
    strings: Sequence[TagString],
    w: int,
    config: ChannelConfig = ERROR_FREE,
    slot_index: int = 0,
) -> ReceivedString:
    """
    Superpose *strings* after applying detection errors, then capture.

    Each string is dropped independently with probability
    ``detection_error_prob``. If two or more survive, with probability
    ``capture_prob`` a single uniformly chosen survivor is decoded alone.
    Draws are seeded by (config.rng_seed, slot_index).
    """
    strings = list(strings)
    for s in strings:
        if s.w != w:
            raise InvalidParameterError(f"string length {s.w} does not match w={w}")
    kept = _surviving(len(strings), config, slot_index)
    return superpose([strings[i] for i in kept.tolist()], w)


def transmit_one_hot(
    bits: Sequence[int] | np.ndarray,
    w: int,
    config: ChannelConfig = ERROR_FREE,
    slot_index: int = 0,
) -> ReceivedString:
    """
    Same as :func:`transmit_slot` for one-hot strings given by their set bit.

    ``bits[k]`` is the 1-based position the k-th transmitter sets to '1'.
    Produces exactly what transmit_slot returns for the matching TagStrings
    in the same order.
    """
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size and (bits.min() < 1 or bits.max() > w):
        raise InvalidParameterError(f"one-hot bit outside string of length {w}")
    kept = bits[_surviving(len(bits), config, slot_index)]
    ones = np.bincount(kept - 1, minlength=w) if kept.size else np.zeros(w, dtype=np.int64)
    return _from_counts(ones, len(kept))


def verdict(symbol: BitSymbol) -> Verdict:
    """'1' or a collision means somebody answered at that bit."""
    if symbol in (BitSymbol.ONE, BitSymbol.COLLISION):
        return Verdict.PRESENT
    return Verdict.ABSENT
