"""
Tag identities, inventories and the shared hash.

Every tag carries a 96-bit ID. The reader and the tags agree on one hash
H(id, seed); the reader uses it to predict where each candidate tag will
answer, and the simulated tags use the very same function to decide where
they do answer.

Hash layout (portable, bit-exact):
    hi   = id >> 64            (upper 32 bits)
    lo   = id & (2**64 - 1)    (lower 64 bits)
    key  = mix64(seed + GAMMA)
    H    = mix64(mix64(lo ^ key) ^ (hi + GAMMA))

mix64 is the splitmix64 finalizer (shifts 30/27/31, multipliers
0xBF58476D1CE4E5B9 and 0x94D049BB133111EB), all arithmetic modulo 2**64.
"""

from __future__ import annotations

import math
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import NewType

import numpy as np

TagId = NewType("TagId", int)
Seed = NewType("Seed", int)

ID_BITS = 96
MAX_STRING_BITS = 96

_MASK64 = (1 << 64) - 1
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)


class InvalidParameterError(ValueError):
    """Raised when an operation receives a parameter outside its domain."""


class ConsistencyError(RuntimeError):
    """Raised when reader-side bookkeeping contradicts itself."""


# ---------------------------------------------------------------------------
# Hashing
# ---------------------------------------------------------------------------

def _mix64(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MUL1
        z = (z ^ (z >> np.uint64(27))) * _MUL2
    return z ^ (z >> np.uint64(31))


def split_ids(ids: Iterable[int]) -> tuple[np.ndarray, np.ndarray]:
    """Split 96-bit IDs into (hi, lo) uint64 arrays."""
    ids = list(ids)
    for tag in ids:
        if not 0 <= tag < (1 << ID_BITS):
            raise InvalidParameterError(f"tag id out of 96-bit range: {tag!r}")
    hi = np.array([tag >> 64 for tag in ids], dtype=np.uint64)
    lo = np.array([tag & _MASK64 for tag in ids], dtype=np.uint64)
    return hi, lo


def hash64(hi: np.ndarray, lo: np.ndarray, seed: int) -> np.ndarray:
    """Vectorized H(id, seed) over split IDs."""
    with np.errstate(over="ignore"):
        key = _mix64(np.array([int(seed) & _MASK64], dtype=np.uint64) + _GAMMA)
        h = _mix64(lo ^ key)
        return _mix64(h ^ (hi + _GAMMA))


def slot_indices(hi: np.ndarray, lo: np.ndarray, seed: int, f: int) -> np.ndarray:
    """H(id, seed) mod f + 1 for every ID, as an int64 array in [1, f]."""
    if f < 1:
        raise InvalidParameterError(f"frame size must be >= 1, got {f}")
    h = hash64(hi, lo, seed)
    return (h % np.uint64(f)).astype(np.int64) + 1


def binary_values(hi: np.ndarray, lo: np.ndarray, seed: int) -> np.ndarray:
    """H(id, seed) mod 2 for every ID, as an int64 array of 0/1."""
    return (hash64(hi, lo, seed) % np.uint64(2)).astype(np.int64)


def hash_slot(tag: TagId, seed: Seed, f: int) -> int:
    """Slot (or vector position) in [1, f] that *tag* selects under *seed*."""
    hi, lo = split_ids([tag])
    return int(slot_indices(hi, lo, seed, f)[0])


def hash_binary(tag: TagId, seed: Seed) -> int:
    """H(id, seed) mod 2."""
    hi, lo = split_ids([tag])
    return int(binary_values(hi, lo, seed)[0])


def draw_seed(rng: np.random.Generator) -> Seed:
    """Draw a fresh broadcast seed."""
    return Seed(int(rng.integers(0, 1 << 63)))


# ---------------------------------------------------------------------------
# Inventory
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Inventory:
    """The candidate set S_all split into present (S_p) and missing (S_m) tags."""
    candidates: tuple[TagId, ...]
    missing: frozenset[TagId]
    present: frozenset[TagId] = field(init=False)
    hi: np.ndarray = field(init=False, repr=False, compare=False)
    lo: np.ndarray = field(init=False, repr=False, compare=False)
    present_mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        candidates = tuple(self.candidates)
        if len(set(candidates)) != len(candidates):
            raise InvalidParameterError("candidate tag ids must be unique")
        missing = frozenset(self.missing)
        if not missing <= set(candidates):
            raise InvalidParameterError("missing tags must be candidates")
        hi, lo = split_ids(candidates)
        object.__setattr__(self, "candidates", candidates)
        object.__setattr__(self, "missing", missing)
        object.__setattr__(self, "present", frozenset(candidates) - missing)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "lo", lo)
        mask = np.array([tag not in missing for tag in candidates], dtype=bool)
        object.__setattr__(self, "present_mask", mask)

    @property
    def n(self) -> int:
        return len(self.candidates)

    @property
    def m(self) -> int:
        return len(self.missing)

    @property
    def p(self) -> int:
        return self.n - self.m

    @property
    def missing_rate(self) -> float:
        return self.m / self.n if self.n else 0.0


def _scrambled_ids(count: int, salt: int) -> list[TagId]:
    """Distinct 96-bit IDs: mix64 is a bijection, so distinct k give distinct lo."""
    k = np.arange(count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        lo = _mix64(k + np.uint64(salt & _MASK64))
        hi = _mix64(k ^ np.uint64((salt * 31 + 7) & _MASK64)) >> np.uint64(32)
    return [TagId((int(h) << 64) | int(l)) for h, l in zip(hi, lo)]


def make_inventory(n: int, missing_rate: float, rng_seed: Seed) -> Inventory:
    """
    Generate *n* candidate tags of which round(n * missing_rate) are missing.

    The missing subset is drawn uniformly at random; the whole inventory is
    reproducible from *rng_seed*.
    """
    if n < 1:
        raise InvalidParameterError(f"inventory size must be >= 1, got {n}")
    if not 0.0 <= missing_rate <= 1.0:
        raise InvalidParameterError(f"missing rate must lie in [0, 1], got {missing_rate}")

    rng = np.random.default_rng(rng_seed)
    salt = int(rng.integers(0, 1 << 63))
    candidates = _scrambled_ids(n, salt)
    m = round_half_up(n * missing_rate)
    chosen = rng.choice(n, size=m, replace=False)
    return Inventory(
        candidates=tuple(candidates),
        missing=frozenset(candidates[i] for i in chosen),
    )


# ---------------------------------------------------------------------------
# Inventory fixture files: "<24 hex digits> <1 present | 0 missing>" per line
# ---------------------------------------------------------------------------

INVENTORY_LINE_RE = re.compile(r'^([0-9a-fA-F]{1,24})\s+([01])$')


def dump_inventory(inventory: Inventory) -> str:
    lines = [
        f"{tag:024x} {0 if tag in inventory.missing else 1}"
        for tag in inventory.candidates
    ]
    return "\n".join(lines) + "\n"


def parse_inventory(text: str) -> Inventory:
    """Parse the line-oriented inventory format. Blank and '#' lines are skipped."""
    candidates: list[TagId] = []
    missing: set[TagId] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        match = INVENTORY_LINE_RE.match(line)
        if not match:
            raise InvalidParameterError(f"inventory line {lineno}: cannot parse {raw!r}")
        tag = TagId(int(match.group(1), 16))
        candidates.append(tag)
        if match.group(2) == "0":
            missing.add(tag)
    if not candidates:
        raise InvalidParameterError("inventory contains no tags")
    return Inventory(candidates=tuple(candidates), missing=frozenset(missing))


def write_inventory(inventory: Inventory, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        f.write(dump_inventory(inventory))
    return path


def read_inventory(path: str | Path) -> Inventory:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Inventory file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return parse_inventory(f.read())


# ---------------------------------------------------------------------------
# Per-run output
# ---------------------------------------------------------------------------

@dataclass
class IdentificationResult:
    """Outcome of one protocol run, scored against the inventory's ground truth."""
    protocol: str
    n: int
    identified_missing: frozenset[TagId]
    identified_present: frozenset[TagId]
    elapsed_ms: float
    reader_bits: int
    tag_bits: int
    slots_used: int
    rounds: int
    false_positives: int = 0   # present tags declared missing
    false_negatives: int = 0   # missing tags declared present

    @classmethod
    def scored(
        cls,
        inventory: Inventory,
        protocol: str,
        identified_missing: Iterable[TagId],
        identified_present: Iterable[TagId],
        **counters,
    ) -> IdentificationResult:
        missing = frozenset(identified_missing)
        present = frozenset(identified_present)
        if missing & present or (missing | present) != frozenset(inventory.candidates):
            raise ConsistencyError(
                f"{protocol}: identified sets do not partition the candidates"
            )
        return cls(
            protocol=protocol,
            n=inventory.n,
            identified_missing=missing,
            identified_present=present,
            false_positives=len(missing & inventory.present),
            false_negatives=len(present & inventory.missing),
            **counters,
        )

    @property
    def accuracy(self) -> float:
        return 1.0 - (self.false_positives + self.false_negatives) / self.n


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def check_string_length(w: int) -> None:
    if not 1 <= w <= MAX_STRING_BITS:
        raise InvalidParameterError(f"string length w must lie in [1, 96], got {w}")


def tags_at(ids: Sequence[TagId], index: np.ndarray) -> list[TagId]:
    """Pick the tags selected by an integer index array."""
    return [ids[i] for i in index.tolist()]
