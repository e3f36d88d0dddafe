"""Shared fixtures for rfid_missing_tags tests."""

from types import SimpleNamespace

import pytest

from rfid_missing_tags.core import Inventory, Seed, TagId, hash_binary, hash_slot, make_inventory


# ---------------------------------------------------------------------------
# ID search helpers
# ---------------------------------------------------------------------------

POOL_BASE = 0xC0FFEE << 64


def id_pool(count: int = 4000) -> list[TagId]:
    return [TagId(POOL_BASE + k) for k in range(1, count + 1)]


def pick_ids(wanted: dict[str, tuple], key) -> dict[str, TagId]:
    """
    Assign pool ids to names so that key(id) matches each name's requirement.

    A requirement is a tuple compared element-wise with key(id); None matches
    anything.
    """
    chosen: dict[str, TagId] = {}
    for tag in id_pool():
        got = key(tag)
        for name, need in wanted.items():
            if name in chosen:
                continue
            if all(n is None or n == g for n, g in zip(need, got)):
                chosen[name] = tag
                break
        if len(chosen) == len(wanted):
            return chosen
    raise RuntimeError(f"id pool too small for {sorted(set(wanted) - set(chosen))}")


# ---------------------------------------------------------------------------
# Worked examples
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def arrangement_example():
    """
    Eleven tags, f2 = 6: bucket 1 {t4, t8} with differing binaries, bucket 4
    {t5}, bucket 6 {t7, t9} with equal binaries, and three tags each in
    buckets 2 and 3 so that F2 reads 200102.
    """
    r1, r2, f2 = Seed(501), Seed(502), 6
    wanted = {
        "t4": (1, 0), "t8": (1, 1),
        "t5": (4, None),
        "t7": (6, 0), "t9": (6, 0),
        "t1": (2, None), "t2": (2, None), "t3": (2, None),
        "t6": (3, None), "t10": (3, None), "t11": (3, None),
    }
    tags = pick_ids(wanted, lambda t: (hash_slot(t, r1, f2), hash_binary(t, r2)))
    return SimpleNamespace(
        tags=tags,
        candidates=[tags[f"t{i}"] for i in range(1, 12)],
        r1=r1,
        r2=r2,
        f2=f2,
    )


@pytest.fixture(scope="session")
def interactive_example():
    """
    Eleven tags, f3 = 6, w = 3: bit 1 empty, {t1, t2} at bit 2, {t6, t8} at
    bit 3, {t3, t5} at bit 4, {t7, t4} at bit 5, {t9, t10, t11} at bit 6.
    Only t1, t2, t6, t8 are present.
    """
    r, f3, w = Seed(601), 6, 3
    wanted = {
        "t1": (2,), "t2": (2,),
        "t6": (3,), "t8": (3,),
        "t3": (4,), "t5": (4,),
        "t7": (5,), "t4": (5,),
        "t9": (6,), "t10": (6,), "t11": (6,),
    }
    tags = pick_ids(wanted, lambda t: (hash_slot(t, r, f3),))
    candidates = [tags[f"t{i}"] for i in range(1, 12)]
    present = {tags[name] for name in ("t1", "t2", "t6", "t8")}
    inventory = Inventory(
        candidates=tuple(candidates),
        missing=frozenset(t for t in candidates if t not in present),
    )
    return SimpleNamespace(tags=tags, candidates=candidates, inventory=inventory, r=r, f3=f3, w=w)


# ---------------------------------------------------------------------------
# Inventories
# ---------------------------------------------------------------------------

@pytest.fixture
def small_inventory():
    return make_inventory(40, 0.25, Seed(7))

