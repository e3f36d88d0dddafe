"""Tests for rfid_missing_tags.channel."""

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rfid_missing_tags.channel import (
    ERROR_FREE,
    BitSymbol,
    ChannelConfig,
    ReceivedString,
    TagString,
    Verdict,
    superpose,
    transmit_one_hot,
    transmit_slot,
    verdict,
)
from rfid_missing_tags.core import InvalidParameterError


def _s(text: str) -> TagString:
    return TagString(bits=tuple(int(ch) for ch in text))


@st.composite
def string_sets(draw, max_w=8, max_strings=6):
    w = draw(st.integers(min_value=1, max_value=max_w))
    rows = draw(st.lists(
        st.lists(st.integers(0, 1), min_size=w, max_size=w),
        max_size=max_strings,
    ))
    return w, [TagString(bits=tuple(r)) for r in rows]


# ── TagString / ReceivedString ───────────────────────────────────────────

class TestStrings:
    def test_one_hot(self):
        assert str(TagString.one_hot(3, 6)) == "001000"
        assert str(TagString.one_hot(1, 1)) == "1"

    def test_one_hot_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            TagString.one_hot(0, 4)
        with pytest.raises(InvalidParameterError):
            TagString.one_hot(5, 4)

    def test_bits_must_be_binary(self):
        with pytest.raises(InvalidParameterError):
            TagString(bits=(0, 2))

    def test_received_printable(self):
        text = "XXX0X0"
        assert str(ReceivedString.parse(text)) == text
        assert ReceivedString.parse("-1").symbols == (BitSymbol.SILENCE, BitSymbol.ONE)

    def test_received_parse_rejects_garbage(self):
        with pytest.raises(InvalidParameterError):
            ReceivedString.parse("01Z")


# ── superpose ────────────────────────────────────────────────────────────

class TestSuperpose:
    def test_empty_slot(self):
        assert str(superpose([], 3)) == "---"

    def test_middle_tag_missing(self):
        assert str(superpose([_s("100"), _s("001")], 3)) == "X0X"

    def test_all_three_answer(self):
        assert str(superpose([_s("100"), _s("010"), _s("001")], 3)) == "XXX"

    def test_identical_ones_do_not_collide(self):
        assert str(superpose([_s("010"), _s("010")], 3)) == "010"

    def test_length_mismatch(self):
        with pytest.raises(InvalidParameterError):
            superpose([_s("10"), _s("100")], 3)

    @given(string_sets())
    def test_single_string_verbatim(self, case):
        w, strings = case
        for s in strings:
            assert str(superpose([s], w)) == str(s)

    @given(string_sets(), st.randoms())
    def test_order_independent(self, case, rnd):
        w, strings = case
        shuffled = list(strings)
        rnd.shuffle(shuffled)
        assert superpose(strings, w) == superpose(shuffled, w)

    @given(string_sets(), st.integers(min_value=0, max_value=6))
    def test_associative(self, case, cut):
        w, strings = case
        left, right = strings[:cut], strings[cut:]
        combined = superpose(strings, w)
        # joining two partial readings bit by bit gives the same symbols
        for j, symbol in enumerate(combined.symbols):
            parts = {superpose(part, w).symbols[j] for part in (left, right) if part}
            if not parts:
                assert symbol is BitSymbol.SILENCE
            elif len(parts) == 1:
                assert symbol is parts.pop()
            else:
                assert symbol is BitSymbol.COLLISION


# ── transmit_slot ────────────────────────────────────────────────────────

class TestTransmitSlot:
    def test_error_free_matches_superpose_exhaustively(self):
        patterns = [TagString(bits=bits) for bits in itertools.product((0, 1), repeat=3)]
        for size in range(4):
            for combo in itertools.product(patterns, repeat=size):
                assert transmit_slot(combo, 3, ERROR_FREE) == superpose(combo, 3)

    def test_total_dropout(self):
        config = ChannelConfig(detection_error_prob=1.0, rng_seed=3)
        out = transmit_slot([_s("100"), _s("010"), _s("111")], 3, config, slot_index=4)
        assert str(out) == "---"

    def test_capture_returns_one_input(self):
        config = ChannelConfig(capture_prob=1.0, rng_seed=0)
        a, b = TagString.one_hot(1, 4), TagString.one_hot(3, 4)
        seen = set()
        for slot in range(40):
            out = transmit_slot([a, b], 4, config, slot_index=slot)
            assert BitSymbol.COLLISION not in out.symbols
            assert str(out) in (str(a), str(b))
            seen.add(str(out))
        assert seen == {str(a), str(b)}

    def test_deterministic_per_slot(self):
        config = ChannelConfig(detection_error_prob=0.4, capture_prob=0.5, rng_seed=11)
        strings = [TagString.one_hot(j, 5) for j in range(1, 6)]
        assert transmit_slot(strings, 5, config, 7) == transmit_slot(strings, 5, config, 7)

    def test_probabilities_validated(self):
        with pytest.raises(InvalidParameterError):
            ChannelConfig(detection_error_prob=1.2)
        with pytest.raises(InvalidParameterError):
            ChannelConfig(capture_prob=-0.1)


# ── transmit_one_hot ─────────────────────────────────────────────────────

class TestTransmitOneHot:
    @settings(max_examples=200)
    @given(
        st.integers(min_value=1, max_value=10).flatmap(
            lambda w: st.tuples(st.just(w), st.lists(st.integers(1, w), max_size=8))
        ),
        st.floats(0, 1),
        st.floats(0, 1),
        st.integers(0, 2**32),
        st.integers(0, 1000),
    )
    def test_matches_transmit_slot(self, case, detect, capture, seed, slot):
        w, bits = case
        config = ChannelConfig(detection_error_prob=detect, capture_prob=capture, rng_seed=seed)
        strings = [TagString.one_hot(b, w) for b in bits]
        assert transmit_one_hot(bits, w, config, slot) == transmit_slot(strings, w, config, slot)

    def test_bit_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            transmit_one_hot([4], 3)


# ── verdict ──────────────────────────────────────────────────────────────

class TestVerdict:
    def test_collision_is_present(self):
        assert verdict(BitSymbol.COLLISION) is Verdict.PRESENT

    def test_one_is_present(self):
        assert verdict(BitSymbol.ONE) is Verdict.PRESENT

    def test_silence_is_absent(self):
        assert verdict(BitSymbol.SILENCE) is Verdict.ABSENT

    def test_zero_is_absent(self):
        assert verdict(BitSymbol.ZERO) is Verdict.ABSENT
