from collections import Counter

import pytest
from hypothesis import given
import hypothesis.strategies as st

from errors import CorruptStreamError
from huffman import (
    BitWriter,
    HuffmanReader,
    canonical_codes,
    code_lengths,
    decode_extra,
    extra_bits,
    magnitude_category,
    pack_table,
    unpack_table,
)


@pytest.mark.parametrize("value, size", [(0, 0), (1, 1), (-1, 1), (2, 2), (-3, 2), (255, 8), (-32768, 16)])
def test_magnitude_category(value, size):
    assert magnitude_category(value) == size


@given(st.integers(-32768, 32767))
def test_extra_bits_roundtrip(value):
    size = magnitude_category(value)
    bits = extra_bits(value, size)
    assert 0 <= bits < (1 << size) or size == 0
    assert decode_extra(bits, size) == value


@given(st.dictionaries(st.integers(0, 600), st.integers(1, 10_000), min_size=2, max_size=80))
def test_code_lengths_kraft_and_prefix_free(counts):
    lengths = code_lengths(Counter(counts))
    assert set(lengths) == set(counts)
    # full binary tree: Kraft sum is exactly one
    assert sum(2.0 ** -n for n in lengths.values()) == pytest.approx(1.0)

    codes = list(canonical_codes(lengths).values())
    for a in codes:
        for b in codes:
            if a != b:
                assert not b.startswith(a)


def test_code_lengths_deterministic():
    counts = Counter({5: 3, 1: 3, 9: 3, 2: 1})
    assert code_lengths(counts) == code_lengths(Counter(dict(reversed(list(counts.items())))))


def test_frequent_symbols_get_short_codes():
    lengths = code_lengths(Counter({0: 1000, 1: 10, 2: 10, 3: 1}))
    assert lengths[0] == 1
    assert lengths[3] >= lengths[1]


def test_single_symbol():
    assert code_lengths(Counter({42: 7})) == {42: 1}
    assert canonical_codes({42: 1}) == {42: "0"}


@given(st.lists(st.integers(0, 40), min_size=1, max_size=300))
def test_symbols_roundtrip(symbols):
    lengths = code_lengths(Counter(symbols))
    codes = canonical_codes(lengths)
    writer = BitWriter()
    for sym in symbols:
        writer.write(codes[sym])
        writer.write_int(sym, 6)

    table, offset = unpack_table(pack_table(lengths), 0)
    assert table == lengths
    reader = HuffmanReader(writer.to_bytes(), table)
    for sym in symbols:
        assert reader.read_symbol() == sym
        assert reader.read_int(6) == sym


def test_bitwriter_packs_msb_first():
    writer = BitWriter()
    writer.write("1")
    writer.write_int(1, 3)
    assert writer.to_bytes() == bytes([0b10010000])
    assert BitWriter().to_bytes() == b""


def test_truncated_payload():
    lengths = {1: 1, 2: 2, 3: 2}
    reader = HuffmanReader(b"", lengths)
    with pytest.raises(CorruptStreamError):
        reader.read_symbol()
    with pytest.raises(CorruptStreamError):
        HuffmanReader(b"\x00", lengths).read_int(9)


def test_invalid_code():
    # only "0" is assigned; a leading 1 bit matches nothing
    reader = HuffmanReader(bytes([0b10000000]), {7: 1})
    with pytest.raises(CorruptStreamError, match="invalid code"):
        reader.read_symbol()


@pytest.mark.parametrize("data", [b"", b"\x02\x00\x01\x00", b"\x01\x00\x05\x00\x00"])
def test_bad_tables(data):
    with pytest.raises(CorruptStreamError):
        unpack_table(data, 0)
