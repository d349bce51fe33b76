import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vldna.codec import (
    CodecId,
    RS_255_239,
    UncorrectableBlock,
    decode,
    ecc_decode,
    ecc_encode,
    ecc_length,
    encode,
    get_codec,
    keystream,
    payload_seed,
    randomize,
    splitmix64,
)
from vldna.codec.tables import build_blawat, build_grass, load
from vldna.errors import InvalidCodeword
from vldna.seqcore import DnaSequence, homopolymer_runs

CODECS = [c.value for c in CodecId]


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=600), st.sampled_from(CODECS))
def test_round_trip(data, codec):
    assert decode(encode(data, codec), codec) == data


@pytest.mark.parametrize("codec,nominal", [("rotation", np.log2(3)), ("blawat", 1.6), ("grass", 16 / 9)])
def test_density(codec, nominal):
    data = np.random.default_rng(1).integers(0, 256, 10 ** 5, dtype=np.uint8).tobytes()
    seq = encode(data, codec)
    measured = 8 * len(data) / len(seq)
    assert abs(measured - nominal) / nominal < 0.01
    assert abs(get_codec(codec).nominal_density - nominal) < 1e-12


def test_reported_densities():
    assert [get_codec(c).reported_density for c in ("rotation", "blawat", "grass")] == [1.58, 1.6, 1.78]


def test_blawat_and_grass_sizes():
    assert len(encode(b"\x00\x01\x02\x03\x04", "blawat")) == 25
    assert len(encode(b"\xff\xfe", "grass")) == 9


def test_rotation_never_repeats_a_base():
    data = np.random.default_rng(2).integers(0, 256, 50_000, dtype=np.uint8).tobytes()
    codes = encode(data, "rotation").codes
    assert not np.any(codes[1:] == codes[:-1])
    assert encode(b"", "rotation") == DnaSequence("")


def test_rotation_rejects_repeat():
    seq = encode(b"hello world!", "rotation")
    text = str(seq)
    broken = text[:5] + text[4] + text[6:]
    with pytest.raises(InvalidCodeword):
        decode(DnaSequence(broken), "rotation")


def test_grass_rejects_out_of_range_unit():
    codec = get_codec("grass")
    top = codec.codons[46] * 3  # digits (46, 46, 46) -> 103822 > 65535
    assert 46 * 47 * 47 + 46 * 47 + 46 >= 1 << 16
    with pytest.raises(InvalidCodeword):
        decode(DnaSequence(top), "grass")


def test_blawat_rejects_foreign_codeword():
    table = set(get_codec("blawat").table)
    foreign = next("".join(w) for w in itertools.product("ACGT", repeat=5) if "".join(w) not in table)
    with pytest.raises(InvalidCodeword):
        decode(DnaSequence(foreign), "blawat")


def test_tables_match_builders_and_constraints():
    blawat, grass = load("blawat_v1.txt"), load("grass_v1.txt")
    assert blawat == build_blawat() and grass == build_grass()
    assert len(set(blawat)) == 256 and len(set(grass)) == 47
    rng = np.random.default_rng(5)
    for table, limit in ((blawat, 2), (grass, 3)):
        words = rng.choice(table, 2000)
        assert homopolymer_runs(DnaSequence("".join(words)).codes) <= limit


def test_ecc_lengths():
    assert len(ecc_encode(bytes(239))) == 255 + 4
    assert len(ecc_encode(b"")) == 4
    assert ecc_decode(ecc_encode(b"")) == b""
    assert ecc_length(240) == 2 * 255 + 4
    assert RS_255_239.codeword_len == RS_255_239.data_len + RS_255_239.parity_len


def test_ecc_matches_reedsolo_layout():
    import reedsolo

    block = bytes(range(239))
    assert ecc_encode(block)[:255] == bytes(reedsolo.RSCodec(16).encode(block))


@pytest.mark.parametrize("seed", range(5))
def test_ecc_corrects_eight_errors(seed):
    rng = np.random.default_rng(seed)
    data = rng.integers(0, 256, 1000, dtype=np.uint8).tobytes()
    coded = bytearray(ecc_encode(data))
    word = int(rng.integers(0, 5))
    for pos in rng.choice(255, 8, replace=False):
        coded[word * 255 + pos] ^= int(rng.integers(1, 256))
    assert ecc_decode(bytes(coded)) == data


def test_ecc_reports_uncorrectable():
    coded = bytearray(ecc_encode(bytes(239)))
    for pos in range(20):
        coded[pos] ^= 0xA5
    with pytest.raises(UncorrectableBlock):
        ecc_decode(bytes(coded))


def test_splitmix_reference_words():
    # first outputs of SplitMix64 seeded with 0 (Vigna's reference generator)
    assert [int(x) for x in splitmix64(0, 3)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


@given(st.binary(max_size=300), st.integers(0, 2 ** 63))
def test_randomize_is_an_involution(data, seed):
    assert randomize(randomize(data, seed), seed) == data


def test_keystream_deterministic():
    assert np.array_equal(keystream(0, 40), keystream(0, 40))
    assert payload_seed(3, 17) == payload_seed(3, 17) != payload_seed(4, 17)


@pytest.mark.parametrize("codec", CODECS)
def test_payload_transform_round_trip(codec):
    c = get_codec(codec)
    data = np.random.default_rng(9).integers(0, 256, 3000, dtype=np.uint8).tobytes()
    codes = np.array(encode(data, codec).codes)
    seed = payload_seed(1, 2)
    a, b = 400, 600
    prev = int(codes[a - 1])
    mixed = codes.copy()
    mixed[a:b] = c.transform_payload(codes, a, b, prev, seed, keystream)
    assert not np.array_equal(mixed[a:b], codes[a:b])
    back = mixed.copy()
    back[a:b] = c.transform_payload(mixed, a, b, prev, seed, keystream)
    assert np.array_equal(back, codes)


def test_grass_first_payload_keeps_last_two_bases():
    c = get_codec("grass")
    codes = np.array(encode(bytes(range(200)), "grass").codes)
    out = c.transform_payload(codes, 0, 200, 0, payload_seed(1, 0), keystream)
    assert np.array_equal(out[198:], codes[198:200])
    assert not np.array_equal(out[:198], codes[:198])
