import numpy as np
import pytest

from vldna.codec import encode, get_codec, keystream, payload_seed
from vldna.codec.batch import keystream_rows, payload_seeds, randomize_rows


def test_keystream_rows_match_scalar():
    seeds = np.array([1, 2**63 + 5, 77], dtype=np.uint64)
    ks = keystream_rows(seeds, 13)
    for s, row in zip(seeds.tolist(), ks):
        assert np.array_equal(row, keystream(s, 13))


def test_payload_seeds_match_scalar():
    ords = np.arange(50)
    assert payload_seeds(3, ords).tolist() == [payload_seed(3, i) for i in range(50)]


@pytest.mark.parametrize("name", ["rotation", "blawat", "grass"])
def test_rows_match_per_payload_transform_and_restore(name):
    rng = np.random.default_rng(5)
    data = rng.integers(0, 256, 3001, dtype=np.uint8).tobytes()
    codes = np.ascontiguousarray(encode(data, name).codes)
    codec = get_codec(name)
    starts = np.arange(0, codes.size, 200)
    stops = np.minimum(starts + 200, codes.size)
    seeds = payload_seeds(2, np.arange(starts.size))
    seeds[::3] = 0
    got = randomize_rows(codec, codes, starts, stops, seeds)
    for a, b, s in zip(starts, stops, seeds.tolist()):
        if s == 0:
            assert np.array_equal(got[a:b], codes[a:b])
            continue
        prev = int(codes[a - 1]) if a else 0
        want = codec.transform_payload(codes, a, b, prev, s, keystream)
        assert np.array_equal(got[a:b], want)
    back = randomize_rows(codec, got, starts, stops, seeds, restore=True)
    assert np.array_equal(back, codes)
