import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sttuep.qsim import BasisString, haar_random_state, named_state
from sttuep.shadows import (
    OutOfRangeBasis,
    ShadowBatch,
    ShadowRecord,
    acquire,
    basis_group_bits,
    pack_bases,
    pack_outcomes,
    unpack,
    unpack_bases,
    unpack_outcomes,
)


def batch_of(bases: list[str], bits: list[tuple]) -> ShadowBatch:
    return ShadowBatch.from_records(
        ShadowRecord(BasisString(len(b), b), np.array(x, dtype=np.uint8)) for b, x in zip(bases, bits)
    )


@st.composite
def batches(draw):
    n = draw(st.integers(1, 12))
    N = draw(st.integers(1, 20))
    bases = draw(arrays(np.int8, (N, n), elements=st.integers(0, 2)))
    bits = draw(arrays(np.uint8, (N, n), elements=st.integers(0, 1)))
    return ShadowBatch(n, bases, bits)


class TestAcquire:
    def test_zero_state_z_records_read_zero(self):
        batch = acquire(named_state("all_zero", 1), 10_000, np.random.default_rng(0))
        z = batch.bases[:, 0] == 2
        assert z.any()
        assert not batch.bits[z].any()

    def test_zz_basis_frequency(self):
        N = 10_000
        batch = acquire(haar_random_state(2, seed=1), N, np.random.default_rng(1))
        freq = np.mean(np.all(batch.bases == 2, axis=1))
        assert abs(freq - 1 / 9) < 4 * math.sqrt((1 / 9) * (8 / 9) / N)

    def test_letter_marginals_uniform(self):
        N = 30_000
        batch = acquire(haar_random_state(4, seed=2), N, np.random.default_rng(2))
        se = math.sqrt((1 / 3) * (2 / 3) / N)
        for q in range(4):
            for code in range(3):
                assert abs(np.mean(batch.bases[:, q] == code) - 1 / 3) < 4 * se

    def test_deterministic_per_seed(self):
        state = haar_random_state(3, seed=3)
        a = acquire(state, 500, np.random.default_rng(99))
        b = acquire(state, 500, np.random.default_rng(99))
        assert a == b
        assert pack_bases(a).tobytes() == pack_bases(b).tobytes()
        assert pack_outcomes(a).tobytes() == pack_outcomes(b).tobytes()

    def test_rejects_zero_copies(self):
        with pytest.raises(ValueError):
            acquire(named_state("ghz", 2), 0, np.random.default_rng(0))


class TestWireFormat:
    @pytest.mark.parametrize("n, width", [(1, 2), (2, 4), (3, 5), (10, 16), (20, 32)])
    def test_group_width(self, n, width):
        assert basis_group_bits(n) == width == math.ceil(n * math.log2(3))

    def test_single_qubit_codes(self):
        np.testing.assert_array_equal(pack_bases(batch_of(["X"], [(0,)])), [0, 0])
        np.testing.assert_array_equal(pack_bases(batch_of(["Y"], [(0,)])), [1, 0])
        np.testing.assert_array_equal(pack_bases(batch_of(["Z"], [(0,)])), [0, 1])

    def test_trit_order_is_little_endian_by_qubit(self):
        # X=0, Y=1, Z=2: "YZ" -> 1 + 2*3 = 7 -> 1110 little endian
        np.testing.assert_array_equal(pack_bases(batch_of(["YZ"], [(0, 0)])), [1, 1, 1, 0])

    def test_outcome_stream(self):
        np.testing.assert_array_equal(pack_outcomes(batch_of(["XYZ"], [(1, 0, 1)])), [1, 0, 1])
        assert pack_outcomes(batch_of(["X", "Z"], [(1,), (0,)])).size == 2

    def test_stream_lengths(self):
        batch = acquire(haar_random_state(20, seed=0), 3, np.random.default_rng(0))
        assert pack_bases(batch).size == 32 * 3
        assert pack_outcomes(batch).size == 20 * 3

    def test_out_of_range_basis(self):
        with pytest.raises(OutOfRangeBasis):
            unpack_bases([1, 1], 1, 1)

    @pytest.mark.parametrize("stream, n, N", [([], 1, 0), ([0, 0, 0], 1, 1), ([0] * 4, 1, 1)])
    def test_length_mismatch(self, stream, n, N):
        with pytest.raises(ValueError):
            unpack_bases(stream, n, N)

    def test_outcome_length_mismatch(self):
        with pytest.raises(ValueError):
            unpack_outcomes([0, 1, 1], 2, 2)

    def test_hundred_random_roundtrips(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n, N = int(rng.integers(1, 9)), int(rng.integers(1, 30))
            batch = acquire(haar_random_state(n, rng), N, rng)
            assert unpack(pack_bases(batch), pack_outcomes(batch), n, N) == batch


@settings(max_examples=200, deadline=None)
@given(batches())
def test_pack_unpack_inverse(batch):
    assert unpack(pack_bases(batch), pack_outcomes(batch), batch.n, batch.N) == batch


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 12), st.integers(1, 10), st.data())
def test_unpack_pack_inverse_on_valid_streams(n, N, data):
    width = basis_group_bits(n)
    values = data.draw(st.lists(st.integers(0, 3**n - 1), min_size=N, max_size=N))
    stream = np.array([(v >> i) & 1 for v in values for i in range(width)], dtype=np.uint8)
    codes = unpack_bases(stream, n, N)
    batch = ShadowBatch(n, codes, np.zeros((N, n)))
    np.testing.assert_array_equal(pack_bases(batch), stream)


def test_batch_record_views():
    batch = batch_of(["XZ", "YY"], [(0, 1), (1, 1)])
    assert len(batch) == 2
    assert batch[1].basis.letters == "YY"
    assert batch[:1].N == 1
    assert [r.basis.letters for r in batch.records] == ["XZ", "YY"]
    with pytest.raises(ValueError):
        ShadowRecord(BasisString(2, "XX"), np.zeros(3))
