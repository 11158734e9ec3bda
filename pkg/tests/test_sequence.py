import numpy as np
import pytest

from glimmrcm.sequence import (SamplingSequence, dyadic_occupancy,
                               next_sample, radical_inverse_base2)


def test_radical_inverse_base2_exact_values():
    # bit-reversal of 1,2,3,... as exact dyadic rationals
    assert radical_inverse_base2(0) == 0.0
    assert radical_inverse_base2(1) == 0.5
    assert radical_inverse_base2(2) == 0.25
    assert radical_inverse_base2(3) == 0.75
    assert radical_inverse_base2(4) == 0.125
    assert radical_inverse_base2(6) == 0.375
    assert radical_inverse_base2(2**20) == 2.0**-21


def test_radical_inverse_rejects_negative():
    with pytest.raises(ValueError):
        radical_inverse_base2(-1)


def test_van_der_corput_first_offsets_frozen():
    seq = SamplingSequence()
    got = seq.samples(8)
    expected = np.array([0.0, -0.5, 0.5, -0.75, 0.25, -0.25, 0.75, -0.875])
    np.testing.assert_array_equal(got, expected)


def test_offsets_stay_inside_open_interval():
    for kind in ("van_der_corput", "prng"):
        seq = SamplingSequence(kind=kind, seed=7)
        vals = seq.samples(4096)
        assert np.all(vals > -1.0) and np.all(vals < 1.0)


def test_van_der_corput_equidistribution():
    vals = SamplingSequence().samples(4096)
    counts = dyadic_occupancy(vals, 5)
    assert counts.size == 64
    assert counts.sum() == 4096
    assert counts.min() >= 64 - 12 and counts.max() <= 64 + 12


def test_prng_reproducible_and_order_free():
    seq = SamplingSequence(kind="prng", seed=11)
    forward = [seq.sample(s) for s in range(50)]
    backward = [seq.sample(s) for s in reversed(range(50))]
    assert forward == backward[::-1]
    again = SamplingSequence(kind="prng", seed=11).samples(50)
    np.testing.assert_array_equal(again, np.array(forward))


def test_prng_seeds_differ():
    a = SamplingSequence(kind="prng", seed=0).samples(100)
    b = SamplingSequence(kind="prng", seed=1).samples(100)
    assert np.any(a != b)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        SamplingSequence(kind="halton")


def test_negative_level_rejected():
    with pytest.raises(ValueError):
        SamplingSequence().sample(-1)


def test_next_sample_alias():
    seq = SamplingSequence()
    assert next_sample(seq, 3) == seq.sample(3)


def test_prng_occupancy_roughly_uniform():
    # looser band than the low-discrepancy stream, but no empty bins
    vals = SamplingSequence(kind="prng", seed=3).samples(4096)
    counts = dyadic_occupancy(vals, 3)
    assert counts.sum() == 4096
    assert counts.min() > 0
