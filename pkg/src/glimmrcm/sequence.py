"""Sampling sequences for the random choice step.

Each time level s draws one number a_s in (-1, 1); the level-s sampling
point in a mesh cell is y = x_r + a_s * h.  Two generators are provided:

* ``van_der_corput`` -- the equidistributed low-discrepancy choice,
  a_s = 2 * vdc2(s + 1) - 1 with vdc2 the base-2 radical inverse.
  Deterministic and exactly reproducible (dyadic rationals).
* ``prng`` -- a counter-based pseudorandom stream keyed by (seed, s),
  so a_s can be generated in any order and still be reproducible.
"""

from dataclasses import dataclass

import numpy as np

VAN_DER_CORPUT = "van_der_corput"
PRNG = "prng"
_KINDS = (VAN_DER_CORPUT, PRNG)


def radical_inverse_base2(k: int) -> float:
    """Base-2 radical inverse of a nonnegative integer (exact dyadic)."""
    if k < 0:
        raise ValueError("radical inverse needs k >= 0")
    q = 0.0
    b = 0.5
    while k:
        if k & 1:
            q += b
        k >>= 1
        b *= 0.5
    return q


def _prng_draw(seed: int, s: int) -> float:
    # Philox keyed by seed with the level index as counter: random-order safe.
    gen = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, s]))
    # Integer draw from (0, 2^53) keeps the sample strictly inside (-1, 1).
    u = int(gen.integers(1, 1 << 53)) * (1.0 / (1 << 53))
    return 2.0 * u - 1.0


@dataclass(frozen=True)
class SamplingSequence:
    """Stream of sampling offsets a_s, |a_s| < 1."""

    kind: str = VAN_DER_CORPUT
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown sequence kind {self.kind!r}")

    def sample(self, s: int) -> float:
        """Offset for time level s (s >= 0)."""
        if s < 0:
            raise ValueError("level index must be nonnegative")
        if self.kind == VAN_DER_CORPUT:
            return 2.0 * radical_inverse_base2(s + 1) - 1.0
        return _prng_draw(self.seed, s)

    def samples(self, count: int) -> np.ndarray:
        """First ``count`` offsets as an array."""
        return np.array([self.sample(s) for s in range(count)])


def next_sample(seq: SamplingSequence, s: int) -> float:
    """Functional alias for ``seq.sample(s)``."""
    return seq.sample(s)


def dyadic_occupancy(values: np.ndarray, level: int) -> np.ndarray:
    """Counts of values in each dyadic subinterval of (-1, 1) of length 2**-level.

    The interval (-1, 1) is split into 2**(level+1) half-open bins; the
    returned vector holds the occupancy of each.  Used by the
    equidistribution check on the van der Corput stream.
    """
    nbins = 1 << (level + 1)
    edges = -1.0 + 2.0 * np.arange(nbins + 1) / nbins
    counts, _ = np.histogram(values, bins=edges)
    return counts
