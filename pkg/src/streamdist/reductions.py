"""Bit-by-bit learners built from distinguishers.

Both learners guess each secret bit by repeatedly (a) guessing a value
g, (b) transforming a batch of labeled samples so that the transformed
stream is lower-dimensional / satisfiable exactly when the guess is
right, and (c) asking a fresh distinguisher instance which side the
batch looks like.  Majority voting over the repetitions amplifies the
single-vote advantage; ties resolve to 1.

The transforms are fixed functions of (guess, auxiliary randomness,
sample); they never look at the secret.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Optional

from .bitvec import BitString, Gf2Matrix, inner_product, sample_full_rank_map, sample_sparse_vector
from .distinguishers import Distinguisher
from .rng import SplitMix64
from .sources import EquationSample, VectorSample


@dataclass
class LearnerReport:
    """Learned estimate plus the per-bit vote bookkeeping."""

    estimate: BitString
    per_bit_votes: list[tuple[int, int]]  # (count0, count1) per bit
    halted: bool
    samples_consumed: int


def _drop_bit(value: int, i: int) -> int:
    low = value & ((1 << i) - 1)
    high = (value >> (i + 1)) << i
    return low | high


def parity_transform_vector(a: BitString, b: int, i: int, g: int, n: int) -> BitString:
    """Pre-map vector (a with bit i deleted, b + g*a_i, zero padding).

    The full transform is a fixed invertible map applied to this
    vector; when g equals the secret's bit i the set of such vectors is
    a (k'-1)-dimensional subspace, otherwise it is all of {0,1}^k'.
    """
    k_prime = a.length
    am = _drop_bit(a.value, i)
    bit = b ^ (g & a[i])
    return BitString(n, am | (bit << (k_prime - 1)))


def parity_oracle(x: BitString, rng: SplitMix64) -> Iterator[tuple[BitString, int]]:
    """Labeled uniform linear equations: a uniform, b = <a, x>."""
    n = x.length
    while True:
        a = BitString(n, rng.bits(n))
        yield a, inner_product(a, x)


def learn_parity(
    b_factory: Callable[[], Distinguisher],
    n: int,
    k_prime: int,
    reps: int,
    inner_m: int,
    oracle: Iterator[tuple[BitString, int]],
    rng: SplitMix64,
    output_for_lower: int = 0,
) -> LearnerReport:
    """Learn x in {0,1}^k' from uniform parity samples using a
    subspace distinguisher over {0,1}^n.

    Per bit i and repetition: guess g, draw a uniform invertible n x n
    map M, feed ``inner_m`` transformed samples M·(a^-i, b+g·a_i, 0..0)
    to a fresh distinguisher, and credit the guess when the output
    signals "lower-dimensional".  ``output_for_lower`` declares which
    output bit carries that signal (0 for the rank-threshold tester;
    1 matches the abstract convention where the planted/low side is 1).
    """
    if not 1 <= k_prime <= n:
        raise ValueError("need 1 <= k_prime <= n")
    estimate = 0
    votes = []
    consumed = 0
    for i in range(k_prime):
        count = [0, 0]
        for _ in range(reps):
            g = rng.bit()
            m_map = sample_full_rank_map(n, rng)
            dist = b_factory()
            for _ in range(inner_m):
                try:
                    a, b = next(oracle)
                except StopIteration:
                    raise RuntimeError("oracle exhausted") from None
                consumed += 1
                vec = parity_transform_vector(a, b, i, g, n)
                dist.feed(VectorSample(m_map.mul(vec)))
            out = dist.decide()
            if out == output_for_lower:
                count[g] += 1
            else:
                count[1 - g] += 1
        bit = 0 if count[0] > count[1] else 1  # ties resolve to 1
        estimate |= bit << i
        votes.append((count[0], count[1]))
    return LearnerReport(BitString(k_prime, estimate), votes, False, consumed)


def sparse_transform(
    a: BitString, b: int, i: int, g: int, y: BitString
) -> EquationSample:
    """f_y: (a, b) -> (a with bit i deleted, b + g*a_i + <a^-i, y>)."""
    am = BitString(y.length, _drop_bit(a.value, i))
    return EquationSample(am, b ^ (g & a[i]) ^ inner_product(am, y))


def sparse_feed_probability(n: int, k: int) -> Fraction:
    """Exact probability that a scanned sample is fed: 2k/n."""
    p1 = Fraction(k, n)
    return p1 + Fraction(k, n - k) * (1 - p1)


def sparse_oracle(
    x: BitString, k: int, rng: SplitMix64
) -> Iterator[tuple[BitString, int]]:
    """Labeled sparse equations over {0,1}^(n+1): coefficients iid
    Bernoulli(k/n), b = <a, x>.  ``x`` has length n+1."""
    n = x.length - 1
    while True:
        a = sample_sparse_vector(n + 1, k / n, rng)
        yield a, inner_product(a, x)


def learn_sparse_parity(
    b_factory: Callable[[], Distinguisher],
    n: int,
    k: int,
    reps: int,
    inner_m: int,
    feed_budget: int,
    oracle: Iterator[tuple[BitString, int]],
    rng: SplitMix64,
) -> LearnerReport:
    """Learn x in {0,1}^(n+1) from sparse parity samples using a
    satisfiable-vs-random distinguisher over n variables.

    Per bit i and repetition: guess g and a uniform y in {0,1}^n; scan
    samples, feeding f_y(a, b) whenever a_i = 1 and otherwise with
    probability k/(n-k) (so a scanned sample is fed with probability
    exactly 2k/n and the fed coordinate pattern matches the
    distinguisher's input distribution).  If fewer than ``inner_m``
    samples are fed within ``feed_budget`` scans, the whole procedure
    halts and outputs the all-zero string.
    """
    n_prime = n + 1
    estimate = 0
    votes: list[tuple[int, int]] = []
    consumed = 0
    subsample = k / (n - k)
    for i in range(n_prime):
        count = [0, 0]
        for _ in range(reps):
            g = rng.bit()
            y = BitString(n, rng.bits(n))
            dist = b_factory()
            fed = 0
            for _ in range(feed_budget):
                if fed >= inner_m:
                    break
                try:
                    a, b = next(oracle)
                except StopIteration:
                    raise RuntimeError("oracle exhausted") from None
                consumed += 1
                if a[i] == 1 or rng.random() < subsample:
                    dist.feed(sparse_transform(a, b, i, g, y))
                    fed += 1
            if fed < inner_m:
                votes.append((count[0], count[1]))
                return LearnerReport(
                    BitString(n_prime, 0), votes, True, consumed
                )
            out = dist.decide()
            if out == 1:
                count[g] += 1
            else:
                count[1 - g] += 1
        bit = 0 if count[0] > count[1] else 1  # ties resolve to 1
        estimate |= bit << i
        votes.append((count[0], count[1]))
    return LearnerReport(BitString(n_prime, estimate), votes, False, consumed)


def default_feed_budget(n: int, k: int, inner_m: int, slack: int = 32) -> int:
    """Scans per repetition so that underfeeding is vanishingly rare.

    With feed probability 2k/n, (n/k)(inner_m + slack) scans feed
    2(inner_m + slack) samples in expectation.
    """
    return (n * (inner_m + slack) + k - 1) // k
