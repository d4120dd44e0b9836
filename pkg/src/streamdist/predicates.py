"""k-ary boolean predicates, exact Fourier spectra, and resilience.

A predicate's truth table is indexed by the input read as a k-bit
big-endian string: input position 1 is the most significant bit of the
index.  Spectra are kept as exact integer numerators over the implied
denominator 2^k, so deciding whether a coefficient vanishes needs no
floating-point tolerance.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .bitvec import BitString

MAX_ARITY = 20  # 2^k truth-table entries; keeps tables at most ~1M bits


class PredicateParseError(ValueError):
    """Malformed predicate file; message carries the line number."""


class Predicate:
    """Boolean function {0,1}^k -> {0,1} as a packed truth table."""

    __slots__ = ("k", "_table")

    def __init__(self, k: int, table: int):
        if not 1 <= k <= MAX_ARITY:
            raise ValueError(f"arity must lie in [1, {MAX_ARITY}]")
        if table < 0 or table >> (1 << k):
            raise ValueError("truth table must have exactly 2^k bits")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "_table", table)

    def __setattr__(self, name, val):  # pragma: no cover
        raise AttributeError("Predicate is immutable")

    @classmethod
    def from_truth_bits(cls, k: int, bits) -> "Predicate":
        bits = list(bits)
        if len(bits) != 1 << k:
            raise ValueError("truth table must have exactly 2^k entries")
        table = 0
        for i, b in enumerate(bits):
            table |= (b & 1) << i
        return cls(k, table)

    def value(self, index: int) -> int:
        """Entry for the input whose big-endian bits form ``index``."""
        if not 0 <= index < (1 << self.k):
            raise IndexError("truth-table index out of range")
        return (self._table >> index) & 1

    def truth_bits(self) -> tuple[int, ...]:
        return tuple((self._table >> i) & 1 for i in range(1 << self.k))

    def input_index(self, inp: BitString) -> int:
        """Truth-table index of a k-bit input (position 1 = MSB)."""
        if inp.length != self.k:
            raise ValueError("input length must equal the arity")
        idx = 0
        for j in range(self.k):
            idx |= inp[j] << (self.k - 1 - j)
        return idx

    def evaluate(self, inp: BitString) -> int:
        return (self._table >> self.input_index(inp)) & 1

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Predicate)
            and self.k == other.k
            and self._table == other._table
        )

    def __hash__(self) -> int:
        return hash((self.k, self._table))

    def __repr__(self) -> str:
        return f"Predicate(k={self.k})"


@dataclass(frozen=True)
class Spectrum:
    """Exact Fourier spectrum of (-1)^P.

    ``numerators[alpha]`` is the character sum
    sum_x (-1)^{P(x)} (-1)^{<alpha,x>}; the coefficient is
    numerators[alpha] / 2^k.  ``alpha`` is a k-bit mask over truth-table
    index bits, so |alpha| is its popcount.
    """

    k: int
    numerators: tuple[int, ...]

    def coefficient(self, alpha: int) -> float:
        return self.numerators[alpha] / (1 << self.k)

    def parseval_sum(self) -> int:
        """Exactly 2^(2k) for every +-1-valued function."""
        return sum(v * v for v in self.numerators)


def walsh_hadamard(pred: Predicate) -> Spectrum:
    """Exact integer spectrum via the fast butterfly, O(k 2^k)."""
    size = 1 << pred.k
    arr = np.ones(size, dtype=np.int64)
    for i in range(size):
        if pred.value(i):
            arr[i] = -1
    _kernels.wht_inplace(arr)
    return Spectrum(pred.k, tuple(int(v) for v in arr))


def resilience(pred: Predicate) -> int:
    """Smallest |alpha| carrying a nonzero coefficient (0 for constants).

    Computed exactly on integer numerators; P is t-resilient for
    t = resilience(P): all coefficients below level t vanish.
    """
    spec = walsh_hadamard(pred)
    return min(
        alpha.bit_count() for alpha, v in enumerate(spec.numerators) if v != 0
    )


def is_balanced(pred: Predicate) -> bool:
    return sum(pred.truth_bits()) == 1 << (pred.k - 1)


def builtin(name: str, k: int) -> Predicate:
    """Canonical predicates: xor, and, maj (odd arity), tsa (arity 5).

    ``tsa`` is x1 + x2 + x3 + x4*x5 over GF(2), a 3-resilient 5-ary
    predicate.
    """
    name = name.lower()
    if name == "xor":
        bits = [idx.bit_count() & 1 for idx in range(1 << k)]
    elif name == "and":
        bits = [1 if idx == (1 << k) - 1 else 0 for idx in range(1 << k)]
    elif name == "maj":
        if k % 2 == 0:
            raise ValueError("majority needs odd arity")
        bits = [1 if idx.bit_count() > k // 2 else 0 for idx in range(1 << k)]
    elif name == "tsa":
        if k != 5:
            raise ValueError("tsa is 5-ary")
        bits = []
        for idx in range(32):
            # index bit k-1-j holds input position j+1 (big-endian)
            x = [(idx >> (4 - j)) & 1 for j in range(5)]
            bits.append(x[0] ^ x[1] ^ x[2] ^ (x[3] & x[4]))
    else:
        raise ValueError(f"unknown predicate name: {name!r}")
    return Predicate.from_truth_bits(k, bits)


def parse_predicate(text: str) -> Predicate:
    """Parse the two-line text format: arity, then 2^k chars of 0/1."""
    lines = text.splitlines()
    if not lines:
        raise PredicateParseError("line 1: missing arity")
    try:
        k = int(lines[0].strip())
    except ValueError:
        raise PredicateParseError(f"line 1: arity is not an integer: {lines[0]!r}")
    if not 1 <= k <= MAX_ARITY:
        raise PredicateParseError(f"line 1: arity {k} out of range [1, {MAX_ARITY}]")
    if len(lines) < 2:
        raise PredicateParseError("line 2: missing truth table")
    row = lines[1].strip()
    if len(row) != 1 << k:
        raise PredicateParseError(
            f"line 2: expected {1 << k} characters, got {len(row)}"
        )
    if set(row) - {"0", "1"}:
        raise PredicateParseError("line 2: truth table must be 0/1 characters")
    return Predicate.from_truth_bits(k, (int(c) for c in row))


def load_predicate(path: str | os.PathLike) -> Predicate:
    with open(path, "r", encoding="ascii") as fh:
        return parse_predicate(fh.read())


def dump_predicate(pred: Predicate) -> str:
    return "{}\n{}\n".format(pred.k, "".join(str(b) for b in pred.truth_bits()))
