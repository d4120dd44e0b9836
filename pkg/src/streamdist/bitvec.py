"""Exact GF(2) linear algebra and the randomized samplers.

Vectors are bit-packed into Python ints (bit ``i`` of the int is
coordinate ``i`` of the vector, 0-based); all operations are defined on
logical bits so the packing is unobservable.  Matrices are tuples of
packed rows.  Values are immutable once constructed and safe to share
across threads.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Optional, Sequence

from . import _kernels
from .rng import SplitMix64


class DimensionError(ValueError):
    """Operand lengths are incompatible."""


class BitString:
    """Fixed-length immutable vector over GF(2).

    Coordinates are 0-based.  ``str()`` prints coordinate 0 first, so
    ``BitString.from_text("1100")`` has bits (1, 1, 0, 0).  Addition is
    bitwise XOR (``^``).
    """

    __slots__ = ("length", "value")

    def __init__(self, length: int, value: int = 0):
        if length < 1:
            raise ValueError("length must be >= 1")
        if value < 0 or value >> length:
            raise ValueError("value does not fit in length bits")
        object.__setattr__(self, "length", length)
        object.__setattr__(self, "value", value)

    def __setattr__(self, name, val):  # pragma: no cover
        raise AttributeError("BitString is immutable")

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitString":
        bits = list(bits)
        value = 0
        for i, b in enumerate(bits):
            if b not in (0, 1):
                raise ValueError("bits must be 0 or 1")
            value |= b << i
        return cls(len(bits), value)

    @classmethod
    def from_text(cls, text: str) -> "BitString":
        return cls.from_bits(int(c) for c in text)

    @classmethod
    def zeros(cls, length: int) -> "BitString":
        return cls(length, 0)

    @classmethod
    def ones(cls, length: int) -> "BitString":
        return cls(length, (1 << length) - 1)

    @classmethod
    def unit(cls, length: int, coord: int) -> "BitString":
        """Standard basis vector with a single 1 at ``coord`` (0-based)."""
        if not 0 <= coord < length:
            raise IndexError("coordinate out of range")
        return cls(length, 1 << coord)

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError("bit index out of range")
        return (self.value >> i) & 1

    def bits(self) -> tuple[int, ...]:
        return tuple((self.value >> i) & 1 for i in range(self.length))

    def __len__(self) -> int:
        return self.length

    def __iter__(self) -> Iterator[int]:
        return iter(self.bits())

    def __xor__(self, other: "BitString") -> "BitString":
        if self.length != other.length:
            raise DimensionError("length mismatch in XOR")
        return BitString(self.length, self.value ^ other.value)

    __add__ = __xor__

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, BitString)
            and self.length == other.length
            and self.value == other.value
        )

    def __hash__(self) -> int:
        return hash((self.length, self.value))

    def weight(self) -> int:
        return self.value.bit_count()

    def is_zero(self) -> bool:
        return self.value == 0

    def to_hex(self) -> str:
        """Fixed-width hex of the packed value (coordinate 0 = LSB)."""
        return format(self.value, "0{}x".format((self.length + 3) // 4))

    @classmethod
    def from_hex(cls, length: int, text: str) -> "BitString":
        return cls(length, int(text, 16))

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits())

    def __repr__(self) -> str:
        return f"BitString({self})"


def inner_product(u: BitString, v: BitString) -> int:
    """GF(2) inner product: popcount(u AND v) mod 2."""
    if u.length != v.length:
        raise DimensionError("length mismatch in inner product")
    return (u.value & v.value).bit_count() & 1


class Gf2Matrix:
    """Immutable matrix over GF(2), stored as packed rows."""

    __slots__ = ("rows", "n_cols")

    def __init__(self, rows: Sequence[int], n_cols: int):
        if n_cols < 1:
            raise ValueError("n_cols must be >= 1")
        for r in rows:
            if r < 0 or r >> n_cols:
                raise ValueError("row does not fit in n_cols bits")
        object.__setattr__(self, "rows", tuple(rows))
        object.__setattr__(self, "n_cols", n_cols)

    def __setattr__(self, name, val):  # pragma: no cover
        raise AttributeError("Gf2Matrix is immutable")

    @classmethod
    def from_bitstrings(cls, rows: Sequence[BitString]) -> "Gf2Matrix":
        if not rows:
            raise ValueError("need at least one row")
        n = rows[0].length
        if any(r.length != n for r in rows):
            raise DimensionError("rows must share a length")
        return cls([r.value for r in rows], n)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def row(self, i: int) -> BitString:
        return BitString(self.n_cols, self.rows[i])

    def rank(self) -> int:
        return _kernels.rank(list(self.rows), self.n_cols)

    def solve(self, rhs: BitString) -> tuple[bool, Optional[BitString]]:
        """Existence and one witness for ``self · x = rhs``.

        Consistent iff some x satisfies every equation; the witness
        (free variables zeroed) reproduces rhs exactly.
        """
        if rhs.length != self.n_rows:
            raise DimensionError("rhs length must equal the row count")
        ok, wit = _kernels.solve(list(self.rows), self.n_cols, rhs.value)
        if not ok:
            return False, None
        return True, BitString(self.n_cols, wit)

    def mul(self, v: BitString) -> BitString:
        """Matrix-vector product over GF(2); result length = row count."""
        if v.length != self.n_cols:
            raise DimensionError("vector length must equal n_cols")
        out = 0
        for i, r in enumerate(self.rows):
            out |= ((r & v.value).bit_count() & 1) << i
        return BitString(self.n_rows, out)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Gf2Matrix)
            and self.n_cols == other.n_cols
            and self.rows == other.rows
        )

    def __hash__(self) -> int:
        return hash((self.rows, self.n_cols))

    def __repr__(self) -> str:
        return f"Gf2Matrix({self.n_rows}x{self.n_cols})"


class OrderedTuple:
    """Ordered tuple of k distinct coordinate indices (0-based)."""

    __slots__ = ("indices",)

    def __init__(self, indices: Sequence[int]):
        idx = tuple(indices)
        if not idx:
            raise ValueError("tuple must be nonempty")
        if len(set(idx)) != len(idx):
            raise ValueError("indices must be distinct")
        if any(i < 0 for i in idx):
            raise ValueError("indices must be nonnegative")
        object.__setattr__(self, "indices", idx)

    def __setattr__(self, name, val):  # pragma: no cover
        raise AttributeError("OrderedTuple is immutable")

    @property
    def k(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, OrderedTuple) and self.indices == other.indices

    def __hash__(self) -> int:
        return hash(self.indices)

    def __repr__(self) -> str:
        return f"OrderedTuple{self.indices}"


def project(x: BitString, a: OrderedTuple) -> BitString:
    """Projection x^a: component i of the result is bit a_i of x."""
    out = 0
    for pos, i in enumerate(a.indices):
        if i >= x.length:
            raise IndexError("tuple index out of range for this vector")
        out |= ((x.value >> i) & 1) << pos
    return BitString(a.k, out)


def sample_subspace_basis(n: int, k: int, rng: SplitMix64) -> list[BitString]:
    """k independent uniform vectors; the span is uniform on the set of
    k-dimensional subspaces of {0,1}^n.

    Rejection sampling: draw uniform vectors, restarting a vector
    whenever it is linearly dependent on those already kept.  Every
    k-dimensional subspace has the same number of ordered independent
    bases, so the induced span distribution is uniform.
    """
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    basis: list[BitString] = []
    echelon: list[int] = []  # pivot-reduced copies of accepted vectors
    while len(basis) < k:
        v = rng.bits(n)
        red = v
        for e in echelon:
            low = e & -e
            if red & low:
                red ^= e
        if red == 0:
            continue  # dependent: restart this vector
        basis.append(BitString(n, v))
        low = red & -red
        echelon = [e ^ red if e & low else e for e in echelon]
        echelon.append(red)
    return basis


def sample_full_rank_map(n: int, rng: SplitMix64) -> Gf2Matrix:
    """Uniform invertible n x n matrix over GF(2).

    Rejection sampling of uniform matrices; the acceptance probability
    is prod_{i>=1} (1 - 2^-i) > 0.288 for every n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    while True:
        rows = [rng.bits(n) for _ in range(n)]
        m = Gf2Matrix(rows, n)
        if m.rank() == n:
            return m


def sample_sparse_vector(n: int, p: float, rng: SplitMix64) -> BitString:
    """n iid Bernoulli(p) bits.

    Sampled by geometric gaps between ones, which is distributionally
    identical to n independent coin flips and much faster for small p.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if p == 0.0:
        return BitString.zeros(n)
    if p == 1.0:
        return BitString.ones(n)
    value = 0
    i = rng.geometric_gap(p)
    while i < n:
        value |= 1 << i
        i += 1 + rng.geometric_gap(p)
    return BitString(n, value)


def sample_ordered_tuple(n: int, k: int, rng: SplitMix64) -> OrderedTuple:
    """Uniform ordered k-tuple of distinct indices in [0, n).

    Partial Fisher-Yates: uniform over all n(n-1)...(n-k+1) tuples.
    """
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    pool = list(range(n))
    for j in range(k):
        swap = j + rng.below(n - j)
        pool[j], pool[swap] = pool[swap], pool[j]
    return OrderedTuple(pool[:k])
