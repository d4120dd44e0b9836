"""Distinguishing-problem families: labeled instances and sample streams.

Three families over a hidden fair bit b:

* ``subspace``: b=0 draws uniform n-bit vectors; b=1 draws uniformly
  from a hidden uniformly random k-dimensional subspace.
* ``sparse_parity``: equations (a, b) with iid Bernoulli(k/n)
  coefficients; b=1 plants b = <a, x> for a hidden uniform x.
* ``local_prg``: pairs (a, b) with a a uniform ordered k-tuple of
  coordinates; b=1 sets b = P(x^a) for a hidden uniform seed x.

Instances retain their hidden seed so test oracles can recompute
ground truth; distinguishers receive only samples.  Streams are lazy
and a pure function of (instance, rng stream).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

from .bitvec import (
    BitString,
    OrderedTuple,
    inner_product,
    project,
    sample_ordered_tuple,
    sample_sparse_vector,
    sample_subspace_basis,
)
from .predicates import Predicate
from .rng import SplitMix64

FAMILIES = ("subspace", "sparse_parity", "local_prg")


@dataclass(frozen=True)
class SourceSpec:
    """A distinguishing-problem family with its parameters."""

    family: str
    n: int
    k: int
    predicate: Optional[Predicate] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family: {self.family!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.family == "subspace":
            if not 0 <= self.k <= self.n:
                raise ValueError("subspace needs 0 <= k <= n")
        elif self.family == "sparse_parity":
            if not 0 < self.k < self.n:
                raise ValueError("sparse_parity needs 0 < k < n")
        else:
            if self.predicate is None:
                raise ValueError("local_prg needs a predicate")
            if self.k != self.predicate.k:
                raise ValueError("k must equal the predicate arity")
            if not 1 <= self.k <= self.n:
                raise ValueError("local_prg needs 1 <= arity <= n")


Hidden = Union[tuple[BitString, ...], BitString, None]


@dataclass(frozen=True)
class Instance:
    """A drawn instance: spec, truth bit, and (if planted) hidden seed."""

    spec: SourceSpec
    b: int
    hidden: Hidden = None

    def __post_init__(self):
        if self.b not in (0, 1):
            raise ValueError("b must be 0 or 1")
        if (self.hidden is not None) != (self.b == 1):
            raise ValueError("hidden seed present iff b = 1")


@dataclass(frozen=True)
class VectorSample:
    u: BitString


@dataclass(frozen=True)
class EquationSample:
    a: BitString
    b: int


@dataclass(frozen=True)
class LocalSample:
    a: OrderedTuple
    b: int


Sample = Union[VectorSample, EquationSample, LocalSample]


def draw_instance(
    spec: SourceSpec, rng: SplitMix64, force_b: Optional[int] = None
) -> Instance:
    """Draw b uniformly (or use ``force_b``) plus the hidden seed.

    For the planted branch the subspace is uniform over all
    k-dimensional subspaces and x is uniform over {0,1}^n.
    """
    b = rng.bit() if force_b is None else force_b
    if b == 0:
        return Instance(spec, 0)
    if spec.family == "subspace":
        hidden: Hidden = tuple(sample_subspace_basis(spec.n, spec.k, rng))
    else:
        hidden = BitString(spec.n, rng.bits(spec.n))
    return Instance(spec, 1, hidden)


def next_sample(inst: Instance, rng: SplitMix64) -> Sample:
    """One iid sample from the instance's branch distribution."""
    spec = inst.spec
    if spec.family == "subspace":
        if inst.b == 0:
            return VectorSample(BitString(spec.n, rng.bits(spec.n)))
        basis = inst.hidden
        coeffs = rng.bits(len(basis)) if basis else 0
        value = 0
        for i, vec in enumerate(basis):
            if (coeffs >> i) & 1:
                value ^= vec.value
        return VectorSample(BitString(spec.n, value))
    if spec.family == "sparse_parity":
        a = sample_sparse_vector(spec.n, spec.k / spec.n, rng)
        if inst.b == 0:
            return EquationSample(a, rng.bit())
        return EquationSample(a, inner_product(a, inst.hidden))
    a = sample_ordered_tuple(spec.n, spec.k, rng)
    if inst.b == 0:
        return LocalSample(a, rng.bit())
    return LocalSample(a, spec.predicate.evaluate(project(inst.hidden, a)))


def sample_stream(inst: Instance, rng: SplitMix64, m: int) -> Iterator[Sample]:
    """Lazy stream of m iid samples (never materialized)."""
    for _ in range(m):
        yield next_sample(inst, rng)


def hybrid_stream(
    x: BitString, j: int, m: int, spec: SourceSpec, rng: SplitMix64
) -> Iterator[Sample]:
    """Hybrid H_j: samples 1..j planted with seed x, the rest null."""
    if spec.family != "local_prg":
        raise ValueError("hybrid streams are defined for local_prg specs")
    if not 0 <= j <= m:
        raise ValueError("need 0 <= j <= m")
    planted = Instance(spec, 1, x)
    null = Instance(spec, 0)
    for t in range(m):
        yield next_sample(planted if t < j else null, rng)


class OnePassStream:
    """Iterator adapter that aborts on any attempt to re-read."""

    def __init__(self, iterable: Iterable[Sample]):
        self._it = iter(iterable)
        self._consumed = False

    def __iter__(self):
        if self._consumed:
            raise RuntimeError("stream already consumed: single pass only")
        self._consumed = True
        return self._it


def format_sample(sample: Sample) -> str:
    """One-line dump format (tuple indices printed 1-based)."""
    if isinstance(sample, VectorSample):
        return f"u={sample.u.to_hex()}"
    if isinstance(sample, EquationSample):
        return f"a={sample.a.to_hex()} b={sample.b}"
    idx = ",".join(str(i + 1) for i in sample.a.indices)
    return f"a={idx} b={sample.b}"


def parse_sample(line: str, spec: SourceSpec) -> Sample:
    """Inverse of :func:`format_sample` for a given spec."""
    parts = dict(p.split("=", 1) for p in line.split())
    if spec.family == "subspace":
        return VectorSample(BitString.from_hex(spec.n, parts["u"]))
    if spec.family == "sparse_parity":
        return EquationSample(BitString.from_hex(spec.n, parts["a"]), int(parts["b"]))
    indices = [int(tok) - 1 for tok in parts["a"].split(",")]
    return LocalSample(OrderedTuple(indices), int(parts["b"]))


def dump_samples(samples: Iterable[Sample], fh) -> int:
    count = 0
    for s in samples:
        fh.write(format_sample(s) + "\n")
        count += 1
    return count
