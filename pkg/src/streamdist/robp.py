"""Explicit read-once branching programs with exact success probability.

A program of length m is a layered DAG with m+1 layers; every non-leaf
vertex has exactly one outgoing edge per alphabet symbol, all edges go
to the next layer, and leaves carry output labels.  Samples are
canonically integer-encoded (subspace samples by their packed vector
value; local samples by ordered-tuple rank and outcome bit), since
edge maps are keyed on the encoding.

Success probabilities are computed by layer-wise forward propagation:
one reach vector for the null branch and a per-seed matrix for the
planted branch, combined under the uniform prior on the branch bit and
the seed.  Problems carry exact rational distributions, so an
exact-rational mode is available to validate the floating path, and
the conditional seed distributions at a vertex (with their min-entropy
bound) can be checked in exact integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .bitvec import BitString, OrderedTuple
from .predicates import Predicate
from .rng import SplitMix64

COMPUTE_BUDGET = 10**9  # elementary DP updates
EXACT_LIMIT = 1 << 16  # |X| * |A| cap for the exact-rational mode


class BudgetExceededError(RuntimeError):
    """The requested exact computation exceeds the compute budget."""


class Robp:
    """Layered read-once branching program over symbols 0..|A|-1.

    ``edges[t]`` has shape (width_t, |A|) with the target vertex index
    in layer t+1, or -1 rows for leaves; ``labels[t]`` holds leaf
    labels and -1 for internal vertices.
    """

    def __init__(self, alphabet_size: int, edges: Sequence[np.ndarray],
                 labels: Sequence[np.ndarray]):
        if len(labels) != len(edges) + 1:
            raise ValueError("need one label layer per vertex layer")
        self.alphabet_size = alphabet_size
        self.edges = [np.asarray(e, dtype=np.int64) for e in edges]
        self.labels = [np.asarray(l, dtype=np.int64) for l in labels]
        if self.labels[0].shape[0] != 1:
            raise ValueError("layer 0 must contain only the start vertex")
        for t, e in enumerate(self.edges):
            if e.shape[0] != self.labels[t].shape[0]:
                raise ValueError(f"layer {t}: edge/label row mismatch")
            if e.shape[1] != alphabet_size:
                raise ValueError(f"layer {t}: need one edge per symbol")
            nxt = self.labels[t + 1].shape[0]
            internal = self.labels[t] < 0
            if np.any((e[internal] < 0) | (e[internal] >= nxt)):
                raise ValueError(f"layer {t}: edge target out of range")
        if np.any(self.labels[-1] < 0):
            raise ValueError("all last-layer vertices must be leaves")

    @property
    def length(self) -> int:
        return len(self.edges)

    @property
    def width(self) -> int:
        return max(l.shape[0] for l in self.labels)

    def layer_width(self, t: int) -> int:
        return self.labels[t].shape[0]

    def run(self, samples: Sequence[int]) -> int:
        """Label of the leaf reached by following the sample path."""
        v = 0
        for t in range(self.length):
            if self.labels[t][v] >= 0:
                return int(self.labels[t][v])
            if t >= len(samples):
                raise ValueError("stream shorter than the program length")
            sym = samples[t]
            if not 0 <= sym < self.alphabet_size:
                raise ValueError(f"sample {sym} outside the alphabet")
            v = int(self.edges[t][v, sym])
        return int(self.labels[-1][v])

    def flipped(self) -> "Robp":
        """Same program with all leaf labels complemented."""
        labels = [np.where(l >= 0, 1 - l, l) for l in self.labels]
        return Robp(self.alphabet_size, self.edges, labels)


class FiniteDistinguishingProblem:
    """Finite distinguishing problem with exact rational distributions.

    ``d0_num / d0_den`` is the null distribution over symbols;
    ``d1_num[i] / d1_den`` is the planted distribution for seed
    ``seeds[i]``.  Rows must sum to their denominator exactly.
    """

    def __init__(self, seeds: Sequence, alphabet_size: int,
                 d0_num: Sequence[int], d0_den: int,
                 d1_num, d1_den: int):
        self.seeds = list(seeds)
        self.alphabet_size = alphabet_size
        self.d0_num = np.asarray(d0_num, dtype=np.int64)
        self.d0_den = int(d0_den)
        self.d1_num = np.asarray(d1_num, dtype=np.int64)
        self.d1_den = int(d1_den)
        if self.d0_num.shape != (alphabet_size,):
            raise ValueError("d0 must have one entry per symbol")
        if self.d1_num.shape != (len(self.seeds), alphabet_size):
            raise ValueError("d1 must be |X| x |A|")
        if int(self.d0_num.sum()) != self.d0_den:
            raise ValueError("d0 must sum to 1")
        if np.any(self.d1_num.sum(axis=1) != self.d1_den):
            raise ValueError("every d1 row must sum to 1")

    @property
    def n_seeds(self) -> int:
        return len(self.seeds)

    def d0_float(self) -> np.ndarray:
        return self.d0_num / self.d0_den

    def d1_float(self) -> np.ndarray:
        return self.d1_num / self.d1_den


def _forward_float(p: Robp, trans: np.ndarray, upto: Optional[int] = None):
    """Propagate per-row reach mass; returns (reach matrix at layer
    ``upto``, absorbed mass per row and label).

    ``trans`` has shape (rows, |A|); row r uses its own symbol
    distribution.  Mass hitting a leaf before ``upto`` is moved to the
    absorbed buckets.
    """
    upto = p.length if upto is None else upto
    rows = trans.shape[0]
    reach = np.zeros((rows, 1))
    reach[:, 0] = 1.0
    absorbed = {0: np.zeros(rows), 1: np.zeros(rows)}
    for t in range(upto):
        labels = p.labels[t]
        leaf = labels >= 0
        for v in np.nonzero(leaf)[0]:
            absorbed[int(labels[v])] += reach[:, v]
        nxt = np.zeros((rows, p.layer_width(t + 1)))
        for v in np.nonzero(~leaf)[0]:
            np.add.at(nxt, (slice(None), p.edges[t][v]),
                      reach[:, v, None] * trans)
        reach = nxt
    return reach, absorbed


def _check_budget(p: Robp, n_rows: int) -> None:
    cost = n_rows * p.width * p.alphabet_size * p.length
    if cost > COMPUTE_BUDGET:
        raise BudgetExceededError(
            f"{cost} elementary updates exceed the {COMPUTE_BUDGET} budget"
        )


def exact_success(p: Robp, prob: FiniteDistinguishingProblem,
                  mode: str = "float") -> float:
    """Probability that the program outputs the branch bit.

    The probability is over the uniform branch bit, the uniform seed,
    and the samples.  ``mode="exact"`` recomputes with Fractions
    (allowed while |X|*|A| <= 2^16) to validate the floating path.
    """
    if mode == "exact":
        return float(_exact_success_rational(p, prob))
    _check_budget(p, prob.n_seeds + 1)
    reach, absorbed = _forward_float(p, prob.d0_float()[None, :])
    final0 = absorbed[0][0]
    labels = p.labels[-1]
    final0 += math.fsum(reach[0, v] for v in np.nonzero(labels == 0)[0])

    reach1, absorbed1 = _forward_float(p, prob.d1_float())
    out1 = absorbed1[1]
    mask1 = labels == 1
    out1 = out1 + reach1[:, mask1].sum(axis=1)
    mean_out1 = math.fsum(out1) / prob.n_seeds
    return 0.5 * (final0 + mean_out1)


def _exact_success_rational(p: Robp, prob: FiniteDistinguishingProblem) -> Fraction:
    if prob.n_seeds * prob.alphabet_size > EXACT_LIMIT:
        raise BudgetExceededError(
            "exact-rational mode limited to |X|*|A| <= 2^16"
        )
    rows = [[Fraction(int(n), prob.d0_den) for n in prob.d0_num]] + [
        [Fraction(int(n), prob.d1_den) for n in prob.d1_num[i]]
        for i in range(prob.n_seeds)
    ]
    acc = [{0: Fraction(0), 1: Fraction(0)} for _ in rows]
    reach = [[Fraction(1)] for _ in rows]
    for t in range(p.length):
        labels = p.labels[t]
        nxt_w = p.layer_width(t + 1)
        for r, trans in enumerate(rows):
            nxt = [Fraction(0)] * nxt_w
            for v, mass in enumerate(reach[r]):
                if mass == 0:
                    continue
                if labels[v] >= 0:
                    acc[r][int(labels[v])] += mass
                    continue
                tgts = p.edges[t][v]
                for a in range(p.alphabet_size):
                    if trans[a]:
                        nxt[tgts[a]] += mass * trans[a]
            reach[r] = nxt
    last = p.labels[-1]
    for r in range(len(rows)):
        for v, mass in enumerate(reach[r]):
            acc[r][int(last[v])] += mass
    out1_mean = sum((acc[r][1] for r in range(1, len(rows))), Fraction(0))
    out1_mean /= prob.n_seeds
    return (acc[0][0] + out1_mean) / 2


def conditional_seed_dist(p: Robp, j: int, vertex: int,
                          prob: FiniteDistinguishingProblem):
    """Seed distribution conditioned on reaching ``vertex`` in layer j
    under planted dynamics (first j samples from D1(x), x uniform).

    Returns ``(reach_probability, weights)`` where ``weights[i]`` is
    P[x = seeds[i] | reach] aligned with ``prob.seeds``; weights is
    None (explicitly undefined) for unreachable vertices.
    """
    if not 0 <= j <= p.length:
        raise ValueError("layer out of range")
    if not 0 <= vertex < p.layer_width(j):
        raise ValueError("vertex out of range")
    _check_budget(p, prob.n_seeds)
    reach, _ = _forward_float(p, prob.d1_float(), upto=j)
    col = reach[:, vertex] / prob.n_seeds
    total = math.fsum(col)
    if total == 0.0:
        return 0.0, None
    return total, col / total


def min_entropy_report(p: Robp, prob: FiniteDistinguishingProblem,
                       d_t: Fraction | int, layers: Optional[Sequence[int]] = None) -> dict:
    """Exact integer check of the conditional min-entropy bound.

    For every layer j and vertex v with reach probability
    P_j(v) >= 1/(d*d_t) under planted dynamics, verifies
    max_x P[x|v] <= d * d_t / |X|, and that the reach-weighted
    conditionals sum to the uniform prior for every seed (law of total
    probability; exact when the program has no early leaves).

    Requires d1_den ** length to stay within int64 during the integer
    propagation; use programs of modest depth.
    """
    nx = prob.n_seeds
    d = p.width
    d_t = Fraction(d_t)
    threshold = Fraction(d) * d_t
    if prob.d1_den ** p.length * prob.d1_den >= 2**62:
        raise BudgetExceededError("denominator growth exceeds exact int64 range")
    layers = range(p.length + 1) if layers is None else layers
    num = np.zeros((nx, 1), dtype=np.int64)
    num[:, 0] = 1  # implied denominator nx * d1_den^j
    report = {"heavy_checked": 0, "violations": [], "identity_ok": True,
              "d": d, "d_t": d_t}
    denom_pow = 1
    for t in range(max(layers) + 1):
        if t in layers or t in (0, p.length):
            rowsum = num.sum(axis=1)
            if np.any(rowsum != denom_pow):
                report["identity_ok"] = False
            colsum = num.sum(axis=0)
            for v in range(num.shape[1]):
                pj = Fraction(int(colsum[v]), nx * denom_pow)
                if pj == 0 or pj * threshold < 1:
                    continue
                report["heavy_checked"] += 1
                top = int(num[:, v].max())
                # P[x|v] = top/colsum <= d*d_t/nx
                if Fraction(top) * nx > threshold * int(colsum[v]):
                    report["violations"].append((t, v))
        if t == p.length:
            break
        nxt = np.zeros((nx, p.layer_width(t + 1)), dtype=np.int64)
        leaf = p.labels[t] >= 0
        for v in np.nonzero(~leaf)[0]:
            np.add.at(nxt, (slice(None), p.edges[t][v]),
                      num[:, v, None] * prob.d1_num)
        num = nxt
        denom_pow *= prob.d1_den
    return report


# -- sample encodings ------------------------------------------------

def falling_factorial(n: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= n - i
    return out


def tuple_rank(a: OrderedTuple, n: int) -> int:
    """Lexicographic rank of an ordered tuple among all of [n]^(k)."""
    indices = a.indices
    k = len(indices)
    rank = 0
    used: list[int] = []
    for j, i in enumerate(indices):
        smaller = sum(1 for u in used if u < i)
        rank += (i - smaller) * falling_factorial(n - 1 - j, k - 1 - j)
        used.append(i)
    return rank


def tuple_unrank(rank: int, n: int, k: int) -> OrderedTuple:
    avail = list(range(n))
    out = []
    for j in range(k):
        block = falling_factorial(n - 1 - j, k - 1 - j)
        pos, rank = divmod(rank, block)
        out.append(avail.pop(pos))
    return OrderedTuple(out)


def encode_vector_sample(sample) -> int:
    return sample.u.value


def encode_local_sample(sample, n: int) -> int:
    return 2 * tuple_rank(sample.a, n) + sample.b


# -- problem builders ------------------------------------------------

def enumerate_subspaces(n: int, k: int) -> list[tuple[int, ...]]:
    """All k-dimensional subspaces of {0,1}^n, each as its sorted span.

    Brute force over k-sets of nonzero vectors; desk scale only.
    """
    if k == 0:
        return [(0,)]
    seen = set()
    nonzero = range(1, 1 << n)
    for combo in combinations(nonzero, k):
        span = {0}
        for v in combo:
            span |= {s ^ v for s in span}
        if len(span) == 1 << k:
            seen.add(tuple(sorted(span)))
    return sorted(seen)


def subspace_problem(n: int, k: int) -> FiniteDistinguishingProblem:
    """Uniform-vs-k-dimensional-subspace problem, alphabet {0,1}^n."""
    spans = enumerate_subspaces(n, k)
    size = 1 << n
    d0 = [1] * size
    d1 = np.zeros((len(spans), size), dtype=np.int64)
    for i, span in enumerate(spans):
        for u in span:
            d1[i, u] = 1
    return FiniteDistinguishingProblem(spans, size, d0, size, d1, 1 << k)


def local_problem(n: int, k: int, pred: Predicate) -> FiniteDistinguishingProblem:
    """Uniform-vs-local-source problem; symbols encode (tuple, bit)."""
    n_tuples = falling_factorial(n, k)
    size = 2 * n_tuples
    seeds = list(range(1 << n))
    d0 = [1] * size
    d1 = np.zeros((len(seeds), size), dtype=np.int64)
    tuples = [tuple_unrank(t, n, k) for t in range(n_tuples)]
    for t, a in enumerate(tuples):
        for x in seeds:
            idx = 0
            for pos, i in enumerate(a.indices):
                idx |= ((x >> i) & 1) << (k - 1 - pos)
            d1[x, 2 * t + pred.value(idx)] += 1
    return FiniteDistinguishingProblem(seeds, size, d0, size, d1, n_tuples)


# -- program builders ------------------------------------------------

def compile_orthogonal_tester(vectors: Sequence[BitString], per_iter: int) -> Robp:
    """Explicit constant-width program for the probe-vector tester with
    a fixed vector sequence (one per iteration).

    States per layer: 0 = accepted (absorbing), 1 = all samples of the
    current iteration so far orthogonal, 2 = current iteration already
    failed.  Length is len(vectors) * per_iter over alphabet {0,1}^n.
    """
    if not vectors:
        raise ValueError("need at least one vector")
    if any(v.is_zero() for v in vectors):
        raise ValueError("probe vectors must be nonzero")
    n = vectors[0].length
    size = 1 << n
    m = len(vectors) * per_iter
    orth = [
        np.array([1 - ((a & v.value).bit_count() & 1) for a in range(size)],
                 dtype=np.int64)
        for v in vectors
    ]
    edges = []
    labels = [np.array([-1])]
    for t in range(m):
        i, pos = divmod(t, per_iter)
        last_of_iter = pos == per_iter - 1
        last_iter = i == len(vectors) - 1
        o = orth[i]
        if last_of_iter:
            ok_to = np.where(o == 1, 0, 2 if last_iter else 1)
        else:
            ok_to = np.where(o == 1, 1, 2)
        fail_to = np.full(size, 2 if (last_of_iter and last_iter) else
                          (1 if last_of_iter else 2), dtype=np.int64)
        accept_to = np.zeros(size, dtype=np.int64)
        if t == 0:
            layer_edges = np.stack([ok_to])
        else:
            layer_edges = np.stack([accept_to, ok_to, fail_to])
        edges.append(layer_edges)
        if t == m - 1:
            labels.append(np.array([1, 0, 0]))
        else:
            labels.append(np.full(3, -1, dtype=np.int64))
    return Robp(size, edges, labels)


def random_rational_problem(
    rng: SplitMix64, n_bits: int, alphabet_size: int, den: int = 64
) -> FiniteDistinguishingProblem:
    """Random distinguishing problem with seed space {0,1}^n_bits and
    random rational planted distributions (denominator ``den``).

    Each planted row is a multinomial of ``den`` balls over the
    alphabet, so rows sum to ``den`` exactly; used for exact-arithmetic
    checks on random programs.
    """
    n_seeds = 1 << n_bits
    d0 = [0] * alphabet_size
    for _ in range(den):
        d0[rng.below(alphabet_size)] += 1
    d1 = np.zeros((n_seeds, alphabet_size), dtype=np.int64)
    for x in range(n_seeds):
        for _ in range(den):
            d1[x, rng.below(alphabet_size)] += 1
    return FiniteDistinguishingProblem(
        list(range(n_seeds)), alphabet_size, d0, den, d1, den
    )


def random_robp(rng: SplitMix64, widths: Sequence[int], alphabet_size: int) -> Robp:
    """Uniformly random leaf-free-until-the-end program (for tests)."""
    if widths[0] != 1:
        raise ValueError("layer 0 must have width 1")
    edges = []
    labels = []
    for t in range(len(widths) - 1):
        labels.append(np.full(widths[t], -1, dtype=np.int64))
        e = np.empty((widths[t], alphabet_size), dtype=np.int64)
        for v in range(widths[t]):
            for a in range(alphabet_size):
                e[v, a] = rng.below(widths[t + 1])
        edges.append(e)
    labels.append(np.array([rng.bit() for _ in range(widths[-1])], dtype=np.int64))
    return Robp(alphabet_size, edges, labels)


# -- serialization ---------------------------------------------------

def robp_to_text(p: Robp) -> str:
    lines = [f"robp {p.length} {p.alphabet_size}",
             "widths " + " ".join(str(p.layer_width(t)) for t in range(p.length + 1))]
    for t in range(p.length + 1):
        for v in range(p.layer_width(t)):
            if p.labels[t][v] >= 0:
                lines.append(f"leaf {int(p.labels[t][v])}")
            else:
                lines.append(" ".join(str(int(x)) for x in p.edges[t][v]))
    return "\n".join(lines) + "\n"


def robp_from_text(text: str) -> Robp:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "robp" or len(head) != 3:
        raise ValueError("bad header line")
    m, size = int(head[1]), int(head[2])
    wline = lines[1].split()
    if wline[0] != "widths" or len(wline) != m + 2:
        raise ValueError("bad widths line")
    widths = [int(w) for w in wline[1:]]
    pos = 2
    edges = []
    labels = []
    for t in range(m + 1):
        lab = np.full(widths[t], -1, dtype=np.int64)
        e = np.full((widths[t], size), -1, dtype=np.int64) if t < m else None
        for v in range(widths[t]):
            toks = lines[pos].split()
            pos += 1
            if toks[0] == "leaf":
                lab[v] = int(toks[1])
            else:
                if t == m:
                    raise ValueError("last-layer vertex must be a leaf")
                if len(toks) != size:
                    raise ValueError(f"vertex line {pos}: expected {size} targets")
                e[v] = [int(x) for x in toks]
        labels.append(lab)
        if t < m:
            edges.append(e)
    return Robp(size, edges, labels)
