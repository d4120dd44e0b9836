"""Pure-Python GF(2) kernels (int-bitset rows).

Reference implementations of the hot kernels.  The compiled module in
``_gf2kern.pyx`` mirrors these exactly for row widths up to 64; these
versions additionally handle arbitrary widths via Python bigints.
"""

from __future__ import annotations

import numpy as np


def rank(rows: list[int], ncols: int) -> int:
    """GF(2) row rank by Gaussian elimination; does not modify ``rows``."""
    work = [r for r in rows if r]
    rk = 0
    for col in range(ncols):
        mask = 1 << col
        pivot = -1
        for i in range(rk, len(work)):
            if work[i] & mask:
                pivot = i
                break
        if pivot < 0:
            continue
        work[rk], work[pivot] = work[pivot], work[rk]
        prow = work[rk]
        for i in range(len(work)):
            if i != rk and (work[i] & mask):
                work[i] ^= prow
        rk += 1
        if rk == len(work):
            break
    return rk

def solve(rows: list[int], ncols: int, rhs: int) -> tuple[bool, int | None]:
    """Solve ``rows · x = rhs`` over GF(2).

    ``rhs`` packs one bit per equation (bit i of ``rhs`` is the i-th
    right-hand side).  Returns ``(consistent, witness)`` where the
    witness packs ncols bits; free variables are fixed to 0 and pivots
    are taken on the lowest-index nonzero column, so the witness is
    deterministic.
    """
    nrows = len(rows)
    # Augmented rows: rhs bit stored at position ncols.
    aug = [rows[i] | (((rhs >> i) & 1) << ncols) for i in range(nrows)]
    pivots = []
    rk = 0
    for col in range(ncols):
        mask = 1 << col
        pivot = -1
        for i in range(rk, nrows):
            if aug[i] & mask:
                pivot = i
                break
        if pivot < 0:
            continue
        aug[rk], aug[pivot] = aug[pivot], aug[rk]
        prow = aug[rk]
        for i in range(nrows):
            if i != rk and (aug[i] & mask):
                aug[i] ^= prow
        pivots.append(col)
        rk += 1
        if rk == nrows:
            break
    rhs_mask = 1 << ncols
    for i in range(rk, nrows):
        if aug[i] & rhs_mask:
            return False, None
    witness = 0
    for r, col in enumerate(pivots):
        if aug[r] & rhs_mask:
            witness |= 1 << col
    return True, witness


def wht_inplace(a: np.ndarray) -> None:
    """In-place Walsh-Hadamard butterfly on a length-2^k int64 array."""
    n = a.shape[0]
    h = 1
    while h < n:
        a2 = a.reshape(-1, 2 * h)
        lo = a2[:, :h].copy()
        hi = a2[:, h:]
        a2[:, :h] = lo + hi
        a2[:, h:] = lo - hi
        h *= 2
