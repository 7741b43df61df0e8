"""Packed-index enumeration kernels.

Words over GF(q) of fixed length are packed into integers with big-endian
base-q digits (first symbol most significant), so numeric order on packed
indices equals lexicographic order on digit strings.  The codec and the
metric evaluators run their hot loops on arrays of packed indices; q = 2
gets an XOR fast path for digitwise addition.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ResourceCapError
from .fields import FieldMatrix

# Hard ceiling on any single enumerated space; keeps accidental memory
# bombs out even when callers forget their own caps.
ENUMERATION_LIMIT = 1 << 24


class PackedSpace:
    """All length-``length`` words over an alphabet of size ``q``."""

    def __init__(self, q: int, length: int):
        if q < 2:
            raise ValueError("alphabet size must be >= 2")
        if length < 0:
            raise ValueError("length must be >= 0")
        if q**length > ENUMERATION_LIMIT:
            raise ResourceCapError(
                f"packed space {q}^{length} exceeds enumeration limit {ENUMERATION_LIMIT}"
            )
        self.q = q
        self.length = length
        self.size = q**length
        self._powers = q ** np.arange(length - 1, -1, -1, dtype=np.int64)

    def encode(self, digits) -> np.ndarray:
        """Pack digit arrays of shape (..., length) into int64 indices."""
        arr = np.asarray(digits, dtype=np.int64)
        return arr @ self._powers

    def decode(self, idx) -> np.ndarray:
        """Unpack indices into uint8 digit arrays of shape (..., length)."""
        arr = np.asarray(idx, dtype=np.int64)
        return ((arr[..., None] // self._powers) % self.q).astype(np.uint8)

    # Small spaces get a full pairwise addition table so hot loops reduce
    # to one gather; q = 2 short-circuits to XOR and never needs it.
    _ADD_TABLE_LIMIT = 1 << 10

    @property
    def _add_table(self) -> np.ndarray | None:
        cached = getattr(self, "_add_table_cache", False)
        if cached is not False:
            return cached
        if self.q == 2 or self.size > self._ADD_TABLE_LIMIT:
            table = None
        else:
            idx = np.arange(self.size, dtype=np.int64)
            table = self.encode(
                (self.decode(idx)[:, None, :].astype(np.int64) + self.decode(idx)[None, :, :])
                % self.q
            )
        self._add_table_cache = table
        return table

    def add(self, a, b) -> np.ndarray:
        """Digitwise addition mod q on packed indices (broadcasting)."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.q == 2:
            return a ^ b
        table = self._add_table
        if table is not None:
            return table[a, b]
        return self.encode((self.decode(a).astype(np.int64) + self.decode(b)) % self.q)

    @property
    def _neg_table(self) -> np.ndarray | None:
        cached = getattr(self, "_neg_table_cache", False)
        if cached is not False:
            return cached
        if self.q == 2 or self.size > self._ADD_TABLE_LIMIT:
            table = None
        else:
            idx = np.arange(self.size, dtype=np.int64)
            table = self.encode((-self.decode(idx).astype(np.int64)) % self.q)
        self._neg_table_cache = table
        return table

    def sub(self, a, b) -> np.ndarray:
        """Digitwise subtraction mod q on packed indices (broadcasting)."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.q == 2:
            return a ^ b
        table, neg = self._add_table, self._neg_table
        if table is not None and neg is not None:
            return table[a, neg[b]]
        return self.encode((self.decode(a).astype(np.int64) - self.decode(b)) % self.q)

    def all_digits(self) -> np.ndarray:
        """Digit table for the whole space, shape (size, length)."""
        return self.decode(np.arange(self.size, dtype=np.int64))


def linear_map_table(a: FieldMatrix) -> np.ndarray:
    """Tabulate x -> xA over the full input space.

    Returns an int64 array ``t`` of length q^n with ``t[pack(x)] = pack(xA)``,
    built row by row: appending one input digit d adds d times the
    corresponding matrix row to the packed output.
    """
    q = a.field.q
    n, m = a.rows, a.cols
    in_size = q**n
    if in_size > ENUMERATION_LIMIT:
        raise ResourceCapError(f"map table {q}^{n} exceeds enumeration limit {ENUMERATION_LIMIT}")
    out_space = PackedSpace(q, m)
    table = np.zeros(1, dtype=np.int64)
    for t in range(n):
        row = a.entries[t].astype(np.int64)
        scaled = out_space.encode((np.arange(q, dtype=np.int64)[:, None] * row) % q)
        table = out_space.add(table[:, None], scaled[None, :]).ravel()
    return table


class PairBlockEnumeration:
    """All pairs of length-n words, one per terminal, in lockstep order.

    Index digits are per-position pair symbols a*q2 + b (big-endian), which
    matches the order produced by repeated Kronecker products of a flattened
    q1 x q2 table.  ``idx1``/``idx2`` give the per-terminal packed words for
    every pair index.
    """

    def __init__(self, q1: int, q2: int, n: int):
        self.q1, self.q2, self.n = q1, q2, n
        self.pair_space = PackedSpace(q1 * q2, n)
        self.size = self.pair_space.size
        digits = self.pair_space.all_digits()
        self.idx1 = PackedSpace(q1, n).encode(digits // q2)
        self.idx2 = PackedSpace(q2, n).encode(digits % q2)

    def prob_vector(self, table: np.ndarray) -> np.ndarray:
        """Product-distribution probabilities for every pair index.

        ``table`` is the per-position q1 x q2 joint pmf.
        """
        flat = np.asarray(table, dtype=np.float64).reshape(-1)
        if flat.shape[0] != self.q1 * self.q2:
            raise ValueError("pmf shape does not match enumeration alphabets")
        v = np.ones(1, dtype=np.float64)
        for _ in range(self.n):
            v = np.kron(v, flat)
        return v


@lru_cache(maxsize=32)
def pair_enumeration(q1: int, q2: int, n: int) -> PairBlockEnumeration:
    """Cached PairBlockEnumeration; these tables are mid-sized and reused heavily."""
    return PairBlockEnumeration(q1, q2, n)
