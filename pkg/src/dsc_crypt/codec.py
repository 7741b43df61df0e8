"""Linear/affine encoders, the joint minimum-entropy decoder, and the
correct-decoding set.

Each terminal compresses its length-n word to m_i symbols with a surjective
linear map x -> xA_i (keys additionally get a constant offset b_i).  The
joint decoder maps every syndrome pair back to the member of the coset
product with the smallest empirical joint type entropy, ties broken by
lexicographic order on the concatenated pair, which keeps the decoder
deterministic and injective.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .distributions import entropy_bits
from .errors import ResourceCapError
from .fields import FieldMatrix, FieldVector, rank, vec_add, vec_mat_mul
from .packing import PackedSpace, linear_map_table

# Refusal thresholds for decoder-table construction.  The first two bound
# the table and each syndrome's search space; the third bounds the total
# work q1^n * q2^n = table * coset product, which is what actually
# determines build time and transient memory.
COSET_PRODUCT_CAP = 1 << 20
TABLE_SIZE_CAP = 1 << 20
TOTAL_WORK_CAP = 1 << 24

# Entropy sort keys are quantized to this many decimal places so that
# exact ties (equal type multisets summed in different orders) collapse to
# one key and the lexicographic rule decides, immune to last-ulp noise.
_ENTROPY_KEY_SCALE = 1e9


class SystemDims(NamedTuple):
    """Shape of one two-terminal system: blocklength, output lengths, moduli."""

    n: int
    m1: int
    m2: int
    q1: int
    q2: int

    @property
    def cipher_size(self) -> int:
        return self.q1**self.m1 * self.q2**self.m2

    @property
    def key_space_size(self) -> int:
        return self.q1**self.n * self.q2**self.n


@dataclass(frozen=True)
class AffineEncoderPair:
    """Compression matrices A_i plus offset words b_i for both terminals.

    Source words are compressed linearly (x A_i); key words affinely
    (k A_i + b_i).  Both matrices must have full column rank so the maps
    are surjective.
    """

    a1: FieldMatrix
    a2: FieldMatrix
    b1: FieldVector
    b2: FieldVector

    def __post_init__(self):
        if self.a1.rows != self.a2.rows:
            raise ValueError("both matrices must share the same number of rows n")
        for name, a, b in (("1", self.a1, self.b1), ("2", self.a2, self.b2)):
            if b.field != a.field:
                raise ValueError(f"offset {name} must live in the same field as matrix {name}")
            if len(b) != a.cols:
                raise ValueError(f"offset {name} length must equal matrix {name} column count")
            if rank(a) != a.cols:
                raise ValueError(f"matrix {name} must have full column rank {a.cols} (surjectivity)")

    @property
    def dims(self) -> SystemDims:
        return SystemDims(
            n=self.a1.rows,
            m1=self.a1.cols,
            m2=self.a2.cols,
            q1=self.a1.field.q,
            q2=self.a2.field.q,
        )


def linear_encode(x: FieldVector, a: FieldMatrix) -> FieldVector:
    """Compress a source word: x A over GF(q)."""
    return vec_mat_mul(x, a)


def affine_encode(k: FieldVector, a: FieldMatrix, b: FieldVector) -> FieldVector:
    """Compress a key word: k A + b over GF(q)."""
    return vec_add(vec_mat_mul(k, a), b)


def pairwise_empirical_entropy(x1: FieldVector, x2: FieldVector) -> float:
    """Entropy (bits) of the empirical joint type of the coordinate pairs."""
    if len(x1) != len(x2):
        raise ValueError("pair sequences must have equal length")
    n = len(x1)
    q2 = x2.field.q
    symbols = x1.elems.astype(np.int64) * q2 + x2.elems
    counts = np.bincount(symbols, minlength=x1.field.q * q2)
    return entropy_bits(counts / n)


def _type_entropy_matrix(dig1: np.ndarray, dig2: np.ndarray, q1: int, q2: int) -> np.ndarray:
    """Joint type entropies for every (word1, word2) pair.

    dig1/dig2 are digit tables of shape (N_i, n).  Counting one pair symbol
    at a time turns the per-pair histogram into an indicator matmul, so the
    whole N1 x N2 entropy matrix comes out of q1*q2 BLAS calls.  Counts are
    small integers, exact in float32.
    """
    n = dig1.shape[1]
    ent = np.zeros((dig1.shape[0], dig2.shape[0]), dtype=np.float64)
    for a in range(q1):
        ind1 = (dig1 == a).astype(np.float32)
        for b in range(q2):
            ind2 = (dig2 == b).astype(np.float32)
            counts = ind1 @ ind2.T
            frac = counts / n
            with np.errstate(divide="ignore", invalid="ignore"):
                term = frac * np.log2(frac)
            ent -= np.where(counts > 0, term, 0.0)
    return ent


@dataclass(frozen=True)
class DecoderTable:
    """The joint decoder: one representative pair per syndrome pair.

    ``rep1[s]``/``rep2[s]`` hold the packed representatives for pair-syndrome
    index ``s = s1 * q2^m2 + s2``.  A valid table is injective (all value
    pairs distinct) and consistent (every representative re-encodes to its
    own syndrome pair); ``validate`` reports violations instead of raising
    so deliberately corrupted tables can flow through the verifiers.
    """

    dims: SystemDims
    rep1: np.ndarray
    rep2: np.ndarray
    map1: np.ndarray = field(repr=False, compare=False, default=None)
    map2: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        for arr in (self.rep1, self.rep2):
            arr.flags.writeable = False

    @property
    def size(self) -> int:
        return self.rep1.shape[0]

    def lookup_packed(self, s: int) -> tuple[int, int]:
        return int(self.rep1[s]), int(self.rep2[s])

    def packed_values(self) -> np.ndarray:
        """Value pairs packed into a single word space (terminal-1 major)."""
        n, q2 = self.dims.n, self.dims.q2
        return self.rep1 * (q2**n) + self.rep2

    def validate(self) -> list[str]:
        issues = []
        d = self.dims
        expected = d.cipher_size
        if self.size != expected:
            issues.append(f"table has {self.size} entries, expected {expected}")
        if np.unique(self.packed_values()).shape[0] != self.size:
            issues.append("decoder values are not all distinct (not one-to-one)")
        if self.map1 is not None and self.map2 is not None:
            s = np.arange(self.size, dtype=np.int64)
            s2_size = d.q2**d.m2
            ok = (self.map1[self.rep1] == s // s2_size) & (self.map2[self.rep2] == s % s2_size)
            if not bool(ok.all()):
                issues.append("some representatives do not re-encode to their own syndrome")
        return issues


def build_decoder_table(enc: AffineEncoderPair) -> DecoderTable:
    """Build the full minimum-entropy decoder table for one encoder pair.

    Enumerates both word spaces once, computes every pair's joint type
    entropy, and selects per syndrome pair the entry minimizing entropy with
    lexicographic tie-breaking (numpy's stable lexsort over the C-ordered
    pair enumeration provides the lex order for free).

    Raises
    ------
    ResourceCapError
        If the coset product, the table, or the total work exceeds its cap.
    """
    d = enc.dims
    coset_product = d.q1 ** (d.n - d.m1) * d.q2 ** (d.n - d.m2)
    table_size = d.cipher_size
    total = coset_product * table_size
    if coset_product > COSET_PRODUCT_CAP:
        raise ResourceCapError(f"coset product {coset_product} exceeds cap {COSET_PRODUCT_CAP}")
    if table_size > TABLE_SIZE_CAP:
        raise ResourceCapError(f"decoder table size {table_size} exceeds cap {TABLE_SIZE_CAP}")
    if total > TOTAL_WORK_CAP:
        raise ResourceCapError(f"total enumeration {total} exceeds cap {TOTAL_WORK_CAP}")

    map1 = linear_map_table(enc.a1)
    map2 = linear_map_table(enc.a2)
    dig1 = PackedSpace(d.q1, d.n).all_digits()
    dig2 = PackedSpace(d.q2, d.n).all_digits()
    ent = _type_entropy_matrix(dig1, dig2, d.q1, d.q2)

    s2_size = d.q2**d.m2
    syndrome = (map1[:, None] * s2_size + map2[None, :]).ravel()
    ent_key = np.rint(ent.ravel() * _ENTROPY_KEY_SCALE).astype(np.int64)
    # Stable sort: primary syndrome, secondary entropy; the residual original
    # C-order is exactly lexicographic order on (word1, word2).
    order = np.lexsort((ent_key, syndrome))
    first = np.searchsorted(syndrome[order], np.arange(table_size, dtype=np.int64))
    pick = order[first]
    n2 = dig2.shape[0]
    table = DecoderTable(
        dims=d,
        rep1=pick // n2,
        rep2=pick % n2,
        map1=map1,
        map2=map2,
    )
    issues = table.validate()
    if issues:
        raise AssertionError(f"decoder table failed self-validation: {issues}")
    return table


def decode(table: DecoderTable, s1: FieldVector, s2: FieldVector) -> tuple[FieldVector, FieldVector]:
    """Look up the representative pair for one syndrome pair."""
    d = table.dims
    if len(s1) != d.m1 or len(s2) != d.m2:
        raise ValueError("syndrome lengths must match the encoder output lengths")
    sp1, sp2 = PackedSpace(d.q1, d.m1), PackedSpace(d.q2, d.m2)
    s = int(sp1.encode(s1.elems)) * sp2.size + int(sp2.encode(s2.elems))
    r1, r2 = table.lookup_packed(s)
    w1 = PackedSpace(d.q1, d.n).decode(np.int64(r1))
    w2 = PackedSpace(d.q2, d.n).decode(np.int64(r2))
    return FieldVector(s1.field, w1), FieldVector(s2.field, w2)


@dataclass(frozen=True)
class DecodingSet:
    """The set of pairs the composed encode/decode chain reproduces exactly.

    Stored as the sorted packed value set of the decoder table, never as a
    bitmap over the full pair space.
    """

    dims: SystemDims
    packed: np.ndarray

    def __post_init__(self):
        self.packed.flags.writeable = False

    def __len__(self) -> int:
        return self.packed.shape[0]

    def contains_packed(self, v: int | np.ndarray):
        pos = np.searchsorted(self.packed, v)
        pos = np.clip(pos, 0, len(self) - 1)
        return self.packed[pos] == v

    def contains(self, x1: FieldVector, x2: FieldVector) -> bool:
        n, q2 = self.dims.n, self.dims.q2
        i1 = int(PackedSpace(self.dims.q1, n).encode(x1.elems))
        i2 = int(PackedSpace(q2, n).encode(x2.elems))
        return bool(self.contains_packed(i1 * (q2**n) + i2))

    def member_digits(self) -> tuple[np.ndarray, np.ndarray]:
        """Digit tables (|D| x n) for both components of every member."""
        n, q2 = self.dims.n, self.dims.q2
        size2 = q2**n
        d1 = PackedSpace(self.dims.q1, n).decode(self.packed // size2)
        d2 = PackedSpace(q2, n).decode(self.packed % size2)
        return d1, d2


def decoding_set(table: DecoderTable) -> DecodingSet:
    values = np.sort(table.packed_values())
    return DecodingSet(dims=table.dims, packed=np.unique(values))


def corrupt_decoder_table(table: DecoderTable, s_from: int, s_to: int) -> DecoderTable:
    """Test hook: remap one syndrome's representative onto another's.

    The result is deliberately non-injective, which every downstream
    verifier is expected to detect; it is never produced by the builder.
    """
    if s_from == s_to:
        raise ValueError("corruption requires two distinct syndromes")
    rep1 = table.rep1.copy()
    rep2 = table.rep2.copy()
    rep1[s_from] = table.rep1[s_to]
    rep2[s_from] = table.rep2[s_to]
    return DecoderTable(dims=table.dims, rep1=rep1, rep2=rep2, map1=table.map1, map2=table.map2)
