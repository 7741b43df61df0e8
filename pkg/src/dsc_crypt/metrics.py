"""Exact reliability and security accounting for one system instance.

The central quantity is the leakage criterion: the source-weighted KL
divergence between the conditional ciphertext distribution given the
plaintext pair and the check distribution induced by a uniform plaintext on
the correct-decoding set.  It decomposes exactly into mutual information
between ciphertexts and plaintexts plus the divergence of the ciphertext
law from uniform, which is what makes it strictly stronger than the mutual
information criterion alone.

Two computation routes are kept deliberately independent:

* a generic route that takes any encryption oracle and enumerates
  conditional ciphertext distributions plaintext by plaintext, and
* an affine route that pushes the key distribution through the encoders
  once and reads the leakage off the compressed-key entropy.

Verifying that both routes agree to 1e-9 on every affine instance is one of
the package's acceptance gates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .codec import AffineEncoderPair, DecoderTable, DecodingSet, SystemDims
from .distributions import BlockDistribution, JointPMF, entropy_bits, entropy_set, kl_divergence
from .errors import ResourceCapError
from .fields import FieldSpec, FieldVector
from .packing import PackedSpace, PairBlockEnumeration, linear_map_table, pair_enumeration

KEY_SPACE_CAP = 1 << 20
AFFINE_KEY_SPACE_CAP = 1 << 24
EXACT_PLAINTEXT_LIMIT = 1 << 16
AMBIENT_SAMPLE_SIZE = 256
CHECK_UNIFORMITY_TOL = 1e-9


class CipherOracle(Protocol):
    """Anything that can push the whole key space through its encryption.

    ``cipher_index_map`` returns the packed ciphertext pair index for every
    enumerated key pair at one fixed plaintext pair.  ``Cryptosystem``
    implements this natively; hand-built systems can wrap a pointwise
    function with :class:`CallableCipherOracle`.
    """

    @property
    def dims(self) -> SystemDims: ...

    def cipher_index_map(
        self, x1_idx: int, x2_idx: int, enum: PairBlockEnumeration
    ) -> np.ndarray: ...


class CallableCipherOracle:
    """Adapter from a pointwise encryption function to the array interface.

    The wrapped function maps (k1, k2, x1, x2) word tuples to a ciphertext
    word pair.  Enumeration happens in Python, so this is for hand-built
    counterexamples at toy sizes only.
    """

    def __init__(self, fn, dims: SystemDims):
        self._fn = fn
        self._dims = dims
        self._in1 = PackedSpace(dims.q1, dims.n)
        self._in2 = PackedSpace(dims.q2, dims.n)
        self._out1 = PackedSpace(dims.q1, dims.m1)
        self._out2 = PackedSpace(dims.q2, dims.m2)
        self._f1 = FieldSpec(dims.q1)
        self._f2 = FieldSpec(dims.q2)

    @property
    def dims(self) -> SystemDims:
        return self._dims

    def cipher_index_map(self, x1_idx: int, x2_idx: int, enum: PairBlockEnumeration) -> np.ndarray:
        x1 = FieldVector(self._f1, self._in1.decode(np.int64(x1_idx)))
        x2 = FieldVector(self._f2, self._in2.decode(np.int64(x2_idx)))
        out = np.empty(enum.size, dtype=np.int64)
        for j in range(enum.size):
            k1 = FieldVector(self._f1, self._in1.decode(enum.idx1[j]))
            k2 = FieldVector(self._f2, self._in2.decode(enum.idx2[j]))
            c1, c2 = self._fn(k1, k2, x1, x2)
            out[j] = int(self._out1.encode(c1.elems)) * self._out2.size + int(
                self._out2.encode(c2.elems)
            )
        return out


@dataclass(frozen=True)
class ConditionalCipherDist:
    """p(c1, c2 | x1, x2) as a flat vector over packed ciphertext pairs."""

    dims: SystemDims
    probs: np.ndarray

    def __post_init__(self):
        if self.probs.shape[0] != self.dims.cipher_size:
            raise ValueError("conditional table size does not match the ciphertext space")
        if np.any(self.probs < 0) or abs(float(self.probs.sum()) - 1.0) > 1e-9:
            raise ValueError("conditional cipher distribution is not a pmf")
        self.probs.flags.writeable = False


@dataclass(frozen=True)
class CheckDistribution:
    """Ciphertext law under a uniform plaintext on the decoding set.

    For any decodable system this is exactly uniform; a deviation beyond
    tolerance marks the system invalid (its decodability condition is
    broken somewhere).
    """

    dims: SystemDims
    probs: np.ndarray
    max_abs_deviation: float
    valid: bool

    def __post_init__(self):
        self.probs.flags.writeable = False


_BATCH_ROWS = 256


class _Evaluator:
    """Shared enumeration state for one (oracle, key distribution) pair."""

    def __init__(self, oracle: CipherOracle, keys: BlockDistribution, cap: int = KEY_SPACE_CAP):
        d = oracle.dims
        if (keys.base.q1, keys.base.q2) != (d.q1, d.q2) or keys.n != d.n:
            raise ValueError("key distribution shape does not match the system dims")
        if d.key_space_size > cap:
            raise ResourceCapError(
                f"key space {d.key_space_size} exceeds enumeration cap {cap}"
            )
        self.oracle = oracle
        self.dims = d
        self.enum = pair_enumeration(d.q1, d.q2, d.n)
        self.key_probs = self.enum.prob_vector(keys.base.table)
        self.cipher_size = d.cipher_size

    def cipher_rows(self, x1_idxs: np.ndarray, x2_idxs: np.ndarray) -> np.ndarray:
        """Cipher index matrix (batch, keys) for a batch of plaintext pairs."""
        batch_fn = getattr(self.oracle, "cipher_index_map_batch", None)
        if batch_fn is not None:
            return batch_fn(x1_idxs, x2_idxs, self.enum)
        rows = np.empty((len(x1_idxs), self.enum.size), dtype=np.int64)
        for i, (i1, i2) in enumerate(zip(x1_idxs, x2_idxs)):
            rows[i] = self.oracle.cipher_index_map(int(i1), int(i2), self.enum)
        return rows

    def conditional(self, x1_idx: int, x2_idx: int) -> np.ndarray:
        cm = self.oracle.cipher_index_map(x1_idx, x2_idx, self.enum)
        return np.bincount(cm, weights=self.key_probs, minlength=self.cipher_size)

    def conditional_batch(self, x1_idxs: np.ndarray, x2_idxs: np.ndarray) -> np.ndarray:
        """Conditional cipher pmfs, one row per plaintext pair in the batch."""
        rows = self.cipher_rows(x1_idxs, x2_idxs)
        b = rows.shape[0]
        flat = (np.arange(b, dtype=np.int64)[:, None] * self.cipher_size + rows).ravel()
        w = np.broadcast_to(self.key_probs, rows.shape).ravel()
        return np.bincount(flat, weights=w, minlength=b * self.cipher_size).reshape(
            b, self.cipher_size
        )

    def members(self, dset: DecodingSet) -> tuple[np.ndarray, np.ndarray]:
        size2 = self.dims.q2**self.dims.n
        return dset.packed // size2, dset.packed % size2


def _batched(total: int):
    for start in range(0, total, _BATCH_ROWS):
        yield start, min(start + _BATCH_ROWS, total)


def _kl_rows_bits(cond: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Row-wise KL divergence of each conditional from ``ref``; inf rows allowed."""
    out = np.empty(cond.shape[0], dtype=np.float64)
    ref_zero = ref <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = cond * (np.log2(cond) - np.log2(ref)[None, :])
    terms[cond <= 0] = 0.0
    viol = (cond > 0) & ref_zero[None, :]
    out[:] = terms.sum(axis=1)
    out[viol.any(axis=1)] = math.inf
    return out


def conditional_cipher_dist(
    oracle: CipherOracle,
    keys: BlockDistribution,
    x1: FieldVector,
    x2: FieldVector,
) -> ConditionalCipherDist:
    """Pushforward of the key distribution through encryption at fixed plaintext."""
    d = oracle.dims
    ev = _Evaluator(oracle, keys)
    i1 = int(PackedSpace(d.q1, d.n).encode(x1.elems))
    i2 = int(PackedSpace(d.q2, d.n).encode(x2.elems))
    return ConditionalCipherDist(dims=d, probs=ev.conditional(i1, i2))


def _summed_conditionals(ev: _Evaluator, dset: DecodingSet) -> np.ndarray:
    """Columnwise sum of conditional distributions over the decoding set."""
    m1, m2 = ev.members(dset)
    total = np.zeros(ev.cipher_size, dtype=np.float64)
    for i1, i2 in zip(m1.tolist(), m2.tolist()):
        total += ev.conditional(i1, i2)
    return total


def decoding_mass_deviation(
    oracle: CipherOracle, keys: BlockDistribution, dset: DecodingSet
) -> float:
    """Worst deviation of per-ciphertext conditional mass over the decoding set.

    For every ciphertext pair, summing p(c | x) across the decoding set must
    give exactly 1 (the doubly-stochastic property every decodable system
    satisfies, for any key distribution).  Returns max |sum - 1|; judgment
    is left to the caller.
    """
    ev = _Evaluator(oracle, keys)
    sums = _summed_conditionals(ev, dset)
    return float(np.abs(sums - 1.0).max())


def check_distribution(
    oracle: CipherOracle,
    keys: BlockDistribution,
    dset: DecodingSet,
    tol: float = CHECK_UNIFORMITY_TOL,
) -> CheckDistribution:
    """Average conditional ciphertext law over a uniform plaintext on the decoding set."""
    ev = _Evaluator(oracle, keys)
    probs = _summed_conditionals(ev, dset) / len(dset)
    dev = float(np.abs(probs - 1.0 / ev.cipher_size).max())
    return CheckDistribution(dims=ev.dims, probs=probs, max_abs_deviation=dev, valid=dev <= tol)


@dataclass(frozen=True)
class PartitionCheck:
    disjoint: bool
    covering: bool


def key_preimage_partition_verify(
    oracle: CipherOracle,
    keys: BlockDistribution,
    table: DecoderTable,
    c1: FieldVector,
    c2: FieldVector,
) -> PartitionCheck:
    """Check that key preimages of one ciphertext pair tile the key space.

    For each decoder-table entry (x1, x2), the keys encrypting it to the
    given ciphertext pair form a set; across entries these sets must be
    pairwise disjoint and jointly cover every key pair.
    """
    d = oracle.dims
    ev = _Evaluator(oracle, keys)
    out2 = PackedSpace(d.q2, d.m2)
    target = int(PackedSpace(d.q1, d.m1).encode(c1.elems)) * out2.size + int(
        out2.encode(c2.elems)
    )
    counts = np.zeros(ev.enum.size, dtype=np.int64)
    size2 = d.q2**d.n
    for v in (table.rep1 * size2 + table.rep2).tolist():
        counts += oracle.cipher_index_map(v // size2, v % size2, ev.enum) == target
    return PartitionCheck(disjoint=bool(counts.max() <= 1), covering=bool(counts.min() >= 1))


def key_partition_all_ciphertexts(
    oracle: CipherOracle, keys: BlockDistribution, table: DecoderTable
) -> PartitionCheck:
    """Partition check for every ciphertext pair at once.

    Fix a key pair and walk the decoder entries: the ciphertexts produced
    must be a permutation of the whole ciphertext space (there are exactly
    as many decoder entries as ciphertext pairs).  Checking every column of
    the entry-by-key cipher matrix covers all ciphertexts simultaneously.
    """
    d = oracle.dims
    ev = _Evaluator(oracle, keys)
    size2 = d.q2**d.n
    values = table.rep1 * size2 + table.rep2
    m = np.empty((values.shape[0], ev.enum.size), dtype=np.int32)
    for row, v in enumerate(values.tolist()):
        m[row] = oracle.cipher_index_map(v // size2, v % size2, ev.enum)
    srt = np.sort(m, axis=0)
    expected = np.arange(ev.cipher_size, dtype=np.int32)[:, None]
    ok = bool(np.array_equal(srt, np.broadcast_to(expected, srt.shape)))
    if ok:
        return PartitionCheck(disjoint=True, covering=True)
    dup = bool((np.diff(srt, axis=0) == 0).any())
    return PartitionCheck(disjoint=not dup, covering=False)


def leakage_pointwise(cond: ConditionalCipherDist, check: CheckDistribution) -> float:
    """KL divergence (bits) of one conditional cipher law from the check law."""
    return kl_divergence(cond.probs, check.probs)


@dataclass(frozen=True)
class LeakageEstimate:
    bits: float
    exact: bool


def leakage_exact(
    oracle: CipherOracle,
    src: BlockDistribution,
    keys: BlockDistribution,
    dset: DecodingSet,
    check: CheckDistribution | None = None,
    rng: np.random.Generator | None = None,
) -> LeakageEstimate:
    """Source-weighted average of pointwise leakage, by full enumeration.

    Exact whenever the plaintext pair space has at most 2^16 elements.
    Beyond that the average is restricted to the decoding set plus a
    uniform sample of 256 ambient plaintexts (flagged ``exact=False``); the
    whole computation refuses above the 2^20 space caps.
    """
    d = oracle.dims
    full = d.key_space_size  # plaintext pairs and key pairs share the space size
    if full > KEY_SPACE_CAP:
        raise ResourceCapError(f"plaintext space {full} exceeds enumeration cap {KEY_SPACE_CAP}")
    ev = _Evaluator(oracle, keys)
    if check is None:
        check = check_distribution(oracle, keys, dset)
    ref = check.probs
    src_probs = pair_enumeration(d.q1, d.q2, d.n).prob_vector(src.base.table)

    def pointwise(idx: int) -> float:
        i1, i2 = divmod(idx, d.q2**d.n)
        cond = ev.conditional(i1, i2)
        mask = cond > 0
        if np.any(ref[mask] <= 0):
            return math.inf
        return float((cond[mask] * (np.log2(cond[mask]) - np.log2(ref[mask]))).sum())

    size2 = d.q2**d.n
    enum = ev.enum
    pair_of = lambda j: int(enum.idx1[j]) * size2 + int(enum.idx2[j])  # noqa: E731

    if full <= EXACT_PLAINTEXT_LIMIT:
        total = 0.0
        for j in range(full):
            w = float(src_probs[j])
            if w > 0:
                total += w * pointwise(pair_of(j))
        return LeakageEstimate(bits=total, exact=True)

    # Restricted averaging: decoding-set members exactly, ambient mass sampled.
    if rng is None:
        raise ValueError("restricted leakage averaging needs an rng for the ambient sample")
    member_mask = dset.contains_packed(enum.idx1 * size2 + enum.idx2)
    total = 0.0
    for j in np.flatnonzero(member_mask):
        w = float(src_probs[j])
        if w > 0:
            total += w * pointwise(pair_of(int(j)))
    ambient = np.flatnonzero(~member_mask)
    if ambient.shape[0]:
        picks = rng.choice(ambient, size=min(AMBIENT_SAMPLE_SIZE, ambient.shape[0]), replace=False)
        est = 0.0
        for j in picks:
            w = float(src_probs[j])
            if w > 0:
                est += w * pointwise(pair_of(int(j)))
        total += est * ambient.shape[0] / picks.shape[0]
    return LeakageEstimate(bits=total, exact=False)


def leakage_mi(
    oracle: CipherOracle,
    src: BlockDistribution,
    keys: BlockDistribution,
) -> LeakageEstimate:
    """Mutual information (bits) between the ciphertext pair and the plaintext pair.

    Two passes over the plaintext space: first the ciphertext marginal, then
    the average KL of each conditional from it.  Subject to the same space
    caps and restricted-averaging rule as the exact leakage.
    """
    d = oracle.dims
    full = d.key_space_size
    if full > KEY_SPACE_CAP:
        raise ResourceCapError(f"plaintext space {full} exceeds enumeration cap {KEY_SPACE_CAP}")
    if full > EXACT_PLAINTEXT_LIMIT:
        raise ResourceCapError(
            f"mutual information needs the full plaintext space; {full} exceeds "
            f"{EXACT_PLAINTEXT_LIMIT}"
        )
    ev = _Evaluator(oracle, keys)
    src_probs = pair_enumeration(d.q1, d.q2, d.n).prob_vector(src.base.table)
    size2 = d.q2**d.n
    enum = ev.enum

    p_c = np.zeros(ev.cipher_size, dtype=np.float64)
    conds: list[tuple[int, float, np.ndarray]] = []
    for j in range(full):
        w = float(src_probs[j])
        if w <= 0:
            continue
        cond = ev.conditional(int(enum.idx1[j]), int(enum.idx2[j]))
        p_c += w * cond
        conds.append((j, w, cond))
    total = 0.0
    for _, w, cond in conds:
        mask = cond > 0
        total += w * float((cond[mask] * (np.log2(cond[mask]) - np.log2(p_c[mask]))).sum())
    return LeakageEstimate(bits=total, exact=True)


def cipher_marginal(
    oracle: CipherOracle, src: BlockDistribution, keys: BlockDistribution
) -> np.ndarray:
    """The unconditional ciphertext pair law p(c1, c2) by full enumeration."""
    d = oracle.dims
    if d.key_space_size > EXACT_PLAINTEXT_LIMIT:
        raise ResourceCapError("cipher marginal needs the full plaintext space enumerated")
    ev = _Evaluator(oracle, keys)
    src_probs = pair_enumeration(d.q1, d.q2, d.n).prob_vector(src.base.table)
    enum = ev.enum
    p_c = np.zeros(ev.cipher_size, dtype=np.float64)
    for j in np.flatnonzero(src_probs > 0):
        p_c += float(src_probs[j]) * ev.conditional(int(enum.idx1[j]), int(enum.idx2[j]))
    return p_c


def _affine_pushforward(
    enc: AffineEncoderPair, keys: BlockDistribution, cap: int = AFFINE_KEY_SPACE_CAP
) -> np.ndarray:
    """Joint law of the compressed key pair (k1 A1 + b1, k2 A2 + b2)."""
    d = enc.dims
    if (keys.base.q1, keys.base.q2) != (d.q1, d.q2) or keys.n != d.n:
        raise ValueError("key distribution shape does not match the encoder dims")
    if d.key_space_size > cap:
        raise ResourceCapError(f"key space {d.key_space_size} exceeds affine cap {cap}")
    enum = pair_enumeration(d.q1, d.q2, d.n)
    out1, out2 = PackedSpace(d.q1, d.m1), PackedSpace(d.q2, d.m2)
    t1, t2 = linear_map_table(enc.a1), linear_map_table(enc.a2)
    k1 = out1.add(t1[enum.idx1], int(out1.encode(enc.b1.elems)))
    k2 = out2.add(t2[enum.idx2], int(out2.encode(enc.b2.elems)))
    return np.bincount(
        k1 * out2.size + k2, weights=enum.prob_vector(keys.base.table), minlength=d.cipher_size
    )


def leakage_affine(enc: AffineEncoderPair, keys: BlockDistribution) -> float:
    """Leakage of an affine system, read off the compressed-key entropy.

    For affine encoders the conditional cipher law at every plaintext is a
    translate of the compressed-key law, so the leakage collapses to
    m1 log q1 + m2 log q2 - H(compressed key pair).  This is the cheap route
    (plaintexts drop out entirely) kept independent of the generic one.
    """
    d = enc.dims
    push = _affine_pushforward(enc, keys)
    return d.m1 * math.log2(d.q1) + d.m2 * math.log2(d.q2) - entropy_bits(push)


def leakage_marginal(
    oracle: CipherOracle,
    keys: BlockDistribution,
    terminal: int,
    src: BlockDistribution | None = None,
) -> float:
    """Single-terminal leakage: divergence of one terminal's conditional
    cipher law from uniform, averaged over that terminal's plaintexts.

    The terminal's ciphertext depends only on its own plaintext and key, so
    the other plaintext is pinned to zero during enumeration.  With ``src``
    given, plaintexts are weighted by the marginal block distribution;
    otherwise uniformly (for affine systems the pointwise value is
    plaintext-independent, so the weighting is immaterial).
    """
    if terminal not in (1, 2):
        raise ValueError("terminal must be 1 or 2")
    d = oracle.dims
    ev = _Evaluator(oracle, keys)
    q, m = (d.q1, d.m1) if terminal == 1 else (d.q2, d.m2)
    own_space = PackedSpace(q, d.n)
    s1, s2 = d.q1**d.m1, d.q2**d.m2

    if src is None:
        weights = np.full(own_space.size, 1.0 / own_space.size)
    else:
        marg = src.base.marginal1() if terminal == 1 else src.base.marginal2()
        weights = np.ones(1, dtype=np.float64)
        for _ in range(d.n):
            weights = np.kron(weights, marg)

    total = 0.0
    log_m = m * math.log2(q)
    for x_idx in range(own_space.size):
        w = float(weights[x_idx])
        if w <= 0:
            continue
        if terminal == 1:
            cond = ev.conditional(x_idx, 0).reshape(s1, s2).sum(axis=1)
        else:
            cond = ev.conditional(0, x_idx).reshape(s1, s2).sum(axis=0)
        total += w * (log_m - entropy_bits(cond))
    return total


@dataclass(frozen=True)
class KeyEntropyBound:
    """Leakage lower bound forced by insufficient key entropy.

    Components: per-terminal output size minus key entropy, and the joint
    version; the max is a hard floor on the leakage of any valid system, so
    a positive value certifies insecurity regardless of encoder choice.
    """

    raw: float
    floored: float
    components: tuple[float, float, float]


def key_entropy_bound(dims: SystemDims, key_pmf: JointPMF) -> KeyEntropyBound:
    ent = entropy_set(key_pmf)
    c1 = dims.m1 * math.log2(dims.q1) - dims.n * ent.h1
    c2 = dims.m2 * math.log2(dims.q2) - dims.n * ent.h2
    c12 = dims.m1 * math.log2(dims.q1) + dims.m2 * math.log2(dims.q2) - dims.n * ent.h12
    raw = max(c1, c2, c12)
    return KeyEntropyBound(raw=raw, floored=max(0.0, raw), components=(c1, c2, c12))


def error_probability_exact(src: BlockDistribution, dset: DecodingSet) -> float:
    """1 minus the source mass of the decoding set."""
    d1, d2 = dset.member_digits()
    mass = float(src.base.table[d1, d2].prod(axis=1).sum())
    return min(1.0, max(0.0, 1.0 - mass))


# ---------------------------------------------------------------------------
# Full per-system report
# ---------------------------------------------------------------------------

# The generic (oracle-enumerating) routes cost |plaintexts| * |keys| work;
# build_report runs them as a cross-check of the affine routes only below
# this budget, and flags the report when it had to skip them.
GENERIC_CROSS_CHECK_WORK_CAP = 1 << 26
CHECK_PASS_WORK_CAP = 1 << 26


def _pair_convolve(
    push_src: np.ndarray, push_key: np.ndarray, out1: PackedSpace, out2: PackedSpace
) -> np.ndarray:
    """Law of (compressed source) + (compressed key) on the product group.

    Componentwise group convolution; each translate is a bijection, so the
    fancy-indexed accumulation never collides.
    """
    s2 = out2.size
    idx = np.arange(push_key.shape[0], dtype=np.int64)
    k1c, k2c = idx // s2, idx % s2
    p_c = np.zeros_like(push_key)
    for v in np.flatnonzero(push_src > 0.0):
        v1, v2 = divmod(int(v), s2)
        c = out1.add(k1c, np.int64(v1)) * s2 + out2.add(k2c, np.int64(v2))
        p_c[c] += float(push_src[v]) * push_key
    return p_c


@dataclass(frozen=True)
class SecurityReport:
    """Every reliability/security quantity for one system instance.

    ``exact_cross_check`` records whether the generic enumeration route ran
    alongside the affine route; when it did, the reported leakage and mutual
    information come from the generic route and ``cross_check_gap`` holds
    the absolute disagreement between the two.
    """

    dims: SystemDims
    r1: float
    r2: float
    p_e: float
    leakage: float
    leakage_mi: float
    div_cipher_uniform: float
    marginal_leakage: tuple[float, float]
    key_entropy_bound: float
    key_entropy_bound_raw: float
    epsilon: float
    max_error: float
    reliable: bool
    secure: bool
    admissible: bool
    exact_cross_check: bool
    cross_check_gap: float | None
    check_max_deviation: float | None

    def validate(self, tol: float = 1e-9) -> list[str]:
        issues = []
        if abs(self.leakage - (self.leakage_mi + self.div_cipher_uniform)) > tol:
            issues.append("leakage does not decompose into MI + cipher nonuniformity")
        if self.leakage < self.leakage_mi - tol:
            issues.append("leakage below mutual information")
        if self.leakage < self.key_entropy_bound_raw - tol:
            issues.append("leakage below its key-entropy lower bound")
        if self.leakage < max(self.marginal_leakage) - tol:
            issues.append("leakage below a single-terminal marginal")
        if not (0.0 <= self.p_e <= 1.0):
            issues.append("error probability outside [0, 1]")
        if self.admissible != (self.reliable and self.secure):
            issues.append("admissibility flag inconsistent with its components")
        return issues


def build_report(
    sys,
    src: BlockDistribution,
    keys: BlockDistribution,
    epsilon: float,
    max_error: float,
    rng: np.random.Generator | None = None,
) -> SecurityReport:
    """Assemble all metrics for one built cryptosystem.

    ``sys`` is a :class:`~dsc_crypt.crypto.Cryptosystem`.  The affine routes
    always run (they are exact and cheap); the generic oracle routes run as
    an independent cross-check whenever the enumeration work fits the
    budget.  The report is validated before being returned.
    """
    d = sys.dims
    if (src.base.q1, src.base.q2) != (d.q1, d.q2) or src.n != d.n:
        raise ValueError("source distribution shape does not match the system dims")
    dset = sys.decoding_set
    p_e = error_probability_exact(src, dset)
    bound = key_entropy_bound(d, keys.base)
    msum = d.m1 * math.log2(d.q1) + d.m2 * math.log2(d.q2)

    # Affine route: compressed-key pushforward, cipher law by convolution.
    push_key = _affine_pushforward(sys.enc, keys)
    out1, out2 = PackedSpace(d.q1, d.m1), PackedSpace(d.q2, d.m2)
    key_joint_entropy = entropy_bits(push_key)
    leak_affine = msum - key_joint_entropy
    marg1 = d.m1 * math.log2(d.q1) - entropy_bits(
        push_key.reshape(out1.size, out2.size).sum(axis=1)
    )
    marg2 = d.m2 * math.log2(d.q2) - entropy_bits(
        push_key.reshape(out1.size, out2.size).sum(axis=0)
    )
    enum = pair_enumeration(d.q1, d.q2, d.n)
    push_src = np.bincount(
        sys.table.map1[enum.idx1] * out2.size + sys.table.map2[enum.idx2],
        weights=enum.prob_vector(src.base.table),
        minlength=d.cipher_size,
    )
    p_c = _pair_convolve(push_src, push_key, out1, out2)
    div_affine = msum - entropy_bits(p_c)
    mi_affine = entropy_bits(p_c) - key_joint_entropy

    work = d.key_space_size * d.key_space_size
    check_dev: float | None = None
    if len(dset) * d.key_space_size <= CHECK_PASS_WORK_CAP:
        check_dev = check_distribution(sys, keys, dset).max_abs_deviation

    if work <= GENERIC_CROSS_CHECK_WORK_CAP and d.key_space_size <= EXACT_PLAINTEXT_LIMIT:
        est = leakage_exact(sys, src, keys, dset, rng=rng)
        mi = leakage_mi(sys, src, keys)
        p_c_generic = cipher_marginal(sys, src, keys)
        check = check_distribution(sys, keys, dset)
        div = kl_divergence(p_c_generic, check.probs)
        leak = est.bits
        m1v = leakage_marginal(sys, keys, 1, src)
        m2v = leakage_marginal(sys, keys, 2, src)
        report = SecurityReport(
            dims=d,
            r1=d.m1 / d.n * math.log2(d.q1),
            r2=d.m2 / d.n * math.log2(d.q2),
            p_e=p_e,
            leakage=leak,
            leakage_mi=mi.bits,
            div_cipher_uniform=div,
            marginal_leakage=(m1v, m2v),
            key_entropy_bound=bound.floored,
            key_entropy_bound_raw=bound.raw,
            epsilon=epsilon,
            max_error=max_error,
            reliable=p_e <= max_error,
            secure=leak <= epsilon,
            admissible=(p_e <= max_error) and (leak <= epsilon),
            exact_cross_check=True,
            cross_check_gap=abs(leak - leak_affine),
            check_max_deviation=check_dev,
        )
    else:
        report = SecurityReport(
            dims=d,
            r1=d.m1 / d.n * math.log2(d.q1),
            r2=d.m2 / d.n * math.log2(d.q2),
            p_e=p_e,
            leakage=leak_affine,
            leakage_mi=mi_affine,
            div_cipher_uniform=div_affine,
            marginal_leakage=(marg1, marg2),
            key_entropy_bound=bound.floored,
            key_entropy_bound_raw=bound.raw,
            epsilon=epsilon,
            max_error=max_error,
            reliable=p_e <= max_error,
            secure=leak_affine <= epsilon,
            admissible=(p_e <= max_error) and (leak_affine <= epsilon),
            exact_cross_check=False,
            cross_check_gap=None,
            check_max_deviation=check_dev,
        )
    problems = report.validate()
    if problems:
        raise AssertionError(f"internally inconsistent security report: {problems}")
    return report
