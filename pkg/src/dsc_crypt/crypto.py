"""The full encryption pipeline: pad, compress, transmit, decode.

Each terminal one-time-pads its word with its key and compresses the result
affinely; the sink re-derives the compressed keys, subtracts them from the
received words, and applies the joint decoder.  Because the pad and the
compression commute (the encoders are affine), decryption output never
depends on the keys, only on the underlying plain coding system, so
roundtrip success is exactly membership in the correct-decoding set.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np

from .codec import (
    AffineEncoderPair,
    DecoderTable,
    DecodingSet,
    SystemDims,
    affine_encode,
    build_decoder_table,
    decode,
    decoding_set,
    linear_encode,
)
from .distributions import BlockDistribution, sample_block
from .fields import FieldVector, vec_add, vec_sub
from .packing import PackedSpace, PairBlockEnumeration

Role = Literal["ciphertext", "compressed_source", "compressed_key"]


@dataclass(frozen=True)
class CompressedWord:
    """A length-m_i word tagged with what it carries."""

    role: Role
    word: FieldVector


@dataclass(frozen=True)
class Cryptosystem:
    """An encoder pair together with its joint decoder table.

    Immutable once built; the packed map tables below are shared by every
    metric evaluator, so all enumeration-heavy work reuses them.
    """

    enc: AffineEncoderPair
    table: DecoderTable

    @classmethod
    def build(cls, enc: AffineEncoderPair) -> "Cryptosystem":
        return cls(enc=enc, table=build_decoder_table(enc))

    @property
    def dims(self) -> SystemDims:
        return self.enc.dims

    @cached_property
    def decoding_set(self) -> DecodingSet:
        return decoding_set(self.table)

    @cached_property
    def _spaces(self):
        d = self.dims
        return (
            PackedSpace(d.q1, d.m1),
            PackedSpace(d.q2, d.m2),
            PackedSpace(d.q1, d.n),
            PackedSpace(d.q2, d.n),
        )

    @cached_property
    def _packed_offsets(self) -> tuple[int, int]:
        out1, out2, _, _ = self._spaces
        return int(out1.encode(self.enc.b1.elems)), int(out2.encode(self.enc.b2.elems))

    def encrypt(self, terminal: int, k: FieldVector, x: FieldVector) -> CompressedWord:
        """Pad x with k, then compress: (x + k) A_i + b_i."""
        a, b = (self.enc.a1, self.enc.b1) if terminal == 1 else (self.enc.a2, self.enc.b2)
        if len(k) != self.dims.n or len(x) != self.dims.n:
            raise ValueError(f"key and plaintext must have length n={self.dims.n}")
        return CompressedWord("ciphertext", affine_encode(vec_add(x, k), a, b))

    def encode_source(self, terminal: int, x: FieldVector) -> CompressedWord:
        a = self.enc.a1 if terminal == 1 else self.enc.a2
        return CompressedWord("compressed_source", linear_encode(x, a))

    def encode_key(self, terminal: int, k: FieldVector) -> CompressedWord:
        a, b = (self.enc.a1, self.enc.b1) if terminal == 1 else (self.enc.a2, self.enc.b2)
        return CompressedWord("compressed_key", affine_encode(k, a, b))

    def decrypt(
        self,
        k1: FieldVector,
        k2: FieldVector,
        c1: CompressedWord,
        c2: CompressedWord,
    ) -> tuple[FieldVector, FieldVector]:
        """Subtract the compressed keys, then apply the joint decoder."""
        d = self.dims
        if c1.role != "ciphertext" or c2.role != "ciphertext":
            raise ValueError("decrypt expects ciphertext words")
        if len(c1.word) != d.m1 or len(c2.word) != d.m2:
            raise ValueError("ciphertext lengths must match encoder output lengths")
        s1 = vec_sub(c1.word, self.encode_key(1, k1).word)
        s2 = vec_sub(c2.word, self.encode_key(2, k2).word)
        return decode(self.table, s1, s2)

    def plain_roundtrip(self, x1: FieldVector, x2: FieldVector) -> tuple[FieldVector, FieldVector]:
        """The induced coding system without encryption: decode(x1 A_1, x2 A_2)."""
        return decode(self.table, self.encode_source(1, x1).word, self.encode_source(2, x2).word)

    @cached_property
    def _enum_bases(self) -> dict:
        return {}

    def _bases_for(self, enum: PairBlockEnumeration) -> tuple[np.ndarray, np.ndarray]:
        """Compressed-key words for every enumerated key pair, cached per enum.

        Because the encoders are affine, encrypting plaintext x with key k
        compresses to (x A_i) + (k A_i + b_i); the second summand depends on
        the key alone, so it is computed once per enumeration.
        """
        key = (enum.q1, enum.q2, enum.n)
        hit = self._enum_bases.get(key)
        if hit is None:
            out1, out2, _, _ = self._spaces
            b1p, b2p = self._packed_offsets
            hit = (
                out1.add(self.table.map1[enum.idx1], np.int64(b1p)),
                out2.add(self.table.map2[enum.idx2], np.int64(b2p)),
            )
            self._enum_bases[key] = hit
        return hit

    def cipher_index_map(
        self,
        x1_idx: int,
        x2_idx: int,
        enum: PairBlockEnumeration,
    ) -> np.ndarray:
        """Packed ciphertext pair index for every enumerated key pair.

        The workhorse of the exact metric evaluators: for a fixed plaintext
        pair (given as packed word indices) it pushes the whole key space
        through both encoders with a handful of vector operations.
        """
        out1, out2, _, _ = self._spaces
        base1, base2 = self._bases_for(enum)
        c1 = out1.add(base1, np.int64(self.table.map1[x1_idx]))
        c2 = out2.add(base2, np.int64(self.table.map2[x2_idx]))
        return c1 * out2.size + c2

    def cipher_index_map_batch(
        self,
        x1_idxs: np.ndarray,
        x2_idxs: np.ndarray,
        enum: PairBlockEnumeration,
    ) -> np.ndarray:
        """cipher_index_map for a batch of plaintext pairs, shape (B, keys)."""
        out1, out2, _, _ = self._spaces
        base1, base2 = self._bases_for(enum)
        c1 = out1.add(base1[None, :], self.table.map1[np.asarray(x1_idxs)][:, None])
        c2 = out2.add(base2[None, :], self.table.map2[np.asarray(x2_idxs)][:, None])
        return c1 * out2.size + c2

    def compressed_key_indices(self, enum: PairBlockEnumeration) -> np.ndarray:
        """Packed compressed-key pair index for every enumerated key pair."""
        out1, out2, _, _ = self._spaces
        base1, base2 = self._bases_for(enum)
        return base1 * out2.size + base2


@dataclass(frozen=True)
class TrialResult:
    """Outcome of one sampled encrypt/transmit/decrypt roundtrip."""

    success: bool
    plaintext: tuple[FieldVector, FieldVector]
    decoded: tuple[FieldVector, FieldVector]
    leaked: tuple[CompressedWord, CompressedWord]


def roundtrip_trial(
    sys: Cryptosystem,
    src: BlockDistribution,
    keys: BlockDistribution,
    rng: np.random.Generator,
) -> TrialResult:
    """Sample sources and keys, run the full pipeline, compare.

    Sources and keys come from independent child generators, mirroring their
    independence in the model.  Success is key-independent: it equals
    membership of the plaintext pair in the decoding set.
    """
    d = sys.dims
    if (src.base.q1, src.base.q2) != (d.q1, d.q2) or (keys.base.q1, keys.base.q2) != (d.q1, d.q2):
        raise ValueError("source and key alphabets must match the system moduli")
    if src.n != d.n or keys.n != d.n:
        raise ValueError(f"blocklength must equal n={d.n}")
    src_rng, key_rng = rng.spawn(2)
    x1, x2 = sample_block(src, src_rng)
    k1, k2 = sample_block(keys, key_rng)
    c1 = sys.encrypt(1, k1, x1)
    c2 = sys.encrypt(2, k2, x2)
    decoded = sys.decrypt(k1, k2, c1, c2)
    return TrialResult(
        success=(decoded[0] == x1 and decoded[1] == x2),
        plaintext=(x1, x2),
        decoded=decoded,
        leaked=(c1, c2),
    )
