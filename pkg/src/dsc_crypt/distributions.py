"""Discrete joint distributions, entropies, divergences, and i.i.d. blocks.

All information quantities are in bits.  Probabilities are double precision;
a joint pmf must sum to one within 1e-12 at construction and is renormalized
once, leaving ample headroom under the 1e-9 verification tolerances used
elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import FieldSpec, FieldVector
from .packing import pair_enumeration

CONSTRUCTION_TOL = 1e-12


class JointPMF:
    """A probability table over a product of two finite alphabets."""

    __slots__ = ("table",)

    def __init__(self, table):
        arr = np.asarray(table, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"joint pmf must be a 2-d table, got shape {arr.shape}")
        if arr.size == 0 or np.any(arr < 0):
            raise ValueError("joint pmf entries must be nonnegative")
        total = float(arr.sum())
        if abs(total - 1.0) > CONSTRUCTION_TOL:
            raise ValueError(f"joint pmf must sum to 1 within {CONSTRUCTION_TOL}, got {total!r}")
        arr = arr / total
        arr.flags.writeable = False
        object.__setattr__(self, "table", arr)

    def __setattr__(self, name, value):
        raise AttributeError("JointPMF is immutable")

    @property
    def q1(self) -> int:
        return self.table.shape[0]

    @property
    def q2(self) -> int:
        return self.table.shape[1]

    def marginal1(self) -> np.ndarray:
        return self.table.sum(axis=1)

    def marginal2(self) -> np.ndarray:
        return self.table.sum(axis=0)

    def __eq__(self, other) -> bool:
        return isinstance(other, JointPMF) and np.array_equal(self.table, other.table)

    def __repr__(self) -> str:
        return f"JointPMF(q1={self.q1}, q2={self.q2})"


def entropy_bits(p) -> float:
    """Shannon entropy -sum p log2 p with the 0 log 0 = 0 convention."""
    arr = np.asarray(p, dtype=np.float64).ravel()
    nz = arr[arr > 0]
    return float(-(nz * np.log2(nz)).sum())


@dataclass(frozen=True)
class EntropySet:
    """Joint, marginal, and conditional entropies of one pair distribution."""

    h12: float
    h1: float
    h2: float
    h1_given_2: float
    h2_given_1: float
    mutual_information: float


def entropy_set(p: JointPMF) -> EntropySet:
    h12 = entropy_bits(p.table)
    h1 = entropy_bits(p.marginal1())
    h2 = entropy_bits(p.marginal2())
    return EntropySet(
        h12=h12,
        h1=h1,
        h2=h2,
        h1_given_2=h12 - h2,
        h2_given_1=h12 - h1,
        mutual_information=h1 + h2 - h12,
    )


def kl_divergence(p, r) -> float:
    """D(p || r) in bits over a shared finite outcome set.

    Returns ``math.inf`` when p puts mass outside the support of r.
    """
    pa = np.asarray(p, dtype=np.float64).ravel()
    ra = np.asarray(r, dtype=np.float64).ravel()
    if pa.shape != ra.shape:
        raise ValueError("distributions must share an outcome set")
    mask = pa > 0
    if np.any(ra[mask] <= 0):
        return math.inf
    return float((pa[mask] * (np.log2(pa[mask]) - np.log2(ra[mask]))).sum())


@dataclass(frozen=True)
class BlockDistribution:
    """The n-fold i.i.d. extension of a base joint pmf.

    Never materialized as a full table by default; probabilities are
    evaluated coordinatewise on demand.  ``prob_vector`` enumerates the
    whole block space and is reserved for desk-scale exact metrics.
    """

    base: JointPMF
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("blocklength must be >= 1")


def block_prob(d: BlockDistribution, x1: FieldVector, x2: FieldVector) -> float:
    """Product of per-coordinate probabilities of the pair sequence."""
    if len(x1) != d.n or len(x2) != d.n:
        raise ValueError(f"component length must equal blocklength {d.n}")
    return float(d.base.table[x1.elems, x2.elems].prod())


def block_prob_vector(d: BlockDistribution) -> np.ndarray:
    """Probabilities of every pair of blocks, indexed by pair enumeration."""
    enum = pair_enumeration(d.base.q1, d.base.q2, d.n)
    return enum.prob_vector(d.base.table)


def sample_block(d: BlockDistribution, rng: np.random.Generator) -> tuple[FieldVector, FieldVector]:
    """Draw n i.i.d. symbol pairs; deterministic given the generator state."""
    q2 = d.base.q2
    flat = d.base.table.reshape(-1)
    symbols = rng.choice(flat.shape[0], size=d.n, p=flat)
    f1, f2 = FieldSpec(d.base.q1), FieldSpec(q2)
    return FieldVector(f1, symbols // q2), FieldVector(f2, symbols % q2)
