"""The randomized verification suite.

Draws a batch of random affine systems at desk scale and checks, per
system, every structural and metric identity the package promises:

* decoding-set cardinality and decoder injectivity,
* unit conditional mass over the decoding set for every ciphertext,
* uniformity of the check distribution,
* key-preimage partition of the key space for every ciphertext,
* the leakage decomposition into mutual information plus cipher
  nonuniformity,
* the key-entropy lower bound and the single-terminal bounds,
* agreement of the generic and affine leakage routes.

Source and key pmfs are drawn fresh per system (the identities are claimed
for every distribution, so randomizing them verifies more than any fixed
configuration would).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .codec import SystemDims, AffineEncoderPair, corrupt_decoder_table, decoding_set
from .crypto import Cryptosystem, roundtrip_trial
from .distributions import BlockDistribution, JointPMF, kl_divergence
from .fields import FieldSpec, FieldVector, sample_surjective_matrix, zero_vector
from . import metrics as mt

DEFAULT_SYSTEMS = 50
DEFAULT_QS = (2, 3)
DEFAULT_NS = (2, 3, 4)
TOL = 1e-9


def random_interior_pmf(rng: np.random.Generator, q1: int, q2: int) -> JointPMF:
    """A joint pmf with all entries bounded away from zero."""
    raw = rng.uniform(0.05, 1.0, size=(q1, q2))
    return JointPMF(raw / raw.sum())


@dataclass(frozen=True)
class DrawnSystem:
    index: int
    system: Cryptosystem
    src: BlockDistribution
    keys: BlockDistribution
    corrupted: bool


def draw_system(
    rng: np.random.Generator,
    qs: tuple[int, ...] = DEFAULT_QS,
    ns: tuple[int, ...] = DEFAULT_NS,
) -> tuple[Cryptosystem, BlockDistribution, BlockDistribution]:
    """One random surjective affine system with random interior pmfs.

    Output lengths satisfy 1 <= m_i < n; offsets are random half the time
    (they provably never change any metric, so mixing them in exercises
    that invariance continuously).
    """
    q = int(rng.choice(qs))
    n = int(rng.choice(ns))
    f = FieldSpec(q)
    m1 = int(rng.integers(1, n))
    m2 = int(rng.integers(1, n))
    a1 = sample_surjective_matrix(rng, n, m1, f)
    a2 = sample_surjective_matrix(rng, n, m2, f)
    if rng.random() < 0.5:
        b1, b2 = zero_vector(m1, f), zero_vector(m2, f)
    else:
        b1 = FieldVector(f, rng.integers(0, q, size=m1))
        b2 = FieldVector(f, rng.integers(0, q, size=m2))
    system = Cryptosystem.build(AffineEncoderPair(a1, a2, b1, b2))
    src = BlockDistribution(random_interior_pmf(rng, q, q), n)
    keys = BlockDistribution(random_interior_pmf(rng, q, q), n)
    return system, src, keys


@dataclass
class SystemCheckResult:
    """All per-system check outcomes; ``failures`` lists what went wrong."""

    index: int
    dims: SystemDims
    corrupted: bool
    cardinality_ok: bool = False
    injective_ok: bool = False
    reencode_ok: bool = False
    mass_deviation: float = math.inf
    check_deviation: float = math.inf
    check_valid: bool = False
    partition_disjoint: bool = False
    partition_covering: bool = False
    leakage: float = math.nan
    p_e: float = math.nan
    decomposition_gap: float = math.inf
    mi_excess: float = math.inf
    bound_slack: float = -math.inf
    marginal_slack: float = -math.inf
    route_gap: float = math.inf
    skipped_metric_checks: bool = False

    def failures(self, tol: float = TOL) -> list[str]:
        out = []
        if not self.cardinality_ok:
            out.append("decoding-set cardinality")
        if not self.injective_ok:
            out.append("decoder injectivity")
        if not self.reencode_ok:
            out.append("representative re-encoding")
        if self.mass_deviation > tol:
            out.append(f"unit conditional mass (dev {self.mass_deviation:.3g})")
        if not self.check_valid:
            out.append(f"check-distribution uniformity (dev {self.check_deviation:.3g})")
        if not (self.partition_disjoint and self.partition_covering):
            out.append("key-preimage partition")
        if not self.skipped_metric_checks:
            if self.decomposition_gap > tol:
                out.append(f"leakage decomposition (gap {self.decomposition_gap:.3g})")
            if self.mi_excess > tol:
                out.append("mutual information exceeds leakage")
            if self.bound_slack < -tol:
                out.append(f"key-entropy bound violated (slack {self.bound_slack:.3g})")
            if self.marginal_slack < -tol:
                out.append(f"marginal bound violated (slack {self.marginal_slack:.3g})")
            if self.route_gap > tol:
                out.append(f"generic/affine route disagreement ({self.route_gap:.3g})")
        return out


@dataclass
class SuiteResult:
    results: list[SystemCheckResult] = field(default_factory=list)
    elapsed_seconds: float = 0.0

    def all_failures(self, tol: float = TOL) -> list[tuple[int, list[str]]]:
        out = []
        for r in self.results:
            f = r.failures(tol)
            if f:
                out.append((r.index, f))
        return out

    def passed(self, tol: float = TOL) -> bool:
        return not self.all_failures(tol)

    def worst(self, attr: str) -> float:
        return max(getattr(r, attr) for r in self.results)


def check_system(
    drawn: DrawnSystem,
    *,
    run_metric_checks: bool = True,
) -> SystemCheckResult:
    """Run every verifier against one (possibly corrupted) system."""
    system, src, keys = drawn.system, drawn.src, drawn.keys
    d = system.dims
    table = system.table
    dset = decoding_set(table)
    res = SystemCheckResult(index=drawn.index, dims=d, corrupted=drawn.corrupted)

    res.cardinality_ok = len(dset) == d.cipher_size
    issues = table.validate()
    res.injective_ok = not any("one-to-one" in s for s in issues)
    res.reencode_ok = not any("re-encode" in s for s in issues)

    res.mass_deviation = mt.decoding_mass_deviation(system, keys, dset)
    check = mt.check_distribution(system, keys, dset)
    res.check_deviation = check.max_abs_deviation
    res.check_valid = check.valid
    part = mt.key_partition_all_ciphertexts(system, keys, table)
    res.partition_disjoint = part.disjoint
    res.partition_covering = part.covering
    res.p_e = mt.error_probability_exact(src, dset)

    # Metric identities presume a decodable system; for deliberately broken
    # tables the structural checks above are the product.
    if not run_metric_checks or drawn.corrupted:
        res.skipped_metric_checks = True
        return res

    leak = mt.leakage_exact(system, src, keys, dset, check=check)
    mi = mt.leakage_mi(system, src, keys)
    p_c = mt.cipher_marginal(system, src, keys)
    div = kl_divergence(p_c, check.probs)
    affine = mt.leakage_affine(system.enc, keys)
    bound = mt.key_entropy_bound(d, keys.base)
    marg = max(
        mt.leakage_marginal(system, keys, 1, src),
        mt.leakage_marginal(system, keys, 2, src),
    )

    res.leakage = leak.bits
    res.decomposition_gap = abs(leak.bits - (mi.bits + div))
    res.mi_excess = mi.bits - leak.bits
    res.bound_slack = leak.bits - bound.raw
    res.marginal_slack = leak.bits - marg
    res.route_gap = abs(leak.bits - affine)
    return res


def run_suite(
    seed: int,
    count: int = DEFAULT_SYSTEMS,
    qs: tuple[int, ...] = DEFAULT_QS,
    ns: tuple[int, ...] = DEFAULT_NS,
    corrupt_tables: bool = False,
) -> SuiteResult:
    """Draw ``count`` systems and run every check on each."""
    t0 = time.perf_counter()
    out = SuiteResult()
    for i in range(count):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        system, src, keys = draw_system(rng, qs, ns)
        corrupted = False
        if corrupt_tables and system.table.size >= 2:
            s_from, s_to = 0, system.table.size - 1
            system = Cryptosystem(
                enc=system.enc, table=corrupt_decoder_table(system.table, s_from, s_to)
            )
            corrupted = True
        drawn = DrawnSystem(index=i, system=system, src=src, keys=keys, corrupted=corrupted)
        out.results.append(check_system(drawn))
    out.elapsed_seconds = time.perf_counter() - t0
    return out


def mc_failure_rate(
    system: Cryptosystem,
    src: BlockDistribution,
    keys: BlockDistribution,
    rng: np.random.Generator,
    trials: int,
) -> float:
    """Monte Carlo roundtrip failure rate over ``trials`` full pipeline runs."""
    failures = 0
    for _ in range(trials):
        if not roundtrip_trial(system, src, keys, rng).success:
            failures += 1
    return failures / trials
