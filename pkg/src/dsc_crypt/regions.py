"""Rate-region arithmetic: the compression region, the key region, and
their intersection.

Both regions are exactly three half-planes, so they are stored as threshold
triples rather than general polytopes.  The compression ("sw") region
collects rate pairs high enough for reliable joint decoding; the key region
collects rate pairs low enough that key randomness can flatten the
compressed ciphertexts.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log2
from typing import Literal, Optional

from .distributions import JointPMF, entropy_set

SLACK_TOL = 1e-12


@dataclass(frozen=True)
class RatePoint:
    """A pair of rates in bits per source symbol."""

    r1: float
    r2: float

    def __post_init__(self):
        if self.r1 < 0 or self.r2 < 0:
            raise ValueError("rates must be nonnegative")


@dataclass(frozen=True)
class Containment:
    inside: bool
    slacks: tuple[float, float, float]


@dataclass(frozen=True)
class RateRegion:
    """Three half-plane thresholds, lower bounds for ``sw``, upper for ``key``.

    For ``sw``: (H(X1|X2), H(X2|X1), H(X1X2)); membership needs
    R1, R2, R1+R2 at or above them.  For ``key``: (H(K1), H(K2), H(K1K2));
    membership needs the rates at or below them.
    """

    kind: Literal["sw", "key"]
    t1: float
    t2: float
    t12: float

    def __post_init__(self):
        if self.kind == "sw":
            # conditionals cannot exceed the joint entropy
            if self.t1 > self.t12 + SLACK_TOL or self.t2 > self.t12 + SLACK_TOL:
                raise ValueError("inconsistent compression-region thresholds")
        elif self.kind == "key":
            if (
                self.t1 > self.t12 + SLACK_TOL
                or self.t2 > self.t12 + SLACK_TOL
                or self.t12 > self.t1 + self.t2 + SLACK_TOL
            ):
                raise ValueError("inconsistent key-region thresholds")
        else:
            raise ValueError(f"unknown region kind {self.kind!r}")


def sw_region(p: JointPMF) -> RateRegion:
    """Rates sufficient for reliable distributed compression of the source."""
    e = entropy_set(p)
    return RateRegion(kind="sw", t1=e.h1_given_2, t2=e.h2_given_1, t12=e.h12)


def key_region(p: JointPMF) -> RateRegion:
    """Rates the key randomness can cover."""
    e = entropy_set(p)
    return RateRegion(kind="key", t1=e.h1, t2=e.h2, t12=e.h12)


def contains(r: RateRegion, pt: RatePoint) -> Containment:
    """Evaluate all three inequalities with signed slacks (>= -1e-12 passes)."""
    if r.kind == "sw":
        slacks = (pt.r1 - r.t1, pt.r2 - r.t2, (pt.r1 + pt.r2) - r.t12)
    else:
        slacks = (r.t1 - pt.r1, r.t2 - pt.r2, r.t12 - (pt.r1 + pt.r2))
    return Containment(inside=all(s >= -SLACK_TOL for s in slacks), slacks=slacks)


def intersection_witness(sw: RateRegion, key: RateRegion) -> Optional[RatePoint]:
    """A point in both regions, or None when the intersection is empty.

    Construction: walk the cheapest sum line R1+R2 = max(H(X1X2), sums of
    the individual lower bounds), clip the feasible R1 interval against the
    box constraints, and take its midpoint.  The intersection is nonempty
    exactly when this line segment is (any feasible point can be slid down
    to the cheapest sum without leaving the box).
    """
    if sw.kind != "sw" or key.kind != "key":
        raise ValueError("expected one compression region and one key region")
    s = max(sw.t12, sw.t1 + sw.t2)
    if s > key.t12 + SLACK_TOL:
        return None
    lo = max(sw.t1, s - key.t2)
    hi = min(key.t1, s - sw.t2)
    if lo > hi + SLACK_TOL:
        return None
    r1 = (lo + hi) / 2.0
    return RatePoint(r1=max(0.0, r1), r2=max(0.0, s - r1))


def rates_from_params(n: int, m1: int, m2: int, q1: int, q2: int) -> RatePoint:
    """The rate pair implied by one parameter choice: (m_i / n) log2 q_i."""
    if n < 1:
        raise ValueError("blocklength must be >= 1")
    return RatePoint(r1=m1 / n * log2(q1), r2=m2 / n * log2(q2))
