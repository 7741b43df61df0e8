"""Prime-field scalar, vector, and matrix arithmetic.

Everything in this package runs over prime fields GF(q) with q <= 251, so
residues always fit a uint8.  Vectors and matrices are thin immutable
wrappers around numpy arrays, validated once at construction; all
operations are pure functions and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_MODULUS = 251


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    d = 2
    while d * d <= q:
        if q % d == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class FieldSpec:
    """The prime field GF(q)."""

    q: int

    def __post_init__(self):
        if not isinstance(self.q, int) or not _is_prime(self.q):
            raise ValueError(f"field modulus must be a prime integer, got {self.q!r}")
        if self.q > MAX_MODULUS:
            raise ValueError(f"field modulus {self.q} exceeds supported maximum {MAX_MODULUS}")


def field_add(a: int, b: int, f: FieldSpec) -> int:
    """a + b in GF(q)."""
    return (a + b) % f.q


def field_sub(a: int, b: int, f: FieldSpec) -> int:
    """a - b in GF(q), i.e. a plus the additive inverse of b."""
    return (a - b) % f.q


def field_mul(a: int, b: int, f: FieldSpec) -> int:
    """a * b in GF(q)."""
    return (a * b) % f.q


def _validated_residues(field: FieldSpec, values, ndim: int) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype == object or not np.issubdtype(arr.dtype, np.integer):
        arr = np.asarray(values, dtype=np.int64)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array of residues, got shape {arr.shape}")
    if arr.size and (arr.min() < 0 or arr.max() >= field.q):
        raise ValueError(f"residues must lie in [0, {field.q})")
    out = arr.astype(np.uint8)
    out.flags.writeable = False
    return out


class FieldVector:
    """An immutable word over GF(q)."""

    __slots__ = ("field", "elems")

    def __init__(self, field: FieldSpec, elems):
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "elems", _validated_residues(field, elems, ndim=1))

    def __setattr__(self, name, value):
        raise AttributeError("FieldVector is immutable")

    def __len__(self) -> int:
        return self.elems.shape[0]

    def __iter__(self):
        return iter(int(v) for v in self.elems)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FieldVector)
            and self.field == other.field
            and np.array_equal(self.elems, other.elems)
        )

    def __hash__(self) -> int:
        return hash((self.field.q, self.elems.tobytes()))

    def __repr__(self) -> str:
        return f"FieldVector(q={self.field.q}, {tuple(int(v) for v in self.elems)})"


class FieldMatrix:
    """An immutable n x m matrix over GF(q), stored row-major."""

    __slots__ = ("field", "entries")

    def __init__(self, field: FieldSpec, entries):
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "entries", _validated_residues(field, entries, ndim=2))

    def __setattr__(self, name, value):
        raise AttributeError("FieldMatrix is immutable")

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FieldMatrix)
            and self.field == other.field
            and np.array_equal(self.entries, other.entries)
        )

    def __hash__(self) -> int:
        return hash((self.field.q, self.entries.shape, self.entries.tobytes()))

    def __repr__(self) -> str:
        return f"FieldMatrix(q={self.field.q}, shape={self.entries.shape})"


def identity_matrix(n: int, f: FieldSpec) -> FieldMatrix:
    return FieldMatrix(f, np.eye(n, dtype=np.int64))


def zero_vector(n: int, f: FieldSpec) -> FieldVector:
    return FieldVector(f, np.zeros(n, dtype=np.int64))


def vec_add(x: FieldVector, y: FieldVector) -> FieldVector:
    if x.field != y.field or len(x) != len(y):
        raise ValueError("vector add requires matching field and length")
    return FieldVector(x.field, (x.elems.astype(np.int64) + y.elems) % x.field.q)


def vec_sub(x: FieldVector, y: FieldVector) -> FieldVector:
    if x.field != y.field or len(x) != len(y):
        raise ValueError("vector sub requires matching field and length")
    return FieldVector(x.field, (x.elems.astype(np.int64) - y.elems) % x.field.q)


def vec_mat_mul(x: FieldVector, a: FieldMatrix) -> FieldVector:
    """Row vector times matrix over GF(q)."""
    if x.field != a.field:
        raise ValueError("vector and matrix live in different fields")
    if len(x) != a.rows:
        raise ValueError(f"length mismatch: vector {len(x)} vs matrix rows {a.rows}")
    prod = x.elems.astype(np.int64) @ a.entries.astype(np.int64)
    return FieldVector(x.field, prod % x.field.q)


def rank(a: FieldMatrix) -> int:
    """Row-reduction rank over GF(q).

    Plain Gaussian elimination; matrices here never exceed a few dozen rows,
    so no pivoting subtleties apply.
    """
    q = a.field.q
    m = a.entries.astype(np.int64).copy()
    n_rows, n_cols = m.shape
    r = 0
    for c in range(n_cols):
        piv = None
        for i in range(r, n_rows):
            if m[i, c]:
                piv = i
                break
        if piv is None:
            continue
        if piv != r:
            m[[r, piv]] = m[[piv, r]]
        inv = pow(int(m[r, c]), q - 2, q)
        m[r] = (m[r] * inv) % q
        for i in range(n_rows):
            if i != r and m[i, c]:
                m[i] = (m[i] - m[i, c] * m[r]) % q
        r += 1
        if r == n_rows:
            break
    return r


def sample_surjective_matrix(rng: np.random.Generator, n: int, m: int, f: FieldSpec) -> FieldMatrix:
    """Draw an n x m matrix with i.i.d. uniform entries, conditioned on rank m.

    Rejection sampling: for m <= n the full-rank probability is at least
    prod_j (1 - q^(m-n-j)), so the expected number of redraws is O(1).

    Raises
    ------
    ValueError
        If m > n (x -> xA cannot be surjective onto q^m values).
    """
    if m > n:
        raise ValueError(f"surjectivity impossible with m={m} > n={n}")
    while True:
        cand = FieldMatrix(f, rng.integers(0, f.q, size=(n, m), dtype=np.int64))
        if rank(cand) == m:
            return cand
