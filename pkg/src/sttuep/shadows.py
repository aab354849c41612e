"""Shadow acquisition and the two information bit-streams.

Wire layout
-----------
Basis stream: one group of ``L = ceil(n * log2(3))`` bits per record. The
group holds ``sum_j trit_j * 3**j`` (X=0, Y=1, Z=2, ``j`` the qubit index)
written least-significant bit first. Groups are concatenated in record order.

Outcome stream: the ``n`` measured bits of each record in qubit order,
records concatenated in order (``n * N`` bits).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qsim import BasisString, StateVector, sample_batch


class OutOfRangeBasis(ValueError):
    """A decoded basis group holds a value >= 3**n (corrupted stream)."""


@dataclass(frozen=True)
class ShadowRecord:
    basis: BasisString
    bits: np.ndarray

    def __post_init__(self):
        if len(self.bits) != self.basis.n:
            raise ValueError("basis and outcome lengths differ")


@dataclass(frozen=True)
class ShadowBatch:
    """``N`` shadow records stored column-wise.

    ``bases`` holds letter codes and ``bits`` the raw outcomes, both of
    shape ``(N, n)``.
    """

    n: int
    bases: np.ndarray = field(repr=False)
    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        bases = np.asarray(self.bases, dtype=np.int8)
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bases.ndim != 2 or bases.shape[1] != self.n or bases.shape != bits.shape:
            raise ValueError(f"bases {bases.shape} and bits {bits.shape} must both be (N, {self.n})")
        if bases.shape[0] < 1:
            raise ValueError("a batch needs at least one record")
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_records(cls, records) -> "ShadowBatch":
        records = list(records)
        if not records:
            raise ValueError("a batch needs at least one record")
        n = records[0].basis.n
        return cls(n, np.array([r.basis.codes for r in records]), np.array([r.bits for r in records]))

    @property
    def N(self) -> int:
        return self.bases.shape[0]

    @property
    def records(self) -> list[ShadowRecord]:
        return [self[i] for i in range(self.N)]

    def __len__(self):
        return self.N

    def __getitem__(self, i):
        if isinstance(i, slice):
            return ShadowBatch(self.n, self.bases[i], self.bits[i])
        return ShadowRecord(BasisString.from_codes(self.bases[i]), self.bits[i].copy())

    def __eq__(self, other):
        if not isinstance(other, ShadowBatch):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.bases, other.bases)
            and np.array_equal(self.bits, other.bits)
        )

    __hash__ = None


def basis_group_bits(n: int) -> int:
    """Smallest ``L`` with ``2**L >= 3**n``, i.e. ``ceil(n * log2(3))``."""
    return (3**n - 1).bit_length()


def random_bases(n: int, N: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 3, size=(N, n), dtype=np.int8)


def acquire(state: StateVector, N: int, rng: np.random.Generator) -> ShadowBatch:
    """Measure ``N`` copies of ``state``, each in an independent uniform Pauli basis."""
    if N < 1:
        raise ValueError(f"need at least one copy, got N={N}")
    bases = random_bases(state.n, N, rng)
    return ShadowBatch(state.n, bases, sample_batch(state, bases, rng))


def pack_bases(batch: ShadowBatch) -> np.ndarray:
    n = batch.n
    width = basis_group_bits(n)
    values = batch.bases.astype(np.int64) @ (3 ** np.arange(n, dtype=np.int64))
    return ((values[:, None] >> np.arange(width)) & 1).astype(np.uint8).reshape(-1)


def pack_outcomes(batch: ShadowBatch) -> np.ndarray:
    return batch.bits.reshape(-1).copy()


def unpack_bases(stream, n: int, N: int) -> np.ndarray:
    """Inverse of :func:`pack_bases`; returns letter codes of shape ``(N, n)``."""
    stream = np.asarray(stream, dtype=np.int64)
    width = basis_group_bits(n)
    if N < 1 or stream.size != width * N:
        raise ValueError(f"basis stream has {stream.size} bits, expected {width} x {N}")
    values = stream.reshape(N, width) @ (1 << np.arange(width, dtype=np.int64))
    bad = np.flatnonzero(values >= 3**n)
    if bad.size:
        raise OutOfRangeBasis(f"record {bad[0]} decodes to basis value {values[bad[0]]} >= 3**{n}")
    return ((values[:, None] // 3 ** np.arange(n, dtype=np.int64)) % 3).astype(np.int8)


def unpack_outcomes(stream, n: int, N: int) -> np.ndarray:
    stream = np.asarray(stream, dtype=np.uint8)
    if N < 1 or stream.size != n * N:
        raise ValueError(f"outcome stream has {stream.size} bits, expected {n} x {N}")
    return stream.reshape(N, n).copy()


def unpack(basis_stream, outcome_stream, n: int, N: int) -> ShadowBatch:
    return ShadowBatch(n, unpack_bases(basis_stream, n, N), unpack_outcomes(outcome_stream, n, N))
