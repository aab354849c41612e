"""Unequal-error-protection transmission of shadows and decoder-side estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import fec
from .fec import ChannelSpec, CodeSpec
from .qsim import BasisString, PauliObservable
from .shadows import (
    OutOfRangeBasis,
    ShadowBatch,
    basis_group_bits,
    pack_bases,
    pack_outcomes,
    unpack_bases,
    unpack_outcomes,
)

DEFAULT_INTERLEAVER_SEED = 0x5EED


class DegenerateDebias(ValueError):
    """Raised when the outcome flip probability is 1/2 or more."""


class OutageError(RuntimeError):
    """Estimation was requested on a transmission that ended in outage."""


@dataclass(frozen=True)
class UepConfig:
    """Code for each stream plus the channel.

    ``strict`` enforces that the basis stream gets the lower rate; pass
    ``strict=False`` to allow equal (or inverted) rates.
    """

    outcome_code: CodeSpec
    basis_code: CodeSpec
    chan: ChannelSpec
    strict: bool = True
    interleaver_seed: int = DEFAULT_INTERLEAVER_SEED

    def __post_init__(self):
        if self.strict and not self.basis_code.rate < self.outcome_code.rate:
            raise ValueError(
                f"basis rate {self.basis_code.rate:.4g} must be below outcome rate "
                f"{self.outcome_code.rate:.4g}; use strict=False to override"
            )

    @property
    def R_b(self) -> float:
        return self.outcome_code.rate

    @property
    def R_u(self) -> float:
        return self.basis_code.rate


@dataclass(frozen=True)
class TransmissionOutcome:
    status: str
    n: int
    N: int
    p_err: float
    bases: np.ndarray | None = field(default=None, repr=False)
    outcome_bits: np.ndarray | None = field(default=None, repr=False)
    outcome_stream_bits: int = 0
    basis_stream_bits: int = 0
    crc_bits: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def B(self) -> int:
        """Encoded bits of both streams, excluding the encoded CRC field."""
        return self.outcome_stream_bits + self.basis_stream_bits - self.crc_bits

    @property
    def total_bits(self) -> int:
        return self.outcome_stream_bits + self.basis_stream_bits

    @property
    def batch(self) -> ShadowBatch:
        if not self.ok:
            raise OutageError("no decoded batch: transmission ended in outage")
        return ShadowBatch(self.n, self.bases, self.outcome_bits)


def nominal_budget(n: int, N: int, R_b: float, R_u: float) -> float:
    """``(n / R_b + ceil(n log2 3) / R_u) * N``."""
    return (n / R_b + basis_group_bits(n) / R_u) * N


def _send(info, code: CodeSpec, chan: ChannelSpec, seed: int, rng) -> tuple[np.ndarray, int]:
    coded = fec.encode(info, code)
    received = fec.channel_transmit(fec.interleave(coded, seed), chan, rng)
    return fec.decode(fec.deinterleave(received, seed), code, info.size), coded.size


def transmit(batch: ShadowBatch, cfg: UepConfig, rng: np.random.Generator) -> TransmissionOutcome:
    """Encode, send and decode both streams; outage iff the basis CRC fails."""
    n, N = batch.n, batch.N
    basis_payload = pack_bases(batch)
    basis_info = fec.crc_append(basis_payload)
    outcome_info = pack_outcomes(batch)

    basis_rx, basis_sent = _send(basis_info, cfg.basis_code, cfg.chan, cfg.interleaver_seed, rng)
    outcome_rx, outcome_sent = _send(
        outcome_info, cfg.outcome_code, cfg.chan, cfg.interleaver_seed + 1, rng
    )
    sizes = dict(
        outcome_stream_bits=outcome_sent,
        basis_stream_bits=basis_sent,
        crc_bits=basis_sent - cfg.basis_code.encoded_length(basis_payload.size),
    )
    p_err = fec.analytic_ber(cfg.outcome_code, cfg.chan)

    if not fec.crc_check(basis_rx):
        return TransmissionOutcome("outage", n, N, p_err, **sizes)
    try:
        bases = unpack_bases(basis_rx[: -fec.CRC_BITS], n, N)
    except OutOfRangeBasis:
        return TransmissionOutcome("outage", n, N, p_err, **sizes)
    bits = unpack_outcomes(outcome_rx, n, N)
    return TransmissionOutcome("ok", n, N, p_err, bases, bits, **sizes)


def _codes(bases) -> np.ndarray:
    if isinstance(bases, ShadowBatch):
        return bases.bases
    if len(bases) and isinstance(bases[0], BasisString):
        return np.array([b.codes for b in bases])
    return np.asarray(bases)


def compatibility_set(bases, obs: PauliObservable) -> np.ndarray:
    """Indices of records whose basis matches ``obs`` on its whole support."""
    codes = _codes(bases)
    if codes.size == 0:
        return np.empty(0, dtype=np.intp)
    if codes.shape[1] != obs.n:
        raise ValueError(f"dimension mismatch: bases n={codes.shape[1]}, observable n={obs.n}")
    match = np.all(codes[:, list(obs.support)] == obs.letter_codes, axis=1)
    return np.flatnonzero(match)


def biased_estimate(records, compatible, obs: PauliObservable) -> float:
    """Sum of support parities over compatible records, divided by the total N."""
    bits = records.bits if isinstance(records, ShadowBatch) else np.asarray(records)
    N = bits.shape[0]
    compatible = np.asarray(compatible, dtype=np.intp)
    if compatible.size == 0:
        return 0.0
    parity = bits[np.ix_(compatible, obs.support)].sum(axis=1) % 2
    return float(np.sum(1 - 2 * parity.astype(np.int64))) / N


def _check_p_err(p_err: float):
    if not 0.0 <= p_err < 0.5:
        raise DegenerateDebias(f"flip probability must lie in [0, 0.5), got {p_err}")


def debias_factor(weight: int, p_err: float) -> float:
    _check_p_err(p_err)
    if weight < 1:
        raise ValueError(f"weight must be >= 1, got {weight}")
    return 3.0**weight / (1.0 - 2.0 * p_err) ** weight


def debiased_estimate(biased: float, weight: int, p_err: float) -> float:
    return debias_factor(weight, p_err) * biased


def p_even(weight: int, p_err: float) -> float:
    """Probability that an even number of ``weight`` independent bits flip."""
    return (1.0 + (1.0 - 2.0 * p_err) ** weight) / 2.0


def min_copies(w: int, M: int, epsilon: float, delta: float, p_err: float) -> int:
    """Copies sufficient for all ``M`` weight-<=``w`` estimates to be epsilon-accurate w.p. 1-delta."""
    _check_p_err(p_err)
    if w < 1 or M < 1 or epsilon <= 0 or delta <= 0:
        raise ValueError("need w >= 1, M >= 1, epsilon > 0 and delta > 0")
    log_term = math.log(2 * M / delta)
    if log_term <= 0:
        return 0
    return math.ceil(2 * 9**w * log_term / ((1 - 2 * p_err) ** (2 * w) * epsilon**2))


@dataclass(frozen=True)
class EstimateReport:
    observables: tuple[PauliObservable, ...]
    estimates: np.ndarray
    biased: np.ndarray
    compat_counts: np.ndarray
    N: int
    p_err: float
    success: np.ndarray | None = None

    def __len__(self):
        return len(self.observables)

    def scored(self, truth, epsilon: float) -> "EstimateReport":
        """Fill per-observable success flags against exact expectations."""
        truth = np.asarray(truth, dtype=float)
        return replace(self, success=np.abs(self.estimates - truth) <= epsilon)

    @property
    def all_success(self) -> bool:
        if self.success is None:
            raise ValueError("report has not been scored")
        return bool(np.all(self.success))


def estimate_all(
    outcome: TransmissionOutcome,
    observables: Sequence[PauliObservable],
    N: int | None = None,
) -> EstimateReport:
    if not outcome.ok:
        raise OutageError("cannot estimate from a transmission in outage")
    batch = outcome.batch
    N = batch.N if N is None else N
    if N != batch.N:
        raise ValueError(f"N={N} does not match the {batch.N} decoded records")
    biased, estimates, counts = [], [], []
    for obs in observables:
        compatible = compatibility_set(batch, obs)
        value = biased_estimate(batch, compatible, obs)
        biased.append(value)
        estimates.append(debiased_estimate(value, obs.weight, outcome.p_err))
        counts.append(compatible.size)
    return EstimateReport(
        tuple(observables),
        np.array(estimates, dtype=float),
        np.array(biased, dtype=float),
        np.array(counts, dtype=np.int64),
        N,
        outcome.p_err,
    )


def run(batch: ShadowBatch, observables, cfg: UepConfig, rng) -> tuple[TransmissionOutcome, EstimateReport | None]:
    """Transmit ``batch`` and estimate; the report is ``None`` on outage."""
    outcome = transmit(batch, cfg, rng)
    if not outcome.ok:
        return outcome, None
    return outcome, estimate_all(outcome, observables)
