"""Comparison schemes: quantize-and-ship the state vector, and single-rate shadows.

CQCR quantizer: ``b`` bits per complex amplitude, ``b/2`` for the real part and
``b/2`` for the imaginary part. Each part uses a uniform midrise quantizer on
``[-1, 1]`` with ``2**(b/2)`` cells; indices are sent MSB first, real before
imaginary, amplitudes in index order. The receiver renormalizes and falls back
to ``|0...0>`` if everything decodes to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fec, protocol
from .fec import ChannelSpec, CodeSpec
from .qsim import PauliObservable, StateVector, expectation, named_state
from .shadows import ShadowBatch


@dataclass(frozen=True)
class CqcrConfig:
    b: int
    code: CodeSpec
    chan: ChannelSpec

    def __post_init__(self):
        if self.b < 2 or self.b % 2:
            raise ValueError(f"bits per amplitude must be even and >= 2, got {self.b}")

    def budget(self, n: int) -> int:
        return self.code.encoded_length(2**n * self.b)


def quantize(values: np.ndarray, bits: int) -> np.ndarray:
    levels = 2**bits
    idx = np.floor((np.asarray(values) + 1.0) * levels / 2.0).astype(np.int64)
    return np.clip(idx, 0, levels - 1)


def dequantize(idx: np.ndarray, bits: int) -> np.ndarray:
    return -1.0 + (np.asarray(idx) + 0.5) * 2.0 / 2**bits


def _to_bits(idx: np.ndarray, bits: int) -> np.ndarray:
    shifts = np.arange(bits - 1, -1, -1)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)


def _from_bits(stream: np.ndarray, bits: int) -> np.ndarray:
    return stream.reshape(-1, bits).astype(np.int64) @ (1 << np.arange(bits - 1, -1, -1))


def cqcr_transmit(state: StateVector, cfg: CqcrConfig, rng: np.random.Generator) -> tuple[StateVector, int]:
    """Quantize, encode, send, decode and rebuild; returns the estimate and bits sent."""
    half = cfg.b // 2
    parts = np.stack([state.amplitudes.real, state.amplitudes.imag], axis=1).reshape(-1)
    info = _to_bits(quantize(parts, half), half)
    coded = fec.encode(info, cfg.code)
    received = fec.decode(fec.channel_transmit(coded, cfg.chan, rng), cfg.code, info.size)
    parts_hat = dequantize(_from_bits(received, half), half).reshape(-1, 2)
    amps = parts_hat[:, 0] + 1j * parts_hat[:, 1]
    norm = np.linalg.norm(amps)
    if norm == 0.0:
        return named_state("all_zero", state.n), coded.size
    return StateVector(state.n, amps / norm), coded.size


def cqcr_roundtrip(state: StateVector, cfg: CqcrConfig, rng: np.random.Generator) -> StateVector:
    return cqcr_transmit(state, cfg, rng)[0]


def cqcr_estimate(state_hat: StateVector, obs: PauliObservable) -> float:
    return expectation(state_hat, obs)


def stt_cc_config(code: CodeSpec, chan: ChannelSpec, **kwargs) -> protocol.UepConfig:
    return protocol.UepConfig(code, code, chan, strict=False, **kwargs)


def stt_cc_run(batch: ShadowBatch, observables, code: CodeSpec, chan: ChannelSpec, rng):
    """Shadow transmission with one code for both streams; see :func:`protocol.run`."""
    return protocol.run(batch, observables, stt_cc_config(code, chan), rng)
