"""Binary symmetric channel, hard-decision block codes, CRC-16 and interleaving.

Codeword layouts
----------------
``uncoded``     bits are sent as-is (rate 1).
``rep<k>``      each information bit is sent ``k`` times in a row (odd ``k >= 3``);
                decoding is a majority vote over each run.
``hamming74``   systematic Hamming(7,4): ``d1 d2 d3 d4 p1 p2 p3`` with
                ``p1 = d1^d2^d4``, ``p2 = d1^d3^d4``, ``p3 = d2^d3^d4``. The last
                block is zero-padded; the padding length is ``-m % 4`` and is
                stripped by :func:`decode` given the information length ``m``.
                Decoding corrects the single position flagged by the syndrome.

CRC
---
CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection, no final xor)
computed over the bit sequence most-significant-bit first and appended as 16
bits, MSB first.
"""

from __future__ import annotations

import binascii
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

CRC_BITS = 16
CRC_INIT = 0xFFFF
CRC_POLY = 0x1021

# Hamming(7,4) parity part of the generator, rows d1..d4 -> (p1, p2, p3).
_HAMMING_P = np.array([[1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1]], dtype=np.uint8)
_HAMMING_G = np.hstack([np.eye(4, dtype=np.uint8), _HAMMING_P])
_HAMMING_H = np.hstack([_HAMMING_P.T, np.eye(3, dtype=np.uint8)])
# syndrome value (s1 + 2 s2 + 4 s3) -> position to flip, -1 for none
_SYNDROME_POSITION = np.full(8, -1)
for _pos in range(7):
    _col = _HAMMING_H[:, _pos]
    _SYNDROME_POSITION[_col[0] + 2 * _col[1] + 4 * _col[2]] = _pos

# For a flip pattern of weight w (index), the number of weight-w patterns whose
# decoded block has at least one error among the first r information bits
# (row r-1); and the information-bit errors summed over those patterns, / 4.
# Obtained by enumerating all 128 patterns through the syndrome decoder above.
_HAMMING_BLOCK_ERRORS = np.array(
    [
        [0, 0, 9, 19, 16, 12, 7, 1],
        [0, 0, 15, 29, 26, 18, 7, 1],
        [0, 0, 21, 31, 34, 18, 7, 1],
        [0, 0, 21, 35, 35, 21, 7, 1],
    ]
)
_HAMMING_BIT_ERRORS = np.array([0, 0, 9, 19, 16, 12, 7, 1])


@dataclass(frozen=True)
class ChannelSpec:
    """Binary symmetric channel with flip probability ``crossover``."""

    crossover: float
    snr_db: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.crossover < 0.5:
            raise ValueError(f"crossover must lie in [0, 0.5), got {self.crossover}")

    @classmethod
    def from_snr_db(cls, snr_db: float, rate: float = 1.0) -> "ChannelSpec":
        return cls(crossover_from_snr(snr_db, rate), snr_db)


def crossover_from_snr(ebn0_db: float, rate: float = 1.0) -> float:
    """Hard-decision BPSK flip probability ``Q(sqrt(2 R Eb/N0))``.

    With ``rate=1`` the argument is the per-channel-bit SNR.
    """
    ebn0 = 10.0 ** (ebn0_db / 10.0)
    return 0.5 * math.erfc(math.sqrt(rate * ebn0))


@dataclass(frozen=True)
class CodeSpec:
    family: str
    k: int = 1

    def __post_init__(self):
        if self.family == "uncoded":
            object.__setattr__(self, "k", 1)
        elif self.family == "repetition":
            if self.k < 3 or self.k % 2 == 0:
                raise ValueError(f"repetition length must be odd and >= 3, got {self.k}")
        elif self.family == "hamming_7_4":
            object.__setattr__(self, "k", 7)
        else:
            raise ValueError(f"unknown code family {self.family!r}")

    @classmethod
    def parse(cls, name: str) -> "CodeSpec":
        """Accepts ``uncoded``, ``rep<k>`` / ``repetition_<k>`` and ``hamming74`` / ``hamming_7_4``."""
        key = name.strip().lower()
        if key in ("uncoded", "none", "1"):
            return cls("uncoded")
        if key in ("hamming74", "hamming_7_4", "hamming"):
            return cls("hamming_7_4")
        for prefix in ("repetition_", "rep"):
            if key.startswith(prefix) and key[len(prefix) :].isdigit():
                return cls("repetition", int(key[len(prefix) :]))
        raise ValueError(f"cannot parse code name {name!r}")

    @property
    def rate(self) -> float:
        if self.family == "hamming_7_4":
            return 4 / 7
        return 1 / self.k

    @property
    def name(self) -> str:
        if self.family == "repetition":
            return f"rep{self.k}"
        return "hamming74" if self.family == "hamming_7_4" else "uncoded"

    def encoded_length(self, m: int) -> int:
        if self.family == "hamming_7_4":
            return 7 * -(-m // 4)
        return self.k * m

    def __str__(self):
        return self.name


UNCODED = CodeSpec("uncoded")
HAMMING = CodeSpec("hamming_7_4")


def repetition(k: int) -> CodeSpec:
    return CodeSpec("repetition", k)


def code_family(max_repetition: int = 31) -> list[CodeSpec]:
    """All codes available to budget matching, strongest last."""
    return [UNCODED, HAMMING] + [repetition(k) for k in range(3, max_repetition + 1, 2)]


def channel_transmit(bits, chan: ChannelSpec, rng: np.random.Generator) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    if chan.crossover == 0.0:
        return bits.copy()
    return bits ^ (rng.random(bits.shape) < chan.crossover).astype(np.uint8)


def encode(bits, code: CodeSpec) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    if code.family == "uncoded":
        return bits.copy()
    if code.family == "repetition":
        return np.repeat(bits, code.k)
    padded = np.concatenate([bits, np.zeros(-bits.size % 4, dtype=np.uint8)])
    return (padded.reshape(-1, 4) @ _HAMMING_G % 2).astype(np.uint8).reshape(-1)


def decode(bits, code: CodeSpec, length: int | None = None) -> np.ndarray:
    """Hard-decision decode; ``length`` strips Hamming padding (defaults to all blocks)."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % code.k:
        raise ValueError(f"received {bits.size} bits, not a multiple of codeword length {code.k}")
    if code.family == "uncoded":
        out = bits.copy()
    elif code.family == "repetition":
        out = (bits.reshape(-1, code.k).sum(axis=1, dtype=np.int64) * 2 > code.k).astype(np.uint8)
    else:
        blocks = bits.reshape(-1, 7).copy()
        syndrome = blocks @ _HAMMING_H.T % 2
        position = _SYNDROME_POSITION[syndrome @ np.array([1, 2, 4])]
        rows = np.flatnonzero(position >= 0)
        blocks[rows, position[rows]] ^= 1
        out = blocks[:, :4].reshape(-1)
    if length is not None:
        if length > out.size or length < out.size - (3 if code.family == "hamming_7_4" else 0):
            raise ValueError(f"information length {length} inconsistent with {out.size} decoded bits")
        out = out[:length]
    return out


def _pattern_sum(coeffs, p: float) -> float:
    w = np.arange(8)
    return float(np.sum(coeffs * p**w * (1.0 - p) ** (7 - w)))


def analytic_ber(code: CodeSpec, chan: ChannelSpec) -> float:
    """Post-decoding information-bit error probability."""
    p = chan.crossover
    if code.family == "uncoded":
        return p
    if code.family == "repetition":
        k = code.k
        return float(sum(math.comb(k, j) * p**j * (1 - p) ** (k - j) for j in range(k // 2 + 1, k + 1)))
    # 9p^2q^5 + 19p^3q^4 + 16p^4q^3 + 12p^5q^2 + 7p^6q + p^7
    return _pattern_sum(_HAMMING_BIT_ERRORS, p)


def analytic_bler(code: CodeSpec, chan: ChannelSpec, m: int) -> float:
    """Probability that at least one of ``m`` decoded information bits is wrong."""
    if m < 1:
        raise ValueError(f"block must hold at least one bit, got m={m}")
    if code.family != "hamming_7_4":
        # decoded bits are independent for bitwise codes
        return float(-math.expm1(m * math.log1p(-analytic_ber(code, chan))))
    p = chan.crossover
    full, rest = divmod(m, 4)
    ok = (1.0 - _pattern_sum(_HAMMING_BLOCK_ERRORS[3], p)) ** full
    if rest:
        ok *= 1.0 - _pattern_sum(_HAMMING_BLOCK_ERRORS[rest - 1], p)
    return float(1.0 - ok)


def crc16(bits) -> int:
    bits = np.asarray(bits, dtype=np.uint8)
    whole = bits.size - bits.size % 8
    crc = binascii.crc_hqx(np.packbits(bits[:whole]).tobytes(), CRC_INIT)
    for b in bits[whole:]:
        top = ((crc >> 15) & 1) ^ int(b)
        crc = (crc << 1) & 0xFFFF
        if top:
            crc ^= CRC_POLY
    return crc


def crc_append(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    crc = crc16(bits)
    tail = np.array([(crc >> (15 - i)) & 1 for i in range(CRC_BITS)], dtype=np.uint8)
    return np.concatenate([bits, tail])


def crc_check(bits) -> bool:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size < CRC_BITS:
        return False
    return bool(np.array_equal(crc_append(bits[:-CRC_BITS]), bits))


@lru_cache(maxsize=16)
def _permutation(length: int, seed: int) -> np.ndarray:
    perm = np.random.default_rng(seed).permutation(length)
    perm.setflags(write=False)
    return perm


def interleave(bits, seed: int) -> np.ndarray:
    bits = np.asarray(bits)
    return bits[_permutation(bits.size, seed)]


def deinterleave(bits, seed: int) -> np.ndarray:
    bits = np.asarray(bits)
    out = np.empty_like(bits)
    out[_permutation(bits.size, seed)] = bits
    return out
