"""Dense statevector engine.

Qubit ``j`` maps to axis ``j`` of the amplitude tensor reshaped to ``(2,) * n``,
i.e. qubit 0 is the most significant bit of the basis-state index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

MAX_QUBITS = 24
LETTERS = "XYZ"
LETTER_CODE = {"X": 0, "Y": 1, "Z": 2}

_S2 = 1.0 / np.sqrt(2.0)
# Rotation applied before a computational-basis measurement, indexed by letter code.
# Z -> I, X -> H, Y -> H S^dagger.
ROTATIONS = np.array(
    [
        [[_S2, _S2], [_S2, -_S2]],
        [[_S2, -1j * _S2], [_S2, 1j * _S2]],
        [[1.0, 0.0], [0.0, 1.0]],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class StateVector:
    n: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if self.n < 1:
            raise ValueError(f"qubit count must be >= 1, got {self.n}")
        if amps.shape != (2**self.n,):
            raise ValueError(f"expected {2**self.n} amplitudes, got shape {amps.shape}")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state is not normalized (norm^2 = {norm})")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = True) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        n = int(np.log2(amps.size))
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(n, amps)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n)


@dataclass(frozen=True)
class PauliObservable:
    """Pauli string stored sparsely as ``{qubit: letter}``; identity elsewhere."""

    n: int
    terms: Mapping[int, str]

    def __post_init__(self):
        terms = {int(k): str(v).upper() for k, v in dict(self.terms).items()}
        if not terms:
            raise ValueError("observable must act on at least one qubit")
        for q, letter in terms.items():
            if not 0 <= q < self.n:
                raise ValueError(f"qubit index {q} out of range for n={self.n}")
            if letter not in LETTER_CODE:
                raise ValueError(f"unknown Pauli letter {letter!r}")
        object.__setattr__(self, "terms", dict(sorted(terms.items())))

    @classmethod
    def from_string(cls, label: str) -> "PauliObservable":
        """Parse a dense label such as ``"XIZ"``."""
        return cls(len(label), {i: c for i, c in enumerate(label.upper()) if c != "I"})

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(self.terms)

    @property
    def weight(self) -> int:
        return len(self.terms)

    @property
    def letter_codes(self) -> np.ndarray:
        return np.array([LETTER_CODE[c] for c in self.terms.values()], dtype=np.int8)

    def label(self) -> str:
        return "".join(self.terms.get(i, "I") for i in range(self.n))

    def __str__(self):
        return self.label()


@dataclass(frozen=True)
class BasisString:
    n: int
    letters: str

    def __post_init__(self):
        letters = str(self.letters).upper()
        if len(letters) != self.n:
            raise ValueError(f"basis has {len(letters)} letters, expected {self.n}")
        if any(c not in LETTER_CODE for c in letters):
            raise ValueError(f"basis letters must be X, Y or Z: {letters!r}")
        object.__setattr__(self, "letters", letters)

    @classmethod
    def from_codes(cls, codes) -> "BasisString":
        codes = list(codes)
        return cls(len(codes), "".join(LETTERS[int(c)] for c in codes))

    @property
    def codes(self) -> np.ndarray:
        return np.array([LETTER_CODE[c] for c in self.letters], dtype=np.int8)

    def __str__(self):
        return self.letters


def haar_random_state(n: int, seed=None) -> StateVector:
    """Haar-random pure state from normalized i.i.d. complex Gaussians.

    ``seed`` may be anything accepted by :func:`numpy.random.default_rng`,
    including an existing ``Generator``.
    """
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"n must be in [1, {MAX_QUBITS}], got {n}")
    rng = np.random.default_rng(seed)
    re, im = rng.standard_normal((2, 2**n))
    amps = re + 1j * im
    return StateVector(n, amps / np.linalg.norm(amps))


def named_state(kind: str, n: int) -> StateVector:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    dim = 2**n
    amps = np.zeros(dim, dtype=complex)
    if kind == "all_zero":
        amps[0] = 1.0
    elif kind == "ghz":
        amps[0] = amps[-1] = _S2
    elif kind == "plus_all":
        amps[:] = 1.0 / np.sqrt(dim)
    else:
        raise ValueError(f"unknown state kind {kind!r}")
    return StateVector(n, amps)


def apply_pauli(state: StateVector, obs: PauliObservable) -> np.ndarray:
    """Return ``O|psi>`` as a flat amplitude array."""
    if state.n != obs.n:
        raise ValueError(f"dimension mismatch: state n={state.n}, observable n={obs.n}")
    psi = state.tensor().copy()
    for q, letter in obs.terms.items():
        psi = np.moveaxis(psi, q, 0)
        if letter == "X":
            psi = psi[::-1].copy()
        elif letter == "Z":
            psi[1] *= -1
        else:
            psi = np.stack([-1j * psi[1], 1j * psi[0]])
        psi = np.moveaxis(psi, 0, q)
    return psi.reshape(-1)


def expectation(state: StateVector, obs: PauliObservable) -> float:
    value = np.vdot(state.amplitudes, apply_pauli(state, obs))
    # Pauli strings are Hermitian; the imaginary part is round-off.
    return float(value.real)


def rotate(state: StateVector, basis: BasisString) -> np.ndarray:
    """Apply the per-qubit measurement rotations for ``basis`` to a working copy."""
    if state.n != basis.n:
        raise ValueError(f"dimension mismatch: state n={state.n}, basis n={basis.n}")
    psi = state.tensor().copy()
    for q, code in enumerate(basis.codes):
        if code == LETTER_CODE["Z"]:
            continue
        psi = np.moveaxis(np.tensordot(ROTATIONS[code], psi, axes=([1], [q])), 0, q)
    return psi.reshape(-1)


def index_to_bits(index: int, n: int) -> np.ndarray:
    return np.array([(index >> (n - 1 - q)) & 1 for q in range(n)], dtype=np.uint8)


def sample_in_basis(state: StateVector, basis: BasisString, rng: np.random.Generator) -> np.ndarray:
    """Measure one copy of ``state`` in ``basis``; returns ``n`` bits in qubit order."""
    probs = np.abs(rotate(state, basis)) ** 2
    cdf = np.cumsum(probs)
    index = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return index_to_bits(min(index, probs.size - 1), state.n)


def sample_batch(
    state: StateVector,
    bases: np.ndarray,
    rng: np.random.Generator,
    max_amplitudes: int = 1 << 23,
) -> np.ndarray:
    """Measure one copy per row of ``bases`` (shape ``(N, n)``, letter codes).

    Qubits are drawn in order from their conditional marginals. Copies sharing
    the same (letter, bit) prefix share the same collapsed remainder, so the
    remainder is computed once per distinct prefix. The joint distribution is
    the same as calling :func:`sample_in_basis` once per row.
    """
    bases = np.asarray(bases)
    n = state.n
    if bases.ndim != 2 or bases.shape[1] != n:
        raise ValueError(f"bases must have shape (N, {n}), got {bases.shape}")
    total = bases.shape[0]
    out = np.empty((total, n), dtype=np.uint8)
    chunk = _prefix_chunk(n, total, max_amplitudes)
    for start in range(0, total, chunk):
        codes = bases[start : start + chunk].astype(np.int64)
        k = codes.shape[0]
        remainders = state.amplitudes.reshape(1, -1)
        group = np.zeros(k, dtype=np.int64)
        for q in range(n):
            keys, inv = np.unique(group * 3 + codes[:, q], return_inverse=True)
            psi = remainders[keys // 3].reshape(keys.size, 2, -1)
            rotated = np.einsum("gab,gbr->gar", ROTATIONS[keys % 3], psi)
            weights = (rotated.real**2 + rotated.imag**2).sum(axis=2)
            p_one = weights[:, 1] / weights.sum(axis=1)
            bit = (rng.random(k) < p_one[inv]).astype(np.int64)
            out[start : start + k, q] = bit
            children, group = np.unique(inv * 2 + bit, return_inverse=True)
            src, b = children // 2, children % 2
            remainders = rotated[src, b] / np.sqrt(weights[src, b])[:, None]
    return out


def _prefix_chunk(n: int, total: int, max_amplitudes: int) -> int:
    """Largest batch size whose prefix-group remainders fit in ``max_amplitudes``."""
    chunk = max(total, 1)
    while chunk > 1:
        peak = max(min(6**q, chunk) * 2 ** (n - q) for q in range(n + 1))
        if peak <= max_amplitudes:
            break
        chunk //= 2
    return chunk


def outcome_eigenvalues(bits) -> np.ndarray:
    """Map measured bits to Pauli eigenvalues, ``b -> (-1)**b``."""
    return 1 - 2 * np.asarray(bits, dtype=np.int8)
