"""Pauli strings and positive-weighted Pauli sums.

A string on n qubits is stored as two bitmasks (x, z) plus a phase exponent
k, meaning i^k * sigma(x_0, z_0) (x) ... (x) sigma(x_{n-1}, z_{n-1}) with
sigma(1, 0) = X, sigma(0, 1) = Z and sigma(1, 1) = Y.  Qubit q sits at bit
(n - 1 - q) so that the masks line up with statevector indices (qubit 0 is
the most significant bit).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}
_PHASE_PREFIX = {0: "", 1: "i", 2: "-", 3: "-i"}

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class PauliError(ValueError):
    pass


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    n: int
    x: int
    z: int
    phase: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise PauliError("qubit count must be non-negative")
        full = (1 << self.n) - 1
        if self.x & ~full or self.z & ~full:
            raise PauliError("bitmask exceeds qubit count")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse labels such as 'XIZ', '-XY', 'iZ' or '-iYY'."""
        s = label.strip()
        phase = 0
        if s.startswith("+"):
            s = s[1:]
        if s.startswith("-"):
            phase += 2
            s = s[1:]
        if s.startswith("i"):
            phase += 1
            s = s[1:]
        x = z = 0
        n = len(s)
        for q, ch in enumerate(s):
            if ch not in _LETTER_BITS:
                raise PauliError(f"bad Pauli letter {ch!r} in {label!r}")
            bx, bz = _LETTER_BITS[ch]
            bit = 1 << (n - 1 - q)
            if bx:
                x |= bit
            if bz:
                z |= bit
        return cls(n, x, z, phase)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, 0, 0, 0)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str, phase: int = 0) -> "PauliString":
        if not 0 <= qubit < n:
            raise PauliError("qubit index out of range")
        bx, bz = _LETTER_BITS[letter]
        bit = 1 << (n - 1 - qubit)
        return cls(n, bit if bx else 0, bit if bz else 0, phase)

    def letter(self, q: int) -> str:
        bit = 1 << (self.n - 1 - q)
        return _BITS_LETTER[(int(bool(self.x & bit)), int(bool(self.z & bit)))]

    @property
    def letters(self) -> str:
        return "".join(self.letter(q) for q in range(self.n))

    @property
    def label(self) -> str:
        return _PHASE_PREFIX[self.phase] + self.letters

    def __repr__(self):
        return f"PauliString({self.label!r})"

    @property
    def mask(self) -> int:
        return self.x | self.z

    def support(self) -> frozenset:
        return mask_to_qubits(self.mask, self.n)

    @property
    def weight(self) -> int:
        return _popcount(self.mask)

    def is_identity(self) -> bool:
        return self.mask == 0

    @property
    def sign(self) -> int:
        """+1 or -1 for Hermitian strings (phase 0 or 2)."""
        if self.phase % 2:
            raise PauliError("string with phase +-i is not Hermitian")
        return 1 - self.phase

    def with_phase(self, phase: int) -> "PauliString":
        return PauliString(self.n, self.x, self.z, phase)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return mul(self, other)

    def __neg__(self) -> "PauliString":
        return self.with_phase(self.phase + 2)

    def restrict(self, qubits: Sequence[int]) -> "PauliString":
        """The string on the sub-register `qubits` (in that order).

        Letters outside `qubits` must be identity; the phase is kept."""
        keep = qubits_to_mask(qubits, self.n)
        if self.mask & ~keep:
            raise PauliError("string acts outside the requested register")
        m = len(qubits)
        x = z = 0
        for new, q in enumerate(qubits):
            bit = 1 << (self.n - 1 - q)
            nb = 1 << (m - 1 - new)
            if self.x & bit:
                x |= nb
            if self.z & bit:
                z |= nb
        return PauliString(m, x, z, self.phase)

    def embed(self, n: int, qubits: Sequence[int]) -> "PauliString":
        """Place this string on qubits `qubits` of an n-qubit register."""
        if len(qubits) != self.n:
            raise PauliError("embedding register has wrong length")
        x = z = 0
        for old, q in enumerate(qubits):
            bit = 1 << (self.n - 1 - old)
            nb = 1 << (n - 1 - q)
            if self.x & bit:
                x |= nb
            if self.z & bit:
                z |= nb
        return PauliString(n, x, z, self.phase)

    def matrix(self) -> np.ndarray:
        mats = [_SINGLE[ch] for ch in self.letters] or [np.ones((1, 1), dtype=complex)]
        return (1j ** self.phase) * reduce(np.kron, mats)


def mask_to_qubits(mask: int, n: int) -> frozenset:
    return frozenset(q for q in range(n) if mask >> (n - 1 - q) & 1)


def qubits_to_mask(qubits: Iterable[int], n: int) -> int:
    m = 0
    for q in qubits:
        m |= 1 << (n - 1 - q)
    return m


def _check_dims(a: PauliString, b: PauliString):
    if a.n != b.n:
        raise PauliError(f"size mismatch: {a.n} vs {b.n} qubits")


def mul(a: PauliString, b: PauliString) -> PauliString:
    _check_dims(a, b)
    x = a.x ^ b.x
    z = a.z ^ b.z
    # sigma(x,z) = i^{xz} X^x Z^z, and Z^z1 X^x2 = (-1)^{z1 x2} X^x2 Z^z1
    k = (a.phase + b.phase + _popcount(a.x & a.z) + _popcount(b.x & b.z)
         + 2 * _popcount(a.z & b.x) - _popcount(x & z))
    return PauliString(a.n, x, z, k % 4)


def anticommutes(a: PauliString, b: PauliString) -> bool:
    _check_dims(a, b)
    return bool((_popcount(a.x & b.z) + _popcount(a.z & b.x)) & 1)


def support(a: PauliString) -> frozenset:
    return a.support()


def pauli(label: str) -> PauliString:
    return PauliString.from_label(label)


@dataclass(frozen=True)
class ObservableSum:
    """sum_i alpha_i P_i with alpha_i > 0 and the sign folded into P_i."""

    n: int
    terms: tuple

    def __init__(self, n: int, terms: Iterable):
        merged: dict = {}
        for coeff, s in terms:
            if isinstance(s, str):
                s = PauliString.from_label(s)
            if s.n != n:
                raise PauliError(f"term on {s.n} qubits in a {n}-qubit sum")
            c = float(coeff) * s.sign
            key = (s.x, s.z)
            merged[key] = merged.get(key, 0.0) + c
        out = []
        for (x, z), c in merged.items():
            if c == 0.0:
                continue
            out.append((abs(c), PauliString(n, x, z, 0 if c > 0 else 2)))
        if not out:
            raise PauliError("observable has no nonzero terms")
        for c, _ in out:
            if not np.isfinite(c):
                raise PauliError("non-finite coefficient")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "terms", tuple(out))

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])

    @property
    def strings(self) -> list:
        return [s for _, s in self.terms]

    @property
    def norm1(self) -> float:
        return float(sum(c for c, _ in self.terms))

    E = norm1

    def __len__(self):
        return len(self.terms)

    def support(self) -> frozenset:
        m = 0
        for _, s in self.terms:
            m |= s.mask
        return mask_to_qubits(m, self.n)

    def scaled(self, a: float) -> "ObservableSum":
        return ObservableSum(self.n, [(a * c, s) for c, s in self.terms])

    def __add__(self, other: "ObservableSum") -> "ObservableSum":
        return ObservableSum(self.n, list(self.terms) + list(other.terms))

    def restrict(self, qubits: Sequence[int]) -> "ObservableSum":
        return ObservableSum(len(qubits), [(c, s.restrict(qubits)) for c, s in self.terms])

    def embed(self, n: int, qubits: Sequence[int]) -> "ObservableSum":
        return ObservableSum(n, [(c, s.embed(n, qubits)) for c, s in self.terms])

    def matrix(self) -> np.ndarray:
        return sum(c * s.matrix() for c, s in self.terms)

    def to_text(self) -> str:
        return "\n".join(f"{c!r} {s.label}" for c, s in self.terms) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ObservableSum":
        return parse_observable(text)


def parse_observable(text: str, n: int | None = None) -> ObservableSum:
    """One term per line: `<coeff> <letters>`, e.g. `0.5 XIZ` or `0.5 -XIZ`.

    Coefficients must be strictly positive; a leading '-' on the letters
    carries the sign.  Blank lines and '#' comments are skipped."""
    terms = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise PauliError(f"line {lineno}: expected '<coeff> <letters>'")
        try:
            c = float(parts[0])
        except ValueError:
            raise PauliError(f"line {lineno}: bad coefficient {parts[0]!r}") from None
        if not c > 0 or not np.isfinite(c):
            raise PauliError(f"line {lineno}: coefficient must be positive, got {parts[0]}")
        s = PauliString.from_label(parts[1])
        if s.phase % 2:
            raise PauliError(f"line {lineno}: imaginary phase is not allowed")
        if n is None:
            n = s.n
        terms.append((c, s))
    if n is None:
        raise PauliError("empty observable")
    return ObservableSum(n, terms)
