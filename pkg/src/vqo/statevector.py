"""Dense statevector simulation.

Amplitude index bit (n - 1 - q) belongs to qubit q, i.e. qubit 0 is the most
significant bit.  All operations return new StateVector values.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .pauli import ObservableSum, PauliString

MAX_QUBITS = 14
DENSE_PULSE_MAX = 10
UNITARITY_TOL = 1e-10
IMAG_TOL = 1e-10


class CapacityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StateVector:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != (1 << self.n,):
            raise ValueError(f"expected {1 << self.n} amplitudes, got {a.shape}")
        object.__setattr__(self, "amplitudes", a)

    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def tensor(self, other: "StateVector") -> "StateVector":
        return StateVector(self.n + other.n, np.kron(self.amplitudes, other.amplitudes))


def prepare_basis(n: int, bits: str, max_qubits: int | None = None) -> StateVector:
    cap = MAX_QUBITS if max_qubits is None else max_qubits
    if n > cap:
        raise CapacityError(f"{n} qubits exceeds the configured maximum of {cap}")
    if len(bits) != n or set(bits) - {"0", "1"}:
        raise ValueError(f"bitstring {bits!r} does not describe {n} qubits")
    amp = np.zeros(1 << n, dtype=complex)
    amp[int(bits, 2) if n else 0] = 1.0
    return StateVector(n, amp)


@lru_cache(maxsize=8192)
def pauli_action(n: int, x: int, z: int, phase: int):
    """Index/phase arrays with (P psi)[b] = ph[b] * psi[src[b]]."""
    idx = np.arange(1 << n, dtype=np.int64)
    src = idx ^ x
    par = (np.bitwise_count(src & z) & 1).astype(np.int64)
    k = (phase + bin(x & z).count("1")) % 4
    ph = (1j ** k) * (1 - 2 * par)
    src.flags.writeable = False
    ph.flags.writeable = False
    return src, ph


def _apply(psi: np.ndarray, n: int, P: PauliString) -> np.ndarray:
    src, ph = pauli_action(n, P.x, P.z, P.phase)
    return ph * psi[src]


def apply_pauli(s: StateVector, P: PauliString) -> StateVector:
    if P.n != s.n:
        raise ValueError("Pauli string and state sizes differ")
    return StateVector(s.n, _apply(s.amplitudes, s.n, P))


def apply_pauli_rotation(s: StateVector, P: PauliString, angle: float) -> StateVector:
    """exp(-i angle P / 2) s = cos(angle/2) s - i sin(angle/2) P s."""
    if P.n != s.n:
        raise ValueError("Pauli string and state sizes differ")
    if P.phase != 0:
        raise ValueError("rotation generator must carry phase +1")
    if angle == 0:
        return s
    c, si = np.cos(angle / 2), np.sin(angle / 2)
    return StateVector(s.n, c * s.amplitudes - 1j * si * _apply(s.amplitudes, s.n, P))


_EIG_CACHE: dict = {}


def _eigh(A: ObservableSum):
    hit = _EIG_CACHE.get(A)
    if hit is None:
        hit = np.linalg.eigh(A.matrix())
        if len(_EIG_CACHE) > 256:
            _EIG_CACHE.clear()
        _EIG_CACHE[A] = hit
    return hit


def pulse_unitary(A: ObservableSum, angle: float) -> np.ndarray:
    w, V = _eigh(A)
    return (V * np.exp(-0.5j * angle * w)) @ V.conj().T


def apply_pulse(s: StateVector, A: ObservableSum, angle: float) -> StateVector:
    """exp(-i angle A / 2) s."""
    if A.n != s.n:
        raise ValueError("generator and state sizes differ")
    if len(A.terms) == 1:
        c, P = A.terms[0]
        return apply_pauli_rotation(s, P.with_phase(0), c * P.sign * angle)
    if s.n > DENSE_PULSE_MAX:
        raise CapacityError(f"dense pulse path is limited to {DENSE_PULSE_MAX} qubits")
    if angle == 0:
        return s
    return StateVector(s.n, pulse_unitary(A, angle) @ s.amplitudes)


def apply_controlled_pauli(s: StateVector, control: int, P: PauliString, on: int = 1) -> StateVector:
    """Apply P (given on the other n-1 qubits, in order) where `control` reads `on`."""
    if not 0 <= control < s.n:
        raise ValueError("control index out of range")
    if P.n != s.n - 1:
        raise ValueError("controlled string must act on exactly the remaining qubits")
    rest = [q for q in range(s.n) if q != control]
    full = P.embed(s.n, rest)
    moved = _apply(s.amplitudes, s.n, full)
    bit = (np.arange(1 << s.n) >> (s.n - 1 - control)) & 1
    return StateVector(s.n, np.where(bit == on, moved, s.amplitudes))


def pauli_expectation(s: StateVector, P: PauliString) -> complex:
    return complex(np.vdot(s.amplitudes, _apply(s.amplitudes, s.n, P)))


def expectation(s: StateVector, H: ObservableSum) -> float:
    if H.n != s.n:
        raise ValueError("observable and state sizes differ")
    total = 0.0
    for c, P in H.terms:
        v = pauli_expectation(s, P)
        if abs(v.imag) > IMAG_TOL:
            raise FloatingPointError(f"imaginary residue {v.imag:.3e} in <{P.label}>")
        total += c * v.real
    return total


def ancilla_expectation(s: StateVector, ancilla: int = 0, basis: str = "Y") -> float:
    P = PauliString.single(s.n, ancilla, basis)
    v = pauli_expectation(s, P)
    return float(v.real)


def pauli_y_expectation_on_ancilla(s: StateVector, ancilla: int = 0) -> float:
    return ancilla_expectation(s, ancilla, "Y")


def pauli_x_expectation_on_ancilla(s: StateVector, ancilla: int = 0) -> float:
    return ancilla_expectation(s, ancilla, "X")
