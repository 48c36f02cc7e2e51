"""Dense-matrix reference implementations and shared strategies."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st
from scipy.linalg import expm

from vqo.ansatz import Ansatz
from vqo.pauli import ObservableSum, PauliString

I2 = np.eye(2, dtype=complex)
LETTER = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_letters(letters: str) -> np.ndarray:
    """Dense operator with qubit 0 as the leftmost (most significant) factor."""
    M = np.ones((1, 1), dtype=complex)
    for c in letters:
        M = np.kron(M, LETTER[c])
    return M


def dense_string(P: PauliString) -> np.ndarray:
    return (1j ** P.phase) * kron_letters(P.letters)


def dense_sum(H: ObservableSum) -> np.ndarray:
    return sum(c * dense_string(P) for c, P in H.terms)


def dense_pulses(A: Ansatz, theta) -> list:
    ang = np.asarray(theta, dtype=float) + np.asarray(A.offsets)
    return [expm(-0.5j * a * dense_sum(G)) for G, a in zip(A.pulses, ang)]


def dense_state(A: Ansatz, theta) -> np.ndarray:
    psi = np.zeros(1 << A.n, dtype=complex)
    psi[int(A.start, 2)] = 1.0
    for U in dense_pulses(A, theta):
        psi = U @ psi
    return psi


def dense_f(A: Ansatz, H: ObservableSum, theta) -> float:
    psi = dense_state(A, theta)
    return float(np.real(psi.conj() @ dense_sum(H) @ psi))


def dense_derivative(A: Ansatz, H: ObservableSum, theta, S) -> float:
    """(i/2)^k <[At_s1, [..., [At_sk, H]]]> with At_s = U_{s+1:p} A_s U_{s+1:p}^dag."""
    Us = dense_pulses(A, theta)
    psi = dense_state(A, theta)
    M = dense_sum(H)
    for s in sorted(S, reverse=True):
        V = np.eye(1 << A.n, dtype=complex)
        for U in Us[s + 1:]:
            V = U @ V
        At = V @ dense_sum(A.pulses[s]) @ V.conj().T
        M = 0.5j * (At @ M - M @ At)
    return float(np.real(psi.conj() @ M @ psi))


def random_string(rng, n: int, phase: int = 0) -> PauliString:
    return PauliString.from_label("".join(rng.choice(list("IXYZ"), size=n))).with_phase(phase)


def random_observable(rng, n: int, terms: int) -> ObservableSum:
    out = []
    for _ in range(terms):
        P = random_string(rng, n, int(rng.choice([0, 2])))
        out.append((float(rng.uniform(0.1, 1.0)), P))
    return ObservableSum(n, out)


def random_ansatz(rng, n: int, p: int, max_terms: int = 2) -> Ansatz:
    pulses = []
    for _ in range(p):
        k = int(rng.integers(1, max_terms + 1))
        G = random_observable(rng, n, k)
        # keep every generator non-trivial (drop identity-only generators)
        while all(P.is_identity() for _, P in G.terms):
            G = random_observable(rng, n, k)
        pulses.append(G)
    start = "".join(rng.choice(["0", "1"], size=n))
    return Ansatz(n, start, tuple(pulses))


def letters_st(n: int):
    return st.text(alphabet="IXYZ", min_size=n, max_size=n)


@st.composite
def pauli_pair(draw, max_n: int = 4):
    n = draw(st.integers(1, max_n))
    a = PauliString.from_label(draw(letters_st(n))).with_phase(draw(st.integers(0, 3)))
    b = PauliString.from_label(draw(letters_st(n))).with_phase(draw(st.integers(0, 3)))
    return a, b


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance lines, echoed in the terminal summary so they survive output capture
ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
