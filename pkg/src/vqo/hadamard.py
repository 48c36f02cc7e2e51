"""Generalized Hadamard tests and the nested-commutator expansion.

A circuit is a list of Pauli insertions woven into the pulse sequence.  An
insertion at position t acts after the first t pulses (t = 0..p) on branch 0
or branch 1 of the ancilla.  With the ancilla prepared in |+>,

    B_b = I_{p,b} U_{p-1} ... U_0 I_{0,b} |start>,   z = <B_0|B_1>,

and the ancilla reads <X> = Re z, <Y> = Im z.

Derivatives.  For sorted pulse indices s_1 <= ... <= s_k and the conjugated
generators At_s = U_{s+1:p} A_s U_{s+1:p}^dag,

    d^k f / d theta_{s_1} ... d theta_{s_k} = (i/2)^k <[At_{s_1},[..., [At_{s_k}, H]]]>.

Expanding every generator and H into Pauli terms gives tuples (Q_1..Q_k, P)
with weight c = beta_1 ... beta_k alpha.  Each nested commutator opens into
2^k words  L-ops P R-ops  with sign (-1)^{|R|}; a word and its adjoint give
the same real contribution, so we keep the 2^{k-1} words with s_1 on branch
1.  Each kept word contributes (c / 2^{k-1}) * sign * <ancilla>, measured in
X for even k and Y for odd k.  For k = 1 this is the two-controlled-gate Y
measurement of the textbook analytic-gradient circuit.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ansatz import Ansatz, check_point, lightcone_mask
from .pauli import ObservableSum, PauliString, mask_to_qubits
from .statevector import (
    MAX_QUBITS,
    CapacityError,
    StateVector,
    ancilla_expectation,
    apply_controlled_pauli,
    apply_pulse,
    pauli_action,
    prepare_basis,
    pulse_unitary,
)

MAX_ORDER = 3


class UnsupportedOrder(ValueError):
    pass


@dataclass(frozen=True)
class Insertion:
    position: int
    string: PauliString
    branch: int


class Circuit:
    """A light-cone pruned insertion circuit on the reduced register."""

    def __init__(self, ansatz: Ansatz, insertions):
        insertions = tuple(insertions)
        p = ansatz.p
        by_pos = [[] for _ in range(p + 1)]
        for ins in insertions:
            if not 0 <= ins.position <= p:
                raise ValueError(f"insertion position {ins.position} outside 0..{p}")
            if ins.branch not in (0, 1):
                raise ValueError("branch must be 0 or 1")
            if ins.string.n != ansatz.n:
                raise ValueError("insertion acts on the wrong number of qubits")
            by_pos[ins.position].append(ins)

        mask = 0
        for ins in by_pos[p]:
            mask |= ins.string.mask
        kept = set()
        for t in range(p - 1, -1, -1):
            m = ansatz.pulse_mask(t)
            if m & mask:
                kept.add(t)
                mask |= m
            for ins in by_pos[t]:
                mask |= ins.string.mask

        qubits = sorted(mask_to_qubits(mask, ansatz.n))
        r = len(qubits)
        if r + 1 > MAX_QUBITS:
            raise CapacityError(f"reduced register of {r} qubits plus ancilla is too large")
        self.ansatz = ansatz
        self.insertions = insertions
        self.qubits = tuple(qubits)
        self.r = r
        self.kept = tuple(sorted(kept))
        self.start_index = int("".join(ansatz.start[q] for q in qubits), 2) if r else 0

        ops = []
        for t in range(p + 1):
            if t > 0 and (t - 1) in kept:
                A = ansatz.pulses[t - 1].restrict(qubits)
                if len(A.terms) == 1:
                    c, P = A.terms[0]
                    src, ph = pauli_action(r, P.x, P.z, 0)
                    ops.append(("rot", t - 1, c * P.sign, src, ph, A))
                else:
                    ops.append(("dense", t - 1, 1.0, None, None, A))
            for ins in by_pos[t]:
                P = ins.string.restrict(qubits)
                src, ph = pauli_action(r, P.x, P.z, P.phase)
                ops.append(("ins", ins.branch, P, src, ph, None))
        self.ops = ops

    def branches(self, angles) -> np.ndarray:
        """Rows B_0 and B_1 restricted to the register, shape (2, 2^r)."""
        psi = np.zeros((2, 1 << self.r), dtype=complex)
        psi[:, self.start_index] = 1.0
        for kind, a, b, src, ph, A in self.ops:
            if kind == "rot":
                half = 0.5 * b * angles[a]
                psi = np.cos(half) * psi - 1j * np.sin(half) * (ph * psi[:, src])
            elif kind == "ins":
                psi[a] = ph * psi[a, src]
            else:
                psi = psi @ pulse_unitary(A, angles[a]).T
        return psi

    def overlap(self, angles) -> complex:
        psi = self.branches(angles)
        return complex(np.vdot(psi[0], psi[1]))

    def ancilla_mean(self, angles, basis: str) -> float:
        psi = self.branches(angles)
        z = np.vdot(psi[0], psi[1])
        return float(z.real if basis == "X" else z.imag)

    def ancilla_state(self, angles) -> StateVector:
        """The same test built gate by gate with the ancilla as qubit 0."""
        r = self.r
        data = prepare_basis(r, format(self.start_index, f"0{r}b") if r else "", MAX_QUBITS)
        plus = StateVector(1, np.array([1.0, 1.0]) / np.sqrt(2.0))
        s = plus.tensor(data)
        rest = list(range(1, r + 1))
        for kind, a, b, src, ph, A in self.ops:
            if kind == "ins":
                s = apply_controlled_pauli(s, 0, b, on=a)
            else:
                s = apply_pulse(s, A.embed(r + 1, rest), angles[a])
        return s


def circuit_ancilla_expectation(circ: Circuit, angles, basis: str) -> float:
    return ancilla_expectation(circ.ancilla_state(angles), 0, basis)


# expansion tables -----------------------------------------------------------------

@dataclass(frozen=True)
class Word:
    circuit: Circuit
    sign: int
    basis: str


@dataclass(frozen=True)
class TermTable:
    """Tuples (Q_1..Q_k, P) that survive pruning, their weights and words."""

    order: int
    S: tuple
    labels: tuple      # per tuple: (generator term indices..., H term index)
    weights: np.ndarray
    words: tuple       # per tuple: tuple of Word
    norm: float        # sum of weights (E, Gamma_j or Z_S)
    cdf: np.ndarray

    @property
    def probabilities(self) -> np.ndarray:
        return self.weights / self.norm if self.norm > 0 else self.weights


_SIGMA = (1, -1, -1, 1)


def _check_S(ansatz: Ansatz, S) -> tuple:
    S = tuple(sorted(int(s) for s in S))
    if len(S) > MAX_ORDER:
        raise UnsupportedOrder(f"derivative order {len(S)} exceeds the cap of {MAX_ORDER}")
    for s in S:
        if not 0 <= s < ansatz.p:
            raise IndexError(f"coordinate {s} outside 0..{ansatz.p - 1}")
    return S


def _gen_terms(A: ObservableSum):
    return [(c, s) for c, s in A.terms]


@lru_cache(maxsize=256)
def term_table(ansatz: Ansatz, H: ObservableSum, S: tuple) -> TermTable:
    if H.n != ansatz.n:
        raise ValueError("observable and ansatz sizes differ")
    S = _check_S(ansatz, S)
    k = len(S)
    p = ansatz.p
    labels, weights, words = [], [], []

    if k == 0:
        for l, (alpha, P) in enumerate(H.terms):
            circ = Circuit(ansatz, [Insertion(p, P, 1)])
            labels.append((l,))
            weights.append(alpha)
            words.append((Word(circ, 1, "X"),))
    else:
        gens = [_gen_terms(ansatz.pulses[s]) for s in S]
        cones = [[lightcone_mask(ansatz, s, Q.mask) for _, Q in g] for s, g in zip(S, gens)]
        for combo in itertools.product(*[range(len(g)) for g in gens], range(len(H.terms))):
            *ks, l = combo
            alpha, P = H.terms[l]
            mask = P.mask
            alive = True
            for i in range(k - 1, -1, -1):
                cone = cones[i][ks[i]]
                if not cone & mask:
                    alive = False
                    break
                mask |= cone
            if not alive:
                continue
            c = alpha
            Qs = []
            for i in range(k):
                beta, Q = gens[i][ks[i]]
                c *= beta
                Qs.append(Q)
            ws = []
            for left in range(1 << (k - 1)):
                in_left = [False] + [bool(left >> (i - 1) & 1) for i in range(1, k)]
                ins = [Insertion(S[i] + 1, Qs[i], 0 if in_left[i] else 1) for i in range(k)]
                ins.append(Insertion(p, P, 1))
                nR = k - sum(in_left)
                sign = (-1) ** nR * _SIGMA[k % 4]
                ws.append(Word(Circuit(ansatz, ins), sign, "X" if k % 2 == 0 else "Y"))
            labels.append(tuple(combo))
            weights.append(c)
            words.append(tuple(ws))

    w = np.array(weights, dtype=float)
    norm = float(w.sum()) if w.size else 0.0
    cdf = np.cumsum(w) / norm if norm > 0 else np.zeros(0)
    return TermTable(k, S, tuple(labels), w, tuple(words), norm, cdf)


def word_mean(word: Word, angles) -> float:
    return word.circuit.ancilla_mean(angles, word.basis)


def exact_query_mean(ansatz: Ansatz, H: ObservableSum, theta, S=()) -> float:
    """Exact expectation of the oracle output: f, or a mixed partial derivative."""
    angles = ansatz.angles(check_point(ansatz, theta))
    table = term_table(ansatz, H, _check_S(ansatz, S))
    if table.norm == 0:
        return 0.0
    scale = 1.0 / (1 << max(table.order - 1, 0))
    total = 0.0
    for c, ws in zip(table.weights, table.words):
        acc = 0.0
        for w in ws:
            acc += w.sign * word_mean(w, angles)
        total += c * scale * acc
    return float(total)
