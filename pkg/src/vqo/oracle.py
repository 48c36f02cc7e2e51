"""The sampling oracle: one ±C sample per query, with a ledger.

Order 0 picks term l with probability alpha_l / E and measures P_l.  Order 1
picks (k, l) with probability gamma_kl / Gamma_j and runs the Hadamard test.
Higher orders pick a pruned commutator tuple by weight and one of its
representative words uniformly.  A measurement with exact mean m is simulated
as +1 with probability (1 + m) / 2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import Ansatz, check_point, lightcone_mask
from .hadamard import MAX_ORDER, TermTable, UnsupportedOrder, term_table, word_mean
from .pauli import ObservableSum


@dataclass(frozen=True)
class GammaTable:
    entries: tuple          # per pulse j: tuple of (k, l, gamma)
    Gamma: np.ndarray
    E: float
    B: np.ndarray

    @property
    def p(self) -> int:
        return len(self.entries)

    def q(self, j: int) -> np.ndarray:
        g = np.array([e[2] for e in self.entries[j]], dtype=float)
        return g / self.Gamma[j] if self.Gamma[j] > 0 else g

    def norm(self, order) -> float:
        return float(np.linalg.norm(self.Gamma, order))


def build_gamma(ansatz: Ansatz, H: ObservableSum) -> GammaTable:
    """gamma^(j)_kl = beta_k alpha_l unless the light cone of Q_k misses P_l."""
    if H.n != ansatz.n:
        raise ValueError("observable and ansatz sizes differ")
    entries, Gamma, B = [], [], []
    for j, A in enumerate(ansatz.pulses):
        row = []
        for k, (beta, Q) in enumerate(A.terms):
            cone = lightcone_mask(ansatz, j, Q.mask)
            for l, (alpha, P) in enumerate(H.terms):
                if cone & P.mask:
                    row.append((k, l, beta * alpha))
        entries.append(tuple(row))
        Gamma.append(sum(g for _, _, g in row))
        B.append(A.norm1)
    return GammaTable(tuple(entries), np.array(Gamma), H.norm1, np.array(B))


@dataclass(frozen=True)
class Ledger:
    by_order: tuple

    @property
    def total(self) -> int:
        return int(sum(self.by_order))

    def __getitem__(self, k):
        return self.by_order[k]


def make_rng(seed) -> np.random.Generator:
    """Counter-based stream; `seed` may be an int or a SeedSequence."""
    return np.random.Generator(np.random.Philox(seed))


class SamplingOracle:
    def __init__(self, H: ObservableSum, seed=0, rng: np.random.Generator | None = None):
        self.H = H
        self.seed = seed
        self.rng = rng if rng is not None else make_rng(seed)
        self._counts = [0] * (MAX_ORDER + 1)
        self._tables: dict = {}
        self._gamma: dict = {}
        self._memo_key = None
        self._memo: dict = {}

    # tables ---------------------------------------------------------------
    def gamma(self, ansatz: Ansatz) -> GammaTable:
        hit = self._gamma.get(id(ansatz))
        if hit is None or hit[0] is not ansatz:
            hit = (ansatz, build_gamma(ansatz, self.H))
            self._gamma[id(ansatz)] = hit
        return hit[1]

    def table(self, ansatz: Ansatz, S) -> TermTable:
        S = tuple(sorted(int(s) for s in S))
        if len(S) > MAX_ORDER:
            raise UnsupportedOrder(f"derivative order {len(S)} exceeds the cap of {MAX_ORDER}")
        key = (id(ansatz), S)
        hit = self._tables.get(key)
        if hit is None or hit[0] is not ansatz:
            hit = (ansatz, term_table(ansatz, self.H, S))
            self._tables[key] = hit
        return hit[1]

    # sampling -------------------------------------------------------------
    def draw_terms(self, ansatz: Ansatz, S, size: int) -> np.ndarray:
        """Indices of the tuples selected by `size` queries (no measurement)."""
        t = self.table(ansatz, S)
        u = self.rng.random(size)
        return np.minimum(np.searchsorted(t.cdf, u, side="right"), len(t.weights) - 1)

    def _mean(self, t: TermTable, i: int, w: int, angles: np.ndarray) -> float:
        key = (angles.tobytes(), t.S)
        if key != self._memo_key:
            self._memo_key = key
            self._memo = {}
        m = self._memo.get((i, w))
        if m is None:
            m = word_mean(t.words[i][w], angles)
            self._memo[(i, w)] = m
        return m

    def sample(self, ansatz: Ansatz, theta, S=(), size: int = 1) -> np.ndarray:
        angles = ansatz.angles(check_point(ansatz, theta))
        t = self.table(ansatz, S)
        k = t.order
        self._counts[k] += size
        if t.norm == 0:
            return np.zeros(size)
        rng = self.rng
        if size == 1:
            i = int(np.searchsorted(t.cdf, rng.random(), side="right"))
            i = min(i, len(t.weights) - 1)
            w = int(rng.integers(len(t.words[i]))) if k >= 2 else 0
            m = self._mean(t, i, w, angles)
            sgn = t.words[i][w].sign
            up = rng.random() < 0.5 * (1.0 + m)
            return np.array([t.norm * sgn * (1.0 if up else -1.0)])
        idx = np.minimum(np.searchsorted(t.cdf, rng.random(size), side="right"), len(t.weights) - 1)
        nw = 1 << max(k - 1, 0)
        wi = rng.integers(nw, size=size) if k >= 2 else np.zeros(size, dtype=np.int64)
        m = np.empty(size)
        sgn = np.empty(size)
        for (i, w) in set(zip(idx.tolist(), wi.tolist())):
            sel = (idx == i) & (wi == w)
            m[sel] = self._mean(t, i, w, angles)
            sgn[sel] = t.words[i][w].sign
        up = rng.random(size) < 0.5 * (1.0 + m)
        return t.norm * sgn * np.where(up, 1.0, -1.0)

    def query(self, ansatz: Ansatz, theta, S=()) -> float:
        return float(self.sample(ansatz, theta, S, 1)[0])

    def query_count(self) -> Ledger:
        return Ledger(tuple(self._counts))

    def norm(self, ansatz: Ansatz, S) -> float:
        """The output magnitude C for coordinate multiset S."""
        return self.table(ansatz, S).norm


def query(o: SamplingOracle, ansatz: Ansatz, theta, S=()) -> float:
    return o.query(ansatz, theta, S)


def query_count(o: SamplingOracle) -> Ledger:
    return o.query_count()
