"""Unbiased full-gradient estimators built from first-order queries."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ansatz import Ansatz
from .oracle import GammaTable, SamplingOracle


@dataclass
class GradientSample:
    vector: np.ndarray
    queries_used: int


def estimate_grad_l1(o: SamplingOracle, ansatz: Ansatz, theta) -> GradientSample:
    """One query: pick j with probability Gamma_j/|Gamma|_1 and rescale.

    The single nonzero entry always has magnitude |Gamma|_1."""
    G = o.gamma(ansatz).Gamma
    total = float(G.sum())
    g = np.zeros(ansatz.p)
    if total == 0:
        return GradientSample(g, 0)
    cdf = np.cumsum(G) / total
    j = min(int(np.searchsorted(cdf, o.rng.random(), side="right")), len(G) - 1)
    y = o.query(ansatz, theta, (j,))
    g[j] = total / G[j] * y
    return GradientSample(g, 1)


def l2_sample_counts(table: GammaTable) -> np.ndarray:
    """N_j = ceil(p Gamma_j^2/|Gamma|_2^2 * ln(4 p^2 |Gamma|_inf^2/|Gamma|_2^2))."""
    G = table.Gamma
    p = len(G)
    n2 = float(np.dot(G, G))
    if n2 == 0:
        return np.zeros(p, dtype=int)
    log_term = math.log(4 * p * p * float(G.max()) ** 2 / n2)
    return np.array([math.ceil(p * g * g / n2 * log_term) for g in G], dtype=int)


def estimate_grad_l2(o: SamplingOracle, ansatz: Ansatz, theta) -> GradientSample:
    """Average N_j first-order queries per coordinate."""
    N = l2_sample_counts(o.gamma(ansatz))
    g = np.zeros(ansatz.p)
    for j, nj in enumerate(N):
        if nj:
            g[j] = o.sample(ansatz, theta, (j,), int(nj)).mean()
    return GradientSample(g, int(N.sum()))


def l1_source(o: SamplingOracle, ansatz: Ansatz):
    return lambda x: estimate_grad_l1(o, ansatz, x)


def l2_source(o: SamplingOracle, ansatz: Ansatz):
    return lambda x: estimate_grad_l2(o, ansatz, x)


def value_source(o: SamplingOracle, ansatz: Ansatz):
    return lambda x: o.query(ansatz, x, ())


def exact_source(grad):
    """Noise-free source for deterministic checks; costs no queries."""
    return lambda x: GradientSample(np.asarray(grad(x), dtype=float), 0)
