import math

import numpy as np
import pytest

from vqo.ansatz import parse_ansatz
from vqo.estimators import (estimate_grad_l1, estimate_grad_l2, exact_source, l1_source,
                            l2_sample_counts, l2_source, value_source)
from vqo.hadamard import exact_query_mean
from vqo.oracle import GammaTable, SamplingOracle
from vqo.pauli import ObservableSum
from vqo.toy import build_instance, build_toy_ansatz, closed_form_gradient

from conftest import random_ansatz, random_observable


def toy(n, eps, v, seed=0):
    inst, H = build_instance(n, eps, v)
    return inst, build_toy_ansatz(n), SamplingOracle(H, seed=seed)


def test_l1_one_hot_with_fixed_magnitude():
    inst, A, o = toy(4, 0.025, [1, -1, 1, 1])
    assert inst.delta == pytest.approx(0.53033, abs=1e-5)
    G1 = o.gamma(A).Gamma.sum()
    assert G1 == pytest.approx(4.87983, abs=1e-5)
    for _ in range(200):
        g = estimate_grad_l1(o, A, np.full(4, 0.1))
        assert g.queries_used == 1
        assert np.count_nonzero(g.vector) == 1
        assert np.linalg.norm(g.vector, 1) == pytest.approx(G1, rel=1e-14)
        assert np.linalg.norm(g.vector, 2) == pytest.approx(G1, rel=1e-14)
    assert o.query_count().total == 200


def test_l1_single_pulse_mean(rng):
    A = parse_ansatz("2 1 start=00\n0.8 XY\n")
    H = ObservableSum(2, [(1.0, "ZI"), (0.4, "IX")])
    o = SamplingOracle(H, seed=4)
    th = np.array([0.7])
    M = 100_000
    vals = np.array([estimate_grad_l1(o, A, th).vector[0] for _ in range(M)])
    G = o.gamma(A).Gamma[0]
    assert set(np.round(np.abs(vals), 12)) == {round(G, 12)}
    assert abs(vals.mean() - exact_query_mean(A, H, th, (0,))) <= 4 * G / math.sqrt(M)


def test_zero_gamma_estimators():
    A = parse_ansatz("2 1 start=00\n1.0 YI\n")
    o = SamplingOracle(ObservableSum(2, [(1.0, "IZ")]), seed=0)
    g1 = estimate_grad_l1(o, A, [0.3])
    g2 = estimate_grad_l2(o, A, [0.3])
    assert g1.queries_used == 0 and g2.queries_used == 0
    assert not g1.vector.any() and not g2.vector.any()
    assert o.query_count().total == 0


def test_l2_counts_equal_gammas():
    G = np.full(4, 1.3)
    t = GammaTable((), G, 1.0, np.ones(4))
    N = l2_sample_counts(t)
    assert np.all(N == math.ceil(math.log(16))) and N.sum() == 12
    assert l2_sample_counts(GammaTable((), np.array([2.0]), 1.0, np.ones(1))).tolist() == [2]


def test_l2_counts_formula_and_total_bound(rng):
    for _ in range(50):
        p = int(rng.integers(1, 12))
        G = rng.uniform(0.01, 3, size=p)
        N = l2_sample_counts(GammaTable((), G, 1.0, np.ones(p)))
        n2 = float(G @ G)
        L = math.log(4 * p * p * G.max() ** 2 / n2)
        ref = [math.ceil(p * g * g / n2 * L) for g in G]
        assert N.tolist() == ref
        assert N.sum() <= p * (1 + L)


def test_l2_query_accounting_and_p1_mean():
    A = parse_ansatz("1 1 start=0\n1.0 Y\n")
    H = ObservableSum(1, [(1.0, "Z")])
    o = SamplingOracle(H, seed=8)
    N = l2_sample_counts(o.gamma(A))
    assert N.tolist() == [2]
    th = [0.9]
    M = 50_000
    vals = np.array([estimate_grad_l2(o, A, th).vector[0] for _ in range(M)])
    assert o.query_count().total == M * N.sum()
    # each call averages N_1 samples of +-1, so the variance per call is (1 - m^2)/N_1
    ex = -math.sin(0.9)
    assert abs(vals.mean() - ex) <= 4 * math.sqrt(1 / (2 * M))


def test_unbiased_gradients_at_random_points(rng):
    n = 3
    inst, A, o = toy(n, 0.03, [1, -1, 1], seed=11)
    M = 20_000
    for _ in range(3):
        th = rng.uniform(-inst.delta, inst.delta, size=n)
        exact = closed_form_gradient(th, inst)
        for est in (estimate_grad_l1, estimate_grad_l2):
            V = np.array([est(o, A, th).vector for _ in range(M)])
            se = V.std(axis=0, ddof=1) / math.sqrt(M)
            assert np.all(np.abs(V.mean(axis=0) - exact) <= 4 * se + 1e-12)


def test_sources(rng):
    inst, A, o = toy(3, 0.03, [1, 1, -1], seed=1)
    x = np.zeros(3)
    assert l1_source(o, A)(x).queries_used == 1
    assert l2_source(o, A)(x).queries_used == int(l2_sample_counts(o.gamma(A)).sum())
    assert abs(value_source(o, A)(x)) == pytest.approx(inst.E)
    s = exact_source(lambda y: closed_form_gradient(y, inst))(x)
    assert s.queries_used == 0
    np.testing.assert_allclose(s.vector, closed_form_gradient(x, inst))


def test_general_ansatz_l1_support(rng):
    A = random_ansatz(rng, 3, 4)
    H = random_observable(rng, 3, 3)
    o = SamplingOracle(H, seed=2)
    for _ in range(50):
        g = estimate_grad_l1(o, A, rng.uniform(-1, 1, size=4))
        assert np.count_nonzero(g.vector) <= 1
