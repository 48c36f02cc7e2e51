import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vqo.ansatz import (Ansatz, FeasibleSet, check_point, inf_box, lightcone_support,
                        parse_ansatz, prepare)
from vqo.hadamard import UnsupportedOrder, exact_query_mean
from vqo.oracle import build_gamma
from vqo.pauli import ObservableSum, PauliString, pauli
from vqo.statevector import expectation
from vqo.toy import build_instance, build_toy_ansatz, closed_form_objective

from conftest import dense_derivative, dense_f, dense_state, random_ansatz, random_observable

TEXT = "3 2 start=010\n1.0 YII + 0.5 XXI\n0.7 -IZZ\n"


def test_text_round_trip():
    A = parse_ansatz(TEXT)
    assert (A.n, A.p, A.start) == (3, 2, "010")
    assert len(A.pulses[0].terms) == 2
    assert parse_ansatz(A.to_text()) == A
    T = build_toy_ansatz(3)
    B = parse_ansatz(T.to_text())
    assert B == T and B.offsets == (math.pi / 4,) * 3


@pytest.mark.parametrize("bad", [
    "", "3 2\n1.0 YII\n1.0 YII", "3 2 start=01\n1.0 YII\n1.0 YII",
    "3 2 start=010\n1.0 YII", "3 1 start=010 foo=1\n1.0 YII",
    "3 1 start=010 offsets=0.1,0.2\n1.0 YII",
])
def test_parse_errors(bad):
    with pytest.raises(ValueError):
        parse_ansatz(bad)


def test_check_point_length():
    A = parse_ansatz(TEXT)
    with pytest.raises(ValueError):
        check_point(A, [0.1])
    with pytest.raises(ValueError):
        prepare(A, np.zeros(3))


def test_toy_prepare_examples():
    n = 4
    A = build_toy_ansatz(n)
    s = prepare(A, np.zeros(n))
    one = np.array([math.cos(math.pi / 8), math.sin(math.pi / 8)])
    ref = one
    for _ in range(n - 1):
        ref = np.kron(ref, one)
    np.testing.assert_allclose(s.amplitudes, ref, atol=1e-14)
    inst, H = build_instance(n, 0.04, [1, -1, 1, -1])
    assert expectation(prepare(A, inst.optimum), H) == pytest.approx(-n, abs=1e-12)


def test_single_pulse_zero_angle():
    A = parse_ansatz("2 1 start=10\n0.3 XY + 1.0 ZZ\n")
    np.testing.assert_array_equal(prepare(A, [0.0]).amplitudes, dense_state(A, [0.0]))
    assert prepare(A, [0.0]).amplitudes[2] == 1


def test_prepare_matches_dense(rng):
    for _ in range(10):
        A = random_ansatz(rng, 3, 4)
        th = rng.uniform(-3, 3, size=4)
        np.testing.assert_allclose(prepare(A, th).amplitudes, dense_state(A, th), atol=1e-12)


def test_exact_query_mean_toy_examples():
    n, eps = 4, 0.04
    v = [1, -1, -1, 1]
    inst, H = build_instance(n, eps, v)
    A = build_toy_ansatz(n)
    d = inst.delta
    assert d == pytest.approx(0.67082, abs=1e-5)
    assert exact_query_mean(A, H, np.zeros(n)) == pytest.approx(-n * math.cos(d), abs=1e-12)
    assert exact_query_mean(A, H, np.zeros(n)) == pytest.approx(-3.13325, abs=1e-5)
    for i in range(n):
        g = exact_query_mean(A, H, np.zeros(n), (i,))
        assert g == pytest.approx(-v[i] * math.sin(d), abs=1e-12)
        assert abs(g) == pytest.approx(0.621, abs=1e-3)
        assert exact_query_mean(A, H, inst.optimum, (i, i)) == pytest.approx(1.0, abs=1e-12)
    assert exact_query_mean(A, H, inst.optimum, (0, 1)) == pytest.approx(0.0, abs=1e-12)
    assert exact_query_mean(A, H, inst.optimum, (0, 0, 0)) == pytest.approx(0.0, abs=1e-12)
    th = np.array([0.1, -0.2, 0.3, 0.05])
    assert exact_query_mean(A, H, th, (2, 2, 2)) == pytest.approx(-math.sin(th[2] - d * v[2]), abs=1e-12)


def test_order_cap_and_indices():
    A = parse_ansatz(TEXT)
    H = ObservableSum(3, [(1.0, "ZZZ")])
    with pytest.raises(UnsupportedOrder):
        exact_query_mean(A, H, [0.1, 0.2], (0, 0, 1, 1))
    with pytest.raises(IndexError):
        exact_query_mean(A, H, [0.1, 0.2], (2,))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4), st.integers(1, 4))
def test_derivatives_match_dense_commutators(seed, n, p):
    rng = np.random.default_rng(seed)
    A = random_ansatz(rng, n, p)
    H = random_observable(rng, n, 3)
    th = rng.uniform(-math.pi, math.pi, size=p)
    assert exact_query_mean(A, H, th) == pytest.approx(dense_f(A, H, th), abs=1e-10)
    for S in [(int(rng.integers(p)),), tuple(rng.integers(p, size=2)), tuple(rng.integers(p, size=3))]:
        ref = dense_derivative(A, H, th, S)
        assert exact_query_mean(A, H, th, S) == pytest.approx(ref, abs=1e-10)


def test_first_derivative_vs_finite_difference(rng):
    h = 1e-4
    for _ in range(8):
        n = int(rng.integers(2, 7))
        p = int(rng.integers(1, 5))
        A = random_ansatz(rng, n, p)
        H = random_observable(rng, n, 4)
        th = rng.uniform(-math.pi, math.pi, size=p)
        for j in range(p):
            e = np.zeros(p)
            e[j] = h
            fd = (exact_query_mean(A, H, th + e) - exact_query_mean(A, H, th - e)) / (2 * h)
            ex = exact_query_mean(A, H, th, (j,))
            assert abs(ex - fd) <= max(1e-6 * abs(ex), 1e-7)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_hessian_symmetry_and_gamma_bound(seed):
    rng = np.random.default_rng(seed)
    n, p = 3, 3
    A = random_ansatz(rng, n, p)
    H = random_observable(rng, n, 3)
    th = rng.uniform(-math.pi, math.pi, size=p)
    G = build_gamma(A, H).Gamma
    for j in range(p):
        assert abs(exact_query_mean(A, H, th, (j,))) <= G[j] + 1e-12
        for k in range(p):
            # the engine sorts S, so compare against the unsorted dense route too
            a = exact_query_mean(A, H, th, (k, j))
            b = exact_query_mean(A, H, th, (j, k))
            assert a == pytest.approx(b, abs=1e-10)
            assert a == pytest.approx(dense_derivative(A, H, th, (k, j)), abs=1e-10)
            assert a == pytest.approx(dense_derivative(A, H, th, (j, k)), abs=1e-10)


def test_lightcone_examples():
    T = build_toy_ansatz(4)
    assert lightcone_support(T, 1, PauliString.single(4, 1, "Y")) == {1}
    A = parse_ansatz("2 2 start=00\n1.0 YI\n1.0 XX\n")
    assert lightcone_support(A, 0, pauli("YI")) == {0, 1}
    assert lightcone_support(A, 0, pauli("II")) == set()
    assert lightcone_support(A, 1, pauli("XX")) == {0, 1}
    with pytest.raises(IndexError):
        lightcone_support(A, 2, pauli("XI"))


def test_lightcone_overapproximates(rng):
    """Commutator terms that the light cone prunes have zero expectation."""
    for _ in range(10):
        n, p = 4, 4
        A = random_ansatz(rng, n, p, max_terms=1)
        H = random_observable(rng, n, 3)
        th = rng.uniform(-3, 3, size=p)
        gam = build_gamma(A, H)
        for j in range(p):
            kept = {l for _, l, _ in gam.entries[j]}
            for l, (alpha, P) in enumerate(H.terms):
                if l in kept:
                    continue
                single = ObservableSum(n, [(alpha, P)])
                assert abs(dense_derivative(A, single, th, (j,))) <= 1e-12


def test_feasible_set_radii():
    p = 4
    box = inf_box(p, 0.5)
    assert (box.R1, box.R2, box.r2) == pytest.approx((2.0, 1.0, 0.5))
    ball = FeasibleSet("euclidean-ball", np.zeros(p), 2.0)
    assert (ball.R1, ball.R2, ball.r2) == pytest.approx((4.0, 2.0, 2.0))
    one = FeasibleSet("one-ball", np.ones(p), 2.0)
    assert (one.R1, one.R2, one.r2) == pytest.approx((2.0, 2.0, 1.0))
    assert box.contains([0.5, -0.5, 0, 0]) and not box.contains([0.6, 0, 0, 0])
    assert one.contains([2, 1, 1, 1]) and not one.contains([2, 2, 2, 1])
    with pytest.raises(ValueError):
        FeasibleSet("inf-box", np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        FeasibleSet("simplex", np.zeros(2), 1.0)


def test_ansatz_validation():
    G = ObservableSum(2, [(1.0, "XI")])
    with pytest.raises(ValueError):
        Ansatz(2, "00", ())
    with pytest.raises(ValueError):
        Ansatz(2, "0", (G,))
    with pytest.raises(ValueError):
        Ansatz(3, "000", (G,))
    with pytest.raises(ValueError):
        Ansatz(2, "00", (G,), (0.1, 0.2))


def test_toy_statevector_matches_closed_form(rng):
    for n in (1, 3, 8):
        inst, H = build_instance(n, 0.01 * n, rng.choice([-1, 1], size=n))
        A = build_toy_ansatz(n)
        th = rng.uniform(-1, 1, size=n)
        assert expectation(prepare(A, th), H) == pytest.approx(closed_form_objective(th, inst), abs=1e-10)
