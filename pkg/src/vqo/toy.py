"""The hard instance family H_v = -sum_i [sin(pi/4 + v_i d) X_i + cos(pi/4 + v_i d) Z_i].

d = sqrt(45 eps / n) with eps <= 0.01 n, v in {-1, +1}^n.  Under the toy ansatz
(one Y pulse per qubit, offset pi/4) qubit i points along
sin(pi/4 + theta_i) x + cos(pi/4 + theta_i) z, so f(theta) = -sum cos(theta_i - d v_i).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numba
import numpy as np

from .ansatz import Ansatz, FeasibleSet, inf_box
from .hadamard import Circuit, Insertion
from .optimizers import ConfigError, OptimizerConfig, RunTrace, zo_parameters
from .pauli import ObservableSum, PauliString
from .statevector import StateVector, expectation

QUARTER = math.pi / 4


@dataclass(frozen=True)
class ToyInstance:
    n: int
    eps: float
    v: tuple
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(int(a) for a in self.v))
        if len(self.v) != self.n or set(self.v) - {-1, 1}:
            raise ConfigError("v must be a vector of n signs")
        if not 0 < self.eps <= 0.01 * self.n + 1e-15:
            raise ConfigError(f"eps must lie in (0, 0.01 n]; got {self.eps} at n={self.n}")

    @property
    def delta(self) -> float:
        return toy_delta(self.n, self.eps)

    @property
    def varr(self) -> np.ndarray:
        return np.array(self.v, dtype=float)

    @property
    def optimum(self) -> np.ndarray:
        return self.delta * self.varr

    @property
    def E(self) -> float:
        return math.sqrt(2) * self.n * math.cos(self.delta)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "eps": self.eps, "delta": self.delta,
                           "v": list(self.v), "seed": self.seed})

    @classmethod
    def from_json(cls, text: str) -> "ToyInstance":
        d = json.loads(text)
        inst = cls(d["n"], d["eps"], tuple(d["v"]), d.get("seed"))
        if "delta" in d and abs(d["delta"] - inst.delta) > 1e-12:
            raise ConfigError("stored delta disagrees with n and eps")
        return inst


def toy_delta(n: int, eps: float) -> float:
    return math.sqrt(45.0 * eps / n)


def toy_observable(v, delta: float) -> ObservableSum:
    n = len(v)
    terms = []
    for i, vi in enumerate(v):
        a = QUARTER + vi * delta
        terms.append((math.sin(a), PauliString.single(n, i, "X", phase=2)))
        terms.append((math.cos(a), PauliString.single(n, i, "Z", phase=2)))
    return ObservableSum(n, terms)


def build_instance(n: int, eps: float, v, seed=None):
    inst = ToyInstance(n, eps, tuple(v), seed)
    return inst, toy_observable(inst.v, inst.delta)


def random_instance(n: int, eps: float, rng: np.random.Generator, seed=None):
    v = rng.choice(np.array([-1, 1]), size=n)
    return build_instance(n, eps, v, seed)


def build_toy_ansatz(n: int) -> Ansatz:
    pulses = [ObservableSum(n, [(1.0, PauliString.single(n, j, "Y"))]) for j in range(n)]
    return Ansatz(n, "0" * n, tuple(pulses), (QUARTER,) * n)


def feasible_set(inst: ToyInstance) -> FeasibleSet:
    return inf_box(inst.n, inst.delta)


def closed_form_objective(theta, inst: ToyInstance) -> float:
    theta = np.asarray(theta, dtype=float)
    return float(-np.sum(np.cos(theta - inst.optimum)))


def closed_form_gradient(theta, inst: ToyInstance) -> np.ndarray:
    return np.sin(np.asarray(theta, dtype=float) - inst.optimum)


def closed_form_hessian_diag(theta, inst: ToyInstance) -> np.ndarray:
    return np.cos(np.asarray(theta, dtype=float) - inst.optimum)


def suboptimality(theta, inst: ToyInstance) -> float:
    return closed_form_objective(theta, inst) + inst.n


def strong_convexity_constants(inst: ToyInstance) -> tuple:
    """(lam1, lam2) valid on B_inf(delta): the Hessian diagonal is >= cos(2 delta)."""
    h = math.cos(2 * inst.delta)
    return h / inst.n, h


def polarization(theta) -> np.ndarray:
    """Bloch vectors (x, y, z) of the toy product state, one row per qubit."""
    a = QUARTER + np.asarray(theta, dtype=float)
    return np.stack([np.sin(a), np.zeros_like(a), np.cos(a)], axis=1)


def bloch_energy(r: np.ndarray, v, delta: float) -> float:
    """tr[H_v rho] = -sum_i r_i . n(v_i delta) for a product state."""
    a = QUARTER + delta * np.asarray(v, dtype=float)
    return float(-np.sum(r[:, 0] * np.sin(a) + r[:, 2] * np.cos(a)))


# packing ------------------------------------------------------------------------------

@dataclass(frozen=True)
class PackingSet:
    vectors: np.ndarray
    min_distance: int
    seed: int

    def __len__(self):
        return len(self.vectors)

    @property
    def n(self) -> int:
        return self.vectors.shape[1]

    def beta(self, delta: float) -> float:
        if len(self.vectors) < 2:
            return math.inf
        return 2.0 * self.min_distance * (1.0 - math.cos(delta))


def hamming(a, b) -> int:
    return int(np.count_nonzero(np.asarray(a) != np.asarray(b)))


class PackingError(RuntimeError):
    pass


def _greedy(n: int, need: int, dmin: int, rng: np.random.Generator) -> np.ndarray:
    if n <= 20:
        order = rng.permutation(1 << n)
        cands = (order[:, None] >> np.arange(n - 1, -1, -1)) & 1
    else:
        cands = rng.integers(0, 2, size=(200 * need, n))
    kept = []
    for c in cands:
        if all(np.count_nonzero(c != k) >= dmin for k in kept):
            kept.append(c)
            if len(kept) >= need:
                break
    return 2 * np.array(kept, dtype=int) - 1


def gv_packing(n: int, seed: int = 0) -> PackingSet:
    """Seeded greedy Gilbert-Varshamov packing: distance >= ceil(n/4), size >= ceil(e^(n/8))."""
    if n < 8:
        raise ConfigError("the packing construction needs n >= 8")
    need = math.ceil(math.exp(n / 8))
    dmin = math.ceil(n / 4)
    for attempt in range(10):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(attempt,))))
        V = _greedy(n, need, dmin, rng)
        if len(V) >= need:
            d = min(hamming(a, b) for i, a in enumerate(V) for b in V[i + 1:])
            assert d >= dmin and len({tuple(r) for r in V}) == len(V)
            return PackingSet(V, d, seed)
    raise PackingError(f"greedy search found fewer than {need} vectors")


def semimetric(v, w, delta: float) -> float:
    return 2.0 * hamming(v, w) * (1.0 - math.cos(delta))


def semimetric_bruteforce(v, w, delta: float) -> float:
    """lambda_min(H_v + H_w) + 2n from per-qubit 2x2 blocks."""
    X = np.array([[0.0, 1.0], [1.0, 0.0]])
    Z = np.array([[1.0, 0.0], [0.0, -1.0]])
    total = 0.0
    for a, b in zip(v, w):
        M = -(math.sin(QUARTER + a * delta) + math.sin(QUARTER + b * delta)) * X \
            - (math.cos(QUARTER + a * delta) + math.cos(QUARTER + b * delta)) * Z
        total += np.linalg.eigvalsh(M)[0]
    return float(total + 2 * len(v))


def identify_v(point, V, delta: float) -> np.ndarray:
    """argmin over V of the energy of `point` (a toy parameter vector or a StateVector).

    Ties resolve to the lowest index."""
    vecs = V.vectors if isinstance(V, PackingSet) else np.asarray(V)
    if isinstance(point, StateVector):
        energies = [expectation(point, toy_observable(v, delta)) for v in vecs]
    else:
        theta = np.asarray(point, dtype=float)
        energies = [float(-np.sum(np.cos(theta - delta * v))) for v in vecs]
    return vecs[int(np.argmin(energies))]


def vicinity_member(theta, inst: ToyInstance, c: float) -> bool:
    if not c > 0:
        raise ValueError("c must be positive")
    return suboptimality(theta, inst) <= c * inst.eps


def family_suboptimality(theta, delta: float) -> float:
    """min over all v of f_v(theta) + n: the distance to the family's optimum set."""
    theta = np.asarray(theta, dtype=float)
    return float(np.sum(1.0 - np.cos(np.abs(theta) - delta)))


def vicinity_transfer_bound(k: float) -> float:
    return k + 30 * math.sqrt(2 * k) + 90


# the coin-flip oracle -----------------------------------------------------------------

def heads_probability(inst: ToyInstance, i: int) -> float:
    return 0.5 * (1.0 + inst.v[i] * math.tan(inst.delta))


class CoinFlipOracle:
    """Flip a biased coin for qubit i, then measure -X_i (heads) or -Z_i (tails).

    Identical in distribution to the generic zeroth-order query on H_v."""

    def __init__(self, inst: ToyInstance, ansatz: Ansatz, rng: np.random.Generator):
        self.inst = inst
        self.ansatz = ansatz
        self.rng = rng
        self.queries = 0
        n = inst.n
        self._ph = np.array([heads_probability(inst, i) for i in range(n)])
        self._circ = {}
        for i in range(n):
            for letter in "XZ":
                P = PauliString.single(n, i, letter, phase=2)
                self._circ[i, letter] = Circuit(ansatz, [Insertion(ansatz.p, P, 1)])

    def draw(self, theta):
        """(qubit, heads, value) for one query."""
        self.queries += 1
        angles = self.ansatz.angles(theta)
        rng = self.rng
        i = int(rng.integers(0, self.inst.n))
        heads = bool(rng.random() < self._ph[i])
        m = self._circ[i, "X" if heads else "Z"].overlap(angles).real
        up = rng.random() < 0.5 * (1.0 + m)
        return i, heads, self.inst.E * (1.0 if up else -1.0)

    def __call__(self, theta) -> float:
        return self.draw(theta)[2]


def coinflip_query(inst: ToyInstance, ansatz: Ansatz, theta, rng: np.random.Generator) -> float:
    return CoinFlipOracle(inst, ansatz, rng)(theta)


@numba.njit(cache=True)
def _zo_kernel(x, lo, hi, ph, E, ds, eta0, lam, T, rng_dir, rng_or):
    p = x.shape[0]
    out = np.zeros(p)
    for t in range(1, T + 1):
        if lam > 0.0:
            eta = 2.0 / (lam * (t + 1))
            w = 2.0 * t / (T * (T + 1.0))
        else:
            eta = eta0
            w = 1.0 / T
        for a in range(p):
            out[a] += w * x[a]
        u = rng_dir.standard_normal(p)
        s = 0.0
        for a in range(p):
            s += u[a] * u[a]
        nrm = math.sqrt(s)
        for a in range(p):
            u[a] = u[a] / nrm
        i = rng_or.integers(0, p)
        ang = QUARTER + x[i] + ds * u[i]
        if rng_or.random() < ph[i]:
            m = -math.sin(ang)
        else:
            m = -math.cos(ang)
        F = E if rng_or.random() < 0.5 * (1.0 + m) else -E
        c = eta * (p / ds) * F
        for a in range(p):
            y = x[a] - c * u[a]
            x[a] = min(max(y, lo[a]), hi[a])
    return out, x


def zo_spherical_toy(inst: ToyInstance, cfg: OptimizerConfig, rng_dir: np.random.Generator,
                     rng_oracle: np.random.Generator) -> RunTrace:
    """zo_spherical on B_inf(delta) with the coin-flip oracle, compiled.

    Consumes both streams exactly as zo_spherical(CoinFlipOracle(...)) does, so
    the two agree sample path by sample path.  Iterates are not recorded."""
    cfg.validate()
    if cfg.method != "zo":
        raise ConfigError("zo_spherical_toy runs the zo method only")
    X = feasible_set(inst)
    par = zo_parameters(X, cfg)
    Xi = par["iter_set"]
    lo = Xi.center - Xi.radius
    hi = Xi.center + Xi.radius
    ph = np.array([heads_probability(inst, i) for i in range(inst.n)])
    lam = par["lam"] if par["lam"] is not None else 0.0
    eta0 = par["eta"] if par["eta"] is not None else 0.0
    T = int(cfg.T)
    x = np.clip(X.center.copy(), lo, hi)
    if T == 0:
        return RunTrace(x, 0, None, suboptimality(x, inst), False, {"delta": par["delta"]})
    out, _ = _zo_kernel(x, lo, hi, ph, inst.E, par["delta"], eta0, lam, T, rng_dir, rng_oracle)
    return RunTrace(out, T, None, suboptimality(out, inst), False, {"delta": par["delta"]})
