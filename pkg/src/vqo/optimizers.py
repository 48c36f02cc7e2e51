"""Projected SGD, l1 stochastic mirror descent and a one-point zeroth-order method.

Gradient sources are callables x -> GradientSample; zeroth-order sources are
callables x -> float and cost one query per call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .ansatz import FeasibleSet
from .estimators import GradientSample

METHODS = ("sgd", "sgd-sc", "smd", "smd-sc", "zo")
ZO_SCHEDULES = ("flaxman", "strongly-convex")


class ConfigError(ValueError):
    pass


class NumericError(ArithmeticError):
    pass


@dataclass
class OptimizerConfig:
    method: str
    T: int
    R2: float | None = None
    R1: float | None = None
    r2: float | None = None
    lam2: float | None = None
    lam1: float | None = None
    G2: float | None = None
    Ginf: float | None = None
    E: float | None = None
    seed: int = 0
    # smd-sc epochs; zero-order schedule constants
    smd_epochs: int = 4
    zo_schedule: str = "flaxman"
    zo_delta_scale: float = 1.0
    zo_eta_scale: float = 1.0
    zo_radius: float | None = None
    record_iterates: bool = True

    def validate(self) -> "OptimizerConfig":
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if int(self.T) != self.T or self.T < 0:
            raise ConfigError("T must be a non-negative integer")
        for name in ("R2", "R1", "r2", "G2", "Ginf", "E", "zo_radius"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be positive")
        sc = self.method.endswith("-sc") or (self.method == "zo" and self.zo_schedule == "strongly-convex")
        lam = self.lam1 if self.method == "smd-sc" else self.lam2
        if sc:
            if lam is None or not lam > 0:
                name = "lam1" if self.method == "smd-sc" else "lam2"
                raise ConfigError(f"{self.method} needs a positive {name}")
        elif self.lam1 is not None or self.lam2 is not None:
            raise ConfigError(f"{self.method} takes no strong-convexity constant")
        if self.method == "zo" and self.zo_schedule not in ZO_SCHEDULES:
            raise ConfigError(f"unknown zero-order schedule {self.zo_schedule!r}")
        if self.smd_epochs < 1:
            raise ConfigError("smd_epochs must be at least 1")
        return self

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        names = {f.name for f in fields(cls)}
        extra = set(d) - names
        if extra:
            raise ConfigError(f"unknown optimizer keys {sorted(extra)}")
        return cls(**d)


@dataclass
class RunTrace:
    output: np.ndarray
    queries: int
    iterates: np.ndarray | None = None
    final_error: float | None = None
    start_projected: bool = False
    info: dict = field(default_factory=dict)


# projections ------------------------------------------------------------------

def _project_l1(v: np.ndarray, R: float) -> np.ndarray:
    a = np.abs(v)
    if a.sum() <= R:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, len(u) + 1)
    rho = np.nonzero(u * k > css - R)[0][-1]
    tau = (css[rho] - R) / (rho + 1.0)
    return np.sign(v) * np.maximum(a - tau, 0.0)


def project(X: FeasibleSet, x) -> np.ndarray:
    """Euclidean projection onto X."""
    x = np.asarray(x, dtype=float)
    d = x - X.center
    if X.kind == "inf-box":
        return X.center + np.clip(d, -X.radius, X.radius)
    if X.kind == "euclidean-ball":
        nrm = np.linalg.norm(d)
        return x.copy() if nrm <= X.radius else X.center + d * (X.radius / nrm)
    return X.center + _project_l1(d, X.radius)


@dataclass(frozen=True)
class MirrorSetup:
    """Phi(x) = (e ln p) sum |x_i|^(1 + 1/ln p) on the unit 1-ball, p >= 3."""

    p: int

    def __post_init__(self):
        if self.p < 3:
            raise ConfigError("the l1 mirror map needs p >= 3")

    @property
    def a(self) -> float:
        return math.e * math.log(self.p)

    @property
    def q(self) -> float:
        return 1.0 + 1.0 / math.log(self.p)

    def phi(self, x) -> float:
        return float(self.a * np.sum(np.abs(x) ** self.q))

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.a * self.q * np.sign(x) * np.abs(x) ** (self.q - 1.0)

    def grad_inv(self, g) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        return np.sign(g) * (np.abs(g) / (self.a * self.q)) ** (1.0 / (self.q - 1.0))

    def divergence(self, x, y) -> float:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.phi(x) - self.phi(y) - float(np.dot(self.grad(y), x - y))

    @property
    def R2sq(self) -> float:
        """max Phi - min Phi over the unit 1-ball."""
        return self.a


BISECT_TOL = 1e-10
BISECT_MAX = 200


def bregman_project(setup: MirrorSetup, X: FeasibleSet, y, box: tuple | None = None) -> np.ndarray:
    """argmin_{x in X} D_Phi(x, y) for inf-box or one-ball X.

    `box` = (lo, hi) adds coordinate bounds to a one-ball constraint."""
    y = np.asarray(y, dtype=float)
    if X.kind == "inf-box":
        return np.clip(y, X.center - X.radius, X.center + X.radius)
    if X.kind != "one-ball":
        raise ConfigError("Bregman projection is implemented for boxes and 1-balls")
    lo, hi = box if box is not None else (-np.inf, np.inf)
    c, R = X.center, X.radius
    x0 = np.clip(y, lo, hi)
    if np.abs(x0 - c).sum() <= R:
        return x0
    gy = setup.grad(y)
    gc = setup.grad(c)

    def solve(mu):
        x = np.where(gy - mu > gc, setup.grad_inv(gy - mu),
                     np.where(gy + mu < gc, setup.grad_inv(gy + mu), c))
        return np.clip(x, lo, hi)

    a, b = 0.0, float(np.max(np.abs(gy - gc)))
    for _ in range(BISECT_MAX):
        mid = 0.5 * (a + b)
        x = solve(mid)
        s = np.abs(x - c).sum()
        if s > R:
            a = mid
        else:
            b = mid
        if b - a <= BISECT_TOL * max(1.0, b):
            x = solve(b)
            s = np.abs(x - c).sum()
            if s <= R * (1 + BISECT_TOL) + BISECT_TOL:
                if s > R:
                    x = c + (x - c) * (R / s)
                return x
    raise NumericError("Bregman projection bisection did not converge")


# helpers --------------------------------------------------------------------------

def _need(cfg, name, fallback=None):
    v = getattr(cfg, name)
    if v is None:
        v = fallback
    if v is None:
        raise ConfigError(f"{cfg.method} needs {name}")
    return v


def _start(X: FeasibleSet, x1):
    x = np.asarray(x1, dtype=float) if x1 is not None else X.center.copy()
    if X.contains(x):
        return x.copy(), False
    return project(X, x), True


def _trace(cfg, out, queries, its, objective, projected=False, **info):
    err = None if objective is None else float(objective(out))
    its = np.array(its) if cfg.record_iterates else None
    return RunTrace(np.asarray(out, dtype=float), int(queries), its, err, projected, info)


# SGD -------------------------------------------------------------------------------

def sgd_fixed(source, X: FeasibleSet, x1, cfg: OptimizerConfig, objective=None) -> RunTrace:
    """Projected SGD with eta = (R2/G2) sqrt(2/T), uniform average of x_1..x_T."""
    cfg.validate()
    T = int(cfg.T)
    R2 = _need(cfg, "R2", X.R2)
    G2 = _need(cfg, "G2")
    x, projected = _start(X, x1)
    if T == 0:
        return _trace(cfg, x, 0, [x], objective, projected)
    eta = R2 / G2 * math.sqrt(2.0 / T)
    total = np.zeros_like(x)
    its, q = [], 0
    for _ in range(T):
        its.append(x)
        total += x
        gs: GradientSample = source(x)
        q += gs.queries_used
        x = project(X, x - eta * gs.vector)
    return _trace(cfg, total / T, q, its, objective, projected,
                  eta=eta, bound=R2 * G2 * math.sqrt(2.0 / T))


def sgd_strongly_convex(source, X: FeasibleSet, x1, cfg: OptimizerConfig, objective=None) -> RunTrace:
    """Projected SGD with eta_s = 2/(lam2 (s+1)); output sum 2s/(T(T+1)) x_s."""
    cfg.validate()
    T = int(cfg.T)
    lam = cfg.lam2
    x, projected = _start(X, x1)
    if T == 0:
        return _trace(cfg, x, 0, [x], objective, projected)
    total = np.zeros_like(x)
    its, q = [], 0
    for s in range(1, T + 1):
        its.append(x)
        total += (2.0 * s / (T * (T + 1.0))) * x
        gs = source(x)
        q += gs.queries_used
        x = project(X, x - (2.0 / (lam * (s + 1))) * gs.vector)
    info = {}
    if cfg.G2 is not None:
        info["bound"] = 2 * cfg.G2 ** 2 / (lam * (T + 1))
    return _trace(cfg, total, q, its, objective, projected, **info)


# mirror descent ----------------------------------------------------------------------

def _smd_run(source, setup, center, radius, T, eta, box, its, x_scale):
    """Plain SMD in coordinates z = (x - center)/radius inside the unit 1-ball.

    Returns (uniform average of x_1..x_T, queries)."""
    unit = FeasibleSet("one-ball", np.zeros(setup.p), 1.0)
    if box is not None:
        zbox = ((box[0] - center) / radius, (box[1] - center) / radius)
    z = np.zeros(setup.p)
    total = np.zeros(setup.p)
    q = 0
    for _ in range(T):
        x = center + radius * z
        its.append(x)
        total += x
        gs = source(x)
        q += gs.queries_used
        w = setup.grad_inv(setup.grad(z) - eta * radius * gs.vector)
        if box is None and x_scale is not None:
            z = bregman_project(setup, x_scale, w)
        else:
            z = bregman_project(setup, unit, w, zbox)
    return total / T, q


def smd_l1(source, X: FeasibleSet, cfg: OptimizerConfig, objective=None) -> RunTrace:
    """SMD with the l1 mirror map after rescaling X into the unit 1-ball.

    Starts at argmin Phi (the center), step eta = sqrt(e ln p)/(R1 Ginf) sqrt(2/T)
    in rescaled units, uniform average output."""
    cfg.validate()
    setup = MirrorSetup(X.p)
    T = int(cfg.T)
    R1 = _need(cfg, "R1", X.R1)
    Ginf = _need(cfg, "Ginf")
    if X.kind == "euclidean-ball":
        raise ConfigError("smd supports inf-box and one-ball feasible sets")
    if T == 0:
        return _trace(cfg, X.center, 0, [X.center], objective)
    # X rescaled: same kind, centered at 0, radius X.radius/R1, inside the unit 1-ball
    Xz = FeasibleSet(X.kind, np.zeros(X.p), X.radius / R1)
    eta = math.sqrt(setup.R2sq) / (R1 * Ginf) * math.sqrt(2.0 / T)
    its = []
    out, q = _smd_run(source, setup, X.center, R1, T, eta, None, its, Xz)
    return _trace(cfg, out, q, its, objective,
                  eta=eta, bound=R1 * Ginf * math.sqrt(2 * math.e * math.log(X.p) / T))


def smd_strongly_convex(source, X: FeasibleSet, cfg: OptimizerConfig, objective=None) -> RunTrace:
    """Epoch restarts of plain SMD.

    Epoch e runs T_e = 2^e T_0 iterations in the 1-ball of radius R_0 2^(-e/2)
    around the previous output, intersected with the box X."""
    cfg.validate()
    setup = MirrorSetup(X.p)
    if X.kind != "inf-box":
        raise ConfigError("smd-sc supports inf-box feasible sets")
    T = int(cfg.T)
    R0 = _need(cfg, "R1", X.R1)
    Ginf = _need(cfg, "Ginf")
    center = X.center.copy()
    if T == 0:
        return _trace(cfg, center, 0, [center], objective)
    E = cfg.smd_epochs
    T0 = max(1, math.ceil(T / (2 ** E - 1)))
    box = (X.center - X.radius, X.center + X.radius)
    its, q, left, e = [], 0, T, 0
    lengths = []
    while left > 0:
        Te = min(left, T0 * 2 ** e)
        Re = R0 * 2 ** (-e / 2)
        eta = math.sqrt(setup.R2sq) / (Re * Ginf) * math.sqrt(2.0 / Te)
        center, qe = _smd_run(source, setup, center, Re, Te, eta, box, its, None)
        center = np.clip(center, box[0], box[1])
        q += qe
        left -= Te
        lengths.append(Te)
        e += 1
    return _trace(cfg, center, q, its, objective, epochs=lengths,
                  bound=16 * Ginf ** 2 / (cfg.lam1 * T))


# zeroth order -----------------------------------------------------------------------------

def zo_parameters(X: FeasibleSet, cfg: OptimizerConfig) -> dict:
    """Smoothing radius, iterate set and step rule for zo_spherical."""
    T = max(int(cfg.T), 1)
    r2 = _need(cfg, "r2", X.r2)
    p = X.p
    if cfg.zo_schedule == "flaxman":
        R2 = _need(cfg, "R2", X.R2)
        E = _need(cfg, "E")
        ds = min(0.5 * r2, cfg.zo_delta_scale * r2 * T ** -0.25)
        shrink = ds / r2
        eta = cfg.zo_eta_scale * R2 * ds / (p * E * math.sqrt(T))
        return dict(delta=ds, iter_set=X.scaled(1.0 - shrink), eta=eta, lam=None)
    ds = _need(cfg, "zo_radius")
    return dict(delta=ds, iter_set=X, eta=None, lam=cfg.lam2)


def zo_spherical(source, X: FeasibleSet, cfg: OptimizerConfig, rng: np.random.Generator,
                 objective=None, x1=None) -> RunTrace:
    """One-point spherical estimator g = (p/delta) F(x + delta u) u.

    'flaxman': delta ~ T^(-1/4), constant eta ~ T^(-3/4), iterates kept in the
    shrunken set so every query stays in X, uniform average.
    'strongly-convex': fixed delta (cfg.zo_radius), eta_t = 2/(lam2 (t+1)),
    iterates in X, weighted average; queries may leave X by at most delta."""
    cfg.validate()
    if X.r2 <= 0:
        raise ConfigError("feasible set must contain a Euclidean ball")
    par = zo_parameters(X, cfg)
    T = int(cfg.T)
    ds, Xi = par["delta"], par["iter_set"]
    x = project(Xi, X.center if x1 is None else x1)
    if T == 0:
        return _trace(cfg, x, 0, [x], objective)
    p = X.p
    total = np.zeros(p)
    its = []
    for t in range(1, T + 1):
        its.append(x)
        if par["lam"] is None:
            eta = par["eta"]
            total += (1.0 / T) * x
        else:
            eta = 2.0 / (par["lam"] * (t + 1))
            total += (2.0 * t / (T * (T + 1.0))) * x
        u = rng.standard_normal(p)
        u = u / math.sqrt(float(np.sum(u * u)))
        F = source(x + ds * u)
        x = project(Xi, x - eta * (p / ds) * F * u)
    return _trace(cfg, total, T, its, objective, delta=ds)


def run(cfg: OptimizerConfig, X: FeasibleSet, source, x1=None, objective=None, rng=None) -> RunTrace:
    m = cfg.method
    if m == "sgd":
        return sgd_fixed(source, X, x1, cfg, objective)
    if m == "sgd-sc":
        return sgd_strongly_convex(source, X, x1, cfg, objective)
    if m == "smd":
        return smd_l1(source, X, cfg, objective)
    if m == "smd-sc":
        return smd_strongly_convex(source, X, cfg, objective)
    return zo_spherical(source, X, cfg, rng, objective, x1)


def strong_convexity(hess_diag) -> tuple:
    """(lam1, lam2) of a diagonal Hessian: 1/sum(1/h_i) and min h_i."""
    h = np.asarray(hess_diag, dtype=float)
    if np.any(h <= 0):
        raise ValueError("Hessian diagonal must be positive")
    return float(1.0 / np.sum(1.0 / h)), float(h.min())
