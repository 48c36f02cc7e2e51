"""Batch experiments on the toy family: convergence, separation, identification."""
from __future__ import annotations

import csv
import io
import math
import time
import warnings
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .estimators import l1_source, l2_sample_counts, l2_source
from .optimizers import METHODS, ConfigError, OptimizerConfig, run
from .oracle import SamplingOracle
from .toy import (
    build_instance,
    build_toy_ansatz,
    feasible_set,
    gv_packing,
    identify_v,
    strong_convexity_constants,
    suboptimality,
    zo_spherical_toy,
)

CSV_HEADER = ["method", "n", "eps", "seed", "q0", "q1", "qk",
              "queries_total", "final_error", "wallclock_ms", "censored"]

DEFAULTS = {
    "methods": ["sgd-sc"],
    "n": [8],
    "eps": [0.05],
    "eps_per_n": None,
    "seeds": None,
    "num_seeds": 8,
    "seed": 0,
    "budget": None,
    "budget_cap": 1 << 24,
    "budget_start": 64,
    "budget_ceiling": 1 << 24,
    "smd_epochs": 4,
    "zo_schedule": "strongly-convex",
    "zo_radius": None,
    "zo_radius_factor": 2.0,
    "zo_delta_scale": 1.0,
    "zo_eta_scale": 1.0,
    "record_wallclock": False,
    "threads": 1,
    "svg": True,
    "target": None,
    "packing_seed": 0,
    "optimize": True,
}


@dataclass
class ExperimentRecord:
    method: str
    n: int
    eps: float
    seed: int
    q0: int
    q1: int
    qk: int
    queries_total: int
    final_error: float
    wallclock_ms: float
    censored: bool = False

    @property
    def queries_by_order(self) -> tuple:
        return (self.q0, self.q1, self.qk)


# configuration ---------------------------------------------------------------------

def load_config(d: dict | None = None, **overrides) -> dict:
    cfg = dict(DEFAULTS)
    for src, keep_none in ((d or {}, True), (overrides, False)):
        for k, v in src.items():
            if k not in DEFAULTS:
                raise ConfigError(f"unknown config key {k!r}")
            if v is not None or keep_none:
                cfg[k] = v
    for k in ("methods", "n", "eps"):
        if not isinstance(cfg[k], list):
            cfg[k] = [cfg[k]]
    for m in cfg["methods"]:
        if m not in METHODS + ("none",):
            raise ConfigError(f"unknown method {m!r}")
    if any(int(n) != n or n < 1 for n in cfg["n"]):
        raise ConfigError("n must hold positive integers")
    if cfg["seeds"] is None:
        cfg["seeds"] = list(range(int(cfg["seed"]), int(cfg["seed"]) + int(cfg["num_seeds"])))
    if not cfg["seeds"]:
        raise ConfigError("at least one seed is required")
    if cfg["zo_schedule"] not in ("flaxman", "strongly-convex"):
        raise ConfigError(f"unknown zero-order schedule {cfg['zo_schedule']!r}")
    if cfg["budget_start"] < 1 or cfg["budget_ceiling"] < cfg["budget_start"]:
        raise ConfigError("budget grid must satisfy 1 <= start <= ceiling")
    for n, eps in grid_points(cfg):
        if not 0 < eps <= 0.01 * n + 1e-15:
            raise ConfigError(f"eps={eps} violates eps <= 0.01 n at n={n}")
    return cfg


def grid_points(cfg: dict) -> list:
    if cfg.get("eps_per_n") is not None:
        return [(int(n), float(cfg["eps_per_n"]) * n) for n in cfg["n"]]
    return [(int(n), float(e)) for n in cfg["n"] for e in cfg["eps"]]


def stream(seed: int, *keys) -> np.random.Generator:
    """Independent Philox stream for (seed, keys); strings hash via crc32."""
    ks = []
    for k in keys:
        if isinstance(k, str):
            ks.append(zlib.crc32(k.encode()))
        elif isinstance(k, float):
            ks.append(int(round(k * 1e9)))
        else:
            ks.append(int(k))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=tuple(ks))))


def instance_for(n: int, eps: float, seed: int):
    rng = stream(seed, "instance", n)
    v = rng.choice(np.array([-1, 1]), size=n)
    return build_instance(n, eps, v, seed)


# theorem budgets ------------------------------------------------------------------------

def theorem_budget(method: str, n: int, eps: float) -> int | None:
    """Query counts from the upper-bound lemmas for the toy on B_inf(delta)."""
    inst, H = build_instance(n, eps, [1] * n)
    A = build_toy_ansatz(n)
    G = SamplingOracle(H, 0).gamma(A).Gamma
    X = feasible_set(inst)
    lam1, lam2 = strong_convexity_constants(inst)
    g1 = float(G.sum())
    g2sq = float(np.dot(G, G))
    logt = 1 + math.log(4 * n * n * float(G.max()) ** 2 / g2sq)
    if method == "sgd":
        return math.ceil(2 * X.R2 ** 2 * g1 ** 2 / eps ** 2)
    if method == "sgd-sc":
        return math.ceil(2 * g1 ** 2 / (lam2 * eps))
    if method == "smd":
        return math.ceil(5 * math.e * X.R1 ** 2 * g2sq * math.log(n) / eps ** 2 * logt)
    if method == "smd-sc":
        return math.ceil(40 * g2sq / (eps * lam1) * logt)
    return None


# one run -----------------------------------------------------------------------------------

def optimizer_config(method: str, T: int, inst, gamma, opts: dict) -> OptimizerConfig:
    X = feasible_set(inst)
    lam1, lam2 = strong_convexity_constants(inst)
    G = gamma.Gamma
    n = inst.n
    base = dict(method=method, T=int(T), R2=X.R2, R1=X.R1, r2=X.r2, E=inst.E,
                smd_epochs=opts["smd_epochs"], record_iterates=False)
    if method in ("sgd", "sgd-sc"):
        base["G2"] = float(G.sum())
    if method in ("smd", "smd-sc"):
        base["Ginf"] = math.sqrt(5.0 / (2 * n)) * float(np.linalg.norm(G))
    if method == "sgd-sc":
        base["lam2"] = lam2
    if method == "smd-sc":
        base["lam1"] = lam1
    if method == "zo":
        base.update(zo_schedule=opts["zo_schedule"], zo_delta_scale=opts["zo_delta_scale"],
                    zo_eta_scale=opts["zo_eta_scale"])
        if opts["zo_schedule"] == "strongly-convex":
            base["lam2"] = lam2
            r = opts["zo_radius"]
            base["zo_radius"] = r if r is not None else opts["zo_radius_factor"] * inst.delta
    return OptimizerConfig(**base)


def run_one(task: dict) -> ExperimentRecord:
    method, n, eps, seed, budget = task["method"], task["n"], task["eps"], task["seed"], task["budget"]
    opts = task["opts"]
    inst, H = instance_for(n, eps, seed)
    t0 = time.perf_counter()
    if method == "zo":
        A = build_toy_ansatz(n)
        gamma = SamplingOracle(H, 0).gamma(A)
        cfg = optimizer_config("zo", budget, inst, gamma, opts)
        tr = zo_spherical_toy(inst, cfg, stream(seed, "directions", method, n, eps),
                              stream(seed, "oracle", method, n, eps))
        q = (tr.queries, 0, 0)
        err = tr.final_error
    elif method == "none":
        q = (0, 0, 0)
        err = suboptimality(np.zeros(n), inst)
    else:
        A = build_toy_ansatz(n)
        oracle = SamplingOracle(H, rng=stream(seed, "oracle", method, n, eps))
        gamma = oracle.gamma(A)
        if method in ("sgd", "sgd-sc"):
            T = budget
            src = l1_source(oracle, A)
        else:
            T = max(1, budget // int(l2_sample_counts(gamma).sum()))
            src = l2_source(oracle, A)
        cfg = optimizer_config(method, T, inst, gamma, opts)
        tr = run(cfg, feasible_set(inst), src, objective=lambda x: suboptimality(x, inst))
        ledger = oracle.query_count()
        if ledger.total != tr.queries:
            raise ArithmeticError("oracle ledger and optimizer query count disagree")
        q = (ledger[0], ledger[1], ledger.total - ledger[0] - ledger[1])
        err = tr.final_error
    ms = (time.perf_counter() - t0) * 1e3 if opts["record_wallclock"] else 0.0
    if not np.isfinite(err):
        raise FloatingPointError("non-finite final error")
    return ExperimentRecord(method, n, eps, seed, q[0], q[1], q[2], sum(q), float(err),
                            round(ms, 3), bool(task.get("censored", False)))


def run_tasks(tasks: list, threads: int = 1) -> list:
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            recs = list(ex.map(run_one, tasks))
    else:
        recs = [run_one(t) for t in tasks]
    return recs


def sort_records(recs: list) -> list:
    return sorted(recs, key=lambda r: (r.method, r.n, r.eps, r.seed))


def _opts(cfg: dict) -> dict:
    keys = ("smd_epochs", "zo_schedule", "zo_radius", "zo_radius_factor", "zo_delta_scale",
            "zo_eta_scale", "record_wallclock")
    return {k: cfg[k] for k in keys}


def _budget_for(cfg: dict, method: str, n: int, eps: float):
    b = cfg["budget"]
    if isinstance(b, dict):
        b = b.get(method)
    if b is None:
        b = theorem_budget(method, n, eps)
    if b is None:
        raise ConfigError(f"{method} has no closed-form budget; set 'budget'")
    return int(b)


# experiments ----------------------------------------------------------------------------

def run_convergence(config: dict) -> list:
    """Each (method, n, eps, seed) at its theorem budget (capped by budget_cap)."""
    cfg = load_config(config)
    opts = _opts(cfg)
    tasks = []
    for method in cfg["methods"]:
        for n, eps in grid_points(cfg):
            b = _budget_for(cfg, method, n, eps)
            cap = int(cfg["budget_cap"])
            for seed in cfg["seeds"]:
                tasks.append(dict(method=method, n=n, eps=eps, seed=seed, budget=min(b, cap),
                                  censored=b > cap, opts=opts))
    return sort_records(run_tasks(tasks, int(cfg["threads"])))


def budget_grid(start: int, ceiling: int) -> list:
    out, b = [], int(start)
    while b <= ceiling:
        out.append(b)
        b *= 2
    return out


def search_budget(cfg: dict, method: str, n: int, eps: float) -> tuple:
    """Walk the factor-2 grid upward until the mean error over seeds is <= eps.

    Returns (budget, records, mean error); records are flagged censored when
    the ceiling is reached without success."""
    opts = _opts(cfg)
    grid = budget_grid(cfg["budget_start"], cfg["budget_ceiling"])
    for b in grid:
        tasks = [dict(method=method, n=n, eps=eps, seed=s, budget=b, opts=opts) for s in cfg["seeds"]]
        recs = run_tasks(tasks, int(cfg["threads"]))
        mean = float(np.mean([r.final_error for r in recs]))
        if mean <= eps:
            return b, recs, mean
    for r in recs:
        r.censored = True
    return b, recs, mean


def run_separation(config: dict) -> tuple:
    """Queries-to-eps per method and n (smallest passing budget on the grid).

    Returns (records, summary rows)."""
    cfg = load_config(config)
    methods = cfg["methods"]
    if "zo" not in methods or not any(m in ("sgd", "sgd-sc", "smd", "smd-sc") for m in methods):
        raise ConfigError("separation needs a zeroth-order and a first-order method")
    records, summary = [], []
    for method in methods:
        for n, eps in grid_points(cfg):
            b, recs, mean = search_budget(cfg, method, n, eps)
            records.extend(recs)
            summary.append(dict(method=method, n=n, eps=eps, budget=b,
                                queries=int(np.median([r.queries_total for r in recs])),
                                mean_error=mean, censored=recs[0].censored))
    return sort_records(records), summary


def queries_to_target(records: list) -> list:
    """Collapse separation rows to one (method, n, eps) point each."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.method, r.n, r.eps), []).append(r)
    out = []
    for (m, n, eps), rs in sorted(groups.items()):
        out.append(dict(method=m, n=n, eps=eps,
                        queries=float(np.median([r.queries_total for r in rs])),
                        censored=any(r.censored for r in rs)))
    return out


def run_identification(config: dict) -> tuple:
    """Optimize to the target precision, then recover v by argmin over the packing.

    Returns (records, summary) where summary holds the success rate."""
    cfg = load_config(config)
    method = cfg["methods"][0]
    opts = _opts(cfg)
    records, summary = [], []
    for n, eps in grid_points(cfg):
        V = gv_packing(n, cfg["packing_seed"])
        inst0, _ = build_instance(n, eps, [1] * n)
        delta = inst0.delta
        beta = V.beta(delta)
        target = cfg["target"] if cfg["target"] is not None else beta / 10
        valid = target <= beta / 9
        if not valid:
            warnings.warn(f"target {target:.4g} exceeds beta/9 = {beta / 9:.4g}; "
                          "the identification guarantee is vacuous")
        wins = 0
        for seed in cfg["seeds"]:
            pick = int(stream(seed, "packing-member", n).integers(len(V)))
            v = V.vectors[pick]
            inst, H = build_instance(n, eps, v, seed)
            t0 = time.perf_counter()
            if method == "none" or not cfg["optimize"]:
                out = np.zeros(n)
                q = (0, 0, 0)
            else:
                A = build_toy_ansatz(n)
                oracle = SamplingOracle(H, rng=stream(seed, "oracle", method, n, eps))
                gamma = oracle.gamma(A)
                b = cfg["budget"] if isinstance(cfg["budget"], int) else \
                    math.ceil(2 * float(gamma.Gamma.sum()) ** 2 / (strong_convexity_constants(inst)[1] * target))
                if method in ("sgd", "sgd-sc"):
                    src, T = l1_source(oracle, A), b
                else:
                    src, T = l2_source(oracle, A), max(1, b // int(l2_sample_counts(gamma).sum()))
                tr = run(optimizer_config(method, T, inst, gamma, opts), feasible_set(inst), src)
                out = tr.output
                led = oracle.query_count()
                q = (led[0], led[1], led.total - led[0] - led[1])
            vhat = identify_v(out, V, delta)
            wins += bool(np.array_equal(vhat, v))
            ms = (time.perf_counter() - t0) * 1e3 if opts["record_wallclock"] else 0.0
            records.append(ExperimentRecord(method, n, eps, seed, q[0], q[1], q[2], sum(q),
                                            suboptimality(out, inst), round(ms, 3), False))
        summary.append(dict(method=method, n=n, eps=eps, packing_size=len(V), beta=beta,
                            target=target, guarantee_valid=valid,
                            success_rate=wins / len(cfg["seeds"]), seeds=len(cfg["seeds"])))
    return sort_records(records), summary


# fitting and output ------------------------------------------------------------------------

def _field(r, name):
    return r[name] if isinstance(r, dict) else getattr(r, name)


def fit_powerlaw(records, x_field: str, y_field: str) -> tuple:
    """Least-squares slope of log y against log x, and r^2."""
    x = np.array([float(_field(r, x_field)) for r in records])
    y = np.array([float(_field(r, y_field)) for r in records])
    if len(set(x.tolist())) < 3:
        raise ValueError("a power-law fit needs at least 3 distinct x values")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs positive data")
    lx, ly = np.log(x), np.log(y)
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + icpt)
    ss = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss if ss > 0 else 1.0
    return float(slope), r2


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_to_csv(records: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in sort_records(records):
        d = asdict(r)
        w.writerow([_fmt(d[k]) for k in CSV_HEADER])
    return buf.getvalue()


def write_csv(path: str, records: list) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(records_to_csv(records))


def read_csv(path: str) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for d in rows:
        out.append(ExperimentRecord(d["method"], int(d["n"]), float(d["eps"]), int(d["seed"]),
                                    int(d["q0"]), int(d["q1"]), int(d["qk"]), int(d["queries_total"]),
                                    float(d["final_error"]), float(d["wallclock_ms"]),
                                    d["censored"] == "1"))
    return out


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def svg_plot(series: dict, xlabel: str, ylabel: str, logx=True, logy=True,
             width=480, height=320) -> str:
    """Minimal line-and-marker plot; series maps a name to [(x, y), ...]."""
    pts = [(x, y) for s in series.values() for x, y in s]
    tx = (lambda v: math.log10(v)) if logx else (lambda v: v)
    ty = (lambda v: math.log10(v)) if logy else (lambda v: v)
    xs = [tx(x) for x, _ in pts] or [0, 1]
    ys = [ty(y) for _, y in pts] or [0, 1]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    L, R, T, B = 60, 20, 20, 45

    def px(v):
        return L + (tx(v) - x0) / (x1 - x0) * (width - L - R)

    def py(v):
        return height - B - (ty(v) - y0) / (y1 - y0) * (height - T - B)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{L}" y1="{height - B}" x2="{width - R}" y2="{height - B}" stroke="black"/>',
           f'<line x1="{L}" y1="{T}" x2="{L}" y2="{height - B}" stroke="black"/>',
           f'<text x="{(width + L) / 2:.1f}" y="{height - 8}" text-anchor="middle" font-size="12">{xlabel}</text>',
           f'<text x="14" y="{(height - B + T) / 2:.1f}" font-size="12" text-anchor="middle" '
           f'transform="rotate(-90 14 {(height - B + T) / 2:.1f})">{ylabel}</text>']
    for lab, v in ((f"{10 ** x0 if logx else x0:.3g}", x0), (f"{10 ** x1 if logx else x1:.3g}", x1)):
        xx = L + (v - x0) / (x1 - x0) * (width - L - R)
        out.append(f'<text x="{xx:.1f}" y="{height - B + 14}" font-size="10" text-anchor="middle">{lab}</text>')
    for lab, v in ((f"{10 ** y0 if logy else y0:.3g}", y0), (f"{10 ** y1 if logy else y1:.3g}", y1)):
        yy = height - B - (v - y0) / (y1 - y0) * (height - T - B)
        out.append(f'<text x="{L - 4}" y="{yy + 4:.1f}" font-size="10" text-anchor="end">{lab}</text>')
    for k, (name, s) in enumerate(series.items()):
        col = _COLORS[k % len(_COLORS)]
        s = sorted(s)
        if len(s) > 1:
            path = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in s)
            out.append(f'<polyline points="{path}" fill="none" stroke="{col}"/>')
        for x, y in s:
            out.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" fill="{col}"/>')
        out.append(f'<text x="{width - R - 4}" y="{T + 14 * (k + 1)}" font-size="11" '
                   f'text-anchor="end" fill="{col}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
