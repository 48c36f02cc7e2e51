"""`vqo convergence|separation|identify|selftest --config file.json --out prefix`.

Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 only censored rows.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .experiments import (fit_powerlaw, load_config, queries_to_target, run_convergence,
                          run_identification, run_separation, svg_plot, write_csv)
from .optimizers import ConfigError, NumericError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CENSORED = 0, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vqo", description="Variational query-complexity experiments.")
    ap.add_argument("command", choices=["convergence", "separation", "identify", "selftest"])
    ap.add_argument("--config", help="JSON file with experiment keys")
    ap.add_argument("--out", default="vqo_out", help="output prefix")
    ap.add_argument("--seed", type=int, help="first seed (seeds = seed .. seed+num_seeds-1)")
    ap.add_argument("--num-seeds", type=int, dest="num_seeds")
    ap.add_argument("--threads", type=int)
    ap.add_argument("--n", type=int, nargs="+")
    ap.add_argument("--eps", type=float, nargs="+")
    ap.add_argument("--methods", nargs="+")
    ap.add_argument("--svg", dest="svg", action="store_true", default=None)
    ap.add_argument("--no-svg", dest="svg", action="store_false")
    return ap


def _config(args) -> dict:
    base = {}
    if args.config:
        try:
            with open(args.config) as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config: {e}") from e
        if not isinstance(base, dict):
            raise ConfigError("config file must hold a JSON object")
    over = dict(seed=args.seed, num_seeds=args.num_seeds, threads=args.threads, n=args.n,
                eps=args.eps, methods=args.methods, svg=args.svg)
    if args.seed is not None or args.num_seeds is not None:
        # explicit seed flags replace any seed list from the file
        base = dict(base, seeds=None)
    return load_config(base, **over)


def _series(points: list, key: str) -> dict:
    out: dict = {}
    for p in points:
        out.setdefault(p["method"], []).append((p[key], p["queries"]))
    return out


def selftest() -> int:
    """Quick internal consistency checks against dense matrices."""
    from .ansatz import parse_ansatz, prepare
    from .hadamard import exact_query_mean
    from .oracle import SamplingOracle
    from .pauli import ObservableSum, mul, pauli
    from .statevector import expectation
    from .toy import build_instance, build_toy_ansatz, closed_form_objective

    a, b = pauli("XYZ"), pauli("YYX")
    if not np.allclose(mul(a, b).matrix(), a.matrix() @ b.matrix()):
        return EXIT_NUMERIC
    A = parse_ansatz("2 2 start=00\n1.0 XY\n0.7 ZI + 0.3 IX\n")
    H = ObservableSum.from_text("0.5 ZZ\n0.25 -XI\n")
    th = np.array([0.3, -0.8])
    f = expectation(prepare(A, th), H)
    if abs(exact_query_mean(A, H, th, ()) - f) > 1e-10:
        return EXIT_NUMERIC
    inst, Ht = build_instance(4, 0.04, [1, -1, 1, 1])
    x = np.full(4, 0.1)
    if abs(exact_query_mean(build_toy_ansatz(4), Ht, x, ()) - closed_form_objective(x, inst)) > 1e-10:
        return EXIT_NUMERIC
    o = SamplingOracle(H, seed=0)
    m = o.sample(A, th, (0,), 20000).mean()
    if abs(m - exact_query_mean(A, H, th, (0,))) > 5 * o.norm(A, (0,)) / np.sqrt(20000):
        return EXIT_NUMERIC
    print("selftest ok")
    return EXIT_OK


def _dispatch(args) -> int:
    if args.command == "selftest":
        return selftest()
    cfg = _config(args)
    summary = None
    if args.command == "convergence":
        records = run_convergence(cfg)
        points = [dict(method=r.method, n=r.n, queries=r.queries_total) for r in records]
        series = _series(points, "n")
        xlabel = "n"
    elif args.command == "separation":
        records, summary = run_separation(cfg)
        points = queries_to_target(records)
        series = _series(points, "n")
        xlabel = "n"
        for m in {p["method"] for p in points}:
            pts = [p for p in points if p["method"] == m]
            if len({p["n"] for p in pts}) >= 3:
                slope, r2 = fit_powerlaw(pts, "n", "queries")
                print(f"{m}: queries-to-eps ~ n^{slope:.2f} (r2={r2:.3f})")
    else:
        records, summary = run_identification(cfg)
        series = {}
        xlabel = "n"
        for s in summary:
            print(f"n={s['n']} eps={s['eps']}: success {s['success_rate']:.3f} "
                  f"over {s['seeds']} seeds (|V|={s['packing_size']}, beta={s['beta']:.4g})")
    write_csv(args.out + ".csv", records)
    if summary is not None:
        with open(args.out + ".summary.json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if cfg["svg"] and series:
        with open(args.out + ".svg", "w") as fh:
            fh.write(svg_plot(series, xlabel, "queries"))
    print(f"wrote {args.out}.csv ({len(records)} rows)")
    if records and all(r.censored for r in records):
        return EXIT_CENSORED
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, FloatingPointError, ArithmeticError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
