"""Queries-to-eps for zeroth-order vs first-order optimization on the toy family."""
from vqo.experiments import load_config, search_budget

for n, eps in ((4, 0.04), (8, 0.05)):
    cfg = load_config(dict(methods=["zo", "sgd-sc"], n=[n], eps=[eps], seeds=list(range(8))))
    found = {}
    for m in ("sgd-sc", "zo"):
        b, recs, mean = search_budget(cfg, m, n, eps)
        found[m] = b
        print(f"n={n} {m:6s} budget {b:8d}  mean error {mean:.4f}")
    print(f"n={n} ratio zo / sgd-sc = {found['zo'] / found['sgd-sc']:.0f}")
