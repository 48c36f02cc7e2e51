"""Strongly convex SGD on the toy family at its theorem budget."""
import numpy as np

from vqo.experiments import run_convergence, theorem_budget

n, eps = 8, 0.05
print("theorem budget", theorem_budget("sgd-sc", n, eps))
recs = run_convergence(dict(methods=["sgd-sc"], n=[n], eps=[eps], seeds=list(range(10))))
errs = [r.final_error for r in recs]
print(f"mean final error {np.mean(errs):.4f} over {len(errs)} seeds (target {eps})")
