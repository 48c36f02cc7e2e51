"""Optimize to beta/10, then recover the hidden sign vector from the packing."""
from vqo.experiments import run_identification

for method in ("sgd-sc", "none"):
    recs, summary = run_identification(dict(methods=[method], n=[16], eps=[0.16],
                                            seeds=list(range(20))))
    s = summary[0]
    print(f"{method:6s} success {s['success_rate']:.2f}  |V|={s['packing_size']}  "
          f"beta={s['beta']:.4f}  target={s['target']:.4f}")
