"""Sample the query oracle on a small ansatz and compare with exact derivatives."""
import numpy as np

from vqo.ansatz import parse_ansatz
from vqo.estimators import estimate_grad_l1, estimate_grad_l2
from vqo.hadamard import exact_query_mean
from vqo.oracle import SamplingOracle
from vqo.pauli import ObservableSum

A = parse_ansatz("3 3 start=000\n1.0 YII\n0.8 XYI + 0.2 IIZ\n1.0 IXY\n")
H = ObservableSum.from_text("1.0 ZZI\n0.5 -IXX\n0.3 IIZ\n")
theta = np.array([0.4, -0.7, 1.1])
o = SamplingOracle(H, seed=1)

for S in [(), (0,), (1,), (0, 2)]:
    ys = o.sample(A, theta, S, 50_000)
    print(f"S={S}: mean {ys.mean():+.4f}  exact {exact_query_mean(A, H, theta, S):+.4f}  "
          f"|output| {o.norm(A, S):.3f}")

g1 = np.mean([estimate_grad_l1(o, A, theta).vector for _ in range(20_000)], axis=0)
g2 = np.mean([estimate_grad_l2(o, A, theta).vector for _ in range(5_000)], axis=0)
exact = [exact_query_mean(A, H, theta, (j,)) for j in range(A.p)]
print("l1 estimator mean", np.round(g1, 3))
print("l2 estimator mean", np.round(g2, 3))
print("exact gradient   ", np.round(exact, 3))
print("queries by order", o.query_count().by_order)
