"""Query-complexity toolkit for variational quantum optimization."""
from .ansatz import Ansatz, FeasibleSet, inf_box, lightcone_mask, parse_ansatz, prepare
from .estimators import GradientSample, estimate_grad_l1, estimate_grad_l2, l2_sample_counts
from .hadamard import UnsupportedOrder, exact_query_mean, term_table
from .optimizers import (ConfigError, NumericError, OptimizerConfig, RunTrace, bregman_project,
                         run, sgd_fixed, sgd_strongly_convex, smd_l1, smd_strongly_convex,
                         strong_convexity, zo_spherical)
from .oracle import GammaTable, Ledger, SamplingOracle, build_gamma, query, query_count
from .pauli import ObservableSum, PauliError, PauliString, anticommutes, mul, parse_observable, pauli
from .statevector import CapacityError, StateVector, expectation, prepare_basis
from .toy import (ToyInstance, build_instance, closed_form_gradient, closed_form_objective,
                  coinflip_query, gv_packing, identify_v, semimetric, zo_spherical_toy)

__version__ = "0.1.0"
