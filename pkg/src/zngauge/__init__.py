"""Z_n lattice gauge chains coupled to staggered fermions in 1+1 dimensions.

The package solves chains of N = 2L staggered sites with open boundaries in
the gauge-invariant sector (Gauss' law eliminated exactly), measures the
electric order parameter, entanglement entropy and low-lying gaps, and runs
the finite-size-scaling machinery that locates the Ising-class critical mass
and its large-n limit.

Conventions used throughout (units g^2 a^2 = g^2 a / 2 = 1):

* the dimensionless electric field on a link with label k in Z_n is
  Etilde_k = k - (n-1)/2 + phi, physical field e_k = sqrt(2*pi/n) * Etilde_k;
* the Hamiltonian implemented is the rescaled bracket with coefficients
  hop = t*n/(2*pi), mass = m*n/(2*pi) and unit weight on sum_links Etilde^2;
* entropies are reported in bits (log base 2).
"""

from zngauge.link_algebra import LinkAlgebra, electric_eigenvalues, weyl_pair
from zngauge.basis import (
    ChainGeometry,
    GaugeState,
    PairCellBasis,
    apply_cp,
    build_basis,
    pair_cell_basis,
    reconstruct_fields,
)
from zngauge.hamiltonian import ModelParams, SparseOperator, build_mpo, build_sparse
from zngauge.ed import SpectrumResult, lowest_eigenpairs
from zngauge.mps import MpsState, load_mps, save_mps
from zngauge.dmrg import DmrgResult, SweepPolicy, excited_states, ground_state
from zngauge.observables import (
    EdState,
    ObservableSet,
    entanglement_entropy,
    gaps,
    measure,
    order_parameter,
)
from zngauge.criticality import (
    CollapseFit,
    CollapseResult,
    central_charge_fit,
    collapse_fit,
    crossover_diagnostics,
    gap_scaling_fit,
)
from zngauge.continuum import (
    FitResult,
    analytic_t0_mass,
    extrapolate_large_n,
    fit_critical_line,
)

__version__ = "0.1.0"

__all__ = [
    "LinkAlgebra",
    "electric_eigenvalues",
    "weyl_pair",
    "ChainGeometry",
    "GaugeState",
    "PairCellBasis",
    "apply_cp",
    "build_basis",
    "pair_cell_basis",
    "reconstruct_fields",
    "ModelParams",
    "SparseOperator",
    "build_mpo",
    "build_sparse",
    "SpectrumResult",
    "lowest_eigenpairs",
    "MpsState",
    "load_mps",
    "save_mps",
    "DmrgResult",
    "SweepPolicy",
    "ground_state",
    "excited_states",
    "EdState",
    "ObservableSet",
    "entanglement_entropy",
    "gaps",
    "measure",
    "order_parameter",
    "CollapseFit",
    "CollapseResult",
    "central_charge_fit",
    "collapse_fit",
    "crossover_diagnostics",
    "gap_scaling_fit",
    "FitResult",
    "analytic_t0_mass",
    "extrapolate_large_n",
    "fit_critical_line",
    "__version__",
]
