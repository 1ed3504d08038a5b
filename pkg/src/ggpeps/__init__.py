"""Monte-Carlo evaluation of Wilson loops in gauged Gaussian PEPS for Z_N lattice gauge theories."""
from ggpeps.gaussian import (
    InvalidCovarianceError,
    MajoranaCovariance,
    PairingMatrix,
    apply_phase_rotation,
    covariance_from_pairing,
    gaussian_map,
    overlap_weight,
    vacuum_covariance,
)
from ggpeps.lattice import LoopPath, TorusLattice, ZN, gauge_transform_config, plaquette_path, winding_line_path
from ggpeps.montecarlo import Estimate, McConfig, exact_enumerate, metropolis_step, run_chain
from ggpeps.observables import ObservableSpec, evaluate_loop, standard_observables
from ggpeps.weight import (
    StateAssembly,
    VertexTensorParams,
    WeightCache,
    assemble,
    gauged_bond_covariance,
    link_bond_covariance,
    log_weight,
    vertex_pairing,
)

__version__ = "0.1.0"
