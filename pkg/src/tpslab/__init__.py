"""Numerical laboratory for tensor product structures compatible with a fixed Hamiltonian spectrum."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AmbiguousClustering,
    AmbiguousClusteringWarning,
    DimensionMismatch,
    DimensionOverflow,
    InvalidFactorDim,
    LabError,
    NotHermitian,
    NotProductState,
    NotUnitary,
    ValidationError,
)
from .numkernel import eigh, haar_unitary, kron, make_rng, nullspace_dim, partial_trace, unitary_exp  # noqa: E402
from .spectrum import cluster_spectrum, commutant_dimension, sample_commuting_unitary, sample_torus_element  # noqa: E402
from .tps import (  # noqa: E402
    TensorProductStructure,
    algebras_of,
    certify_nonequivalence,
    check_tps_conditions,
    dimension_ledger,
    local_unitary_group_dimension,
    standard_tps,
    transform_tps,
)
from .entangle import (  # noqa: E402
    DensityState,
    entropy_profile,
    entropy_trajectory,
    evolve,
    product_state,
    pure_state,
    separability_persistence_test,
)
