"""Quantum hypergraph homomorphisms, no-signalling correlations and channel simulation."""
from .channels import (
    Channel,
    ChannelError,
    ClassicalChannel,
    choi_of,
    classical_of,
    gamma_of_classical,
    kraus_of,
    kraus_space,
    twisted_choi,
)
from .correlations import (
    CommutingPairWitness,
    LocWitness,
    QnsCorrelation,
    StochasticOperatorMatrix,
    TensorPairWitness,
    classical_ns,
    compose_som,
    from_commuting_pair,
    from_loc,
    from_tensor_pair,
    phi_contract,
    simulate,
    star_compose,
    verify_qns,
)
from .feasibility import FeasibilityProblem, SolverConfig
from .homomorphisms import (
    HomInstance,
    column_isometry_exists,
    decide_ns,
    hat_star,
    kernel_cover,
    loc_hom_from_tros,
    loc_quasi_from_spaces,
    n_bracket,
    tro_check,
    tro_generate,
    verify_hom,
)
from .hypergraphs import (
    ClassicalHypergraph,
    QuantumHypergraph,
    arrow_forward,
    arrow_iff,
    classical_arrow,
    embed_classical,
    fits,
    is_classical,
    slice_membership_check,
)
from .tensor import (
    ComplexTensor,
    IndexSet,
    Leg,
    OperatorSubspace,
    Subspace,
    conjugate,
    leg,
    sigma_flip,
    slice_map,
    tensor_product,
    theta,
    theta_inv,
)

__version__ = "0.1.0"
