"""Constant-depth synthesis and exact verification of symmetric quantum states.

The package splits into a layered-circuit representation (``circuits``,
``library``), a dense statevector simulator with certification helpers
(``simulate``), amplitude-amplification building blocks (``primitives``),
exact rational distribution machinery (``dists``), the state constructions
themselves (``synthesis``), and sweep/acceptance harnesses (``claims``,
``acceptance``, ``cli``).
"""

from .acceptance import (
    CRITERION_IDS,
    PRIMITIVE_NAMES,
    AcceptanceReport,
    CheckRow,
    certify_primitive,
    run_acceptance,
)
from .circuits import (
    Builder,
    Circuit,
    CircuitError,
    CostReport,
    Gate,
    Register,
    cost,
    deserialize,
    serialize,
)
from .claims import CLAIM_IDS, ClaimVerdict, SweepConfig, all_pass, run_claims
from .dists import (
    DampedBinomial,
    DomainError,
    OccupancyModel,
    damped_binomial,
    hybrid_hit_prob,
    occupancy_pmf,
    ratio_report,
    ratio_sum_tables,
    symmetric_R,
    trailing_zero_mass,
)
from .primitives import (
    AmplifyInfo,
    MarkedPreparation,
    adjust_amplitudes,
    amplify_to_exact,
    ctrl_circuit,
    ctrl_from_zero_overlap,
    ctrl_state,
    exact_grover,
    ham_gadget,
    parallel_amplify,
    prepare_onehot_dist,
    prepare_small_state,
)
from .simulate import (
    CertificationError,
    SimulationError,
    StateVector,
    VerificationResult,
    certify_library_gate,
    check_clean_preparation,
    initial_state,
    output_overlap,
    residual_mass,
    run,
)
from .synthesis import (
    SynthesisOutput,
    SynthesisRequest,
    build_dicke,
    build_occupancy_state,
    build_symmetric,
    default_ell,
    dicke_vector,
    occupancy_vector,
    prepare_zero_damped,
    symmetric_vector,
)

__version__ = "0.1.0"

__all__ = [
    "AcceptanceReport",
    "AmplifyInfo",
    "Builder",
    "CLAIM_IDS",
    "CRITERION_IDS",
    "CertificationError",
    "CheckRow",
    "Circuit",
    "CircuitError",
    "ClaimVerdict",
    "CostReport",
    "DampedBinomial",
    "DomainError",
    "Gate",
    "MarkedPreparation",
    "OccupancyModel",
    "PRIMITIVE_NAMES",
    "Register",
    "SimulationError",
    "StateVector",
    "SweepConfig",
    "SynthesisOutput",
    "SynthesisRequest",
    "VerificationResult",
    "adjust_amplitudes",
    "all_pass",
    "amplify_to_exact",
    "build_dicke",
    "build_occupancy_state",
    "build_symmetric",
    "certify_library_gate",
    "certify_primitive",
    "check_clean_preparation",
    "cost",
    "ctrl_circuit",
    "ctrl_from_zero_overlap",
    "ctrl_state",
    "damped_binomial",
    "default_ell",
    "deserialize",
    "dicke_vector",
    "exact_grover",
    "ham_gadget",
    "hybrid_hit_prob",
    "initial_state",
    "occupancy_pmf",
    "occupancy_vector",
    "output_overlap",
    "parallel_amplify",
    "prepare_onehot_dist",
    "prepare_small_state",
    "prepare_zero_damped",
    "ratio_report",
    "ratio_sum_tables",
    "residual_mass",
    "run",
    "run_acceptance",
    "run_claims",
    "serialize",
    "symmetric_R",
    "symmetric_vector",
    "trailing_zero_mass",
]
