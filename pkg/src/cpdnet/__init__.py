"""Operating points and operating-region certificates for DC resistive
networks terminated by constant-power devices."""

__version__ = "0.1.0"

from .certificates import (
    Certificate,
    Membership,
    ScalingRow,
    certificate_infnorm,
    certificate_spectral,
    check_membership,
    region_rings,
    scaling_probe,
)
from .decomposition import (
    PowerDecomposition,
    VoltageDecomposition,
    decompose_power,
    decompose_voltage,
    residual_decomposed,
    residual_full,
)
from .network import (
    Branch,
    ConductanceMatrix,
    LaplacianDiagnostics,
    Network,
    build_conductance_matrix,
    dumps_network,
    kron_reduce,
    load_network,
    loads_network,
    reduce_network,
    save_network,
    validate_laplacian,
)
from .solver import (
    Feasibility,
    NoHighVoltageSolution,
    OperatingPoint,
    SolverOptions,
    feasibility_precheck,
    newton_step,
    solve_operating_point,
    two_port_solve,
)
from .spectral import SpectralSummary, inf_norm_and_gmin, laplacian_spectrum, summarize_network
from .sweep import SweepConfig, SweepReport, generate_instance, run_sweep

__all__ = [
    "Branch",
    "Certificate",
    "ConductanceMatrix",
    "Feasibility",
    "LaplacianDiagnostics",
    "Membership",
    "Network",
    "NoHighVoltageSolution",
    "OperatingPoint",
    "PowerDecomposition",
    "ScalingRow",
    "SolverOptions",
    "SpectralSummary",
    "SweepConfig",
    "SweepReport",
    "VoltageDecomposition",
    "build_conductance_matrix",
    "certificate_infnorm",
    "certificate_spectral",
    "check_membership",
    "decompose_power",
    "decompose_voltage",
    "dumps_network",
    "feasibility_precheck",
    "generate_instance",
    "inf_norm_and_gmin",
    "kron_reduce",
    "laplacian_spectrum",
    "load_network",
    "loads_network",
    "newton_step",
    "reduce_network",
    "region_rings",
    "residual_decomposed",
    "residual_full",
    "run_sweep",
    "save_network",
    "scaling_probe",
    "solve_operating_point",
    "summarize_network",
    "two_port_solve",
    "validate_laplacian",
]
