"""Schur-complement coarse graining of quadratic response tensors.

Core pieces:

- :mod:`schurflow.tensor` -- block elimination, inertia and spectral margins;
- :mod:`schurflow.reduction` -- slow-fast elimination of linear dynamics;
- :mod:`schurflow.flow` -- stochastic signature-selection flow;
- :mod:`schurflow.ensemble` -- parameter-grid statistics and boundaries;
- :mod:`schurflow.minimal` -- minimal coherence-sensitivity model;
- :mod:`schurflow.reconstruction` -- fluctuation reconstruction;
- :mod:`schurflow.cli` -- batch command-line runner.
"""

__version__ = "0.1.0"

from .contour import BoundaryCurve, find_contour
from .ensemble import (
    GridResult,
    GridSpec,
    boundary_support,
    default_grid_spec,
    extract_boundary,
    mean_first_passage,
    run_grid,
    sector_probability,
)
from .errors import (
    ConfigInvalid,
    DegenerateDraw,
    FastSectorNotPD,
    FastSectorUnstable,
    FlowCollapsed,
    NoValidRecords,
    ResponseNotPD,
    SchurFlowError,
    SingularCovariance,
    StepTooLarge,
    UnstableDrift,
    ZeroTensor,
)
from .flow import (
    Disorder,
    FlowConfig,
    LognormalGaussian,
    NormMode,
    TrajectoryRecord,
    Wishart,
    anisotropy_strength,
    embed_full,
    flow_step,
    normalize,
    run_trajectory,
    sample_anisotropy,
    sample_anisotropy_batch,
    sample_sigma,
    sample_sigma_batch,
)
from .minimal import (
    MinimalModelSpec,
    ScanResult,
    b_eff_final,
    build_blocks,
    scan as minimal_scan,
)
from .reconstruction import (
    LinearSDE,
    ReconstructionReport,
    einstein_check,
    estimate_log_curvature,
    reconstruct,
    simulate_sde,
    solve_lyapunov,
    stationary_gaussian,
)
from .reduction import (
    BlockGenerator,
    check_fast_stable,
    check_mobility,
    eliminate_fast,
    fast_slave,
    k_from_q,
    m_from_q,
)
from .tensor import (
    BlockQuadratic,
    IsoTracelessSplit,
    SeparationResult,
    Signature,
    check_symmetric,
    iso_traceless,
    operator_norm,
    perturbation_preserves_signature,
    schur_complement,
    separation_check,
    signature,
    stability_margin,
    symmetrize,
)

__all__ = [
    "__version__",
    "BoundaryCurve",
    "find_contour",
    "GridResult",
    "GridSpec",
    "boundary_support",
    "default_grid_spec",
    "extract_boundary",
    "mean_first_passage",
    "run_grid",
    "sector_probability",
    "ConfigInvalid",
    "DegenerateDraw",
    "FastSectorNotPD",
    "FastSectorUnstable",
    "FlowCollapsed",
    "NoValidRecords",
    "ResponseNotPD",
    "SchurFlowError",
    "SingularCovariance",
    "StepTooLarge",
    "UnstableDrift",
    "ZeroTensor",
    "Disorder",
    "FlowConfig",
    "LognormalGaussian",
    "NormMode",
    "TrajectoryRecord",
    "Wishart",
    "anisotropy_strength",
    "embed_full",
    "flow_step",
    "normalize",
    "run_trajectory",
    "sample_anisotropy",
    "sample_anisotropy_batch",
    "sample_sigma",
    "sample_sigma_batch",
    "MinimalModelSpec",
    "ScanResult",
    "b_eff_final",
    "build_blocks",
    "minimal_scan",
    "LinearSDE",
    "ReconstructionReport",
    "einstein_check",
    "estimate_log_curvature",
    "reconstruct",
    "simulate_sde",
    "solve_lyapunov",
    "stationary_gaussian",
    "BlockGenerator",
    "check_fast_stable",
    "check_mobility",
    "eliminate_fast",
    "fast_slave",
    "k_from_q",
    "m_from_q",
    "BlockQuadratic",
    "IsoTracelessSplit",
    "SeparationResult",
    "Signature",
    "check_symmetric",
    "iso_traceless",
    "operator_norm",
    "perturbation_preserves_signature",
    "schur_complement",
    "separation_check",
    "signature",
    "stability_margin",
    "symmetrize",
]
