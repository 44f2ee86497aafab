"""RSSI-based localization under malicious anchor attacks.

A numpy library plus a small CLI (``secloc``) for simulating wireless
networks whose anchors may lie about their transmit power, estimating the
target position robustly, and benchmarking against the unbiased-estimator
error bound.
"""

from .exceptions import (
    ConfigError,
    DegenerateGeometryError,
    DegenerateInformationError,
    DomainError,
    InsufficientAnchorsError,
    InsufficientSurvivorsError,
    SecLocError,
)
from .channel import (
    DistanceStats,
    PathLossParams,
    distance_from_rssi,
    distance_pdf,
    distance_perturbation,
    distance_sq_variance,
    distance_stats,
    distance_variance,
    estimate_noise_sigma,
    mean_rssi,
    perturbation_g,
)
from .attacks import (
    AttackSpec,
    MeasurementMatrix,
    Placement,
    Topology,
    chi_factor,
    load_topology,
    parse_topology,
    random_topology,
    select_malicious,
    simulate_measurements,
)
from .estimators import (
    Estimate,
    LinearSystem,
    build_linear_system,
    grad_desc_estimate,
    lmds_estimate,
    ls_estimate,
    ml_estimate,
    swls_estimate,
    wls_estimate,
)
from .planefit import (
    AdmmParams,
    AdmmResult,
    KmeansResult,
    PlaneCoeffs,
    admm_l1_plane,
    kmeans_1d,
    ln1_estimate,
    ln1e_estimate,
    point_plane_residual,
    soft_threshold,
)
from .crlb import Fim, crlb_bound, fim_coordinated, fim_uncoordinated
from .config import (
    APPLICABILITY,
    ESTIMATOR_NAMES,
    ExperimentConfig,
    GradDescParams,
    LmdsParams,
    apply_axis,
    load_config,
    parse_config,
)
from .harness import (
    EstimatorOutcome,
    EstimatorSummary,
    MonteCarloSummary,
    TrialResult,
    base_topology,
    emit_csv,
    run_monte_carlo,
    run_trial,
    summarize,
    summary_rows,
    sweep,
    sweep_to_csv,
)

__version__ = "0.1.0"
