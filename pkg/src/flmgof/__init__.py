"""Goodness-of-fit testing for the functional linear model with scalar response.

The test statistic is a projected Cramer-von Mises functional of the model
residuals, evaluated in closed form through spherical-wedge geometry and
calibrated by a golden wild bootstrap. The package also ships the two
benchmark tests used in the accompanying simulation harness, exact
Ornstein-Uhlenbeck sampling, and a CLI (``flmgof``).
"""

from .basis import (
    BasisSystem,
    CoefficientSet,
    build_basis,
    fpc_basis,
    fpls_basis,
    project_sample,
    select_dimension,
    select_dimension_representation,
)
from .bootstrap import (
    CalibrationResult,
    calibrate_composite,
    calibrate_simple,
    draw_multipliers,
    pvalue_from_replicates,
)
from .competing import (
    CompetingResult,
    KernelConfig,
    calibrate_competing,
    f_test_statistic,
    kernel_test_statistic,
    pcv_bandwidth,
)
from .errors import ConfigError, FlmgofError, NumericError, ParseError
from .fcore import (
    FunctionalSample,
    Grid,
    ResponseVector,
    center_sample,
    inner_product,
    l2_norm,
)
from .flm import (
    BetaFunction,
    EstimatorConfig,
    FlmFit,
    build_design,
    fit_flm,
    residuals_simple,
)
from .kernels import backend as kernel_backend
from .pcvm import (
    PcvmComponents,
    build_components,
    components_from_coefficients,
    pcvm_oracle,
    pcvm_statistic,
    transform_coefficients,
    wedge_angle,
)
from .pipeline import (
    DiagnosticTrajectories,
    RunConfig,
    TestReport,
    compute_diagnostic,
    run_test,
    test_from_sample,
)
from .simulation import (
    OuParams,
    PowerStudyConfig,
    PowerTable,
    ScenarioSpec,
    make_scenario,
    ou_covariance,
    paper_scale,
    run_power_study,
    scenario_response,
    simulate_ou,
    snr,
)

__version__ = "0.1.0"

__all__ = [
    "BasisSystem", "BetaFunction", "CalibrationResult", "CoefficientSet",
    "CompetingResult", "ConfigError", "DiagnosticTrajectories", "EstimatorConfig",
    "FlmFit", "FlmgofError", "FunctionalSample", "Grid", "KernelConfig",
    "NumericError", "OuParams", "ParseError", "PcvmComponents",
    "PowerStudyConfig", "PowerTable", "ResponseVector", "RunConfig",
    "ScenarioSpec", "TestReport", "build_basis", "build_components",
    "build_design", "calibrate_competing", "calibrate_composite",
    "calibrate_simple", "center_sample", "components_from_coefficients",
    "compute_diagnostic", "draw_multipliers", "f_test_statistic", "fit_flm",
    "fpc_basis", "fpls_basis", "inner_product", "kernel_backend",
    "kernel_test_statistic", "l2_norm", "make_scenario", "ou_covariance",
    "paper_scale", "pcv_bandwidth", "pcvm_oracle", "pcvm_statistic",
    "project_sample", "pvalue_from_replicates", "residuals_simple", "run_power_study",
    "run_test", "scenario_response", "select_dimension",
    "select_dimension_representation", "simulate_ou", "snr",
    "test_from_sample", "transform_coefficients", "wedge_angle",
]
