"""Topology optimization of compliance statistics under finitely many
loading scenarios: exact naive and SVD-accelerated evaluation and
differentiation of the mean, variance and standard deviation of per-load
compliances, plus volume-constrained and maximum-compliance-constrained
SIMP solvers with continuation.
"""

from .auglag import AugLagResult, AugLagState, auglag_minimize, projected_gradient_step
from .compliance import (
    ComplianceStats,
    NaiveCache,
    TraceWorkspace,
    compliances_naive,
    compliances_svd,
    mean_compliance_naive,
    mean_compliance_svd,
    mean_gradient_naive,
    mean_gradient_svd,
    pullback_to_x,
    weight_vector,
    weighted_gradient_naive,
    weighted_gradient_svd,
)
from .config import RunConfig, load_config, parse_config
from .continuation import (
    Analysis,
    ContinuationResult,
    ContinuationSchedule,
    ContinuationStep,
    ForwardModel,
    MaxComplianceProblem,
    MeanComplianceProblem,
    MeanStdProblem,
    run_continuation,
)
from .errors import (
    ConfigError,
    InfeasibleError,
    NotPositiveDefiniteError,
    ScenarioFormatError,
    StaleCacheError,
    TopoRiskError,
    UnfactorizedSystemError,
)
from .fea import StiffnessSystem, assemble, assemble_system, element_stiffness
from .mesh import GroundMesh, Material, cantilever_mesh
from .mma import MMAConfig, MMAResult, mma_minimize
from .pipeline import DensityField, DensityPipeline, build_filter, heaviside
from .scenarios import (
    ScenarioMatrix,
    ThinSVD,
    load_scenarios_from_file,
    sample_cantilever_scenarios,
    save_scenarios_to_file,
    thin_svd,
)

__version__ = "0.1.0"
