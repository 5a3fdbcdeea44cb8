"""Flow-equation diagonalization of the single-mode quadratic bosonic Hamiltonian."""

from .core_model import (
    BranchLabel,
    ConvergenceError,
    DivergenceReport,
    FixedPoint,
    QuadraticCoefficients,
    Regime,
    RegimeError,
    Spectrum,
    SpectrumKind,
    Stability,
    WegnerFlowError,
    classify_regime,
)
from .flow_engine import (
    Direction,
    FlowSample,
    FlowTrajectory,
    HyperbolicState,
    IntegratorConfig,
    closed_form_ratio,
    find_unstable_points,
    flow_rhs,
    from_hyperbolic,
    generator_coefficient,
    integrate_generalized,
    integrate_unitary,
    predict_fixed_point,
    to_hyperbolic,
    z_rhs,
)
from .analytic_oracles import (
    BogoliubovSolution,
    bogoliubov_diagonal,
    bounded_spectrum,
    complex_spectrum,
    solve_theta,
)
from .fock_matrix_oracle import (
    DenseHermitianMatrix,
    MatrixFlowDiagnostics,
    build_fock_matrix,
    hermitian_eigenvalues,
    integrate_matrix_flow,
    matrix_flow_rhs,
)

__version__ = "0.1.0"
