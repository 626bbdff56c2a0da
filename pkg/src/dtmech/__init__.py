"""Discrete-time classical and quantum mechanics via gamma-smeared evolution."""

from . import errors
from .classical import (
    CustomField,
    FreeParticle,
    HarmonicOscillator,
    MomentReport,
    PhaseState,
    Trajectory,
    continuous_trajectory,
    evolve_observable,
    free_particle_moments,
    observable_signal,
    quadrature_moments,
    sho_moments,
    sho_moments_scaled,
)
from .errors import (
    BackwardOnly,
    DivergentTransform,
    FitUnstable,
    GridUnderResolved,
    NumericalError,
    QuadratureNotConverged,
    StiffnessFailure,
)
from .nonlinear import (
    ChirpedExpectation,
    LyapunovEstimate,
    SensitivityModel,
    chirped_sine_expectation,
    ct_distance,
    ct_lyapunov,
    ct_position,
    dt_bound,
    dt_distance,
    dt_lyapunov,
    dt_sensitivity,
    exponential_map,
    power_law_map,
)
from .quantum import (
    ELECTRON_VOLT,
    NATURAL,
    SECONDS_PER_YEAR,
    SI_PLANCK,
    DecoherenceReport,
    DensityMatrix,
    PhysicalConstants,
    decoherence_report,
    decoherence_time,
    evolve_density,
    gamma_equivalence_check,
    offdiagonal_modulus,
    project_density,
    schroedinger_defect,
)
from .kernel import (
    AdvectionProbe,
    GammaKernel,
    MonteCarloEstimate,
    QuadratureRule,
    SchemeDecomposition,
    StepScheme,
    TimeSignal,
    TransformResult,
    advection_negativity_probe,
    complex_exponential_signal,
    constant_signal,
    cosine_signal,
    exponential_signal,
    gamma_density,
    log_gamma_density,
    monomial_signal,
    sample_internal_time,
    scheme_delta_coefficient,
    scheme_density_decomposition,
    tabulated_signal,
    transform_monte_carlo,
    transform_quadrature,
)

__version__ = "0.1.0"
