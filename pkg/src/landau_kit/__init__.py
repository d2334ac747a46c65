"""Numerical toolkit for Landau damping and stability of Vlasov equilibria on the torus."""

from .dispersion import (
    InteractionKernel,
    PenroseReport,
    dispersion_root,
    kernel_laplace,
    kernel_time,
    penrose_margin,
)
from .equilibria import (
    CustomEquilibrium,
    DoubleMaxwellian,
    Maxwellian,
    PoissonEquilibrium,
    eval_equilibrium,
    fourier_equilibrium,
    verify_analyticity_bound,
)
from .errors import (
    AccuracyError,
    ConfigError,
    DomainError,
    LandauKitError,
    NumericalError,
    OutOfRangeError,
    StabilityError,
    StepSizeError,
    TruncationError,
)
from .gevrey import (
    GevreyParams,
    bootstrap_monitor,
    gevrey_norm,
    multiplier_A,
    product_rule_check,
    schur_kernel_sum,
    triangle_ineq_check,
)
from .linear import (
    PhaseSpaceGrid,
    SpectralField,
    fit_exponential_rate,
    free_transport_density,
    linear_vp_density,
    scattering_profile,
)
from .nonlinear import (
    InitialData,
    ModeSpec,
    SimConfig,
    echo_experiment,
    simulate,
)
from .volterra import (
    VolterraProblem,
    apply_resolvent,
    resolvent_bromwich,
    resolvent_closed_form,
    solve_volterra,
)

__version__ = "0.1.0"
