"""Simulation and analysis toolkit for dissipative quantum phase transitions.

Gaussian bosonic and truncated-Fock-space Lindblad dynamics, steady-state
information geometry (KMB quantum Fisher information, thermodynamic metric,
Drazin inverse), finite-time ramp protocols with freeze-out accounting of the
nonadiabatic entropy production, and the fitting/collapse machinery that
extracts the critical exponents.
"""

from . import analysis, errors, fock, gaussian, geometry, models, ramp, spectral
from .analysis import CollapseResult, PowerLawFit, finite_size_collapse, fit_power_law
from .errors import DqptError
from .fock import (
    FockLiouvillian,
    FockOperatorSet,
    build_liouvillian,
    fock_evolve,
    fock_gap_and_spectrum,
    fock_operators,
    fock_relative_entropy,
    fock_steady_state,
)
from .gaussian import (
    CovarianceState,
    DriftDiffusion,
    GaussianExponentForm,
    QuadraticModel,
    build_drift_diffusion,
    evolve_covariance,
    relative_entropy,
    steady_state,
    symplectic_eigenvalues,
    theta_to_M,
)
from .geometry import (
    ChiMatrix,
    MetricPoint,
    chi_matrix,
    drazin_apply,
    metric_drazin,
    metric_gaussian,
    metric_point,
    qfi_kmb_density_matrix,
    qfi_kmb_gaussian,
)
from .models import (
    DickeParams,
    KerrParams,
    dicke_critical_coupling,
    dicke_family,
    dicke_model,
    kerr_control_sweep,
    kerr_critical_point,
    kerr_model,
)
from .ramp import (
    FreezeOut,
    RampOptions,
    RampProtocol,
    RampResult,
    find_freeze_out,
    run_ramp,
    sigma_na_rate_exact,
    sigma_na_rate_metric,
)
from .spectral import (
    BiorthogonalSpectrum,
    GapCurve,
    biorthogonal_decompose,
    gap_curve,
    integral_relaxation_time,
    kmb_weights,
    liouvillian_gap,
    soft_mode_projection,
)

__version__ = "0.1.0"
