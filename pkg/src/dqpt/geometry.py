"""Information-geometric quantities of nonequilibrium steady states.

The central objects are the Kubo-Mori-Bogoliubov quantum Fisher information
(susceptibility of the steady state to the control parameter) and the
thermodynamic metric zeta_g = tau_g * I^KMB_g that governs the slow-driving
entropy-production rate. Both have closed Gaussian evaluations and generic
density-matrix evaluations; the two routes cross-check each other on one-mode
instances.

Convention resolved here once and for all: the dissipative-channel integral
of the Gaussian metric uses the first-moment drift A = Omega (H_R - Im sum_i
c_i c_i^dag), which equals -W of the covariance Lyapunov equation. This is
verified against the Drazin-inverse trace form in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from .errors import (
    DefectiveMatrix,
    MultipleSteadyStates,
    NonConvergentF,
    RankDeficient,
    SolveFailure,
    ToleranceFailure,
)
from .fock import EIG_FLOOR, FockLiouvillian, floored_log, unvec, vec
from .gaussian import (
    CovarianceState,
    DriftDiffusion,
    QuadraticModel,
    build_drift_diffusion,
    jump_coefficient_vectors,
    steady_state,
    symplectic_form,
    theta_to_M,
)
from .spectral import BiorthogonalSpectrum, biorthogonal_decompose, liouvillian_gap

__all__ = [
    "ChiMatrix",
    "MetricPoint",
    "chi_matrix",
    "qfi_kmb_gaussian",
    "qfi_kmb_density_matrix",
    "metric_gaussian",
    "drazin_apply",
    "metric_drazin",
    "metric_point",
    "density_matrix_derivatives",
]


@dataclass(frozen=True)
class ChiMatrix:
    """Parameter derivative chi = d M / d g of the Gaussian exponent matrix."""

    chi: np.ndarray
    fd_step: float


@dataclass(frozen=True)
class MetricPoint:
    """Metric, QFI and implied relaxation time at one parameter value."""

    g: float
    zeta: float
    qfi_kmb: float
    tau_g: float
    gap: float = float("nan")


def default_fd_step(g: float) -> float:
    return 1e-6 * max(1.0, abs(g))


def _steady_M(model_family: Callable[[float], QuadraticModel], g: float) -> np.ndarray:
    return theta_to_M(steady_state(build_drift_diffusion(model_family(g)))).M


def chi_matrix(
    model_family: Callable[[float], QuadraticModel],
    g: float,
    fd_step: Optional[float] = None,
    check_richardson: bool = True,
    richardson_tol: float = 1e-6,
) -> ChiMatrix:
    """Central finite difference of the steady-state exponent matrix.

    The consistency check recomputes chi at half the step and requires
    relative agreement; disable it (or loosen the tolerance) close to a
    critical point, where roundoff in M limits the attainable agreement.
    """
    h = default_fd_step(g) if fd_step is None else float(fd_step)
    if h <= 0.0:
        raise ToleranceFailure("fd_step must be positive")

    def chi_at(step: float) -> np.ndarray:
        c = (_steady_M(model_family, g + step) - _steady_M(model_family, g - step)) / (2.0 * step)
        return 0.5 * (c + c.T)

    chi = chi_at(h)
    if check_richardson:
        chi_half = chi_at(0.5 * h)
        scale = max(np.abs(chi).max(), 1e-300)
        rel = np.abs(chi - chi_half).max() / scale
        if rel > richardson_tol:
            raise ToleranceFailure(
                f"chi changed by {rel:.3e} (> {richardson_tol:.1e}) when halving "
                f"fd_step = {h:.3e}"
            )
    return ChiMatrix(chi=chi, fd_step=h)


def _f_exp_ratio(z: np.ndarray) -> np.ndarray:
    """f(z) = (exp(z) - 1)/z, with a 6-term Taylor branch for |z| < 1e-6."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-6
    safe = np.where(small, 1.0, z)
    out = (np.exp(safe) - 1.0) / safe
    series = 1.0 + z / 2.0 + z**2 / 6.0 + z**3 / 24.0 + z**4 / 120.0 + z**5 / 720.0
    return np.where(small, series, out)


def _channel_integral(chi: np.ndarray, M: np.ndarray, omega_mat: np.ndarray) -> np.ndarray:
    """G = int_0^1 exp(s X^T) chi exp(s X) ds with X = i Omega M.

    Evaluated in the eigenbasis of X: the (i, j) entry of the transformed
    integrand picks up f(lambda_i + lambda_j).
    """
    X = 1.0j * omega_mat @ M
    lam, V = np.linalg.eig(X)
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > 1e12:
        raise DefectiveMatrix(f"i Omega M eigenbasis condition {cond:.3e} too large")
    Vinv = np.linalg.inv(V)
    # X^T = (V^-T) diag(lam) (V^T)
    chit = V.T @ chi @ V
    F = _f_exp_ratio(lam[:, None] + lam[None, :])
    return Vinv.T @ (chit * F) @ Vinv


def qfi_kmb_gaussian(state: CovarianceState, chi: ChiMatrix) -> float:
    """KMB quantum Fisher information of a zero-mean Gaussian state.

    I = (1/2) Tr[chi (Theta + i Omega/2) G (Theta - i Omega/2)] with G the
    channel integral of chi under X = i Omega M.
    """
    n = state.n_modes
    O = symplectic_form(n)
    M = theta_to_M(state).M
    G = _channel_integral(chi.chi, M, O)
    theta_up = state.theta + 0.5j * O
    theta_dn = state.theta - 0.5j * O
    val = 0.5 * np.trace(chi.chi @ theta_up @ G @ theta_dn)
    if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
        raise SolveFailure(f"QFI has imaginary residue {val.imag:.3e}")
    out = float(val.real)
    if out < -1e-10:
        raise SolveFailure(f"QFI came out negative: {out:.3e}")
    return max(out, 0.0)


def qfi_kmb_density_matrix(rho: np.ndarray, drho_dg: np.ndarray) -> float:
    """KMB QFI of a generic density matrix: Tr[(d log rho/dg)(d rho/dg)].

    Evaluated in the eigenbasis of rho with the logarithmic divided-difference
    kernel k(p, q) = (ln p - ln q)/(p - q), k(p, p) = 1/p. Eigenvalues are
    floored at the shared threshold before logs.
    """
    rho = 0.5 * (rho + rho.conj().T)
    p, U = np.linalg.eigh(rho)
    if p.min() < -1e-10:
        raise RankDeficient(f"density matrix eigenvalue {p.min():.3e} < -1e-10")
    p = np.clip(p, EIG_FLOOR, None)
    p = p / p.sum()
    dr = U.conj().T @ drho_dg @ U
    P = p[:, None] * np.ones((1, p.size))
    Q = P.T
    with np.errstate(divide="ignore", invalid="ignore"):
        kern = (np.log(P) - np.log(Q)) / (P - Q)
    same = np.abs(P - Q) < 1e-30
    kern[same] = 1.0 / P[same]
    val = float(np.sum(np.abs(dr) ** 2 * kern))
    return max(val, 0.0)


def metric_gaussian(
    state: CovarianceState,
    dd: DriftDiffusion,
    chi: ChiMatrix,
    jump_coefficients: Sequence[np.ndarray],
) -> float:
    """Thermodynamic metric of a Gaussian steady state.

    zeta = (1/2) Tr[G (Theta - i Omega/2) F (Theta + i Omega/2)], where G is
    the channel integral of chi under i Omega M, and F solves the Lyapunov
    equation A^T F + F A = -chi with the first-moment drift
    A = Omega (H_R - Im sum_i c_i c_i^dag).
    """
    n = state.n_modes
    O = symplectic_form(n)
    im_cc = np.zeros((2 * n, 2 * n))
    for c in jump_coefficients:
        c = np.asarray(c, dtype=complex)
        im_cc += np.outer(c, c.conj()).imag
    A = O @ (dd.H_R - im_cc)
    if np.linalg.eigvals(A).real.max() >= 0.0:
        raise NonConvergentF("first-moment drift is not Hurwitz")

    M = theta_to_M(state).M
    G = _channel_integral(chi.chi, M, O)
    F = solve_continuous_lyapunov(A.T, -chi.chi)
    F = 0.5 * (F + F.T)
    theta_up = state.theta + 0.5j * O
    theta_dn = state.theta - 0.5j * O
    val = 0.5 * np.trace(G @ theta_dn @ F @ theta_up)
    if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
        raise SolveFailure(f"metric has imaginary residue {val.imag:.3e}")
    out = float(val.real)
    if out < -1e-10:
        raise SolveFailure(f"metric came out negative: {out:.3e}")
    return max(out, 0.0)


def drazin_apply(
    liouvillian: FockLiouvillian,
    steady_state_vec: np.ndarray,
    operand_vec: np.ndarray,
    spectrum: Optional[BiorthogonalSpectrum] = None,
) -> np.ndarray:
    """Apply the Drazin inverse of the generator to a vectorized operand.

    Spectral route: expand in the biorthogonal eigenbasis, drop the zero
    mode, divide the remaining components by their eigenvalues. The result
    satisfies L L+ x = x - pi Tr[x], L+ pi = 0, Tr[L+ x] = 0.
    """
    if spectrum is None:
        spectrum = biorthogonal_decompose(liouvillian.matrix)
    lam = spectrum.eigenvalues
    order = np.argsort(np.abs(lam))
    i0 = order[0]
    if lam.size > 1 and np.abs(lam[order[1]]) < 1e-10:
        raise MultipleSteadyStates(
            f"second eigenvalue {lam[order[1]]} within 1e-10 of zero"
        )
    coeff = spectrum.overlap_left(np.asarray(operand_vec, dtype=complex))
    inv = np.zeros_like(lam)
    mask = np.arange(lam.size) != i0
    inv[mask] = 1.0 / lam[mask]
    x = spectrum.right_vectors @ (coeff * inv)
    # enforce the tracelessness property exactly
    dim = liouvillian.cutoff
    tr = np.trace(unvec(x, dim))
    x = x - np.asarray(steady_state_vec, dtype=complex) * tr
    return x


def metric_drazin(
    liouvillian: FockLiouvillian,
    pi: np.ndarray,
    dpi_dg: np.ndarray,
    dlogpi_dg: np.ndarray,
    spectrum: Optional[BiorthogonalSpectrum] = None,
) -> float:
    """Trace form of the metric: zeta = -Tr[(d log pi/dg) L+ (d pi/dg)]."""
    x = drazin_apply(liouvillian, vec(pi), vec(dpi_dg), spectrum=spectrum)
    val = -np.trace(dlogpi_dg @ unvec(x, liouvillian.cutoff))
    if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
        raise SolveFailure(f"metric has imaginary residue {val.imag:.3e}")
    out = float(val.real)
    if out < -1e-8:
        raise SolveFailure(f"metric came out negative: {out:.3e}")
    return max(out, 0.0)


def density_matrix_derivatives(
    state_of_g: Callable[[float], np.ndarray],
    g: float,
    fd_step: Optional[float] = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(pi, d pi/dg, d log pi/dg) by central differences of a state family."""
    h = default_fd_step(g) if fd_step is None else float(fd_step)
    pi = state_of_g(g)
    up = state_of_g(g + h)
    dn = state_of_g(g - h)
    dpi = (up - dn) / (2.0 * h)
    dpi = 0.5 * (dpi + dpi.conj().T)
    dpi -= np.trace(dpi) / dpi.shape[0] * np.eye(dpi.shape[0])
    dlog = (floored_log(up) - floored_log(dn)) / (2.0 * h)
    dlog = 0.5 * (dlog + dlog.conj().T)
    return pi, dpi, dlog


def metric_point(
    model_family: Callable[[float], QuadraticModel],
    g: float,
    fd_step: Optional[float] = None,
    check_richardson: bool = False,
) -> MetricPoint:
    """Gap, KMB QFI, metric and relaxation time of a Gaussian family at g."""
    model = model_family(g)
    dd = build_drift_diffusion(model)
    state = steady_state(dd)
    chi = chi_matrix(model_family, g, fd_step=fd_step, check_richardson=check_richardson)
    qfi = qfi_kmb_gaussian(state, chi)
    zeta = metric_gaussian(state, dd, chi, jump_coefficient_vectors(model))
    tau = zeta / qfi if qfi > 0.0 else float("nan")
    return MetricPoint(g=g, zeta=zeta, qfi_kmb=qfi, tau_g=tau, gap=liouvillian_gap(dd))
