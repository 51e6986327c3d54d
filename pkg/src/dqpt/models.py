"""Concrete model builders: the Gaussian open Dicke model in the thermodynamic
limit and the Fock-space open Kerr parametric oscillator.

The Dicke model lives in the normal phase (g < g_c) as a two-mode quadratic
Lindblad generator; the Kerr oscillator is a single driven nonlinear mode with
one-photon loss, whose inverse nonlinearity 1/U plays the role of system size
for finite-size scaling.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import CutoffTooSmall, SolveFailure
from .fock import (
    LEAK_TOL,
    fock_operators,
    gap_arnoldi,
    liouvillian_sparse,
    steady_state_from_matrix,
)
from .gaussian import QuadraticModel, build_drift_diffusion
from .geometry import density_matrix_derivatives, qfi_kmb_density_matrix

__all__ = [
    "DickeParams",
    "KerrParams",
    "KerrSweepPoint",
    "KerrSweep",
    "dicke_model",
    "dicke_critical_coupling",
    "dicke_family",
    "kerr_model",
    "kerr_critical_point",
    "kerr_control_sweep",
]


@dataclass(frozen=True)
class DickeParams:
    """Open Dicke model in the thermodynamic limit (normal phase)."""

    omega_c: float = 1.0
    omega_z: float = 1.0
    kappa: float = 0.2
    g: float = 0.0

    def __post_init__(self):
        if self.omega_c <= 0.0 or self.omega_z <= 0.0:
            raise ValueError("frequencies must be positive")
        if self.kappa < 0.0:
            raise ValueError("decay rate must be nonnegative")
        if self.g < 0.0:
            raise ValueError("coupling must be nonnegative")


def dicke_model(params: DickeParams) -> QuadraticModel:
    """Two-mode quadratic generator of the open Dicke normal phase.

    Couplings: A = [[omega_c, g], [g, omega_z]], pairing B = [[0, g], [g, 0]],
    cavity loss Gamma = diag(2 kappa, 0) with no gain.
    """
    g = params.g
    A = np.array([[params.omega_c, g], [g, params.omega_z]])
    B = np.array([[0.0, g], [g, 0.0]])
    gamma_minus = np.diag([2.0 * params.kappa, 0.0])
    gamma_plus = np.zeros((2, 2))
    return QuadraticModel(
        n_modes=2, A=A, B=B, gamma_minus=gamma_minus, gamma_plus=gamma_plus, g=g
    )


def dicke_critical_coupling(params: DickeParams) -> float:
    """Critical coupling g_c = (1/2) sqrt((omega_c^2 + kappa^2) omega_z / omega_c).

    Self-checks that the drift matrix is singular there.
    """
    gc = 0.5 * np.sqrt(
        (params.omega_c**2 + params.kappa**2) / params.omega_c * params.omega_z
    )
    dd = build_drift_diffusion(dicke_model(replace(params, g=gc)))
    det = float(np.linalg.det(dd.W))
    if abs(det) > 1e-8:
        raise SolveFailure(f"det W(g_c) = {det:.3e}, expected 0 within 1e-8")
    return float(gc)


def dicke_family(params: DickeParams) -> Callable[[float], QuadraticModel]:
    """The one-parameter family g -> QuadraticModel at fixed (omega_c, omega_z, kappa)."""

    def family(g: float) -> QuadraticModel:
        return dicke_model(replace(params, g=g))

    return family


@dataclass(frozen=True)
class KerrParams:
    """Kerr parametric oscillator with one-photon loss.

    ``control`` names the swept parameter; the finite-size knob is 1/kerr_U
    (the thermodynamic limit is 1/U -> infinity). The default sweep drives
    ``drive_G`` through its threshold at fixed negative detuning: for
    detuning = -sqrt(G_c^2 - kappa^2/4) the vacuum destabilizes continuously
    at G_c (supercritical pitchfork), which is the second-order transition the
    finite-size scaling analysis requires. Sweeping the detuning at fixed
    drive instead runs along a bistable line where the ordered branch
    coexists with the vacuum and the gap is exponentially small on both
    sides, so no algebraic scaling window exists there.
    """

    detuning: float = -1.4142135623730951  # -sqrt(1.5^2 - 1/4): G_c = 1.5
    kerr_U: float = 0.1
    drive_G: complex = 1.5
    kappa: float = 1.0
    control: str = "drive_G"

    def __post_init__(self):
        if self.kerr_U <= 0.0:
            raise ValueError("Kerr nonlinearity must be positive")
        if self.kappa <= 0.0:
            raise ValueError("loss rate must be positive")
        if self.control not in ("detuning", "drive_G"):
            raise ValueError(f"unsupported control parameter {self.control!r}")

    def mean_field_threshold(self) -> float:
        """Drive amplitude where the vacuum destabilizes, at U -> 0."""
        return float(np.sqrt(self.detuning**2 + self.kappa**2 / 4.0))

    def at_control(self, value: float) -> "KerrParams":
        return replace(self, **{self.control: value})

    @property
    def control_value(self) -> float:
        v = getattr(self, self.control)
        return float(np.real(v))

    @property
    def size(self) -> float:
        """Effective system size 1/U used in finite-size scaling."""
        return 1.0 / self.kerr_U


def kerr_model(
    params: KerrParams, cutoff: int
) -> tuple[np.ndarray, list[tuple[np.ndarray, float]]]:
    """Fock Hamiltonian and jump list of the Kerr oscillator.

    H = -Delta a^dag a + (U/2) a^dag^2 a^2 + (G a^dag^2 + G* a^2)/2, with a
    single loss channel (a, kappa).
    """
    ops = fock_operators(cutoff)
    a, ad = ops.a, ops.a_dagger
    G = complex(params.drive_G)
    H = (
        -params.detuning * ops.number
        + 0.5 * params.kerr_U * (ad @ ad @ a @ a)
        + 0.5 * (G * ad @ ad + np.conj(G) * a @ a)
    )
    return H, [(a, params.kappa)]


def _kerr_sparse(params: KerrParams, cutoff: int) -> sp.csr_matrix:
    H, jumps = kerr_model(params, cutoff)
    H_s = sp.csr_matrix(H)
    return liouvillian_sparse(H_s, [(sp.csr_matrix(op), rate) for op, rate in jumps])


def _kerr_steady(params: KerrParams, cutoff: int, leak_tol: float) -> np.ndarray:
    L = _kerr_sparse(params, cutoff)
    return steady_state_from_matrix(L, leak_tol=leak_tol)


def _kerr_gap(params: KerrParams, cutoff: int) -> float:
    return gap_arnoldi(_kerr_sparse(params, cutoff), cutoff)


def _kerr_qfi(params: KerrParams, control: float, cutoff: int, fd_step: float) -> float:
    def st(x: float) -> np.ndarray:
        return _kerr_steady(params.at_control(x), cutoff, leak_tol=1.0)

    pi, dpi, _ = density_matrix_derivatives(st, control, fd_step=fd_step)
    return qfi_kmb_density_matrix(pi, dpi)


def _golden_minimize(f, lo: float, hi: float, tol: float) -> float:
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return float(0.5 * (a + b))


def kerr_critical_point(
    params: KerrParams,
    cutoff: int,
    bracket: Optional[tuple[float, float]] = None,
    coarse: int = 9,
    tol: float = 2e-3,
    method: str = "qfi-peak",
    fd_step: float = 1e-5,
) -> float:
    """Finite-size critical control value at one system size.

    ``method="qfi-peak"`` (default) locates the maximum of the KMB QFI by a
    coarse scan plus golden-section refinement; ``method="gap-min"`` does the
    same on the Arnoldi gap. The QFI peak is the robust locator here: past
    the pitchfork the gap stays exponentially small throughout the ordered
    phase, so its minimum does not single out the transition, whereas the
    susceptibility peak does.
    """
    if bracket is None:
        mf = params.mean_field_threshold()
        # the interaction blueshift pushes the finite-size point above the
        # mean-field threshold by O(U)
        bracket = (mf - 0.15 * mf, mf + 0.8 * mf * min(1.0, 8.0 * params.kerr_U) + 0.15 * mf)

    if method == "qfi-peak":
        def objective(x: float) -> float:
            return -_kerr_qfi(params, x, cutoff, fd_step)
    elif method == "gap-min":
        def objective(x: float) -> float:
            return _kerr_gap(params.at_control(x), cutoff)
    else:
        raise ValueError(f"unknown critical-point method {method!r}")

    xs = np.linspace(bracket[0], bracket[1], coarse)
    vals = np.array([objective(x) for x in xs])
    i = int(np.argmin(vals))
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, len(xs) - 1)]
    return _golden_minimize(objective, lo, hi, tol)


@dataclass(frozen=True)
class KerrSweepPoint:
    """One control value of a finite-size sweep."""

    control: float
    distance: float
    gap: float
    qfi: float
    mean_photons: float


@dataclass(frozen=True)
class KerrSweep:
    """Raw finite-size-scaling data at one system size 1/U.

    ``qfi_at_critical`` is the QFI at the located finite-size critical point;
    ``qfi_at_threshold`` the QFI at the size-independent mean-field threshold
    (the infinite-size critical point), which is what the at-criticality
    scaling law N^(alpha/nu*) refers to.
    """

    size: float
    cutoff: int
    critical_control: float
    points: list[KerrSweepPoint]
    qfi_at_critical: float
    qfi_at_threshold: float

    def distances(self) -> np.ndarray:
        return np.array([p.distance for p in self.points])

    def qfis(self) -> np.ndarray:
        return np.array([p.qfi for p in self.points])


def kerr_control_sweep(
    params: KerrParams,
    control_values: Sequence[float],
    cutoff: int,
    fd_step: float = 1e-5,
    leak_tol: float = LEAK_TOL,
    critical_control: Optional[float] = None,
) -> KerrSweep:
    """Steady-state gap and KMB QFI along a control sweep at fixed 1/U.

    Produces the raw data for finite-size scaling: the gap curve, the QFI
    curve, the distance of each point to the finite-size critical point (the
    gap minimum), and the QFI evaluated at the critical point itself. Points
    whose steady state leaks past the truncation raise CutoffTooSmall, tagged
    with the size.
    """
    if critical_control is None:
        critical_control = kerr_critical_point(params, cutoff)

    def state_at(x: float) -> np.ndarray:
        return _kerr_steady(params.at_control(x), cutoff, leak_tol)

    def qfi_at(x: float) -> tuple[float, float]:
        try:
            pi, dpi, _ = density_matrix_derivatives(state_at, x, fd_step=fd_step)
        except CutoffTooSmall as exc:
            raise CutoffTooSmall(f"size 1/U = {params.size:g}: {exc}") from exc
        nbar = float(np.real(np.trace(pi @ np.diag(np.arange(cutoff, dtype=float)))))
        return qfi_kmb_density_matrix(pi, dpi), nbar

    points = []
    for x in control_values:
        q, nbar = qfi_at(float(x))
        points.append(
            KerrSweepPoint(
                control=float(x),
                distance=abs(float(x) - critical_control),
                gap=_kerr_gap(params.at_control(float(x)), cutoff),
                qfi=q,
                mean_photons=nbar,
            )
        )
    qfi_crit, _ = qfi_at(critical_control)
    qfi_thresh, _ = qfi_at(params.mean_field_threshold())
    return KerrSweep(
        size=params.size,
        cutoff=cutoff,
        critical_control=critical_control,
        points=points,
        qfi_at_critical=qfi_crit,
        qfi_at_threshold=qfi_thresh,
    )
