"""Gaussian-state representation and dynamics for quadratic bosonic Lindblad models.

Conventions (used everywhere in this package):

* quadratures are ordered ``R = (q_1..q_n, p_1..p_n)`` with
  ``q = (b + b^dag)/sqrt(2)``, ``p = i(b^dag - b)/sqrt(2)``;
* the symplectic form is ``Omega = [[0, I], [-I, 0]]`` (i.e. ``i sigma_y (x) 1_n``);
* the covariance matrix ``Theta_ij = (i/2) Omega_ij + <R_j R_i>`` (zero mean) obeys
  ``dTheta/dt = -(W Theta + Theta W^T) + Y``;
* a zero-mean Gaussian state is ``rho = exp(-R^T M R / 2) / Z`` with
  ``Z = sqrt(det(Theta + i Omega/2))`` and ``M = 2 i Omega acoth(2 Theta i Omega)``.

Vacuum corresponds to ``Theta = I/2``; a direction is pure when its symplectic
eigenvalue equals 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import cho_factor, cho_solve, solve_continuous_lyapunov

from .errors import (
    NonHermitianInput,
    NonPhysical,
    SingularReference,
    SingularState,
    SolveFailure,
    ToleranceFailure,
    UnstableDrift,
)

__all__ = [
    "QuadraticModel",
    "DriftDiffusion",
    "CovarianceState",
    "GaussianExponentForm",
    "symplectic_form",
    "build_drift_diffusion",
    "jump_coefficient_vectors",
    "steady_state",
    "evolve_covariance",
    "symplectic_eigenvalues",
    "theta_to_M",
    "m_to_theta",
    "log_partition",
    "relative_entropy",
    "von_neumann_entropy",
]

#: symplectic eigenvalues within this distance of 1/2 are treated as pure
EPS_NU = 1e-12

_SYM_TOL = 1e-10


def symplectic_form(n_modes: int) -> np.ndarray:
    """Return Omega = [[0, I], [-I, 0]] for the (q_1..q_n, p_1..p_n) ordering."""
    O = np.zeros((2 * n_modes, 2 * n_modes))
    O[:n_modes, n_modes:] = np.eye(n_modes)
    O[n_modes:, :n_modes] = -np.eye(n_modes)
    return O


def _as_matrix(x, n: int, name: str) -> np.ndarray:
    m = np.atleast_2d(np.asarray(x, dtype=complex))
    if m.shape != (n, n):
        raise NonHermitianInput(f"{name} must be {n}x{n}, got {m.shape}")
    return m


@dataclass(frozen=True)
class QuadraticModel:
    """One-parameter quadratic bosonic Lindblad generator.

    ``A`` holds the number-conserving coefficients (Hermitian), ``B`` the
    pairing coefficients (symmetric); ``gamma_minus``/``gamma_plus`` are the
    diagonal loss/gain rate matrices. ``g`` records the control-parameter
    value this instance was built at.
    """

    n_modes: int
    A: np.ndarray
    B: np.ndarray
    gamma_minus: np.ndarray
    gamma_plus: np.ndarray
    g: float = 0.0

    def __post_init__(self):
        n = self.n_modes
        if n < 1:
            raise NonHermitianInput("n_modes must be a positive integer")
        A = _as_matrix(self.A, n, "A")
        B = _as_matrix(self.B, n, "B")
        gm = np.asarray(self.gamma_minus, dtype=float)
        gp = np.asarray(self.gamma_plus, dtype=float)
        if np.abs(A - A.conj().T).max() > _SYM_TOL:
            raise NonHermitianInput("A is not Hermitian within tolerance")
        if np.abs(B - B.T).max() > _SYM_TOL:
            raise NonHermitianInput("B is not symmetric within tolerance")
        for name, r in (("gamma_minus", gm), ("gamma_plus", gp)):
            if r.shape != (n, n):
                raise NonHermitianInput(f"{name} must be {n}x{n}")
            if np.abs(r - np.diag(np.diag(r))).max() > 0.0:
                raise NonHermitianInput(f"{name} must be diagonal")
            if np.diag(r).min() < 0.0:
                raise NonHermitianInput(f"{name} must have nonnegative entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "gamma_minus", gm)
        object.__setattr__(self, "gamma_plus", gp)


@dataclass(frozen=True)
class DriftDiffusion:
    """Drift/diffusion pair (W, Y) plus the quadrature Hamiltonian H_R and Omega."""

    W: np.ndarray
    Y: np.ndarray
    H_R: np.ndarray
    Omega: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.W.shape[0] // 2


@dataclass(frozen=True)
class CovarianceState:
    """Zero-mean Gaussian state, represented by its 2n x 2n covariance matrix."""

    theta: np.ndarray
    n_modes: int = field(default=0)

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        if th.ndim != 2 or th.shape[0] != th.shape[1] or th.shape[0] % 2:
            raise NonPhysical(f"covariance matrix must be 2n x 2n, got {th.shape}")
        n = th.shape[0] // 2
        if self.n_modes and self.n_modes != n:
            raise NonPhysical("n_modes inconsistent with theta shape")
        if np.abs(th - th.T).max() > _SYM_TOL * max(1.0, np.abs(th).max()):
            raise NonPhysical("covariance matrix is not symmetric within tolerance")
        object.__setattr__(self, "theta", 0.5 * (th + th.T))
        object.__setattr__(self, "n_modes", n)


@dataclass(frozen=True)
class GaussianExponentForm:
    """Exponent matrix M and log partition function of exp(-R^T M R / 2)/Z."""

    M: np.ndarray
    logZ: float

    @property
    def n_modes(self) -> int:
        return self.M.shape[0] // 2


def build_drift_diffusion(model: QuadraticModel) -> DriftDiffusion:
    """Assemble (W, Y, H_R, Omega) from a quadratic model.

    H_R is the real symmetric quadrature representation of the Hamiltonian,
    W = -Omega H_R + (1/2) 1_2 (x) Gamma with Gamma = gamma_minus - gamma_plus,
    and Y = (1/2) 1_2 (x) (gamma_plus + gamma_minus).
    """
    n = model.n_modes
    A, B = model.A, model.B
    s_x = np.array([[0.0, 1.0], [1.0, 0.0]])
    s_y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
    s_z = np.array([[1.0, 0.0], [0.0, -1.0]])
    H = 0.5 * (
        np.kron(np.eye(2), A + A.T)
        + np.kron(s_z, B + B.conj())
        + np.kron(s_y, A.T - A)
        - 1.0j * np.kron(s_x, B - B.conj())
    )
    if np.abs(H.imag).max() > 1e-12:
        raise NonHermitianInput("quadrature Hamiltonian has imaginary residue > 1e-12")
    H_R = 0.5 * (H.real + H.real.T)
    Omega = symplectic_form(n)
    Gamma = model.gamma_minus - model.gamma_plus
    W = -Omega @ H_R + 0.5 * np.kron(np.eye(2), Gamma)
    Y = 0.5 * np.kron(np.eye(2), model.gamma_plus + model.gamma_minus)
    return DriftDiffusion(W=W, Y=0.5 * (Y + Y.T), H_R=H_R, Omega=Omega)


def jump_coefficient_vectors(model: QuadraticModel) -> list[np.ndarray]:
    """Quadrature coefficient vectors c_i of the linear jump operators L_i = c_i^T R.

    A loss channel on mode k maps to sqrt(gamma^-/2) (e_qk + i e_pk), a gain
    channel to sqrt(gamma^+/2) (e_qk - i e_pk). Zero-rate channels are omitted.
    """
    n = model.n_modes
    out = []
    for k in range(n):
        gm = model.gamma_minus[k, k]
        gp = model.gamma_plus[k, k]
        if gm > 0.0:
            c = np.zeros(2 * n, dtype=complex)
            c[k] = np.sqrt(gm / 2.0)
            c[n + k] = 1.0j * np.sqrt(gm / 2.0)
            out.append(c)
        if gp > 0.0:
            c = np.zeros(2 * n, dtype=complex)
            c[k] = np.sqrt(gp / 2.0)
            c[n + k] = -1.0j * np.sqrt(gp / 2.0)
            out.append(c)
    return out


def _require_stable(W: np.ndarray) -> None:
    # stability = all eigenvalues of -W strictly in the left half plane
    re = np.linalg.eigvals(W).real
    if re.min() <= 0.0:
        raise UnstableDrift(
            f"drift not strictly stable: min Re(spec W) = {re.min():.3e}"
        )


def steady_state(dd: DriftDiffusion) -> CovarianceState:
    """Solve the steady-state Lyapunov equation W Theta + Theta W^T = Y."""
    _require_stable(dd.W)
    try:
        theta = solve_continuous_lyapunov(dd.W, dd.Y)
    except Exception as exc:  # scipy raises LinAlgError on Schur failure
        raise SolveFailure(f"Lyapunov solver failed: {exc}") from exc
    theta = 0.5 * (theta + theta.T)
    resid = np.linalg.norm(dd.W @ theta + theta @ dd.W.T - dd.Y)
    # backward-error criterion: the residual scales with ||W|| ||Theta|| near
    # criticality, where ||Theta|| diverges
    scale = np.linalg.norm(dd.Y) + 2.0 * np.linalg.norm(dd.W) * np.linalg.norm(theta)
    if not np.isfinite(resid) or resid > 1e-10 * scale:
        raise SolveFailure(
            f"Lyapunov residual {resid:.3e} exceeds 1e-10 * {scale:.3e}"
        )
    return CovarianceState(theta=theta)


DriftDiffusionLike = Union[DriftDiffusion, Callable[[float], DriftDiffusion]]


def evolve_covariance(
    dd_of_t: DriftDiffusionLike,
    theta0: CovarianceState,
    t_grid: Sequence[float],
    rtol: float = 1e-9,
    atol: float = 1e-12,
    method: str = "DOP853",
) -> list[CovarianceState]:
    """Integrate dTheta/dt = -(W Theta + Theta W^T) + Y over t_grid.

    ``dd_of_t`` is either a fixed DriftDiffusion or a callable t -> DriftDiffusion.
    The first grid point is the initial time. Outputs are symmetrized.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0.0):
        raise ToleranceFailure("t_grid must be strictly increasing with >= 2 points")

    if isinstance(dd_of_t, DriftDiffusion):
        W_c, Y_c = dd_of_t.W, dd_of_t.Y

        def wy(_t):
            return W_c, Y_c
    else:
        def wy(tt):
            dd = dd_of_t(tt)
            return dd.W, dd.Y

    dim = theta0.theta.shape[0]

    def rhs(tt, y):
        W, Y = wy(tt)
        th = y.reshape(dim, dim)
        return (-(W @ th + th @ W.T) + Y).ravel()

    sol = solve_ivp(
        rhs, (t[0], t[-1]), theta0.theta.ravel(),
        t_eval=t, method=method, rtol=rtol, atol=atol,
    )
    if not sol.success:
        raise ToleranceFailure(f"covariance integration failed: {sol.message}")
    out = []
    for k in range(sol.y.shape[1]):
        th = sol.y[:, k].reshape(dim, dim)
        out.append(CovarianceState(theta=0.5 * (th + th.T)))
    return out


def symplectic_eigenvalues(state: CovarianceState, tol: float = 1e-9) -> np.ndarray:
    """Positive spectrum {nu_i} of i Omega Theta, sorted descending.

    Each doubly degenerate value is reported once. Raises NonPhysical when a
    value falls below 1/2 - tol instead of clipping it.
    """
    n = state.n_modes
    O = symplectic_form(n)
    ev = np.linalg.eigvals(1.0j * O @ state.theta)
    # spectrum is (+nu, -nu) pairs: keep one representative per pair
    nus = np.sort(np.abs(ev.real))[::-1][::2]
    if nus.min() < 0.5 - tol:
        raise NonPhysical(
            f"symplectic eigenvalue {nus.min():.12g} below 1/2 - {tol:.1e}"
        )
    return nus


def _matrix_function_pair(K: np.ndarray, f) -> np.ndarray:
    """Apply scalar function f to the (diagonalizable) matrix K via eigendecomposition."""
    ev, V = np.linalg.eig(K)
    return V @ (f(ev)[:, None] * np.linalg.inv(V))


def theta_to_M(state: CovarianceState, eps_nu: float = EPS_NU) -> GaussianExponentForm:
    """Exponent form of a Gaussian state: M = 2 i Omega acoth(2 Theta i Omega).

    Evaluated as 2 i Omega artanh(P) with P = (2 Theta i Omega)^{-1}, which
    keeps the spectrum of the matrix argument bounded by 1 and preserves the
    small exponent eigenvalues of nearly-critical states. Raises SingularState
    when any direction is pure to within eps_nu.
    """
    n = state.n_modes
    O = symplectic_form(n)
    try:
        c = cho_factor(state.theta)
    except np.linalg.LinAlgError as exc:
        raise NonPhysical("covariance matrix is not positive definite") from exc
    theta_inv = cho_solve(c, np.eye(2 * n))
    P = 0.5j * O @ theta_inv  # = (2 Theta i Omega)^{-1}, eigenvalues +-1/(2 nu)
    ev, V = np.linalg.eig(P)
    # |eig(P)| = 1/(2 nu): the inverse spectrum stays O(1) however large Theta
    # grows, so the purity check is well conditioned near criticality
    nu_min = 0.5 / np.abs(ev.real).max()
    if nu_min < 0.5 - 1e-9:
        raise NonPhysical(f"symplectic eigenvalue {nu_min:.12g} below 1/2")
    if nu_min <= 0.5 + eps_nu:
        raise SingularState(
            f"state is pure in some direction (min nu = {nu_min:.15g})"
        )
    M = 2.0j * O @ (V @ (np.arctanh(ev)[:, None] * np.linalg.inv(V)))
    # the imaginary residue is 1e-10-clean for moderate states and grows with
    # the symplectic condition number; only flag genuine non-reality
    cond = np.linalg.cond(V)
    tol = max(1e-10, 1e-13 * cond) * max(1.0, np.abs(M.real).max())
    if np.abs(M.imag).max() > tol:
        raise SolveFailure(
            f"exponent matrix has imaginary residue {np.abs(M.imag).max():.3e}"
        )
    M = 0.5 * (M.real + M.real.T)
    logZ = log_partition(state)
    return GaussianExponentForm(M=M, logZ=logZ)


def m_to_theta(form: GaussianExponentForm) -> CovarianceState:
    """Invert the exponent form: Theta = (1/2) coth(i Omega M / 2) i Omega."""
    n = form.n_modes
    O = symplectic_form(n)
    X = 0.5j * O @ form.M

    def coth(z):
        return 1.0 / np.tanh(z)

    theta = 0.5 * _matrix_function_pair(X, coth) @ (1.0j * O)
    if np.abs(theta.imag).max() > 1e-10 * max(1.0, np.abs(theta.real).max()):
        raise SolveFailure("covariance reconstruction has imaginary residue")
    return CovarianceState(theta=0.5 * (theta.real + theta.real.T))


def log_partition(state: CovarianceState) -> float:
    """log Z = (1/2) log det(Theta + i Omega/2), via the Hermitian eigenvalues."""
    O = symplectic_form(state.n_modes)
    herm = state.theta + 0.5j * O
    ev = np.linalg.eigvalsh(herm)
    if ev.min() <= 0.0:
        raise SingularState(
            f"det(Theta + i Omega/2) not positive (min eigenvalue {ev.min():.3e})"
        )
    return 0.5 * float(np.sum(np.log(ev)))


def relative_entropy(rho: CovarianceState, sigma: CovarianceState) -> float:
    """Quantum relative entropy D(rho || sigma) of two zero-mean Gaussian states.

    D = -(1/2) Tr[(M - N) Theta_rho] - log(Z_rho / Z_sigma), in nats. The
    reference sigma must be strictly non-pure in every direction.
    """
    form_rho = theta_to_M(rho)
    try:
        form_sigma = theta_to_M(sigma)
    except (SingularState, NonPhysical) as exc:
        raise SingularReference(f"reference state is singular: {exc}") from exc
    d = (
        -0.5 * float(np.trace((form_rho.M - form_sigma.M) @ rho.theta))
        - form_rho.logZ
        + form_sigma.logZ
    )
    if d < -1e-10:
        raise SolveFailure(f"relative entropy came out negative: {d:.3e}")
    return d


def von_neumann_entropy(state: CovarianceState) -> float:
    """S = sum_j [(nu+1/2) ln(nu+1/2) - (nu-1/2) ln(nu-1/2)] over symplectic eigenvalues."""
    nus = symplectic_eigenvalues(state)
    s = 0.0
    for nu in nus:
        up = nu + 0.5
        dn = nu - 0.5
        s += up * np.log(up) - (dn * np.log(dn) if dn > 0.0 else 0.0)
    return float(s)
