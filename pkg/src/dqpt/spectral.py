"""Biorthogonal eigenanalysis of drift matrices and vectorized Liouvillians.

Provides the spectral gap (for Gaussian dynamics the gap of the full generator
equals min |Re| over the drift-matrix spectrum), its derivative along a
control parameter, the integral relaxation time from the mode expansion of a
correlation function, and the projection of a covariance matrix onto the
slowest-decaying (soft) mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DefectiveMatrix,
    DegenerateOverlap,
    DegenerateSoftMode,
    SolveFailure,
    UnstableDrift,
)
from .gaussian import CovarianceState, DriftDiffusion, QuadraticModel, build_drift_diffusion

__all__ = [
    "BiorthogonalSpectrum",
    "GapCurve",
    "KmbWeights",
    "biorthogonal_decompose",
    "liouvillian_gap",
    "gap_curve",
    "kmb_weights",
    "integral_relaxation_time",
    "soft_mode_projection",
]


@dataclass(frozen=True)
class BiorthogonalSpectrum:
    """Eigenvalues with paired right/left eigenvectors, w_j^dag v_i = delta_ij.

    ``right_vectors`` holds v_i as columns, ``left_vectors`` holds w_i as
    columns, and ``condition_estimate`` is the condition number of the right
    eigenvector matrix (1 for a normal matrix).
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    condition_estimate: float

    def overlap_left(self, x: np.ndarray) -> np.ndarray:
        """Components <w_i | x> of a vector in the right-eigenvector basis."""
        return self.left_vectors.conj().T @ x


@dataclass(frozen=True)
class GapCurve:
    """Spectral gap and its numerical derivative along a parameter grid."""

    g_values: np.ndarray
    gaps: np.ndarray
    d_gap_dg: np.ndarray


_DEFECT_COND = 1e12


def biorthogonal_decompose(matrix: np.ndarray) -> BiorthogonalSpectrum:
    """Eigendecompose a (generally non-normal) matrix with biorthonormal pairs.

    Left eigenvectors are read off the inverse of the right eigenvector
    matrix, which pairs them with their eigenvalues and enforces
    w_j^dag v_i = delta_ij in one step, including inside degenerate
    eigenvalue clusters. Raises DefectiveMatrix when the eigenvector matrix
    is numerically singular.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DefectiveMatrix(f"expected a square matrix, got shape {m.shape}")
    eigenvalues, V = np.linalg.eig(m)
    cond = float(np.linalg.cond(V))
    if not np.isfinite(cond) or cond > _DEFECT_COND:
        raise DefectiveMatrix(
            f"eigenvector matrix condition {cond:.3e} exceeds {_DEFECT_COND:.0e}; "
            "matrix is defective to working precision"
        )
    try:
        Vinv = np.linalg.inv(V)
    except np.linalg.LinAlgError as exc:
        raise DefectiveMatrix("eigenvector matrix is singular") from exc
    left = Vinv.conj().T  # columns w_i with w_i^dag = row i of V^{-1}
    return BiorthogonalSpectrum(
        eigenvalues=eigenvalues,
        right_vectors=V,
        left_vectors=left,
        condition_estimate=cond,
    )


def liouvillian_gap(dd: DriftDiffusion) -> float:
    """Gap of the full Gaussian generator: min over spec(W) of |Re(w)|.

    Every generator eigenvalue is a nonnegative integer combination of the
    drift-spectrum values, so the smallest drift decay rate is the gap.
    """
    ev = np.linalg.eigvals(dd.W)
    if ev.real.min() <= 0.0:
        raise UnstableDrift(
            f"drift not strictly stable: min Re(spec W) = {ev.real.min():.3e}"
        )
    return float(np.abs(ev.real).min())


def gap_curve(
    model_family: Callable[[float], QuadraticModel],
    g_values: Sequence[float],
) -> GapCurve:
    """Evaluate the gap along a parameter grid, with central-difference slope.

    One-sided differences are used at the grid ends. UnstableDrift from any
    grid point is re-raised with the offending g attached.
    """
    g = np.asarray(g_values, dtype=float)
    gaps = np.empty_like(g)
    for i, gi in enumerate(g):
        try:
            gaps[i] = liouvillian_gap(build_drift_diffusion(model_family(gi)))
        except UnstableDrift as exc:
            raise UnstableDrift(f"unstable drift at g = {gi!r}: {exc}") from exc
    d = np.gradient(gaps, g)  # central differences inside, one-sided at ends
    return GapCurve(g_values=g, gaps=gaps, d_gap_dg=d)


@dataclass(frozen=True)
class KmbWeights:
    """Kubo-Mori inner-product data for a fixed full-rank density matrix.

    ``basis`` diagonalizes the state, ``log_mean[i, j]`` is the logarithmic
    mean of the eigenvalue pair (p_i, p_j), so that
    <A, B> = sum_ij log_mean_ij conj(Atilde_ij) Btilde_ij with
    Xtilde = basis^dag X basis.
    """

    basis: np.ndarray
    probs: np.ndarray
    log_mean: np.ndarray

    def inner(self, a: np.ndarray, b: np.ndarray) -> complex:
        at = self.basis.conj().T @ a @ self.basis
        bt = self.basis.conj().T @ b @ self.basis
        return complex(np.sum(self.log_mean * at.conj() * bt))


def kmb_weights(pi: np.ndarray, floor: float = 1e-14) -> KmbWeights:
    """Build KMB inner-product weights from a steady-state density matrix."""
    p, U = np.linalg.eigh(0.5 * (pi + pi.conj().T))
    p = np.clip(p, floor, None)
    p = p / p.sum()
    P = p[:, None] * np.ones((1, len(p)))
    Q = P.T
    with np.errstate(divide="ignore", invalid="ignore"):
        lm = (P - Q) / (np.log(P) - np.log(Q))
    same = np.abs(P - Q) < 1e-30
    lm[same] = P[same]
    return KmbWeights(basis=U, probs=p, log_mean=lm)


def integral_relaxation_time(
    liouvillian_spectrum: BiorthogonalSpectrum,
    F_g: np.ndarray,
    qfi_weights: KmbWeights,
) -> float:
    """Integral relaxation time from the mode expansion of the autocorrelation.

    tau = -[sum_{n>0} lambda_n^{-1} <w_n|F> <F, r_n>] / [sum_{n>0} <w_n|F> <F, r_n>],
    where <.,.> is the KMB inner product in the steady state and the n = 0
    term (the steady state itself) is excluded. F_g is the vectorized
    logarithmic-derivative operator, in the same column-stacking convention as
    the spectrum.
    """
    lam = liouvillian_spectrum.eigenvalues
    dim = int(round(np.sqrt(lam.size)))
    if dim * dim != lam.size:
        raise SolveFailure("spectrum does not act on a vectorized operator space")
    f_vec = np.asarray(F_g, dtype=complex).ravel()
    f_mat = f_vec.reshape(dim, dim, order="F")
    i0 = int(np.argmin(np.abs(lam)))

    left_overlaps = liouvillian_spectrum.overlap_left(f_vec)
    num = 0.0 + 0.0j
    den = 0.0 + 0.0j
    scale = 0.0
    for n_idx in range(lam.size):
        if n_idx == i0:
            continue
        r_mat = liouvillian_spectrum.right_vectors[:, n_idx].reshape(dim, dim, order="F")
        c = left_overlaps[n_idx] * qfi_weights.inner(f_mat, r_mat)
        num += c / lam[n_idx]
        den += c
        scale += abs(c)
    if abs(den) < 1e-12 * max(scale, 1e-300):
        raise DegenerateOverlap(
            f"denominator {abs(den):.3e} below 1e-12 of overlap scale {scale:.3e}"
        )
    tau = -num / den
    return float(tau.real)


def _soft_pair_index(eigenvalues: np.ndarray, tie_tol: float = 1e-10) -> int:
    """Index of the smallest-|Re| eigenvalue; error out on a branch tie.

    A complex-conjugate partner does not count as a tie; any other eigenvalue
    whose |Re| matches the gap within tie_tol does.
    """
    re = np.abs(eigenvalues.real)
    i_min = int(np.argmin(re))
    lam = eigenvalues[i_min]
    for j, other in enumerate(eigenvalues):
        if j == i_min:
            continue
        if abs(re[j] - re[i_min]) < tie_tol:
            if abs(other - lam.conjugate()) < tie_tol and abs(lam.imag) > tie_tol:
                continue  # conjugate partner of the same branch
            raise DegenerateSoftMode(
                f"eigenvalues {lam} and {other} tie for the gap within {tie_tol:.0e}"
            )
    return i_min


def soft_mode_projection(
    dd: DriftDiffusion, theta: CovarianceState
) -> tuple[np.ndarray, float]:
    """Covariance of the slowest-decaying mode in canonical coordinates.

    Identifies the soft eigenvalue of W, builds a canonically conjugate
    quadrature pair (u, -Omega u) from the principal real direction of its
    right eigenvector, and returns the projected 2x2 covariance matrix
    together with its symplectic eigenvalue nu_s = sqrt(det Theta_s).

    The scalar steady-state identity (w_s^dag Theta w_s) * 2 Re(lambda_s)
    = w_s^dag Y w_s is verified to relative 1e-6 as a consistency gate.
    """
    spec = biorthogonal_decompose(dd.W)
    i_s = _soft_pair_index(spec.eigenvalues)
    lam_s = spec.eigenvalues[i_s]
    v_s = spec.right_vectors[:, i_s]
    w_s = spec.left_vectors[:, i_s]

    theta_scalar = (w_s.conj() @ theta.theta @ w_s).real
    y_scalar = (w_s.conj() @ dd.Y @ w_s).real
    lhs = theta_scalar * 2.0 * lam_s.real
    if abs(lhs - y_scalar) > 1e-6 * max(abs(y_scalar), 1e-300):
        raise SolveFailure(
            "steady-state projection identity violated: "
            f"theta_s * 2 Re(lambda_s) = {lhs:.12e} vs y_s = {y_scalar:.12e}"
        )

    # principal real direction of span{Re v_s, Im v_s}
    basis = np.column_stack([v_s.real, v_s.imag])
    u_dirs, svals, _ = np.linalg.svd(basis, full_matrices=False)
    u = u_dirs[:, 0]
    w = -dd.Omega @ u  # u^T Omega w = u^T u = 1: canonical pair
    th = theta.theta
    theta_s = np.array(
        [
            [u @ th @ u, u @ th @ w],
            [w @ th @ u, w @ th @ w],
        ]
    )
    det = float(np.linalg.det(theta_s))
    if det <= 0.0:
        raise SolveFailure(f"projected covariance has nonpositive det {det:.3e}")
    return theta_s, float(np.sqrt(det))
