"""Truncated-Fock-space Lindblad machinery for non-Gaussian models.

All vectorization is column-stacking: vec(A X B) = (B^T kron A) vec(X), with
vec(X) = X.ravel(order="F"). The vectorized identity is a left null vector of
every generator built here (trace preservation).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import eigs as sparse_eigs
from scipy.sparse.linalg import splu

from .errors import (
    CutoffTooSmall,
    MultipleSteadyStates,
    NonHermitianH,
    NonPhysical,
    RankDeficient,
    SolveFailure,
    ToleranceFailure,
)
from .spectral import BiorthogonalSpectrum, biorthogonal_decompose

__all__ = [
    "FockOperatorSet",
    "FockLiouvillian",
    "fock_operators",
    "vec",
    "unvec",
    "build_liouvillian",
    "fock_steady_state",
    "fock_gap_and_spectrum",
    "fock_relative_entropy",
    "fock_evolve",
    "floored_log",
    "thermal_state",
]

#: density-matrix eigenvalues below this are floored before taking logs
EIG_FLOOR = 1e-14

#: steady-state population allowed in the top 10% of Fock levels
LEAK_TOL = 1e-8


@dataclass(frozen=True)
class FockOperatorSet:
    """Ladder operators on a Fock space truncated at dimension ``cutoff``."""

    cutoff: int
    a: np.ndarray
    a_dagger: np.ndarray
    number: np.ndarray
    identity: np.ndarray


def fock_operators(cutoff: int) -> FockOperatorSet:
    """Annihilation/creation/number operators at the given truncation."""
    if cutoff < 2:
        raise ValueError("cutoff must be at least 2")
    a = np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1).astype(complex)
    ad = a.conj().T
    return FockOperatorSet(
        cutoff=cutoff,
        a=a,
        a_dagger=ad,
        number=ad @ a,
        identity=np.eye(cutoff, dtype=complex),
    )


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(x).ravel(order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(v).reshape((dim, dim), order="F")


@dataclass(frozen=True)
class FockLiouvillian:
    """Dense matrix of a vectorized Lindblad generator on a truncated Fock space."""

    matrix: np.ndarray
    cutoff: int
    convention: str = "column-stacking"

    @property
    def dim(self) -> int:
        return self.cutoff


def _dissipator_matrix(L: np.ndarray, identity: np.ndarray) -> np.ndarray:
    LdL = L.conj().T @ L
    return (
        np.kron(L.conj(), L)
        - 0.5 * np.kron(identity, LdL)
        - 0.5 * np.kron(LdL.T, identity)
    )


def build_liouvillian(
    H: np.ndarray, jumps: Sequence[tuple[np.ndarray, float]]
) -> FockLiouvillian:
    """Assemble -i[H, .] + sum_i kappa_i D[L_i] in column-stacking vectorization."""
    H = np.asarray(H, dtype=complex)
    d = H.shape[0]
    if H.shape != (d, d) or np.abs(H - H.conj().T).max() > 1e-10:
        raise NonHermitianH("Hamiltonian is not Hermitian within 1e-10")
    identity = np.eye(d, dtype=complex)
    L_mat = -1.0j * (np.kron(identity, H) - np.kron(H.T, identity))
    for op, rate in jumps:
        if rate < 0.0:
            raise NonPhysical(f"jump rate must be nonnegative, got {rate}")
        if rate == 0.0:
            continue
        L_mat = L_mat + rate * _dissipator_matrix(np.asarray(op, dtype=complex), identity)
    return FockLiouvillian(matrix=L_mat, cutoff=d)


def _leakage(rho: np.ndarray) -> float:
    pops = np.real(np.diag(rho))
    top = max(1, rho.shape[0] - int(np.ceil(0.9 * rho.shape[0])))
    return float(pops[-top:].sum())


def _check_leakage(rho: np.ndarray, leak_tol: float) -> None:
    leak = _leakage(rho)
    if leak > leak_tol:
        raise CutoffTooSmall(
            f"top-10% Fock population {leak:.3e} exceeds {leak_tol:.1e}"
        )


def _nullvector_dense(L: np.ndarray) -> np.ndarray:
    d2 = L.shape[0]
    dim = int(round(np.sqrt(d2)))
    A = L.copy()
    A[0, :] = vec(np.eye(dim)).conj()
    b = np.zeros(d2, dtype=complex)
    b[0] = 1.0
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        x, *_ = np.linalg.lstsq(A, b, rcond=None)
        return x


def _nullvector_sparse(L: sp.spmatrix) -> np.ndarray:
    d2 = L.shape[0]
    dim = int(round(np.sqrt(d2)))
    A = L.tolil(copy=True)
    A[0, :] = vec(np.eye(dim)).conj()
    b = np.zeros(d2, dtype=complex)
    b[0] = 1.0
    return splu(A.tocsc()).solve(b)


def steady_state_from_matrix(
    L: Union[np.ndarray, sp.spmatrix],
    *,
    leak_tol: float = LEAK_TOL,
    check_unique: bool = False,
    residual_tol: float = 1e-10,
) -> np.ndarray:
    """Null vector of a vectorized generator, Hermitized and trace-normalized."""
    sparse = sp.issparse(L)
    d2 = L.shape[0]
    dim = int(round(np.sqrt(d2)))
    x = _nullvector_sparse(L) if sparse else _nullvector_dense(np.asarray(L))
    rho = unvec(x, dim)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-300:
        raise SolveFailure("steady-state candidate has zero trace")
    rho = rho / tr

    resid = np.linalg.norm((L @ vec(rho)) if not sparse else L.dot(vec(rho)))
    if resid > residual_tol:
        raise SolveFailure(f"steady-state residual {resid:.3e} exceeds {residual_tol:.1e}")

    ev_min = np.linalg.eigvalsh(rho).min()
    if ev_min < -1e-10:
        raise SolveFailure(f"steady state has eigenvalue {ev_min:.3e} < -1e-10")

    if check_unique:
        mat = L if sparse else sp.csc_matrix(L)
        lam = sparse_eigs(
            mat, k=2, sigma=1e-6, which="LM", return_eigenvectors=False,
            maxiter=5000,
        )
        lam = np.sort(np.abs(lam))
        if lam[1] < 1e-10:
            raise MultipleSteadyStates(
                f"two eigenvalues within 1e-10 of zero: {lam}"
            )

    _check_leakage(rho, leak_tol)
    return rho


def fock_steady_state(
    L: FockLiouvillian,
    *,
    leak_tol: float = LEAK_TOL,
    check_unique: bool = False,
) -> np.ndarray:
    """Steady state of a Fock-space generator (see ``steady_state_from_matrix``)."""
    return steady_state_from_matrix(
        L.matrix, leak_tol=leak_tol, check_unique=check_unique
    )


def fock_gap_and_spectrum(
    L: FockLiouvillian, zero_tol: float = 1e-9
) -> tuple[float, BiorthogonalSpectrum]:
    """Dense eigensolve of the full generator; gap excludes the zero mode."""
    spectrum = biorthogonal_decompose(L.matrix)
    lam = spectrum.eigenvalues
    nonzero = lam[np.abs(lam) > zero_tol]
    if nonzero.size == lam.size:
        raise MultipleSteadyStates("no eigenvalue within zero tolerance of 0")
    gap = float(np.min(-nonzero.real))
    if gap < 0.0:
        raise SolveFailure(f"generator has an amplifying mode (gap {gap:.3e})")
    return gap, spectrum


def floored_log(rho: np.ndarray, floor: float = EIG_FLOOR) -> np.ndarray:
    """log(rho) after flooring eigenvalues at ``floor`` and renormalizing.

    Raises RankDeficient when negative eigenvalues beyond truncation noise are
    present.
    """
    p, U = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    if p.min() < -1e-10:
        raise RankDeficient(f"density matrix eigenvalue {p.min():.3e} < -1e-10")
    p = np.clip(p, floor, None)
    p = p / p.sum()
    return U @ (np.log(p)[:, None] * U.conj().T)


def fock_relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Tr[rho (log rho - log sigma)] with the shared eigenvalue-flooring policy."""
    log_r = floored_log(rho)
    log_s = floored_log(sigma)
    d = float(np.trace(rho @ (log_r - log_s)).real)
    if d < -1e-9:
        raise SolveFailure(f"relative entropy came out negative: {d:.3e}")
    return d


LiouvillianLike = Union[FockLiouvillian, Callable[[float], FockLiouvillian]]


def fock_evolve(
    L_of_t: LiouvillianLike,
    rho0: np.ndarray,
    t_grid: Sequence[float],
    rtol: float = 1e-9,
    atol: float = 1e-11,
    leak_tol: float = LEAK_TOL,
    method: str = "DOP853",
) -> list[np.ndarray]:
    """Adaptive integration of d(rho)/dt = L rho on the vectorized state.

    Outputs are Hermitized; the trace is checked to stay within 1e-9 of one
    and each output is checked for truncation leakage.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0.0):
        raise ToleranceFailure("t_grid must be strictly increasing with >= 2 points")
    if isinstance(L_of_t, FockLiouvillian):
        Lc = L_of_t.matrix

        def lmat(_t):
            return Lc
    else:
        def lmat(tt):
            return L_of_t(tt).matrix

    dim = rho0.shape[0]

    def rhs(tt, y):
        return lmat(tt) @ y

    sol = solve_ivp(
        rhs, (t[0], t[-1]), vec(rho0).astype(complex),
        t_eval=t, method=method, rtol=rtol, atol=atol,
    )
    if not sol.success:
        raise ToleranceFailure(f"Fock evolution failed: {sol.message}")
    out = []
    for k in range(sol.y.shape[1]):
        rho = unvec(sol.y[:, k], dim)
        tr = np.trace(rho).real
        if abs(tr - 1.0) > 1e-9:
            raise ToleranceFailure(f"trace drifted to {tr!r} at t = {sol.t[k]!r}")
        rho = 0.5 * (rho + rho.conj().T)
        _check_leakage(rho, leak_tol)
        out.append(rho / tr)
    return out


def thermal_state(nbar: float, cutoff: int) -> np.ndarray:
    """Truncated thermal state with mean occupation ``nbar``."""
    if nbar <= 0.0:
        rho = np.zeros((cutoff, cutoff), dtype=complex)
        rho[0, 0] = 1.0
        return rho
    n = np.arange(cutoff, dtype=float)
    p = (nbar / (nbar + 1.0)) ** n
    p /= p.sum()
    return np.diag(p).astype(complex)


# --- sparse internals used by the finite-size sweeps -------------------------

def liouvillian_sparse(
    H: sp.spmatrix, jumps: Sequence[tuple[sp.spmatrix, float]]
) -> sp.csr_matrix:
    """Sparse column-stacking Lindblad generator (same convention as dense)."""
    d = H.shape[0]
    I = sp.identity(d, dtype=complex, format="csr")
    L = -1.0j * (sp.kron(I, H, format="csr") - sp.kron(H.T, I, format="csr"))
    for op, rate in jumps:
        if rate == 0.0:
            continue
        LdL = (op.conj().T @ op).tocsr()
        L = L + rate * (
            sp.kron(op.conj(), op, format="csr")
            - 0.5 * sp.kron(I, LdL, format="csr")
            - 0.5 * sp.kron(LdL.T, I, format="csr")
        )
    return L.tocsr()


def parity_sector_indices(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized-operator indices of the even and odd photon-parity sectors.

    Column-stacking index of the matrix unit |i><j| is j*cutoff + i; the
    sector label is the parity of i + j. Weak parity symmetry block-
    diagonalizes the generator into these two sectors; the steady state lives
    in the even one.
    """
    i = np.arange(cutoff)
    par = (i[None, :] + i[:, None]) % 2  # par[i, j] for |i><j|
    flat = vec(par)
    return np.where(flat == 0)[0], np.where(flat == 1)[0]


def gap_arnoldi(
    L: sp.spmatrix,
    cutoff: int,
    k: int = 12,
    zero_tol: float = 1e-9,
    sigma: float = 1e-6,
) -> float:
    """Generator gap via shift-inverted Arnoldi on the two parity sectors.

    Finds the k eigenvalues of smallest magnitude in each sector and takes the
    smallest nonzero decay rate across both. Must agree with the dense route
    where both apply.
    """
    Lc = L.tocsc()
    best = np.inf
    for idx in parity_sector_indices(cutoff):
        block = Lc[idx][:, idx]
        kk = min(k, block.shape[0] - 2)
        lam = sparse_eigs(
            block, k=kk, sigma=sigma, which="LM", return_eigenvectors=False,
            maxiter=10000,
        )
        lam = lam[np.abs(lam) > zero_tol]
        if lam.size:
            best = min(best, float(np.min(-lam.real)))
    if not np.isfinite(best) or best < 0.0:
        raise SolveFailure(f"Arnoldi gap extraction failed (best = {best!r})")
    return best
