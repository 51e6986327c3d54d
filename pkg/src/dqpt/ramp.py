"""Finite-time linear ramps toward a dissipative critical point.

A ramp drives the control parameter from g0 to gf (strictly inside the stable
region) in time tau_q, starting on the steady-state manifold. The module
locates the freeze-out time t* where the driving timescale matches the
relaxation time, integrates the covariance dynamics together with the exact
nonadiabatic entropy-production rate, records the slow-driving (metric)
approximation alongside, and splits the integrated entropy production into
quasiadiabatic and impulse contributions.

The exact rate for zero-mean Gaussian states is
    sigma_dot = (1/2) Tr[(M_rho - M_pi) dTheta/dt],
the fixed-reference derivative of the relative entropy to the instantaneous
steady state. Its integral is accumulated through the identity
    (1/2) Tr[M_rho dTheta/dt] = dS_vN/dt,
so only the reference part needs quadrature along the trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import PchipInterpolator

from .errors import NoCrossing, SolveFailure, ToleranceFailure
from .gaussian import (
    CovarianceState,
    QuadraticModel,
    build_drift_diffusion,
    relative_entropy,
    steady_state,
    theta_to_M,
    von_neumann_entropy,
)
from .geometry import metric_point
from .spectral import GapCurve, liouvillian_gap

__all__ = [
    "RampProtocol",
    "FreezeOut",
    "RampOptions",
    "RampResult",
    "find_freeze_out",
    "sigma_na_rate_exact",
    "sigma_na_rate_metric",
    "run_ramp",
]

ModelFamily = Callable[[float], QuadraticModel]


@dataclass(frozen=True)
class RampProtocol:
    """Linear protocol g(t) = g0 + (gf - g0) t / tau_q on [0, tau_q]."""

    g0: float
    gf: float
    tau_q: float

    def __post_init__(self):
        if self.tau_q <= 0.0:
            raise ValueError("protocol duration must be positive")
        if self.g0 == self.gf:
            raise ValueError("protocol must actually move the control parameter")

    def g(self, t: float) -> float:
        return self.g0 + (self.gf - self.g0) * t / self.tau_q

    @property
    def g_dot(self) -> float:
        return (self.gf - self.g0) / self.tau_q


@dataclass(frozen=True)
class FreezeOut:
    """Freeze-out data: |d Delta/dt| = Delta^2 at t = t_star."""

    t_star: float
    g_star: float
    impulse_duration: float
    delta_g: float


@dataclass
class RampOptions:
    """Tunables for :func:`run_ramp`. Defaults follow the package conventions."""

    rtol: float = 1e-9
    atol: float = 1e-12
    method: str = "DOP853"
    report_points_linear: int = 200
    report_points_per_decade: int = 400
    report_decades: int = 4
    critical_g: Optional[float] = None
    metric_curve: bool = True
    metric_fd_fraction: float = 1e-3
    gap_grid_ratio: float = 1.02


@dataclass
class RampResult:
    """Time series and integrated quantities of one finite-time protocol."""

    protocol: RampProtocol
    t_grid: np.ndarray
    g_of_t: np.ndarray
    theta_of_t: list[CovarianceState]
    sigma_na_rate_exact: np.ndarray
    sigma_na_rate_metric: np.ndarray
    sigma_na_cumulative: np.ndarray
    freeze_out: FreezeOut
    split: tuple[float, float]
    quasiadiabatic_metric: float
    impulse_relative_entropy: float

    @property
    def total(self) -> float:
        return float(self.sigma_na_cumulative[-1])


def sigma_na_rate_exact(
    state: CovarianceState, theta_dot: np.ndarray, pi_g: CovarianceState
) -> float:
    """Exact nonadiabatic entropy-production rate (1/2) Tr[(M_rho - M_pi) Theta_dot]."""
    m_rho = theta_to_M(state).M
    m_pi = theta_to_M(pi_g).M
    return 0.5 * float(np.einsum("ij,ji->", m_rho - m_pi, theta_dot))


def sigma_na_rate_metric(g: float, g_dot: float, zeta_g: float) -> float:
    """Slow-driving approximation g_dot^2 zeta(g) of the rate."""
    if zeta_g < 0.0:
        raise SolveFailure(f"metric must be nonnegative, got {zeta_g:.3e}")
    return g_dot * zeta_g * g_dot


# --- freeze-out --------------------------------------------------------------


def _distance_grid(u_min: float, u_max: float, ratio: float) -> np.ndarray:
    n = max(int(np.ceil(np.log(u_max / u_min) / np.log(ratio))) + 1, 8)
    return np.geomspace(u_min, u_max, n)


class _GapInterp:
    """log-log interpolant of the gap as a function of distance to the anchor."""

    def __init__(self, u: np.ndarray, gaps: np.ndarray):
        order = np.argsort(u)
        self._spline = PchipInterpolator(np.log(u[order]), np.log(gaps[order]))
        self._deriv = self._spline.derivative()

    def gap(self, u: float) -> float:
        return float(np.exp(self._spline(np.log(u))))

    def dgap_du(self, u: float) -> float:
        d = self.gap(u)
        return d / u * float(self._deriv(np.log(u)))


def find_freeze_out(
    model_family: Optional[ModelFamily],
    protocol: RampProtocol,
    critical_g: Optional[float] = None,
    gap_curve: Optional[GapCurve] = None,
    grid_ratio: float = 1.02,
) -> FreezeOut:
    """Solve |d Delta/dg| |g_dot| = Delta^2 for the freeze-out time.

    The gap is tabulated on a geometric grid in the distance to the anchor
    (the critical coupling when given, otherwise the ramp endpoint gf) and
    interpolated log-log; the crossing is bracketed on that grid and then
    bisected to relative tolerance 1e-10 in t. Raises NoCrossing when the
    protocol is already nonadiabatic at t = 0 or never becomes so.
    """
    anchor = protocol.gf if critical_g is None else float(critical_g)
    u0 = abs(anchor - protocol.g0)
    uf = abs(anchor - protocol.gf)
    if u0 <= uf:
        raise ValueError("protocol must approach the anchor")
    sgn = np.sign(anchor - protocol.g0)

    if gap_curve is None:
        if model_family is None:
            raise ValueError("need either a model family or a gap curve")
        # distances below ~eps |anchor| are not representable inside g itself
        u_min = max(uf, 1e-13 * u0, 64.0 * np.finfo(float).eps * max(1.0, abs(anchor)))
        u_tab = _distance_grid(u_min, u0, grid_ratio)
        gaps = np.array(
            [
                liouvillian_gap(build_drift_diffusion(model_family(anchor - sgn * u)))
                for u in u_tab
            ]
        )
    else:
        u_tab = np.abs(anchor - np.asarray(gap_curve.g_values, dtype=float))
        gaps = np.asarray(gap_curve.gaps, dtype=float)
        keep = u_tab > 0.0
        u_tab, gaps = u_tab[keep], gaps[keep]
        u_tab, idx = np.unique(u_tab, return_index=True)
        gaps = gaps[idx]

    interp = _GapInterp(u_tab, gaps)
    g_dot_mag = abs(protocol.g_dot)
    u_lo = max(u_tab.min(), uf if uf > 0 else u_tab.min())

    def u_of_t(t: float) -> float:
        return u0 - (u0 - uf) * t / protocol.tau_q

    def phi(t: float) -> float:
        u = max(u_of_t(t), u_lo)
        d = interp.gap(u)
        return d * d - abs(interp.dgap_du(u)) * g_dot_mag

    if phi(0.0) <= 0.0:
        raise NoCrossing(
            "driving is already nonadiabatic at t = 0 (protocol too fast for the window)"
        )
    # bracket on the tabulation grid, then bisect
    ts = np.linspace(0.0, protocol.tau_q, 400)
    hi = None
    for t in ts[1:]:
        if phi(float(t)) <= 0.0:
            hi = float(t)
            break
    if hi is None:
        raise NoCrossing("freeze-out condition is not met inside (0, tau_q)")
    lo = max(hi - ts[1], 0.0)
    while (hi - lo) > 1e-10 * max(hi, 1e-300):
        mid = 0.5 * (lo + hi)
        if phi(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    t_star = 0.5 * (lo + hi)
    g_star = protocol.g(t_star)
    return FreezeOut(
        t_star=t_star,
        g_star=g_star,
        impulse_duration=protocol.tau_q - t_star,
        delta_g=abs(anchor - g_star),
    )


# --- ramp integration ---------------------------------------------------------


class _AffineGenerator:
    """Caches W(g) = W0 + g W1, Y(g) = Y0 + g Y1 when the family is affine in g."""

    def __init__(self, family: ModelFamily, g_lo: float, g_hi: float):
        dd_lo = build_drift_diffusion(family(g_lo))
        dd_hi = build_drift_diffusion(family(g_hi))
        self._family = family
        span = g_hi - g_lo
        self._W1 = (dd_hi.W - dd_lo.W) / span
        self._W0 = dd_lo.W - g_lo * self._W1
        self._Y1 = (dd_hi.Y - dd_lo.Y) / span
        self._Y0 = dd_lo.Y - g_lo * self._Y1
        g_mid = 0.5 * (g_lo + g_hi)
        dd_mid = build_drift_diffusion(family(g_mid))
        scale = max(np.abs(dd_mid.W).max(), 1.0)
        self.affine = (
            np.abs(self._W0 + g_mid * self._W1 - dd_mid.W).max() < 1e-12 * scale
            and np.abs(self._Y0 + g_mid * self._Y1 - dd_mid.Y).max() < 1e-12 * scale
        )

    def W(self, g: float) -> np.ndarray:
        if not self.affine:
            return build_drift_diffusion(self._family(g)).W
        return self._W0 + g * self._W1

    def Y(self, g: float) -> np.ndarray:
        if not self.affine:
            return build_drift_diffusion(self._family(g)).Y
        return self._Y0 + g * self._Y1

    def steady_theta(self, g: float, eye: np.ndarray) -> np.ndarray:
        W = self.W(g)
        K = np.kron(eye, W) + np.kron(W, eye)
        th = np.linalg.solve(K, self.Y(g).ravel(order="F")).reshape(
            eye.shape[0], eye.shape[0], order="F"
        )
        return 0.5 * (th + th.T)


def _report_grid(protocol: RampProtocol, t_star: float, opts: RampOptions) -> np.ndarray:
    tau = protocol.tau_q
    pieces = [np.linspace(0.0, tau, opts.report_points_linear), np.array([t_star])]
    n_log = opts.report_points_per_decade * opts.report_decades
    for side, span in ((-1.0, t_star), (+1.0, tau - t_star)):
        if span <= 0.0:
            continue
        offs = np.geomspace(tau * 10.0 ** (-opts.report_decades), span, n_log)
        pieces.append(t_star + side * offs)
    t = np.unique(np.clip(np.concatenate(pieces), 0.0, tau))
    return t


def run_ramp(
    model_family: ModelFamily,
    protocol: RampProtocol,
    options: Optional[RampOptions] = None,
) -> RampResult:
    """Integrate one finite-time protocol and assemble its entropy accounting.

    The initial state is the steady state at g0. The covariance matrix and
    the reference part of the entropy-production integral are co-integrated;
    the cumulative exact entropy production at the reporting times is
    recovered from the von Neumann entropy difference. The quasiadiabatic
    metric form (adaptive quadrature of g_dot^2 zeta in log-distance) and the
    impulse relative-entropy drop are evaluated alongside the exact split at
    t*.
    """
    opts = options or RampOptions()
    anchor = protocol.gf if opts.critical_g is None else float(opts.critical_g)
    freeze = find_freeze_out(
        model_family, protocol, critical_g=opts.critical_g,
        grid_ratio=opts.gap_grid_ratio,
    )

    gen = _AffineGenerator(model_family, protocol.g0, protocol.gf)
    dim = gen.W(protocol.g0).shape[0]
    eye = np.eye(dim)

    theta0 = steady_state(build_drift_diffusion(model_family(protocol.g0))).theta

    def m_pi(g: float) -> np.ndarray:
        return theta_to_M(CovarianceState(theta=gen.steady_theta(g, eye))).M

    def rhs(t, y):
        g = protocol.g(t)
        W = gen.W(g)
        th = y[:-1].reshape(dim, dim)
        th_dot = -(W @ th + th @ W.T) + gen.Y(g)
        d_ref = 0.5 * np.einsum("ij,ji->", m_pi(g), th_dot)
        out = np.empty(y.size)
        out[:-1] = th_dot.ravel()
        out[-1] = d_ref
        return out

    t_eval = _report_grid(protocol, freeze.t_star, opts)
    y0 = np.concatenate([theta0.ravel(), [0.0]])
    sol = solve_ivp(
        rhs, (0.0, protocol.tau_q), y0,
        t_eval=t_eval, method=opts.method, rtol=opts.rtol, atol=opts.atol,
    )
    if not sol.success:
        raise ToleranceFailure(f"ramp integration failed: {sol.message}")

    s0 = von_neumann_entropy(CovarianceState(theta=theta0))
    thetas: list[CovarianceState] = []
    rate_exact = np.empty(t_eval.size)
    rate_metric = np.full(t_eval.size, np.nan)
    cumulative = np.empty(t_eval.size)
    g_of_t = np.array([protocol.g(t) for t in t_eval])

    for k, t in enumerate(t_eval):
        g = g_of_t[k]
        th = sol.y[:-1, k].reshape(dim, dim)
        state = CovarianceState(theta=0.5 * (th + th.T))
        thetas.append(state)
        W = gen.W(g)
        th_dot = -(W @ state.theta + state.theta @ W.T) + gen.Y(g)
        pi_state = CovarianceState(theta=gen.steady_theta(g, eye))
        rate_exact[k] = sigma_na_rate_exact(state, th_dot, pi_state)
        cumulative[k] = von_neumann_entropy(state) - s0 - sol.y[-1, k]

    if opts.metric_curve:
        for k, t in enumerate(t_eval):
            g = g_of_t[k]
            h = opts.metric_fd_fraction * abs(anchor - g)
            # finite differences of M lose all signal once the step dips
            # below the noise floor of the steady-state solve
            if h < 1e-11 * max(1.0, abs(g)):
                continue
            try:
                mp = metric_point(model_family, g, fd_step=h)
            except SolveFailure:
                continue
            rate_metric[k] = sigma_na_rate_metric(g, protocol.g_dot, mp.zeta)

    # exact split at t* (a member of t_eval by construction)
    i_star = int(np.argmin(np.abs(t_eval - freeze.t_star)))
    sigma_quasi = float(cumulative[i_star])
    sigma_impulse = float(cumulative[-1] - cumulative[i_star])

    # metric quadrature of the quasiadiabatic part, in u = log|anchor - g|
    sgn = np.sign(anchor - protocol.g0)

    def zeta_of_u(u: float) -> float:
        g = anchor - sgn * np.exp(u)
        h = opts.metric_fd_fraction * np.exp(u)
        return metric_point(model_family, g, fd_step=h).zeta * np.exp(u)

    u_star = np.log(abs(anchor - freeze.g_star))
    u0 = np.log(abs(anchor - protocol.g0))
    integral, _err = quad(zeta_of_u, u_star, u0, limit=200, epsrel=1e-8)
    quasi_metric = abs(protocol.g_dot) * float(integral)

    # impulse part as a relative-entropy drop against the final steady state
    pi_f = steady_state(build_drift_diffusion(model_family(protocol.gf)))
    impulse_re = relative_entropy(thetas[i_star], pi_f) - relative_entropy(
        thetas[-1], pi_f
    )

    return RampResult(
        protocol=protocol,
        t_grid=t_eval,
        g_of_t=g_of_t,
        theta_of_t=thetas,
        sigma_na_rate_exact=rate_exact,
        sigma_na_rate_metric=rate_metric,
        sigma_na_cumulative=cumulative,
        freeze_out=freeze,
        split=(sigma_quasi, sigma_impulse),
        quasiadiabatic_metric=quasi_metric,
        impulse_relative_entropy=float(impulse_re),
    )
