"""Steady-state quadrature moments: closed forms, Lyapunov oracle, gain tuning.

The closed-form variances are stated for the feedback phase phi = -pi/2
(position measured, momentum driven). The Lyapunov route solves the 2x2
steady-state covariance equation A*S + S*A^T + C = 0 for the drift and
diffusion read off the quadrature Langevin equations; it extends to any
phase and serves as the independent oracle for the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.linalg import solve_continuous_lyapunov

from .bath import EffectiveBath, check_stability, with_gain
from .errors import StabilityBoundaryError, StabilityError, UnsupportedPhaseError, ValidationError
from .params import PhysicalConstants

__all__ = [
    "SteadyMoments",
    "closed_form_moments",
    "high_gain_moments",
    "lyapunov_moments",
    "optimize_gain",
    "drift_matrix",
    "diffusion_matrix",
]

_PHASE_TOL = 1e-9  # |phi + pi/2| below this counts as the closed-form phase


@dataclass(frozen=True)
class SteadyMoments:
    """Steady-state second moments of the mirror quadratures.

    Quadratures are dimensionless with [X, P] = i/2, so any physical state
    satisfies var_x * var_p >= 1/16.
    """

    var_x: float
    var_p: float
    cov_xp_sym: float
    t_eff: float          # effective temperature (K)
    method: str           # "closed_form" | "lyapunov" | "high_gain"

    def __post_init__(self):
        if not (self.var_x > 0 and self.var_p > 0):
            raise StabilityError(
                f"non-positive variance (var_x={self.var_x:g}, var_p={self.var_p:g})"
            )
        if self.var_x * self.var_p < 1.0 / 16.0 - 1e-12:
            raise StabilityError(
                "Heisenberg bound violated: var_x*var_p = "
                f"{self.var_x * self.var_p:g} < 1/16"
            )


def _require_phase(bath: EffectiveBath) -> None:
    if abs(bath.phi + math.pi / 2) > _PHASE_TOL:
        raise UnsupportedPhaseError(
            f"closed forms hold only at phi = -pi/2 (got phi = {bath.phi:g}); "
            "use lyapunov_moments for other phases"
        )


def _require_stable(bath: EffectiveBath) -> None:
    report = check_stability(bath)
    if not report.stable:
        raise StabilityError(
            f"unstable parameters: margin_damping={report.margin_damping:g}, "
            f"margin_spring={report.margin_spring:g}"
        )


def _t_eff(bath: EffectiveBath, constants: PhysicalConstants) -> float:
    # bath temperature reconstructed from n_bar = k_B*T/(hbar*omega_m)
    T = bath.n_bar * constants.hbar * bath.omega_m / constants.k_B
    if bath.g > 0:
        return T * bath.omega_m**2 / bath.g**2
    return T


def drift_matrix(bath: EffectiveBath) -> np.ndarray:
    """Drift of the quadrature means, d<(X,P)>/dt = A <(X,P)>.

    At phi = -pi/2 this is [[-g, omega_m], [-omega_m, -gamma_m]]; the
    general-phase form [[g*sin(phi), omega_m], [-omega_m, -gamma_m]]
    follows from the moment flow of the full generator and reduces to it.
    """
    return np.array(
        [
            [bath.g * math.sin(bath.phi), bath.omega_m],
            [-bath.omega_m, -bath.gamma_m],
        ]
    )


def diffusion_matrix(bath: EffectiveBath) -> np.ndarray:
    """Symmetrized noise intensity C = gamma*[[(2N+1+2ReM)/4, ImM/2], ...].

    Only the symmetric part of the input correlations enters second
    moments; the antisymmetric i/4 cross term is a commutator artifact and
    is deliberately dropped. Entries come from the cancellation-free
    reductions on :class:`EffectiveBath`.
    """
    return np.array(
        [
            [bath.noise_xx, bath.noise_xp],
            [bath.noise_xp, bath.noise_pp],
        ]
    )


def closed_form_moments(
    bath: EffectiveBath, constants: PhysicalConstants = PhysicalConstants()
) -> SteadyMoments:
    """Exact steady-state variances at phi = -pi/2.

    ``var_x`` and ``var_p`` are the closed-form expressions; the
    symmetrized cross moment has no printed closed form and is filled
    from the (algebraically equivalent) Lyapunov solution.
    """
    _require_phase(bath)
    _require_stable(bath)

    g, gm, om = bath.g, bath.gamma_m, bath.omega_m
    c_x, c_p = bath.noise_xx, bath.noise_pp
    denom = 2 * (gm + g) * (om**2 + gm * g)
    # identical to the textbook form with the thermal bracket
    # (n_bar/2 + Gamma/(8*gamma_m)) multiplied through by gamma_m, which
    # keeps the gamma_m -> 0 limit finite
    var_x = (c_x * (gm**2 + om**2 + gm * g) + c_p * om**2) / denom
    var_p = (c_p * (g**2 + gm * g + om**2) + om**2 * c_x) / denom
    cov = om * (c_p * g - c_x * gm) / denom

    return SteadyMoments(
        var_x=var_x,
        var_p=var_p,
        cov_xp_sym=cov,
        t_eff=_t_eff(bath, constants),
        method="closed_form",
    )


def high_gain_moments(
    bath: EffectiveBath, constants: PhysicalConstants = PhysicalConstants()
) -> SteadyMoments:
    """High-gain approximation of var_x, valid for g >> omega_m*Q_m.

    var_x = k_B*T_eff/(2*hbar*omega_m) + Gamma*omega_m^2/(8*gamma_m*g^2)
          + g/(8*eta*Gamma) with T_eff = T*omega_m^2/g^2. The orthogonal
    quadrature has no printed high-gain form; ``var_p`` is filled with the
    exact value so the returned object stays physically valid.
    """
    _require_phase(bath)
    _require_stable(bath)
    if not bath.g > 0:
        raise ValidationError("g", "high-gain approximation requires g > 0")

    g, gm, om = bath.g, bath.gamma_m, bath.omega_m
    # thermal term k_B*T_eff/(2 hbar omega_m) = (n_bar/2) * omega_m^2/g^2
    var_x = (
        0.5 * bath.n_bar * om**2 / g**2
        + bath.Gamma * om**2 / (8 * gm * g**2)
        + g / (8 * bath.eta * bath.Gamma)
    )
    exact = closed_form_moments(bath, constants)
    return SteadyMoments(
        var_x=var_x,
        var_p=exact.var_p,
        cov_xp_sym=exact.cov_xp_sym,
        t_eff=_t_eff(bath, constants),
        method="high_gain",
    )


def lyapunov_moments(
    bath: EffectiveBath, constants: PhysicalConstants = PhysicalConstants()
) -> SteadyMoments:
    """Steady covariance from A*S + S*A^T + C = 0 (independent oracle).

    Works at any phase for which the drift is stable; errors exactly on
    the stability boundary, where the Lyapunov system is singular.
    """
    A = drift_matrix(bath)
    tr = A[0, 0] + A[1, 1]
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    # boundary detection is tolerance-aware: the Lyapunov system is
    # singular there and scipy would silently perturb the coefficients
    tr_tol = 1e-12 * (abs(A[0, 0]) + abs(A[1, 1]))
    det_tol = 1e-12 * (abs(A[0, 0] * A[1, 1]) + abs(A[0, 1] * A[1, 0]))
    if tr >= -tr_tol or det <= det_tol:
        if tr > tr_tol or det < -det_tol:
            raise StabilityError(f"unstable drift: trace(A)={tr:g}, det(A)={det:g}")
        raise StabilityBoundaryError(
            f"stability boundary: trace(A)={tr:g}, det(A)={det:g}"
        )

    sigma = solve_continuous_lyapunov(A, -diffusion_matrix(bath))
    return SteadyMoments(
        var_x=sigma[0, 0],
        var_p=sigma[1, 1],
        cov_xp_sym=0.5 * (sigma[0, 1] + sigma[1, 0]),
        t_eff=_t_eff(bath, constants),
        method="lyapunov",
    )


def optimize_gain(
    bath_template: EffectiveBath,
    g_range: tuple[float, float],
    constants: PhysicalConstants = PhysicalConstants(),
) -> tuple[float, float]:
    """Gain minimizing the position variance over ``g_range`` at phi = -pi/2.

    Returns (g_opt, var_x_min). Bracketed scalar minimization with
    relative tolerance 1e-6 on g; every candidate gain is re-derived
    through the coefficient block, so the swept variance is exact.
    """
    _require_phase(bath_template)
    g_lo, g_hi = g_range
    if not (math.isfinite(g_lo) and math.isfinite(g_hi)) or g_lo > g_hi or g_lo < 0:
        raise ValidationError("g_range", f"invalid gain interval ({g_lo!r}, {g_hi!r})")
    if g_hi > 0 and bath_template.Gamma == 0:
        raise ValidationError("g_range", "positive gains need Gamma > 0")

    def var_x(g: float) -> float:
        return closed_form_moments(with_gain(bath_template, g), constants).var_x

    if g_lo == g_hi:
        return g_lo, var_x(g_lo)

    result = optimize.minimize_scalar(
        var_x,
        bounds=(g_lo, g_hi),
        method="bounded",
        options={"xatol": 1e-6 * max(1.0, g_hi)},
    )
    g_opt = float(result.x)
    # the bounded minimizer never evaluates the endpoints exactly
    best = min((var_x(g_lo), g_lo), (var_x(g_hi), g_hi), (float(result.fun), g_opt))
    return best[1], best[0]
