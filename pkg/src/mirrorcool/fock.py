"""Truncated number-basis integration of the full feedback master equation.

Independent quantum oracle: the generator is assembled term by term from
the effective-bath coefficients (the two thermal-like dissipators, the two
anomalous M dissipator blocks, the oscillator commutator, and the
squeeze-commutator feedback term) as a sparse superoperator over
row-major-vectorized density matrices, then integrated in time with an
embedded 4(5) Runge-Kutta pair until the tracked moments stop moving.

Room-temperature occupations (~1e11) are out of numerical reach by
construction; desk-scale occupations validate the same coefficient
algebra, which is parameter-generic.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .bath import EffectiveBath, check_stability
from .errors import NumericalError, TruncationError, ValidationError

__all__ = [
    "FockConfig",
    "FockSolution",
    "Generator",
    "build_generator",
    "evolve_to_steady",
    "ladder",
    "thermal_rho",
    "required_dim",
]

TAIL_GUARD = 1e-10   # population allowed in the last retained number state
HERM_TOL = 1e-12
TRACE_TOL = 1e-10

# Cash-Karp embedded Runge-Kutta 4(5) tableau
_CK_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (3 / 10, -9 / 10, 6 / 5),
    (-11 / 54, 5 / 2, -70 / 27, 35 / 27),
    (1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096),
)
_CK_B4 = (2825 / 27648, 0.0, 18575 / 48384, 13525 / 55296, 277 / 14336, 1 / 4)
_CK_B5 = (37 / 378, 0.0, 250 / 621, 125 / 594, 0.0, 512 / 1771)


@dataclass(frozen=True)
class FockConfig:
    """Number-basis integration settings.

    ``tol`` is the steady-state detection threshold on the scaled time
    derivatives of <a>, <a^2> and <a^dag a>; ``dt`` is the nominal step,
    halved automatically when the embedded error estimate objects.
    """

    dim: int
    dt: float
    t_final: float
    tol: float = 1e-7

    def __post_init__(self):
        if self.dim < 4:
            raise ValidationError("dim", "truncation dimension must be >= 4")
        if not self.dt > 0:
            raise ValidationError("dt", "must be strictly positive")
        if not self.t_final > 0:
            raise ValidationError("t_final", "must be strictly positive")
        if not self.tol > 0:
            raise ValidationError("tol", "must be strictly positive")


@dataclass(frozen=True)
class FockSolution:
    """Steady state of the truncated master equation plus diagnostics."""

    rho: np.ndarray
    mean_a: complex
    mean_a2: complex
    mean_n: float
    var_x: float
    var_p: float
    trace_error: float       # max |Tr rho - 1| over the run
    hermiticity_error: float  # max |rho - rho^dag| over the run
    min_eigenvalue: float    # smallest eigenvalue of the final Hermitian part
    tail_population: float   # final <dim-1|rho|dim-1>
    t_steady: float          # time at which the moment derivatives fell below tol
    steps: int


def ladder(dim: int) -> np.ndarray:
    """Truncated annihilation operator, a|n> = sqrt(n)|n-1>."""
    return np.diag(np.sqrt(np.arange(1, dim)), k=1)


def thermal_rho(n_bar: float, dim: int) -> np.ndarray:
    """Truncated thermal state with Boltzmann ratio exp(-1/n_bar).

    Renormalized to unit trace after truncation so the trace-preservation
    diagnostic starts exactly at zero.
    """
    if n_bar < 0:
        raise ValidationError("n_bar", "must be nonnegative")
    if n_bar == 0:
        p = np.zeros(dim)
        p[0] = 1.0
    else:
        p = np.exp(-np.arange(dim) / n_bar)
        p /= p.sum()
    return np.diag(p).astype(complex)


def required_dim(n_bar: float, tail: float = TAIL_GUARD) -> int:
    """Smallest truncation whose thermal tail population stays below ``tail``."""
    if n_bar <= 0:
        return 4
    ratio = math.exp(-1.0 / n_bar)
    # (1-r) r^(d-1) <= tail
    d = 1 + math.log(tail / (1 - ratio)) / math.log(ratio)
    return max(4, math.ceil(d))


class Generator:
    """Sparse Liouvillian over row-major vec(rho) with moment adjoints."""

    def __init__(self, bath: EffectiveBath, dim: int, matrix: sparse.csr_matrix):
        self.bath = bath
        self.dim = dim
        self.matrix = matrix
        a = ladder(dim)
        num = a.conj().T @ a
        # Tr(O X) = vec(O^T) . vec(X) for row-major vec
        self._adjoints = np.stack(
            [op.T.ravel() for op in (a, a @ a, num)]
        )

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return (self.matrix @ rho.ravel()).reshape(self.dim, self.dim)

    def moments(self, rho_vec: np.ndarray) -> np.ndarray:
        """(<a>, <a^2>, <a^dag a>) of a vectorized state (or its derivative)."""
        return self._adjoints @ rho_vec


def build_generator(bath: EffectiveBath, dim: int) -> Generator:
    """Assemble the five term-groups of the feedback master equation.

    Signs follow the printed generator: the M and M* blocks enter with a
    minus sign, and the squeeze commutator carries the coefficient
    (g*sin(phi) + gamma_m)/4.
    """
    if dim < 4:
        raise ValidationError("dim", "truncation dimension must be >= 4")

    a = sparse.csr_matrix(ladder(dim))
    ad = a.conj().T.tocsr()
    eye = sparse.identity(dim, format="csr")

    def pre(op):
        return sparse.kron(op, eye, format="csr")

    def post(op):
        return sparse.kron(eye, op.T, format="csr")

    def sandwich(left, right):
        return sparse.kron(left, right.T, format="csr")

    def dissipator(lind):
        ldl = (lind.conj().T @ lind).tocsr()
        return 2 * sandwich(lind, lind.conj().T) - pre(ldl) - post(ldl)

    gamma, N, M = bath.gamma, bath.N, bath.M
    s = bath.squeeze_coeff
    a2, ad2, num = (a @ a).tocsr(), (ad @ ad).tocsr(), (ad @ a).tocsr()

    L = (gamma / 2) * (N + 1) * dissipator(a)
    L = L + (gamma / 2) * N * dissipator(ad)
    L = L - (gamma / 2) * M * (2 * sandwich(ad, ad) - pre(ad2) - post(ad2))
    L = L - (gamma / 2) * np.conj(M) * (2 * sandwich(a, a) - pre(a2) - post(a2))
    L = L - 1j * bath.omega_m * (pre(num) - post(num))
    L = L - s * ((pre(a2) - post(a2)) - (pre(ad2) - post(ad2)))

    return Generator(bath, dim, L.tocsr())


def _quadrature_variances(mean_a: complex, mean_a2: complex, mean_n: float):
    # centered variances; <a> = 0 for every state of interest but keeping
    # the subtraction makes the diagnostics honest for arbitrary rho0
    var_x = (2 * mean_n + 1 + 2 * mean_a2.real) / 4 - mean_a.real**2
    var_p = (2 * mean_n + 1 - 2 * mean_a2.real) / 4 - mean_a.imag**2
    return var_x, var_p


def evolve_to_steady(
    generator: Generator, cfg: FockConfig, rho0: np.ndarray | None = None
) -> FockSolution:
    """Integrate to the steady state of the truncated master equation.

    Advances a fixed nominal step with the Cash-Karp 4(5) pair; the
    embedded estimate halves the step when local error exceeds a safety
    threshold. Steady state is declared when all tracked moment
    derivatives fall below ``cfg.tol`` (scaled by 1 + |moment|). The run
    is rejected if the last-state population ever exceeds the 1e-10 tail
    guard: the truncation was too small and the caller must raise ``dim``.
    """
    dim = generator.dim
    if cfg.dim != dim:
        raise ValidationError("dim", "config dimension does not match generator")
    report = check_stability(generator.bath)
    if not report.stable:
        raise NumericalError("no steady state exists: parameters are unstable")

    rho = thermal_rho(generator.bath.n_bar, dim) if rho0 is None else rho0.astype(complex)
    tail0 = float(rho[dim - 1, dim - 1].real)
    if tail0 > TAIL_GUARD:
        raise TruncationError(
            f"initial tail population {tail0:g} exceeds {TAIL_GUARD:g}; raise dim"
        )

    L = generator.matrix
    v = rho.ravel().copy()
    step_tol = 1e-9  # local (per-step) embedded-error threshold, absolute
    h = cfg.dt
    t = 0.0
    steps = 0
    max_trace_err = 0.0
    max_herm_err = 0.0
    t_steady = -1.0

    ks = [np.empty_like(v) for _ in range(6)]
    while t < cfg.t_final:
        ks[0] = L @ v
        # steady-state detection on the derivative of the tracked moments
        dmom = generator.moments(ks[0])
        mom = generator.moments(v)
        if np.all(np.abs(dmom) <= cfg.tol * (1 + np.abs(mom))):
            t_steady = t
            break

        accepted = False
        while not accepted:
            for i in range(1, 6):
                vi = v.copy()
                for j, aij in enumerate(_CK_A[i]):
                    vi += (h * aij) * ks[j]
                ks[i] = L @ vi
            err = np.zeros_like(v)
            v4 = v.copy()
            for i in range(6):
                v4 += (h * _CK_B4[i]) * ks[i]
                err += (h * (_CK_B5[i] - _CK_B4[i])) * ks[i]
            err_norm = float(np.max(np.abs(err)))
            if err_norm <= step_tol or h <= cfg.dt / 1024:
                accepted = True
            else:
                h /= 2
        v = v4
        t += h
        steps += 1
        if err_norm < step_tol / 100 and h < cfg.dt:
            h = min(2 * h, cfg.dt)

        rho = v.reshape(dim, dim)
        max_trace_err = max(max_trace_err, abs(float(np.trace(rho).real) - 1.0)
                            + abs(float(np.trace(rho).imag)))
        max_herm_err = max(max_herm_err, float(np.max(np.abs(rho - rho.conj().T))))
        if max_herm_err > HERM_TOL:
            raise NumericalError(
                f"hermiticity drift {max_herm_err:g} exceeds {HERM_TOL:g}: "
                "generator or stepper bug"
            )
        if max_trace_err > TRACE_TOL:
            raise NumericalError(
                f"trace drift {max_trace_err:g} exceeds {TRACE_TOL:g}: "
                "generator or stepper bug"
            )
        tail = float(rho[dim - 1, dim - 1].real)
        if tail > TAIL_GUARD:
            raise TruncationError(
                f"tail population {tail:g} exceeded {TAIL_GUARD:g} at t={t:g}; raise dim"
            )

    if t_steady < 0:
        raise NumericalError(
            f"no steady state within t_final={cfg.t_final:g} "
            f"(moment derivatives still above tol={cfg.tol:g})"
        )

    rho = v.reshape(dim, dim)
    mean_a, mean_a2, mean_n_c = generator.moments(v)
    mean_n = float(mean_n_c.real)
    var_x, var_p = _quadrature_variances(mean_a, mean_a2, mean_n)

    herm = 0.5 * (rho + rho.conj().T)
    min_eig = float(np.linalg.eigvalsh(herm)[0])
    if min_eig < -1e-8:
        flag = check_stability(generator.bath).lindblad_positive
        if flag:
            warnings.warn(
                f"negative eigenvalue {min_eig:g} despite Lindblad-positive "
                "coefficients; inspect truncation/integration",
                stacklevel=2,
            )
        else:
            warnings.warn(
                f"negative eigenvalue {min_eig:g}: expected physics, the "
                "coefficient block is not completely positive here "
                "(moment-level results remain exact)",
                stacklevel=2,
            )

    return FockSolution(
        rho=rho,
        mean_a=complex(mean_a),
        mean_a2=complex(mean_a2),
        mean_n=mean_n,
        var_x=float(var_x),
        var_p=float(var_p),
        trace_error=max_trace_err,
        hermiticity_error=max_herm_err,
        min_eigenvalue=min_eig,
        tail_population=float(rho[dim - 1, dim - 1].real),
        t_steady=t_steady,
        steps=steps,
    )
