"""Modal model of the boundary-actuated anti-diffusion plant.

Closed-form eigenstructure of the Sturm-Liouville operator on (0,1) for the
two boundary regimes, the actuation/sensing projection coefficients obtained
after the boundary-lifting change of variables, tail bounds on the unmodeled
actuation coefficients, and the well-posedness assumption checks.

Everything here is a pure function of scalars; production code uses the
closed forms below, and the test suite re-derives each value by quadrature.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BoundaryRegime",
    "PlantConfig",
    "SpectralModel",
    "AssumptionError",
    "eigenvalue",
    "eigenfunction_value",
    "lifting_profile",
    "actuation_coeff",
    "sensing_coeff",
    "unstable_mode_count",
    "tail_bound",
    "sobolev_weight",
    "check_assumption1",
    "check_assumption2",
    "build_spectral_model",
    "mode_indices",
    "sine_projection",
    "cosine_projection",
]

#: threshold below which a sensing coefficient counts as vanishing
TOL_C = 1e-9
#: threshold for the resonance (distinct-eigenvalue) check on nu
TOL_NU = 1e-9


class BoundaryRegime(str, enum.Enum):
    """Which boundary trace carries the control input.

    Dirichlet: actuation through the boundary value, in-domain point sensing,
    modes indexed from n=1.  Neumann: actuation through the boundary slope,
    collocated boundary sensing, modes indexed from n=0 (zero eigenvalue).
    """

    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @property
    def first_mode(self) -> int:
        return 1 if self is BoundaryRegime.DIRICHLET else 0


class AssumptionError(ValueError):
    """A structural well-posedness assumption fails for the given data."""


@dataclass(frozen=True)
class PlantConfig:
    """Plant and performance data shared by synthesis and simulation.

    ``x_star`` is the sensing location (Dirichlet only), ``delta`` the decay
    rate to certify, ``Gamma`` the Sobolev splitting parameter (Neumann only),
    ``rho_w``/``rho_u`` the state/input performance weights and ``gamma`` the
    disturbance attenuation level.
    """

    nu: float
    regime: BoundaryRegime
    x_star: float | None = None
    delta: float = 0.0
    Gamma: float | None = None
    rho_w: float = 0.0
    rho_u: float = 0.0
    gamma: float | None = None

    def __post_init__(self) -> None:
        if self.nu <= 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if self.delta < 0:
            raise ValueError(f"delta must be nonnegative, got {self.delta}")
        if self.regime is BoundaryRegime.DIRICHLET:
            if self.x_star is None or not 0.0 < self.x_star < 1.0:
                raise ValueError("Dirichlet regime requires x_star in (0,1)")
        if self.regime is BoundaryRegime.NEUMANN:
            if self.Gamma is None or self.Gamma <= 0:
                raise ValueError("Neumann regime requires Gamma > 0")
        if self.rho_w < 0 or self.rho_u < 0:
            raise ValueError("performance weights must be nonnegative")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


def eigenvalue(n: int, regime: BoundaryRegime) -> float:
    """Eigenvalue lambda_n = n^2 pi^2 of -d^2/dx^2 for the regime's basis."""
    if n < regime.first_mode:
        raise ValueError(f"mode index {n} invalid for {regime.value} regime")
    return float(n * n) * math.pi**2


def eigenfunction_value(n: int, regime: BoundaryRegime, x) -> np.ndarray | float:
    """Orthonormal eigenfunction phi_n evaluated at x (scalar or array)."""
    if n < regime.first_mode:
        raise ValueError(f"mode index {n} invalid for {regime.value} regime")
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)):
        raise ValueError("x must lie in [0,1]")
    if regime is BoundaryRegime.DIRICHLET:
        out = math.sqrt(2.0) * np.sin(n * math.pi * x)
    elif n == 0:
        out = np.ones_like(x)
    else:
        out = math.sqrt(2.0) * np.cos(n * math.pi * x)
    return out if out.ndim else float(out)


def lifting_profile(x, regime: BoundaryRegime) -> np.ndarray | float:
    """Boundary-compatibility profile r(x) used in the change of variables
    w = z - r(x) u: r(x)=1-x (Dirichlet trace) or r(x)=x-x^2/2 (slope)."""
    x = np.asarray(x, dtype=float)
    if regime is BoundaryRegime.DIRICHLET:
        out = 1.0 - x
    else:
        out = x - 0.5 * x * x
    return out if out.ndim else float(out)


def actuation_coeff(n: int, regime: BoundaryRegime) -> float:
    """Modal actuation coefficient b_n = -<r, phi_n>.

    Closed forms: Dirichlet b_n = -sqrt(2/lambda_n); Neumann b_0 = -1/3 and
    b_n = sqrt(2)/lambda_n for n >= 1.  All nonzero, which is what makes the
    dynamic extension controllable mode by mode.
    """
    if n < regime.first_mode:
        raise ValueError(f"mode index {n} invalid for {regime.value} regime")
    lam = eigenvalue(n, regime)
    if regime is BoundaryRegime.DIRICHLET:
        return -math.sqrt(2.0 / lam)
    if n == 0:
        return -1.0 / 3.0
    return math.sqrt(2.0) / lam


def sensing_coeff(n: int, regime: BoundaryRegime, x_star: float | None = None) -> float:
    """Modal sensing coefficient c_n.

    Dirichlet: phi_n evaluated at the in-domain sensing point x_star.
    Neumann: the boundary trace phi_n(0), i.e. 1 for n=0 and sqrt(2) else.
    """
    if n < regime.first_mode:
        raise ValueError(f"mode index {n} invalid for {regime.value} regime")
    if regime is BoundaryRegime.DIRICHLET:
        if x_star is None:
            raise ValueError("Dirichlet sensing coefficient requires x_star")
        return math.sqrt(2.0) * math.sin(n * math.pi * x_star)
    return 1.0 if n == 0 else math.sqrt(2.0)


def unstable_mode_count(nu: float, delta: float, regime: BoundaryRegime) -> int:
    """Smallest N0 such that -lambda_n^2 + nu*lambda_n < -delta for all n > N0.

    The count runs over n >= 1 in both regimes; the Neumann zero mode is not
    counted here because it is always retained in the controller block by
    construction.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    n0 = 0
    n = 1
    while True:
        lam = eigenvalue(n, BoundaryRegime.DIRICHLET)
        if -lam * lam + nu * lam >= -delta:
            n0 = n
        elif lam > nu:
            # -lam^2 + nu*lam is strictly decreasing from here on
            return n0
        n += 1


def tail_bound(N: int, regime: BoundaryRegime) -> float:
    """Upper bound on the unmodeled actuation energy sum_{n>N} b_n^2."""
    if N < 1:
        raise ValueError("tail bound requires N >= 1")
    if regime is BoundaryRegime.DIRICHLET:
        return 2.0 / (math.pi**2 * N)
    return 2.0 / (3.0 * math.pi**4 * N**3)


def sobolev_weight(n: int, Gamma: float) -> float:
    """Weight mu_n = 1 + Gamma + lambda_n/Gamma from the pointwise Sobolev
    bound max|h|^2 <= (1+Gamma)||h||^2 + Gamma^{-1}||h'||^2."""
    if Gamma <= 0:
        raise ValueError("Gamma must be positive")
    return 1.0 + Gamma + eigenvalue(n, BoundaryRegime.NEUMANN) / Gamma


def check_assumption1(x_star: float, N0: int, tol: float = TOL_C) -> tuple[bool, int | None]:
    """Nonvanishing of the retained Dirichlet sensing coefficients.

    Returns (passed, offending index).  The sensing point must not be a node
    of any retained eigenfunction: |sin(n pi x_star)| > tol for 1 <= n <= N0.
    """
    if not 0.0 < x_star < 1.0:
        raise ValueError("x_star must lie in (0,1)")
    for n in range(1, N0 + 1):
        if abs(math.sin(n * math.pi * x_star)) <= tol:
            return False, n
    return True, None


def check_assumption2(nu: float, n_max: int, tol: float = TOL_NU) -> tuple[bool, tuple[int, int] | None]:
    """Non-resonance of nu with pi^2(n^2+m^2) for 0 <= m < n <= n_max.

    Coinciding closed-loop eigenvalues of distinct mode pairs would break the
    Hautus controllability/observability argument; this rejects nu within tol
    of any such resonant value (and nu = 0, excluded by PlantConfig already).
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    for n in range(1, n_max + 1):
        for m in range(0, n):
            if abs(nu - math.pi**2 * (n * n + m * m)) <= tol:
                return False, (n, m)
    return True, None


def mode_indices(regime: BoundaryRegime, upto: int) -> range:
    """Mode indices of the regime from its first mode through ``upto``."""
    return range(regime.first_mode, upto + 1)


@dataclass(frozen=True)
class SpectralModel:
    """Truncated modal data for one plant configuration.

    Arrays are indexed by mode number shifted by the regime's first mode, so
    ``lam[k]`` is the eigenvalue of mode ``first_mode + k``; they extend
    through the simulation truncation order M (sensing coefficients included,
    since the sensing residual of modes N+1..M feeds back into the observer).
    """

    regime: BoundaryRegime
    nu: float
    N0: int
    N: int
    M: int
    lam: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    c: np.ndarray = field(repr=False)

    def index_of(self, n: int) -> int:
        """Array position of mode n."""
        k = n - self.regime.first_mode
        if not 0 <= k < len(self.lam):
            raise IndexError(f"mode {n} outside tabulated range")
        return k

    def lam_of(self, n: int) -> float:
        return float(self.lam[self.index_of(n)])

    def b_of(self, n: int) -> float:
        return float(self.b[self.index_of(n)])

    def c_of(self, n: int) -> float:
        return float(self.c[self.index_of(n)])


def build_spectral_model(plant: PlantConfig, N: int, M: int | None = None) -> SpectralModel:
    """Tabulate eigenvalues and projection coefficients through order M.

    Runs the assumption checks for the Dirichlet sensing point and the
    non-resonance of nu; failures raise :class:`AssumptionError` so callers
    can map them to their own error contract.
    """
    regime = plant.regime
    N0 = unstable_mode_count(plant.nu, plant.delta, regime)
    if N < N0:
        raise ValueError(f"observer order N={N} below the required N0={N0}")
    if M is None:
        M = N
    if M < N:
        raise ValueError(f"simulation order M={M} must be >= N={N}")

    ok, pair = check_assumption2(plant.nu, n_max=max(N, 1))
    if not ok:
        raise AssumptionError(
            f"nu={plant.nu} is resonant with pi^2(n^2+m^2) at (n,m)={pair}"
        )
    if regime is BoundaryRegime.DIRICHLET:
        ok, idx = check_assumption1(plant.x_star, N0)
        if not ok:
            raise AssumptionError(
                f"sensing point x_star={plant.x_star} is a node of mode {idx}"
            )

    ns = np.array(mode_indices(regime, M))
    lam = (ns * math.pi) ** 2.0
    b = np.array([actuation_coeff(int(n), regime) for n in ns])
    c = np.array([sensing_coeff(int(n), regime, plant.x_star) for n in ns])
    return SpectralModel(regime=regime, nu=plant.nu, N0=N0, N=N, M=M,
                         lam=lam, b=b, c=c)


# --- closed-form trigonometric projections -------------------------------
#
# Building blocks for projecting travelling-wave disturbances onto the modal
# basis: integrals over (0,1) of products of sin/cos with the eigenfunctions.

def _sinc(c: float) -> float:
    """integral of cos(c x) over (0,1)."""
    return 1.0 if c == 0.0 else math.sin(c) / c

def _cosc(c: float) -> float:
    """integral of sin(c x) over (0,1)."""
    return 0.0 if c == 0.0 else (1.0 - math.cos(c)) / c


def sine_projection(k: float, n: int, regime: BoundaryRegime) -> float:
    """<sin(k x), phi_n> in closed form."""
    if regime is BoundaryRegime.DIRICHLET:
        a = k - n * math.pi
        s = k + n * math.pi
        return math.sqrt(2.0) * 0.5 * (_sinc(a) - _sinc(s))
    if n == 0:
        return _cosc(k)
    a = k - n * math.pi
    s = k + n * math.pi
    return math.sqrt(2.0) * 0.5 * (_cosc(s) + _cosc(a))


def cosine_projection(k: float, n: int, regime: BoundaryRegime) -> float:
    """<cos(k x), phi_n> in closed form."""
    if regime is BoundaryRegime.DIRICHLET:
        s = n * math.pi + k
        a = n * math.pi - k
        return math.sqrt(2.0) * 0.5 * (_cosc(s) + _cosc(a))
    if n == 0:
        return _sinc(k)
    a = k - n * math.pi
    s = k + n * math.pi
    return math.sqrt(2.0) * 0.5 * (_sinc(a) + _sinc(s))
