"""Reduced-order models and low-dimensional gain design.

Builds the controller/observer design pairs for the retained slow modes,
assigns eigenvalues for the controller and observer gains, and certifies the
resulting decay-rate Lyapunov inequalities by a direct Lyapunov solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import place_poles

from kse_synth.spectral import BoundaryRegime, SpectralModel

__all__ = [
    "ReducedModel",
    "GainSet",
    "build_reduced_model",
    "place_observer_gain",
    "place_controller_gain",
    "verify_gain_inequality",
    "design_gains",
    "make_gain_set",
]

#: spacing between assigned eigenvalues below the decay target
POLE_SEPARATION = 1.0
#: smallest admissible Cholesky pivot when testing positive definiteness
CHOLESKY_PIVOT_TOL = 1e-10


@dataclass(frozen=True)
class ReducedModel:
    """Design-side matrices for the retained slow modes.

    ``A0`` collects the open-loop growth rates of modes 1..N0.  ``Atilde0``
    and ``Btilde0`` describe the input-extended controller pair (the control
    state u prepended, plus the zero mode in the Neumann regime, whose drift
    couples u with gain nu).  ``C0`` is the sensing row of the observer pair,
    whose dynamics matrix is exposed as :attr:`Aobs`.
    """

    regime: BoundaryRegime
    nu: float
    N0: int
    A0: np.ndarray = field(repr=False)
    Atilde0: np.ndarray = field(repr=False)
    Btilde0: np.ndarray = field(repr=False)
    C0: np.ndarray = field(repr=False)

    @property
    def Aobs(self) -> np.ndarray:
        """Dynamics matrix of the observer design pair (Aobs, C0)."""
        if self.regime is BoundaryRegime.DIRICHLET:
            return self.A0
        out = np.zeros((self.N0 + 1, self.N0 + 1))
        out[1:, 1:] = self.A0
        return out

    @property
    def ctrl_dim(self) -> int:
        return self.Atilde0.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.C0.shape[1]


def build_reduced_model(spectral: SpectralModel, nu: float | None = None) -> ReducedModel:
    """Assemble the reduced controller/observer pairs for the slow modes."""
    if nu is None:
        nu = spectral.nu
    elif nu != spectral.nu:
        raise ValueError(f"nu={nu} disagrees with the spectral model's {spectral.nu}")
    regime, N0 = spectral.regime, spectral.N0

    lam = np.array([spectral.lam_of(n) for n in range(1, N0 + 1)])
    A0 = np.diag(-lam * lam + nu * lam)

    if regime is BoundaryRegime.DIRICHLET:
        Atilde0 = np.zeros((N0 + 1, N0 + 1))
        Atilde0[1:, 1:] = A0
        Btilde0 = np.array([[1.0]] + [[spectral.b_of(n)] for n in range(1, N0 + 1)])
        C0 = np.array([[spectral.c_of(n) for n in range(1, N0 + 1)]])
    else:
        # state order [u, w_0, w_1..w_{N0}]: the zero mode drifts with nu*u
        Atilde0 = np.zeros((N0 + 2, N0 + 2))
        Atilde0[2:, 2:] = A0
        Atilde0[1, 0] = nu
        Btilde0 = np.array([[1.0]] + [[spectral.b_of(n)] for n in range(0, N0 + 1)])
        C0 = np.array([[spectral.c_of(n) for n in range(0, N0 + 1)]])

    return ReducedModel(regime=regime, nu=nu, N0=N0,
                        A0=A0, Atilde0=Atilde0, Btilde0=Btilde0, C0=C0)


def _assignment_targets(delta0: float, dim: int) -> np.ndarray:
    return -delta0 - POLE_SEPARATION * np.arange(dim, dtype=float)


def _place_single_input(A: np.ndarray, B: np.ndarray, poles: np.ndarray) -> np.ndarray:
    """Gain K with eig(A - B K) = poles for a single-input pair."""
    n = A.shape[0]
    if n == 1:
        b = float(B[0, 0])
        if b == 0.0:
            raise ValueError("pair is uncontrollable: zero input coefficient")
        return np.array([[(float(A[0, 0]) - float(poles[0])) / b]])
    result = place_poles(A, B, poles)
    return np.asarray(result.gain_matrix)


def place_observer_gain(model: ReducedModel, delta0: float) -> np.ndarray:
    """Observer gain column placing eig(Aobs - L0 C0) at -delta0, -delta0-1, ...

    Computed by duality: controller placement on the transposed pair.
    """
    if delta0 <= 0:
        raise ValueError("delta0 must be positive")
    A, C = model.Aobs, model.C0
    poles = _assignment_targets(delta0, A.shape[0])
    try:
        K = _place_single_input(A.T, C.T, poles)
    except ValueError as exc:
        raise ValueError(f"observer pair not assignable: {exc}") from exc
    return K.T


def place_controller_gain(model: ReducedModel, delta0: float) -> np.ndarray:
    """Controller gain row placing eig(Atilde0 + Btilde0 K0) at the targets."""
    if delta0 <= 0:
        raise ValueError("delta0 must be positive")
    A, B = model.Atilde0, model.Btilde0
    poles = _assignment_targets(delta0, A.shape[0])
    try:
        K = _place_single_input(A, B, poles)
    except ValueError as exc:
        raise ValueError(f"controller pair not assignable: {exc}") from exc
    return -K


def _cholesky_pd(P: np.ndarray, pivot_tol: float = CHOLESKY_PIVOT_TOL) -> bool:
    """Positive definiteness via Cholesky with a pivot floor."""
    try:
        L = np.linalg.cholesky(0.5 * (P + P.T))
    except np.linalg.LinAlgError:
        return False
    return bool(np.all(np.diag(L) ** 2 > pivot_tol))


def verify_gain_inequality(Acl: np.ndarray, delta: float) -> np.ndarray | None:
    """Certificate P > 0 with P(Acl+delta I) + (Acl+delta I)^T P = -I, or None.

    Such a P exists iff every eigenvalue of Acl has real part < -delta; the
    Lyapunov equation is solved by the vectorized (Kronecker) linear system,
    which is plenty for these low dimensions.
    """
    Acl = np.atleast_2d(np.asarray(Acl, dtype=float))
    n = Acl.shape[0]
    if Acl.shape != (n, n):
        raise ValueError("Acl must be square")
    M = Acl + delta * np.eye(n)
    eigs = np.linalg.eigvals(M)
    pair_sums = np.abs(eigs[:, None] + eigs[None, :])
    if np.min(pair_sums) <= 1e-12 * max(1.0, float(np.max(np.abs(eigs)))):
        raise ValueError("degenerate Lyapunov operator: eigenvalue pair sums to zero")
    eye = np.eye(n)
    op = np.kron(eye, M.T) + np.kron(M.T, eye)
    try:
        vecP = np.linalg.solve(op, -eye.reshape(-1))
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"degenerate Lyapunov operator: {exc}") from exc
    P = vecP.reshape(n, n)
    P = 0.5 * (P + P.T)
    return P if _cholesky_pd(P) else None


@dataclass(frozen=True)
class GainSet:
    """Controller/observer gains with their decay-rate certificates."""

    K0: np.ndarray
    L0: np.ndarray
    delta0: float
    Pc: np.ndarray = field(repr=False)
    Po: np.ndarray = field(repr=False)


def make_gain_set(model: ReducedModel, K0: np.ndarray, L0: np.ndarray,
                  delta0: float, delta: float | None = None) -> GainSet:
    """Package externally supplied gains after certifying both inequalities.

    ``delta`` is the decay rate to certify (defaults to ``delta0``); gains
    that fail either inequality are rejected.
    """
    if delta is None:
        delta = delta0
    K0 = np.atleast_2d(np.asarray(K0, dtype=float))
    L0 = np.asarray(L0, dtype=float).reshape(-1, 1)
    if K0.shape != (1, model.ctrl_dim):
        raise ValueError(f"K0 must be 1x{model.ctrl_dim}, got {K0.shape}")
    if L0.shape != (model.obs_dim, 1):
        raise ValueError(f"L0 must be {model.obs_dim}x1, got {L0.shape}")
    Pc = verify_gain_inequality(model.Atilde0 + model.Btilde0 @ K0, delta)
    if Pc is None:
        raise ValueError(f"controller gain fails the decay inequality at delta={delta}")
    Po = verify_gain_inequality(model.Aobs - L0 @ model.C0, delta)
    if Po is None:
        raise ValueError(f"observer gain fails the decay inequality at delta={delta}")
    return GainSet(K0=K0, L0=L0, delta0=delta0, Pc=Pc, Po=Po)


def design_gains(model: ReducedModel, delta0: float,
                 certify_at: float | None = None) -> GainSet:
    """Assign both gain sets at margin delta0 and certify them just inside it.

    ``certify_at`` overrides the certification rate (default delta0 - 1e-6);
    very stiff plants may need a visibly smaller rate, since float arithmetic
    cannot certify a 1e-6 margin against eigenvalues of magnitude ~1e3.
    """
    K0 = place_controller_gain(model, delta0)
    L0 = place_observer_gain(model, delta0)
    delta = certify_at if certify_at is not None else delta0 - 1e-6
    return make_gain_set(model, K0, L0, delta0, delta=delta)
