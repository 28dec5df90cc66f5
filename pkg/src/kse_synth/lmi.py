"""Closed-loop matrices and certificate conditions as affine matrix inequalities.

Assembles the full-order closed loop (controller modes, estimation errors,
residual observer modes) and the four certificate families — decay-rate
stabilization and disturbance-gain analysis, one of each per boundary regime —
as matrix inequalities affine in the decision variables (vech(P), alpha).
The attenuation level gamma and all weights are fixed data, which keeps every
family exactly affine.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from kse_synth.gains import GainSet, ReducedModel, build_reduced_model
from kse_synth.spectral import (
    BoundaryRegime,
    SpectralModel,
    eigenvalue,
    sobolev_weight,
)

__all__ = [
    "ClosedLoopMatrices",
    "ThetaFamily",
    "AffineMatrixInequality",
    "build_closed_loop",
    "build_output_map",
    "map_zbar_weights",
    "assemble_stab_lmi",
    "assemble_gain_lmi",
    "pre_schur_stab_value",
    "pre_schur_gain_value",
]

#: default box constraints handed to the feasibility solver
P_ENTRY_BOUND = 1e8
ALPHA_BOUNDS = (1e-8, 1e8)


# --- tail decay-rate families ----------------------------------------------

@dataclass(frozen=True)
class ThetaFamily:
    """Tail decay coefficients theta^(k) entering the LMI corner entries.

    theta1/theta3 weight the boundary-value regime's lambda_n tail (theta3
    subtracts the state-weight correction rho_w^2/(2 lambda)); theta2/theta4
    are their slope-regime counterparts normalized by the Sobolev weight
    mu_n = 1 + Gamma + lambda_n/Gamma.
    """

    kind: str
    nu: float
    delta: float
    rho_w: float = 0.0
    Gamma: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("theta1", "theta2", "theta3", "theta4"):
            raise ValueError(f"unknown theta family {self.kind!r}")
        if self.kind in ("theta2", "theta4") and (self.Gamma is None or self.Gamma <= 0):
            raise ValueError(f"{self.kind} requires Gamma > 0")

    def value(self, lam: float) -> float:
        if self.kind == "theta1":
            return lam**2 - self.nu * lam - self.delta
        if self.kind == "theta3":
            return lam**2 - self.nu * lam - self.delta - self.rho_w**2 / (2.0 * lam)
        mu = 1.0 + self.Gamma + lam / self.Gamma
        if self.kind == "theta2":
            return (lam**4 - self.nu * lam**3 - self.delta * lam**2) / mu
        return (lam**3 - self.nu * lam**2 - self.delta * lam - 0.5 * self.rho_w**2) / mu


# --- closed-loop assembly ---------------------------------------------------

@dataclass(frozen=True)
class ClosedLoopMatrices:
    """Full-order closed-loop data for the state
    X = col{(u, what_low), e_low, what_high, e_high}.

    ``F`` drives X, ``Lcal`` injects the sensing residual (and the sensor
    disturbance in the perturbed setting), ``Ktilde0`` recovers the control
    update v = Ktilde0 X.  A1/B1/C1 are the diagonal residual-mode blocks for
    modes N0+1..N.
    """

    regime: BoundaryRegime
    nu: float
    N0: int
    N: int
    F: np.ndarray = field(repr=False)
    Ktilde0: np.ndarray = field(repr=False)
    Lcal: np.ndarray = field(repr=False)
    A1: np.ndarray = field(repr=False)
    B1: np.ndarray = field(repr=False)
    C1: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.F.shape[0]

    @property
    def n_ctrl(self) -> int:
        """Size of the controller block (u plus retained observer modes)."""
        first = 2 if self.regime is BoundaryRegime.NEUMANN else 1
        return self.N0 + first

    @property
    def n_obs(self) -> int:
        """Number of estimation-error components driven by the observer gain."""
        return self.N0 + (1 if self.regime is BoundaryRegime.NEUMANN else 0)

    @property
    def n_high(self) -> int:
        return self.N - self.N0

    @property
    def slices(self) -> dict[str, slice]:
        """Index ranges of the four state blocks within X."""
        a = self.n_ctrl
        b = a + self.n_obs
        c = b + self.n_high
        return {
            "ctrl": slice(0, a),
            "e_low": slice(a, b),
            "what_high": slice(b, c),
            "e_high": slice(c, c + self.n_high),
        }


def build_closed_loop(spectral: SpectralModel, gains: GainSet,
                      regime: BoundaryRegime | None = None) -> ClosedLoopMatrices:
    """Assemble F, Ktilde0 and Lcal from the reduced model and residual modes."""
    if regime is None:
        regime = spectral.regime
    elif regime is not spectral.regime:
        raise ValueError("regime disagrees with the spectral model")
    rm: ReducedModel = build_reduced_model(spectral)
    K0, L0 = gains.K0, gains.L0
    if K0.shape != (1, rm.ctrl_dim) or L0.shape != (rm.obs_dim, 1):
        raise ValueError("gain dimensions incompatible with the reduced model")

    N0, N = spectral.N0, spectral.N
    high = list(range(N0 + 1, N + 1))
    lam1 = np.array([spectral.lam_of(n) for n in high])
    A1 = np.diag(-lam1 * lam1 + spectral.nu * lam1) if high else np.zeros((0, 0))
    B1 = np.array([[spectral.b_of(n)] for n in high]).reshape(len(high), 1)
    C1 = np.array([[spectral.c_of(n) for n in high]]).reshape(1, len(high))

    n1, n2, n3 = rm.ctrl_dim, rm.obs_dim, len(high)
    nX = n1 + n2 + 2 * n3
    Ltilde0 = np.vstack([np.zeros((1, 1)), L0])

    F = np.zeros((nX, nX))
    F[:n1, :n1] = rm.Atilde0 + rm.Btilde0 @ K0
    F[:n1, n1:n1 + n2] = Ltilde0 @ rm.C0
    F[:n1, n1 + n2 + n3:] = Ltilde0 @ C1
    F[n1:n1 + n2, n1:n1 + n2] = rm.Aobs - L0 @ rm.C0
    F[n1:n1 + n2, n1 + n2 + n3:] = -L0 @ C1
    F[n1 + n2:n1 + n2 + n3, :n1] = B1 @ K0
    F[n1 + n2:n1 + n2 + n3, n1 + n2:n1 + n2 + n3] = A1
    F[n1 + n2 + n3:, n1 + n2 + n3:] = A1

    Ktilde0 = np.zeros((1, nX))
    Ktilde0[0, :n1] = K0
    Lcal = np.vstack([Ltilde0, -L0, np.zeros((2 * n3, 1))])

    return ClosedLoopMatrices(regime=regime, nu=spectral.nu, N0=N0, N=N,
                              F=F, Ktilde0=Ktilde0, Lcal=Lcal,
                              A1=A1, B1=B1, C1=C1)


def build_output_map(cl: ClosedLoopMatrices, rho_w: float, rho_u: float) -> np.ndarray:
    """Performance output rows: |out|^2 = rho_u^2 u^2 + rho_w^2 sum w_n^2.

    Per retained mode the state weight hits the observer estimate and the
    estimation error jointly (their sum reconstructs the mode amplitude).
    """
    s = cl.slices
    rows = 1 + cl.n_obs + cl.n_high
    Xi1 = np.zeros((rows, cl.dim))
    Xi1[0, 0] = rho_u
    for j in range(cl.n_obs):
        Xi1[1 + j, 1 + j] = rho_w
        Xi1[1 + j, s["e_low"].start + j] = rho_w
    for j in range(cl.n_high):
        Xi1[1 + cl.n_obs + j, s["what_high"].start + j] = rho_w
        Xi1[1 + cl.n_obs + j, s["e_high"].start + j] = rho_w
    return Xi1


def map_zbar_weights(rho_z_bar: float, rho_u_bar: float) -> tuple[float, float]:
    """Weights on the physical state/input mapped to lifted-state weights."""
    if rho_z_bar < 0 or rho_u_bar < 0:
        raise ValueError("weights must be nonnegative")
    return (math.sqrt(2.0) * rho_z_bar,
            math.sqrt(2.0 * rho_z_bar**2 / 3.0 + rho_u_bar**2))


# --- affine matrix inequalities ---------------------------------------------

@dataclass(frozen=True)
class AffineMatrixInequality:
    """A(x) = const + sum_k x_k * coeff_k required negative definite.

    Variables are the upper-triangle entries of P (row-major, labels
    ``P[i,j]``) followed by the scalar ``alpha``.  ``p_floor`` is the epsilon
    of the side constraint P >= eps*I; the box bounds keep the feasible set
    compact for the solver.
    """

    dim: int
    const_block: np.ndarray = field(repr=False)
    coeff_blocks: tuple[np.ndarray, ...] = field(repr=False)
    var_labels: tuple[str, ...]
    p_dim: int
    p_floor: float
    p_entry_bound: float = P_ENTRY_BOUND
    alpha_bounds: tuple[float, float] = ALPHA_BOUNDS

    def __post_init__(self) -> None:
        if self.const_block.shape != (self.dim, self.dim):
            raise ValueError("const block has wrong shape")
        if len(self.coeff_blocks) != len(self.var_labels):
            raise ValueError("one coefficient block per variable required")
        for blk in (self.const_block, *self.coeff_blocks):
            if blk.shape != (self.dim, self.dim):
                raise ValueError("coefficient block has wrong shape")
            if not np.allclose(blk, blk.T, atol=1e-12):
                raise ValueError("all blocks must be symmetric")

    @property
    def n_vars(self) -> int:
        return len(self.var_labels)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.shape != (self.n_vars,):
            raise ValueError(f"expected {self.n_vars} variables, got {x.shape}")
        out = self.const_block.copy()
        for xk, blk in zip(x, self.coeff_blocks):
            if xk != 0.0:
                out += xk * blk
        return out

    def pack(self, P: np.ndarray, alpha: float) -> np.ndarray:
        """Decision vector for a concrete (P, alpha) pair."""
        P = np.asarray(P, dtype=float)
        if P.shape != (self.p_dim, self.p_dim):
            raise ValueError(f"P must be {self.p_dim}x{self.p_dim}")
        x = [P[i, j] for i in range(self.p_dim) for j in range(i, self.p_dim)]
        x.append(alpha)
        return np.array(x)

    def unpack(self, x: np.ndarray) -> tuple[np.ndarray, float]:
        x = np.asarray(x, dtype=float).ravel()
        P = np.zeros((self.p_dim, self.p_dim))
        k = 0
        for i in range(self.p_dim):
            for j in range(i, self.p_dim):
                P[i, j] = P[j, i] = x[k]
                k += 1
        return P, float(x[k])

    def to_json(self) -> str:
        doc = {
            "dim": self.dim,
            "p_dim": self.p_dim,
            "p_floor": self.p_floor,
            "p_entry_bound": self.p_entry_bound,
            "alpha_bounds": list(self.alpha_bounds),
            "var_labels": list(self.var_labels),
            "const_block": self.const_block.tolist(),
            "coeff_blocks": [blk.tolist() for blk in self.coeff_blocks],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "AffineMatrixInequality":
        doc = json.loads(text)
        return cls(
            dim=int(doc["dim"]),
            const_block=np.array(doc["const_block"]),
            coeff_blocks=tuple(np.array(b) for b in doc["coeff_blocks"]),
            var_labels=tuple(doc["var_labels"]),
            p_dim=int(doc["p_dim"]),
            p_floor=float(doc["p_floor"]),
            p_entry_bound=float(doc["p_entry_bound"]),
            alpha_bounds=tuple(doc["alpha_bounds"]),
        )


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _p_basis(p_dim: int):
    """Symmetric basis matrices and labels for the upper-triangle variables."""
    for i in range(p_dim):
        for j in range(i, p_dim):
            E = np.zeros((p_dim, p_dim))
            E[i, j] = E[j, i] = 1.0
            yield f"P[{i},{j}]", E


def _assemble(evaluator, p_dim: int, dim: int) -> AffineMatrixInequality:
    """Expand an exact (P, alpha) evaluator on the variable basis."""
    const = _sym(evaluator(np.zeros((p_dim, p_dim)), 0.0))
    labels, coeffs = [], []
    zero_p = np.zeros((p_dim, p_dim))
    for label, E in _p_basis(p_dim):
        labels.append(label)
        coeffs.append(_sym(evaluator(E, 0.0)) - const)
    labels.append("alpha")
    coeffs.append(_sym(evaluator(zero_p, 1.0)) - const)
    for blk in coeffs:
        blk.setflags(write=False)
    const.setflags(write=False)
    # Size the P floor on the diagonally equilibrated constant block: the raw
    # corner entries grow like lambda_{N+1}^2, and a floor proportional to
    # them would reject genuinely thin certificates (min_gamma boundaries
    # have lambda_min(P) ~ 1e-5).
    d = 1.0 / np.sqrt(np.maximum(1.0, np.abs(np.diag(const))))
    p_floor = 1e-6 * (1.0 + float(np.max(np.abs(const) * np.outer(d, d))))
    return AffineMatrixInequality(dim=dim, const_block=const,
                                  coeff_blocks=tuple(coeffs),
                                  var_labels=tuple(labels),
                                  p_dim=p_dim, p_floor=p_floor)


def _phi_block(cl: ClosedLoopMatrices, delta: float,
               P: np.ndarray, alpha: float) -> np.ndarray:
    """P F + F^T P + 2 delta P + (2 alpha / (pi^2 N)) Ktilde0^T Ktilde0."""
    K = cl.Ktilde0
    return (P @ cl.F + cl.F.T @ P + 2.0 * delta * P
            + (2.0 * alpha / (math.pi**2 * cl.N)) * (K.T @ K))


def _check_spectral(cl: ClosedLoopMatrices, spectral: SpectralModel) -> None:
    if (spectral.regime is not cl.regime or spectral.N != cl.N
            or spectral.N0 != cl.N0 or spectral.nu != cl.nu):
        raise ValueError("spectral model disagrees with the closed-loop matrices")


def _tail_data(cl: ClosedLoopMatrices, Gamma: float | None) -> tuple[float, float | None]:
    lam_next = eigenvalue(cl.N + 1, cl.regime)
    if cl.regime is BoundaryRegime.NEUMANN:
        if Gamma is None or Gamma <= 0:
            raise ValueError("the slope-actuated regime requires Gamma > 0")
        return lam_next, sobolev_weight(cl.N + 1, Gamma)
    return lam_next, None


def assemble_stab_lmi(cl: ClosedLoopMatrices, spectral: SpectralModel,
                      delta: float, regime: BoundaryRegime | None = None,
                      Gamma: float | None = None) -> AffineMatrixInequality:
    """Decay-rate certificate in Schur form.

    Layout: [X | zeta | slack] with the constant -2*theta corner for zeta, a
    unit coupling into the slack scalar, and the alpha-proportional slack
    corner (-alpha/lambda_{N+1}, or -alpha*mu_{N+1}/lambda_{N+1}^3 in the
    slope regime whose tail is weighted by lambda_n^2).
    """
    if regime is not None and regime is not cl.regime:
        raise ValueError("regime disagrees with the closed-loop matrices")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    _check_spectral(cl, spectral)
    lam_next, mu_next = _tail_data(cl, Gamma)
    if cl.regime is BoundaryRegime.DIRICHLET:
        theta = ThetaFamily("theta1", cl.nu, delta).value(lam_next)
        slack_per_alpha = -1.0 / lam_next
    else:
        theta = ThetaFamily("theta2", cl.nu, delta, Gamma=Gamma).value(lam_next)
        slack_per_alpha = -mu_next / lam_next**3

    nX = cl.dim
    dim = nX + 2

    def evaluator(P: np.ndarray, alpha: float) -> np.ndarray:
        M = np.zeros((dim, dim))
        M[:nX, :nX] = _phi_block(cl, delta, P, alpha)
        M[:nX, nX] = (P @ cl.Lcal).ravel()
        M[nX, :nX] = M[:nX, nX]
        M[nX, nX] = -2.0 * theta
        M[nX, nX + 1] = M[nX + 1, nX] = 1.0
        M[nX + 1, nX + 1] = alpha * slack_per_alpha
        return M

    return _assemble(evaluator, p_dim=nX, dim=dim)


def assemble_gain_lmi(cl: ClosedLoopMatrices, spectral: SpectralModel,
                      delta: float, gamma: float, rho_w: float, rho_u: float,
                      regime: BoundaryRegime | None = None,
                      Gamma: float | None = None) -> AffineMatrixInequality:
    """Disturbance-attenuation certificate in Schur form.

    Layout: [X | zeta | slack (2) | d^N (dim of X) | sigma | output rows].
    The slack pair carries the alpha- and gamma^2-scaled tail complements;
    disturbances see -gamma^2 I; the output rows (present only for nonzero
    weights) see -I with the weight pattern coupling into X.
    """
    if regime is not None and regime is not cl.regime:
        raise ValueError("regime disagrees with the closed-loop matrices")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if delta < 0 or rho_w < 0 or rho_u < 0:
        raise ValueError("delta and the weights must be nonnegative")
    _check_spectral(cl, spectral)
    lam_next, mu_next = _tail_data(cl, Gamma)
    if cl.regime is BoundaryRegime.DIRICHLET:
        theta = ThetaFamily("theta3", cl.nu, delta, rho_w=rho_w).value(lam_next)
        slack_per_alpha = -1.0 / lam_next
        slack_const = -gamma**2 / lam_next
    else:
        theta = ThetaFamily("theta4", cl.nu, delta, rho_w=rho_w,
                            Gamma=Gamma).value(lam_next)
        slack_per_alpha = -mu_next / lam_next
        slack_const = -gamma**2 * mu_next / lam_next**2

    Xi1 = build_output_map(cl, rho_w, rho_u)
    n_out = Xi1.shape[0] if (rho_w > 0.0 or rho_u > 0.0) else 0
    nX = cl.dim
    i_z = nX               # zeta row
    i_s = nX + 1           # two slack rows
    i_d = nX + 3           # d^N rows (nX of them) then sigma
    i_o = i_d + nX + 1     # output rows
    dim = i_o + n_out

    def evaluator(P: np.ndarray, alpha: float) -> np.ndarray:
        M = np.zeros((dim, dim))
        M[:nX, :nX] = _phi_block(cl, delta, P, alpha)
        PL = (P @ cl.Lcal).ravel()
        M[:nX, i_z] = PL
        M[i_z, :nX] = PL
        M[i_z, i_z] = -2.0 * theta
        M[i_z, i_s] = M[i_s, i_z] = 1.0
        M[i_z, i_s + 1] = M[i_s + 1, i_z] = 1.0
        M[i_s, i_s] = alpha * slack_per_alpha
        M[i_s + 1, i_s + 1] = slack_const
        M[:nX, i_d:i_d + nX] = P
        M[i_d:i_d + nX, :nX] = P
        M[:nX, i_d + nX] = PL
        M[i_d + nX, :nX] = PL
        M[i_d:i_d + nX + 1, i_d:i_d + nX + 1] = -gamma**2 * np.eye(nX + 1)
        if n_out:
            M[:nX, i_o:] = Xi1.T
            M[i_o:, :nX] = Xi1
            M[i_o:, i_o:] = -np.eye(n_out)
        return M

    return _assemble(evaluator, p_dim=nX, dim=dim)


# --- pre-Schur evaluators (equivalence oracles for the test suite) ----------

def pre_schur_stab_value(cl: ClosedLoopMatrices, delta: float,
                         P: np.ndarray, alpha: float,
                         Gamma: float | None = None) -> np.ndarray:
    """[ Phi, P Lcal; *, -2(theta - tail complement) ] before Schur expansion."""
    lam_next, mu_next = _tail_data(cl, Gamma)
    if cl.regime is BoundaryRegime.DIRICHLET:
        theta = ThetaFamily("theta1", cl.nu, delta).value(lam_next)
        corner = -2.0 * (theta - lam_next / (2.0 * alpha))
    else:
        theta = ThetaFamily("theta2", cl.nu, delta, Gamma=Gamma).value(lam_next)
        corner = -2.0 * (theta - lam_next**3 / (2.0 * alpha * mu_next))
    nX = cl.dim
    M = np.zeros((nX + 1, nX + 1))
    M[:nX, :nX] = _phi_block(cl, delta, P, alpha)
    M[:nX, nX] = (P @ cl.Lcal).ravel()
    M[nX, :nX] = M[:nX, nX]
    M[nX, nX] = corner
    return M


def pre_schur_gain_value(cl: ClosedLoopMatrices, delta: float, gamma: float,
                         rho_w: float, rho_u: float,
                         P: np.ndarray, alpha: float,
                         Gamma: float | None = None) -> np.ndarray:
    """Gain form on col{X, zeta, d^N, sigma} before the Schur expansion."""
    lam_next, mu_next = _tail_data(cl, Gamma)
    if cl.regime is BoundaryRegime.DIRICHLET:
        theta = ThetaFamily("theta3", cl.nu, delta, rho_w=rho_w).value(lam_next)
        corner = -2.0 * (theta - lam_next / (2.0 * alpha)
                         - lam_next / (2.0 * gamma**2))
    else:
        theta = ThetaFamily("theta4", cl.nu, delta, rho_w=rho_w,
                            Gamma=Gamma).value(lam_next)
        corner = -2.0 * (theta - lam_next / (2.0 * alpha * mu_next)
                         - lam_next**2 / (2.0 * gamma**2 * mu_next))
    Xi1 = build_output_map(cl, rho_w, rho_u)
    nX = cl.dim
    dim = nX + 1 + nX + 1
    M = np.zeros((dim, dim))
    M[:nX, :nX] = _phi_block(cl, delta, P, alpha) + Xi1.T @ Xi1
    PL = (P @ cl.Lcal).ravel()
    M[:nX, nX] = PL
    M[nX, :nX] = PL
    M[nX, nX] = corner
    M[:nX, nX + 1:nX + 1 + nX] = P
    M[nX + 1:nX + 1 + nX, :nX] = P
    M[:nX, -1] = PL
    M[-1, :nX] = PL
    M[nX + 1:, nX + 1:] += -gamma**2 * np.eye(nX + 1)
    return M
