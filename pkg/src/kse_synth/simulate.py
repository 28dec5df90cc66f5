"""Time-domain simulation of the truncated modal closed loop.

Stacks the certified finite-dimensional state with the residual plant modes
up to a simulation order M, discretizes the resulting LTI system exactly with
a matrix exponential (the mode stiffness grows like lambda_M^2, which rules
out explicit stepping), and samples disturbances zero-order-hold at step
starts.  Norm channels, Lyapunov samples, the performance index and the
ISS residual are all computed from the recorded modal trajectories with
Parseval sums truncated at M.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import expm

from kse_synth.gains import GainSet
from kse_synth.lmi import build_closed_loop
from kse_synth.spectral import (
    BoundaryRegime,
    PlantConfig,
    SpectralModel,
    actuation_coeff,
    cosine_projection,
    mode_indices,
    sine_projection,
)

__all__ = [
    "DivergenceError",
    "TravelingWave",
    "Sinusoid",
    "SimScenario",
    "FullGenerator",
    "Trajectory",
    "NormChannels",
    "project_initial",
    "build_full_generator",
    "integrate",
    "lyapunov_samples",
    "compute_norms",
    "performance_index",
    "iss_check",
    "fit_decay_rate",
    "write_trajectory_csv",
]

#: panel-doubling agreement required of projection quadratures
QUAD_TOL = 1e-8
#: largest panel count tried before quadrature is declared non-convergent
QUAD_MAX_PANELS = 1 << 16
#: CSV column order of the scalar channels
CSV_CHANNELS = ("t", "u", "v", "zeta", "normL2_w", "normH1_w", "normH2_w",
                "normH1_z", "V", "J")


class DivergenceError(RuntimeError):
    """The integrated state left the finite floating-point range."""

    def __init__(self, time: float):
        super().__init__(f"state became non-finite at t={time:.6g}")
        self.time = float(time)


# --- disturbance signal descriptors ------------------------------------------

@dataclass(frozen=True)
class TravelingWave:
    """In-domain disturbance d(x,t) = amplitude * sin(space_freq*x + time_freq*t).

    The modal projections split into a closed form,
    d_n(t) = amplitude * (S_n cos(time_freq t) + C_n sin(time_freq t)),
    with S_n, C_n the basis projections of sin(space_freq x), cos(space_freq x).
    """

    amplitude: float
    space_freq: float
    time_freq: float

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        out = self.amplitude * np.sin(self.space_freq * x + self.time_freq * t)
        return out if out.ndim else float(out)

    def modal_samples(self, regime: BoundaryRegime, modes: np.ndarray,
                      t: np.ndarray) -> np.ndarray:
        """Projections d_n(t_k) as an array of shape (len(t), len(modes))."""
        S = np.array([sine_projection(self.space_freq, int(n), regime) for n in modes])
        C = np.array([cosine_projection(self.space_freq, int(n), regime) for n in modes])
        t = np.asarray(t, dtype=float)
        return self.amplitude * (np.outer(np.cos(self.time_freq * t), S)
                                 + np.outer(np.sin(self.time_freq * t), C))


@dataclass(frozen=True)
class Sinusoid:
    """Scalar signal amplitude * cos(freq*t + phase); zero by default."""

    amplitude: float = 0.0
    freq: float = 0.0
    phase: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.amplitude * np.cos(self.freq * t + self.phase)
        return out if out.ndim else float(out)


# --- quadrature helpers -------------------------------------------------------

def _simpson_rule(panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of composite Simpson with 2*panels subintervals."""
    m = 2 * panels
    nodes = np.linspace(0.0, 1.0, m + 1)
    w = np.full(m + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return nodes, w / (3.0 * m)


def _basis_matrix(regime: BoundaryRegime, modes: np.ndarray,
                  x: np.ndarray) -> np.ndarray:
    """Eigenfunction values phi_n(x_j) as an array (len(modes), len(x))."""
    modes = np.asarray(modes, dtype=float)
    if regime is BoundaryRegime.DIRICHLET:
        return math.sqrt(2.0) * np.sin(np.outer(modes, math.pi * x))
    out = math.sqrt(2.0) * np.cos(np.outer(modes, math.pi * x))
    out[modes == 0.0] = 1.0
    return out


def _profile_values(profile: Callable, x: np.ndarray) -> np.ndarray:
    vals = np.asarray(profile(x), dtype=float)
    if vals.shape != x.shape:
        vals = np.broadcast_to(vals, x.shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("profile returned non-finite values")
    return vals


def project_initial(profile: Callable, spectral: SpectralModel,
                    M: int | None = None) -> np.ndarray:
    """Basis projections <profile, phi_n> for the modes up to M.

    Composite Simpson quadrature with panel doubling; raises if successive
    refinements still disagree by more than QUAD_TOL at the panel limit.
    """
    regime = spectral.regime
    if M is None:
        M = spectral.M
    if M < regime.first_mode:
        raise ValueError(f"M={M} below the first mode of the {regime.value} regime")
    modes = np.array(mode_indices(regime, M))

    panels = 64
    nodes, weights = _simpson_rule(panels)
    prev = _basis_matrix(regime, modes, nodes) @ (weights * _profile_values(profile, nodes))
    while panels < QUAD_MAX_PANELS:
        panels *= 2
        nodes, weights = _simpson_rule(panels)
        proj = _basis_matrix(regime, modes, nodes) @ (weights * _profile_values(profile, nodes))
        gap = float(np.max(np.abs(proj - prev)))
        if gap <= QUAD_TOL:
            return proj
        prev = proj
    raise ValueError(
        f"initial-profile quadrature did not converge: panel-doubling "
        f"disagreement {gap:.3e} exceeds {QUAD_TOL:g}")


# --- scenario -----------------------------------------------------------------

@dataclass(frozen=True)
class SimScenario:
    """One closed-loop simulation run.

    The control state and the observer always start at zero; ``w0`` holds the
    initial plant-mode amplitudes for modes first..M.  ``d`` is the in-domain
    disturbance (None, a TravelingWave, or a callable d(x, t) projected by
    cached quadrature) and ``sigma`` the sensor disturbance (None or a
    callable of t).
    """

    plant: PlantConfig
    spectral: SpectralModel
    gains: GainSet
    w0: np.ndarray
    d: TravelingWave | Callable | None = None
    sigma: Sinusoid | Callable | None = None
    horizon: float = 3.0
    step: float = 1e-4

    def __post_init__(self) -> None:
        if self.plant.regime is not self.spectral.regime:
            raise ValueError("plant and spectral model disagree on the regime")
        if self.plant.nu != self.spectral.nu:
            raise ValueError("plant and spectral model disagree on nu")
        if self.spectral.M <= self.spectral.N:
            raise ValueError(
                f"simulation order M={self.spectral.M} must exceed N={self.spectral.N}")
        w0 = np.asarray(self.w0, dtype=float).ravel()
        m_count = self.spectral.M + 1 - self.spectral.regime.first_mode
        if w0.shape != (m_count,):
            raise ValueError(f"w0 must hold {m_count} modal amplitudes, got {w0.shape}")
        if not np.all(np.isfinite(w0)):
            raise ValueError("w0 must be finite")
        object.__setattr__(self, "w0", w0)
        if self.horizon <= 0 or self.step <= 0:
            raise ValueError("horizon and step must be positive")
        ratio = self.horizon / self.step
        if abs(ratio - round(ratio)) > 1e-6 * max(1.0, ratio) or round(ratio) < 1:
            raise ValueError("horizon must be a positive integer multiple of step")
        if self.d is not None and not callable(self.d):
            raise ValueError("d must be None or callable as d(x, t)")
        if self.sigma is not None and not callable(self.sigma):
            raise ValueError("sigma must be None or callable as sigma(t)")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.step))


# --- stacked generator --------------------------------------------------------

@dataclass(frozen=True)
class FullGenerator:
    """LTI generator of the stacked state [X_N; w_{N+1..M}].

    ``dist_map`` injects the modal disturbance vector (d_first..d_M): retained
    modes drive their estimation-error slots, residual modes their own rows.
    ``sigma_map`` injects the sensor disturbance, ``control_row`` recovers
    v(t) and ``zeta_row`` the sensing residual of the unmodeled modes.
    """

    regime: BoundaryRegime
    N0: int
    N: int
    M: int
    nX: int
    A: np.ndarray = field(repr=False)
    dist_map: np.ndarray = field(repr=False)
    sigma_map: np.ndarray = field(repr=False)
    control_row: np.ndarray = field(repr=False)
    zeta_row: np.ndarray = field(repr=False)
    what_cols: np.ndarray = field(repr=False)
    e_cols: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def n_tail(self) -> int:
        return self.M - self.N


def build_full_generator(spectral: SpectralModel, gains: GainSet) -> FullGenerator:
    """Stack the certified closed loop with the residual modes N+1..M."""
    cl = build_closed_loop(spectral, gains)
    first = spectral.regime.first_mode
    N0, N, M = spectral.N0, spectral.N, spectral.M
    nX = cl.dim
    tail = list(range(N + 1, M + 1))
    n_tail = len(tail)
    dim = nX + n_tail

    A = np.zeros((dim, dim))
    A[:nX, :nX] = cl.F
    if n_tail:
        lam_t = np.array([spectral.lam_of(n) for n in tail])
        b_t = np.array([spectral.b_of(n) for n in tail])
        c_t = np.array([spectral.c_of(n) for n in tail])
        A[:nX, nX:] = cl.Lcal @ c_t[None, :]
        A[nX:, :nX] = b_t[:, None] @ cl.Ktilde0
        A[nX:, nX:] = np.diag(-lam_t * lam_t + spectral.nu * lam_t)

    s = cl.slices
    m_count = M + 1 - first
    dist_map = np.zeros((dim, m_count))
    for k, n in enumerate(mode_indices(spectral.regime, M)):
        if n <= N0:
            dist_map[s["e_low"].start + (n - first), k] = 1.0
        elif n <= N:
            dist_map[s["e_high"].start + (n - N0 - 1), k] = 1.0
        else:
            dist_map[nX + (n - N - 1), k] = 1.0

    sigma_map = np.zeros(dim)
    sigma_map[:nX] = cl.Lcal[:, 0]

    control_row = np.zeros(dim)
    control_row[:nX] = cl.Ktilde0[0]
    zeta_row = np.zeros(dim)
    if n_tail:
        zeta_row[nX:] = c_t

    what_cols = np.concatenate([
        np.arange(1, cl.n_ctrl),
        np.arange(s["what_high"].start, s["what_high"].stop),
    ]).astype(int)
    e_cols = np.concatenate([
        np.arange(s["e_low"].start, s["e_low"].stop),
        np.arange(s["e_high"].start, s["e_high"].stop),
    ]).astype(int)

    return FullGenerator(regime=spectral.regime, N0=N0, N=N, M=M, nX=nX,
                         A=A, dist_map=dist_map, sigma_map=sigma_map,
                         control_row=control_row, zeta_row=zeta_row,
                         what_cols=what_cols, e_cols=e_cols)


# --- trajectory ---------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """Sampled closed-loop run.

    ``w`` covers plant modes first..M, ``what``/``e`` the retained modes
    first..N with e_n = w_n - what_n.  ``d_norm_sq`` records the Parseval sum
    of the modal disturbance projections and ``sigma`` the sensor disturbance,
    both at sample times.  ``V``/``J`` are populated when a certificate matrix
    or performance weights are handed to :func:`integrate`, else zero.
    """

    regime: BoundaryRegime
    N0: int
    N: int
    M: int
    t: np.ndarray = field(repr=False)
    X: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    what: np.ndarray = field(repr=False)
    e: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    zeta: np.ndarray = field(repr=False)
    d_norm_sq: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    J: np.ndarray = field(repr=False)

    @property
    def mode_numbers(self) -> np.ndarray:
        return np.array(mode_indices(self.regime, self.M))

    @property
    def eigenvalues(self) -> np.ndarray:
        return (self.mode_numbers * math.pi) ** 2.0


def _modal_disturbance_samples(d, spectral: SpectralModel,
                               t: np.ndarray) -> np.ndarray:
    """Sampled modal projections of the in-domain disturbance, (nt, m_count)."""
    modes = np.array(mode_indices(spectral.regime, spectral.M))
    if d is None:
        return np.zeros((len(t), len(modes)))
    if isinstance(d, TravelingWave):
        return d.modal_samples(spectral.regime, modes, t)
    nodes, weights = _simpson_rule(1024)
    phi_w = _basis_matrix(spectral.regime, modes, nodes) * weights
    nodes2, weights2 = _simpson_rule(2048)
    phi_w2 = _basis_matrix(spectral.regime, modes, nodes2) * weights2
    probe = float(t[0])
    gap = np.max(np.abs(phi_w @ np.asarray(d(nodes, probe), dtype=float)
                        - phi_w2 @ np.asarray(d(nodes2, probe), dtype=float)))
    if gap > QUAD_TOL:
        raise ValueError(
            f"disturbance quadrature did not converge: panel-doubling "
            f"disagreement {gap:.3e} exceeds {QUAD_TOL:g}")
    out = np.empty((len(t), len(modes)))
    for k, tk in enumerate(t):
        out[k] = phi_w2 @ np.asarray(d(nodes2, float(tk)), dtype=float)
    return out


def _sigma_samples(sigma, t: np.ndarray) -> np.ndarray:
    if sigma is None:
        return np.zeros(len(t))
    try:
        out = np.asarray(sigma(t), dtype=float)
        if out.shape == t.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(sigma(float(tk))) for tk in t])


def integrate(scenario: SimScenario, P: np.ndarray | None = None,
              performance: tuple[float, float, float] | None = None,
              tail_power: int | None = None) -> Trajectory:
    """Exact zero-order-hold integration of the stacked closed loop.

    Disturbances are held constant over each step at their start value, so
    the propagation per step is one matrix exponential applied to the state.
    ``P`` triggers Lyapunov recording (see :func:`lyapunov_samples`, whose
    ``tail_power`` is forwarded) and ``performance = (rho_w, rho_u, gamma)``
    performance-index recording.
    """
    gen = build_full_generator(scenario.spectral, scenario.gains)
    sp = scenario.spectral
    first = sp.regime.first_mode
    n_steps = scenario.n_steps
    h = scenario.step
    t = np.arange(n_steps + 1) * h

    d_modal = _modal_disturbance_samples(scenario.d, sp, t)
    sig = _sigma_samples(scenario.sigma, t)
    forced = scenario.d is not None or scenario.sigma is not None

    Y = np.empty((n_steps + 1, gen.dim))
    y0 = np.zeros(gen.dim)
    r_count = sp.N + 1 - first
    y0[gen.e_cols] = scenario.w0[:r_count]
    y0[gen.nX:] = scenario.w0[r_count:]
    Y[0] = y0

    if forced:
        B = np.hstack([gen.dist_map, gen.sigma_map[:, None]])
        n_in = B.shape[1]
        aug = np.zeros((gen.dim + n_in, gen.dim + n_in))
        aug[:gen.dim, :gen.dim] = gen.A * h
        aug[:gen.dim, gen.dim:] = B * h
        E_aug = expm(aug)
        E = E_aug[:gen.dim, :gen.dim]
        G = E_aug[:gen.dim, gen.dim:]
        inputs = np.hstack([d_modal, sig[:, None]])
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(n_steps):
                y = E @ Y[k] + G @ inputs[k]
                if not np.all(np.isfinite(y)):
                    raise DivergenceError(t[k + 1])
                Y[k + 1] = y
    else:
        E = expm(gen.A * h)
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(n_steps):
                y = E @ Y[k]
                if not np.all(np.isfinite(y)):
                    raise DivergenceError(t[k + 1])
                Y[k + 1] = y

    X = Y[:, :gen.nX]
    what = Y[:, gen.what_cols]
    e = Y[:, gen.e_cols]
    w = np.hstack([what + e, Y[:, gen.nX:]])
    traj = Trajectory(
        regime=sp.regime, N0=sp.N0, N=sp.N, M=sp.M,
        t=t, X=X, w=w, what=what, e=e,
        u=Y[:, 0], v=Y @ gen.control_row, zeta=Y @ gen.zeta_row,
        d_norm_sq=np.sum(d_modal * d_modal, axis=1), sigma=sig,
        V=np.zeros(n_steps + 1), J=np.zeros(n_steps + 1),
    )
    if P is not None:
        traj = dataclasses.replace(traj, V=lyapunov_samples(traj, P, tail_power))
    if performance is not None:
        traj = dataclasses.replace(traj, J=performance_index(traj, *performance))
    return traj


def lyapunov_samples(traj: Trajectory, P: np.ndarray,
                     tail_power: int | None = None) -> np.ndarray:
    """Certified functional X'PX plus the weighted residual-mode tail.

    ``tail_power`` is the exponent on lambda_n in the tail sum.  The default
    matches the stabilization functionals: 1 in the boundary-value regime, 2
    in the boundary-slope regime.  The disturbance-analysis functionals use
    power 1 in both regimes; pass ``tail_power=1`` for those certificates.
    """
    P = np.asarray(P, dtype=float)
    nX = traj.X.shape[1]
    if P.shape != (nX, nX):
        raise ValueError(f"P must be {nX}x{nX}, got {P.shape}")
    if tail_power is None:
        tail_power = 1 if traj.regime is BoundaryRegime.DIRICHLET else 2
    if tail_power not in (1, 2):
        raise ValueError("tail_power must be 1 or 2")
    V = np.einsum("ti,ij,tj->t", traj.X, P, traj.X)
    r_count = traj.w.shape[1] - (traj.M - traj.N)
    lam_tail = traj.eigenvalues[r_count:]
    w_tail = traj.w[:, r_count:]
    return V + (w_tail * w_tail) @ lam_tail**tail_power


# --- norm channels -------------------------------------------------------------

@dataclass(frozen=True)
class NormChannels:
    """Sampled L2/H1/H2 norms of the internal state w and the physical state z."""

    L2_w: np.ndarray
    H1_w: np.ndarray
    H2_w: np.ndarray
    L2_z: np.ndarray
    H1_z: np.ndarray
    H2_z: np.ndarray


def compute_norms(traj: Trajectory, regime: BoundaryRegime | None = None) -> NormChannels:
    """Norms via truncated Parseval sums; z = w + r(x) u is reconstructed
    with the residual of the boundary profile r handled in closed form."""
    if regime is None:
        regime = traj.regime
    elif regime is not traj.regime:
        raise ValueError("regime disagrees with the trajectory")
    if not np.all(np.isfinite(traj.w)):
        raise ValueError("trajectory contains non-finite samples")

    lam = traj.eigenvalues
    w, u = traj.w, traj.u
    w_sq = w * w
    L2_w_sq = w_sq.sum(axis=1)
    Dw_sq = w_sq @ lam
    D2w_sq = w_sq @ lam**2

    b = np.array([actuation_coeff(int(n), regime) for n in traj.mode_numbers])
    if regime is BoundaryRegime.DIRICHLET:
        r_sq, rp_sq, rpp_sq = 1.0 / 3.0, 1.0, 0.0
        g = np.zeros_like(b)
    else:
        r_sq, rp_sq, rpp_sq = 2.0 / 15.0, 1.0 / 3.0, 1.0
        g = np.full_like(b, -math.sqrt(2.0))
        g[0] = 0.0

    z = w - np.outer(u, b)
    L2_z_sq = (z * z).sum(axis=1) + u * u * max(r_sq - float(b @ b), 0.0)
    Dz_sq = Dw_sq + 2.0 * u * (w @ g) + u * u * rp_sq
    D2z_sq = D2w_sq + u * u * rpp_sq

    def root(a: np.ndarray) -> np.ndarray:
        return np.sqrt(np.maximum(a, 0.0))

    return NormChannels(
        L2_w=root(L2_w_sq), H1_w=root(L2_w_sq + Dw_sq), H2_w=root(D2w_sq),
        L2_z=root(L2_z_sq), H1_z=root(L2_z_sq + Dz_sq), H2_z=root(D2z_sq),
    )


# --- analysis channels ----------------------------------------------------------

def performance_index(traj: Trajectory, rho_w: float, rho_u: float,
                      gamma: float) -> np.ndarray:
    """Running integral of rho_w^2 ||w||^2 + rho_u^2 u^2 - gamma^2 (||d||^2 + sigma^2).

    Trapezoidal accumulation on the sample grid with Parseval sums truncated
    at M modes.
    """
    if rho_w < 0 or rho_u < 0 or gamma <= 0:
        raise ValueError("weights must be nonnegative and gamma positive")
    integrand = (rho_w**2 * np.sum(traj.w * traj.w, axis=1)
                 + rho_u**2 * traj.u * traj.u
                 - gamma**2 * (traj.d_norm_sq + traj.sigma * traj.sigma))
    return cumulative_trapezoid(integrand, traj.t, initial=0.0)


def iss_check(traj: Trajectory, P: np.ndarray, delta: float,
              gamma: float) -> float:
    """Worst-case residual of the disturbance-to-state bound.

    Returns max over sample times T of
    V(T) - exp(-2 delta T) V(0) - gamma^2/(2 delta) sup_{t<=T}(||d||^2 + sigma^2);
    a certified run should stay at or below zero up to truncation error.
    """
    if delta <= 0:
        raise ValueError("the bound requires delta > 0")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    V = lyapunov_samples(traj, P, tail_power=1)
    sup = np.maximum.accumulate(traj.d_norm_sq + traj.sigma * traj.sigma)
    resid = V - np.exp(-2.0 * delta * traj.t) * V[0] - gamma**2 / (2.0 * delta) * sup
    return float(resid.max())


def fit_decay_rate(t: np.ndarray, samples: np.ndarray, t1: float = 0.5,
                   t2: float = 3.0) -> float:
    """Decay rate from a least-squares line through (t, log samples^2).

    Fits on the window [t1, t2] (skipping the initial transient) and returns
    minus half the slope; requires strictly positive samples there.
    """
    t = np.asarray(t, dtype=float)
    samples = np.asarray(samples, dtype=float)
    if t.shape != samples.shape:
        raise ValueError("time grid and samples must have matching shapes")
    if not t1 < t2:
        raise ValueError("fit window must satisfy t1 < t2")
    mask = (t >= t1) & (t <= t2)
    if mask.sum() < 2:
        raise ValueError("fit window contains fewer than two samples")
    y = samples[mask]
    if np.any(y <= 0.0):
        raise ValueError("decay fit requires strictly positive samples on the window")
    slope = np.polyfit(t[mask], np.log(y * y), 1)[0]
    return -0.5 * float(slope)


# --- export ---------------------------------------------------------------------

def write_trajectory_csv(traj: Trajectory, path, include_modes: bool = False) -> None:
    """Write the scalar channels (and optionally per-mode columns) as CSV.

    Column order follows CSV_CHANNELS; mode columns are named w_<n> for modes
    first..M and what_<n> for the retained modes.  Values are printed with 12
    significant digits.
    """
    norms = compute_norms(traj)
    cols = [traj.t, traj.u, traj.v, traj.zeta, norms.L2_w, norms.H1_w,
            norms.H2_w, norms.H1_z, traj.V, traj.J]
    names = list(CSV_CHANNELS)
    if include_modes:
        modes = traj.mode_numbers
        for k, n in enumerate(modes):
            cols.append(traj.w[:, k])
            names.append(f"w_{n}")
        for k, n in enumerate(modes[:traj.what.shape[1]]):
            cols.append(traj.what[:, k])
            names.append(f"what_{n}")
    data = np.column_stack(cols)
    np.savetxt(path, data, fmt="%.12g", delimiter=",",
               header=",".join(names), comments="")
