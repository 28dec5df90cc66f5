"""Feasibility decisions for affine matrix inequalities.

Decides whether an :class:`~kse_synth.lmi.AffineMatrixInequality` admits a
decision vector making the matrix negative definite, by maximizing the
uniform margin t in

    A(x) + t*I <= 0,    P(x) >= floor*I,    box bounds on x,

a linear SDP solved with cvxopt's dense primal-dual cone solver.  The blocks
mix entries spanning ~10 orders of magnitude (corner entries grow like
lambda_{N+1}^2 while disturbance rows sit at -gamma^2), so the cone is solved
in equilibrated coordinates; the strictness direction is expressed in the
same coordinates so that the reported optimum stays in raw units.  No single
equilibration conditions every instance, so an Indeterminate primary attempt
falls back to alternative scalings.

Verdicts are conservative: Feasible requires the returned point to pass an
independent symmetric eigensolve (a congruence scaling cannot flip the sign
of the extreme eigenvalue, so a verified certificate from any attempt is
conclusive); Infeasible requires the solver to converge with a decisively
negative optimum; anything else is Indeterminate.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np
from cvxopt import matrix, solvers

from .lmi import AffineMatrixInequality

__all__ = [
    "Verdict",
    "SolveBudget",
    "FeasibilityCertificate",
    "FeasibilityError",
    "SweepRow",
    "SweepReport",
    "solve_margin",
    "min_gamma",
    "min_feasible_n",
    "feasibility_tolerance",
]


class Verdict(enum.Enum):
    """Outcome of a feasibility decision."""

    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class SolveBudget:
    """Iteration cap for one interior-point solve attempt."""

    max_iterations: int = 200

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class FeasibilityCertificate:
    """Decision vector with independently recomputed margins.

    ``margin`` is the raw-units uniform margin: for a Feasible verdict,
    lambda_max(A(x)) <= -margin was established by a fresh eigensolve of the
    assembled matrix (not taken from solver internals).  For an Infeasible
    verdict it is the solver's optimal objective (negative): no decision
    vector achieves a nonnegative margin.  ``margin_equilibrated`` is the
    same quantity for the diagonally equilibrated matrix, which is what the
    verdict threshold is applied to.
    """

    status: Verdict
    x: np.ndarray | None = field(repr=False)
    margin: float
    margin_equilibrated: float
    P: np.ndarray | None = field(repr=False)
    alpha: float | None
    iterations: int
    residuals: dict[str, float] = field(repr=False)
    attempt: str

    def __post_init__(self) -> None:
        if self.status is Verdict.FEASIBLE:
            if self.x is None or self.P is None or self.alpha is None:
                raise ValueError("Feasible certificate must carry a point")
            np.linalg.cholesky(self.P)  # raises if P is not positive definite
            if self.alpha <= 0.0:
                raise ValueError("Feasible certificate needs alpha > 0")


class FeasibilityError(RuntimeError):
    """Raised when a required certificate could not be produced."""

    def __init__(self, message: str, certificate: FeasibilityCertificate):
        super().__init__(message)
        self.certificate = certificate


def _diag_weights(ami: AffineMatrixInequality) -> np.ndarray:
    """Jacobi-style equilibration from the constant block's diagonal."""
    return 1.0 / np.sqrt(np.maximum(1.0, np.abs(np.diag(ami.const_block))))


def _ruiz_weights(ami: AffineMatrixInequality, sweeps: int = 6) -> np.ndarray:
    """Ruiz equilibration of the aggregate magnitude matrix."""
    agg = np.abs(ami.const_block).copy()
    for blk in ami.coeff_blocks:
        np.maximum(agg, np.abs(blk), out=agg)
    d = np.ones(ami.dim)
    for _ in range(sweeps):
        r = np.sqrt(np.max(agg * np.outer(d, d), axis=1))
        r[r == 0.0] = 1.0
        d /= np.sqrt(r)
    return d


def feasibility_tolerance(ami: AffineMatrixInequality) -> float:
    """Margin threshold separating verdicts from numerical noise.

    Sized on the equilibrated constant block so that it tracks the solver's
    working precision rather than the raw corner magnitudes.
    """
    d = _diag_weights(ami)
    return 1e-7 * (1.0 + float(np.max(np.abs(ami.const_block) * np.outer(d, d))))


def _verify_point(
    ami: AffineMatrixInequality, x: np.ndarray
) -> tuple[float, float, float, np.ndarray, float]:
    """Recompute margins for a candidate point by direct eigensolves."""
    A = ami.evaluate(x)
    d = _diag_weights(ami)
    margin_raw = -float(np.max(np.linalg.eigvalsh(A)))
    margin_eq = -float(np.max(np.linalg.eigvalsh(A * np.outer(d, d))))
    P, alpha = ami.unpack(x)
    p_min = float(np.min(np.linalg.eigvalsh(P)))
    return margin_raw, margin_eq, p_min, P, alpha


def _solve_cone(
    ami: AffineMatrixInequality,
    d: np.ndarray,
    strictness: np.ndarray,
    budget: SolveBudget,
) -> tuple[str, np.ndarray | None, float | None, int, dict[str, float]]:
    """One interior-point attempt in the coordinates defined by ``d``.

    Maximizes t subject to  D*A(x)*D + t*strictness <= 0,  P >= floor*I and
    the box bounds; ``strictness`` is the weight of the margin variable in
    the scaled coordinates (identity => margin measured in scaled units,
    diag(d^2) => margin measured in raw units).
    """
    n_vars, dim, p_dim = ami.n_vars, ami.dim, ami.p_dim
    Dm = np.outer(d, d)
    const = ami.const_block * Dm
    coeffs = [blk * Dm for blk in ami.coeff_blocks]
    scale = np.array([np.max(np.abs(blk)) for blk in coeffs])
    scale[scale == 0.0] = 1.0
    coeffs = [blk / sk for blk, sk in zip(coeffs, scale)]

    ny = n_vars + 1  # decision variables plus the margin t
    cone_main = np.zeros((dim * dim, ny))
    for k, blk in enumerate(coeffs):
        cone_main[:, k] = blk.ravel(order="F")
    cone_main[:, n_vars] = strictness.ravel(order="F")

    cone_floor = np.zeros((p_dim * p_dim, ny))
    k = 0
    for i in range(p_dim):
        for j in range(i, p_dim):
            basis = np.zeros((p_dim, p_dim))
            basis[i, j] = basis[j, i] = 1.0
            cone_floor[:, k] = (-basis / scale[k]).ravel(order="F")
            k += 1

    # Box rows, normalized so every right-hand side is 1.0 in magnitude: a
    # raw 1e8/1e9 rhs poisons the solver's relative stopping tests.
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    for k in range(n_vars - 1):
        e = np.zeros(ny)
        e[k] = 1.0 / (scale[k] * ami.p_entry_bound)
        rows.append(e.copy())
        rhs.append(1.0)
        rows.append(-e)
        rhs.append(1.0)
    ia = n_vars - 1
    e = np.zeros(ny)
    e[ia] = 1.0 / (scale[ia] * ami.alpha_bounds[1])
    rows.append(e.copy())
    rhs.append(1.0)
    e = np.zeros(ny)
    e[ia] = -1.0
    rows.append(e)
    rhs.append(-ami.alpha_bounds[0] * scale[ia])

    n_lin = len(rows)
    G = np.vstack([np.array(rows), cone_main, cone_floor])
    h = np.concatenate(
        [
            np.array(rhs),
            (-const).ravel(order="F"),
            (-ami.p_floor * np.eye(p_dim)).ravel(order="F"),
        ]
    )
    c = np.zeros(ny)
    c[n_vars] = -1.0

    options = {
        "show_progress": False,
        "maxiters": budget.max_iterations,
        "refinement": 1,
    }
    try:
        sol = solvers.conelp(
            matrix(c),
            matrix(G),
            matrix(h),
            dims={"l": n_lin, "q": [], "s": [dim, p_dim]},
            options=options,
        )
    except (ValueError, ArithmeticError, ZeroDivisionError) as exc:
        return f"error: {exc}", None, None, 0, {}

    iterations = int(sol.get("iterations", 0))
    residuals = {
        key: float(sol[key])
        for key in (
            "primal objective",
            "dual objective",
            "gap",
            "relative gap",
            "primal infeasibility",
            "dual infeasibility",
        )
        if sol.get(key) is not None
    }
    if sol["x"] is None:
        return str(sol["status"]), None, None, iterations, residuals
    y = np.array(sol["x"]).ravel()
    x = y[:-1] / scale
    return str(sol["status"]), x, float(y[-1]), iterations, residuals


def solve_margin(
    ami: AffineMatrixInequality, budget: SolveBudget | None = None
) -> FeasibilityCertificate:
    """Decide feasibility of ``ami`` and maximize its definiteness margin.

    Runs up to three solve attempts in different coordinate systems; the
    first to produce a verifiable verdict wins.  A Feasible verdict is backed
    by eigensolves of the assembled matrix at the returned point.  An
    Infeasible verdict requires converged optimality with the optimum below
    ``-feasibility_tolerance(ami)`` on an attempt whose margin units are
    calibrated (raw or diagonally equilibrated).  Everything else returns
    Indeterminate with the primary attempt's diagnostics.
    """
    if budget is None:
        budget = SolveBudget()
    tol = feasibility_tolerance(ami)

    d_ruiz = _ruiz_weights(ami)
    d_diag = _diag_weights(ami)
    attempts = (
        # Ruiz-conditioned cone, margin measured in raw units.
        ("ruiz-raw", d_ruiz, np.diag(d_ruiz * d_ruiz), True),
        # Diagonal equilibration, margin in equilibrated units.
        ("diag", d_diag, np.eye(ami.dim), True),
        # Plain Ruiz: margin units are direction-dependent, so this attempt
        # may only certify feasibility, never conclude infeasibility.
        ("ruiz", d_ruiz, np.eye(ami.dim), False),
    )

    fallback: FeasibilityCertificate | None = None
    for name, d, strictness, calibrated in attempts:
        status, x, t_star, iterations, residuals = _solve_cone(
            ami, d, strictness, budget
        )
        if x is not None:
            margin_raw, margin_eq, p_min, P, alpha = _verify_point(ami, x)
            certified = (
                min(margin_raw, margin_eq) >= tol
                and p_min >= ami.p_floor * (1.0 - 1e-6)
                and alpha > 0.0
            )
            if certified:
                return FeasibilityCertificate(
                    status=Verdict.FEASIBLE,
                    x=x,
                    margin=margin_raw,
                    margin_equilibrated=margin_eq,
                    P=P,
                    alpha=alpha,
                    iterations=iterations,
                    residuals=residuals,
                    attempt=name,
                )
            if status == "optimal" and calibrated and t_star is not None:
                if t_star <= -tol:
                    return FeasibilityCertificate(
                        status=Verdict.INFEASIBLE,
                        x=x,
                        margin=float(t_star),
                        margin_equilibrated=margin_eq,
                        P=P,
                        alpha=alpha,
                        iterations=iterations,
                        residuals=residuals,
                        attempt=name,
                    )
            if fallback is None:
                fallback = FeasibilityCertificate(
                    status=Verdict.INDETERMINATE,
                    x=x,
                    margin=margin_raw,
                    margin_equilibrated=margin_eq,
                    P=P,
                    alpha=alpha,
                    iterations=iterations,
                    residuals=residuals,
                    attempt=name,
                )
        elif fallback is None:
            fallback = FeasibilityCertificate(
                status=Verdict.INDETERMINATE,
                x=None,
                margin=float("nan"),
                margin_equilibrated=float("nan"),
                P=None,
                alpha=None,
                iterations=iterations,
                residuals=residuals,
                attempt=f"{name} ({status})",
            )

    assert fallback is not None
    return fallback


def min_gamma(
    builder,
    gamma_lo: float,
    gamma_hi: float,
    tol_gamma: float = 0.05,
    budget: SolveBudget | None = None,
) -> float:
    """Smallest certified-feasible gamma located by bisection.

    ``builder`` maps gamma to an AffineMatrixInequality.  The upper endpoint
    must be Feasible (raises :class:`FeasibilityError` otherwise, carrying
    the failing certificate); feasibility is monotone in gamma for the
    assembled families, so bisection narrows the bracket to ``tol_gamma``
    and returns its certified upper end.
    """
    if not gamma_lo < gamma_hi:
        raise ValueError("gamma_lo must be strictly below gamma_hi")
    if tol_gamma <= 0.0:
        raise ValueError("tol_gamma must be positive")
    cert = solve_margin(builder(gamma_hi), budget)
    if cert.status is not Verdict.FEASIBLE:
        raise FeasibilityError(
            f"gamma upper bracket {gamma_hi} is not feasible "
            f"({cert.status.value}, margin {cert.margin:.3e})",
            cert,
        )
    lo, hi = float(gamma_lo), float(gamma_hi)
    while hi - lo > tol_gamma:
        mid = 0.5 * (lo + hi)
        cert = solve_margin(builder(mid), budget)
        if cert.status is Verdict.FEASIBLE:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class SweepRow:
    """One solved instance of a parameter sweep."""

    n: int
    gamma: float | None
    status: Verdict
    margin: float
    wall_ms: float


@dataclass(frozen=True)
class SweepReport:
    """Ordered sweep results, serializable to CSV."""

    rows: tuple[SweepRow, ...]

    def __post_init__(self) -> None:
        ns = [row.n for row in self.rows]
        if ns != sorted(ns):
            raise ValueError("sweep rows must be ordered by N")

    def to_csv(self) -> str:
        lines = ["N,gamma,status,margin,wall_ms"]
        for row in self.rows:
            gamma = "" if row.gamma is None else f"{row.gamma:.10g}"
            lines.append(
                f"{row.n},{gamma},{row.status.value},"
                f"{row.margin:.10g},{row.wall_ms:.1f}"
            )
        return "\n".join(lines) + "\n"


def min_feasible_n(
    builder,
    n_lo: int,
    n_hi: int,
    budget: SolveBudget | None = None,
) -> tuple[int | None, SweepReport]:
    """Smallest N in [n_lo, n_hi] whose inequality is Feasible.

    Scans upward (the assembled families are monotone in N), recording every
    verdict; absence of a feasible N within the range is a value (None), not
    an error.
    """
    if n_lo > n_hi:
        raise ValueError("n_lo must not exceed n_hi")
    rows: list[SweepRow] = []
    n_star: int | None = None
    for n in range(n_lo, n_hi + 1):
        start = time.perf_counter()
        cert = solve_margin(builder(n), budget)
        wall_ms = 1e3 * (time.perf_counter() - start)
        rows.append(
            SweepRow(
                n=n,
                gamma=None,
                status=cert.status,
                margin=cert.margin,
                wall_ms=wall_ms,
            )
        )
        if cert.status is Verdict.FEASIBLE:
            n_star = n
            break
    return n_star, SweepReport(tuple(rows))
