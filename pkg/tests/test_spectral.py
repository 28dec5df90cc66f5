"""Spectral-model tests: every closed form is checked against an independent
quadrature or brute-force oracle, plus frozen regression literals."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kse_synth.spectral import (
    AssumptionError,
    BoundaryRegime,
    PlantConfig,
    actuation_coeff,
    build_spectral_model,
    check_assumption1,
    check_assumption2,
    cosine_projection,
    eigenfunction_value,
    eigenvalue,
    lifting_profile,
    mode_indices,
    sensing_coeff,
    sine_projection,
    sobolev_weight,
    tail_bound,
    unstable_mode_count,
)

from _oracles import grid_max_abs, integrate_01

D = BoundaryRegime.DIRICHLET
NE = BoundaryRegime.NEUMANN
REGIMES = (D, NE)


# --- eigenstructure -------------------------------------------------------

def test_eigenvalues_quadratic_in_mode_number():
    for n in range(1, 30):
        assert eigenvalue(n, D) == pytest.approx(n * n * math.pi**2, rel=1e-15)
    assert eigenvalue(0, NE) == 0.0
    with pytest.raises(ValueError):
        eigenvalue(0, D)
    with pytest.raises(ValueError):
        eigenvalue(-1, NE)


@pytest.mark.parametrize("regime", REGIMES)
def test_eigenfunctions_orthonormal(regime):
    for i in mode_indices(regime, 6):
        for j in mode_indices(regime, 6):
            ip = integrate_01(lambda x: eigenfunction_value(i, regime, x)
                              * eigenfunction_value(j, regime, x))
            assert ip == pytest.approx(1.0 if i == j else 0.0, abs=1e-12)


@pytest.mark.parametrize("regime", REGIMES)
def test_eigenfunctions_satisfy_operator_and_boundary(regime):
    # -phi'' = lambda phi, checked via the closed-form second derivative,
    # plus the regime's homogeneous boundary conditions
    for n in mode_indices(regime, 5):
        lam = eigenvalue(n, regime)
        x = np.linspace(0.0, 1.0, 11)
        phi = eigenfunction_value(n, regime, x)
        if regime is D:
            second = -lam * math.sqrt(2.0) * np.sin(n * math.pi * x)
            assert eigenfunction_value(n, regime, 0.0) == pytest.approx(0.0, abs=1e-15)
            assert eigenfunction_value(n, regime, 1.0) == pytest.approx(0.0, abs=1e-12)
        else:
            base = np.ones_like(x) if n == 0 else math.sqrt(2.0) * np.cos(n * math.pi * x)
            second = -lam * base
            h = 1e-5
            for edge in (0.0, 1.0):
                inner = edge + h if edge == 0.0 else edge - h
                slope = (eigenfunction_value(n, regime, inner)
                         - eigenfunction_value(n, regime, edge)) / h
                assert abs(slope) < 1e-3 * max(1.0, lam)
        assert np.allclose(-second, lam * phi, rtol=1e-12, atol=1e-9)


def test_eigenfunction_rejects_points_outside_domain():
    with pytest.raises(ValueError):
        eigenfunction_value(1, D, 1.5)
    with pytest.raises(ValueError):
        eigenfunction_value(1, NE, np.array([0.2, -0.1]))


# --- lifting profile and actuation coefficients ---------------------------

def test_lifting_profile_boundary_conditions():
    # Dirichlet profile carries a unit boundary value and vanishes at x=1;
    # Neumann profile carries a unit boundary slope and a flat far end.
    assert lifting_profile(0.0, D) == 1.0
    assert lifting_profile(1.0, D) == 0.0
    h = 1e-7
    assert (lifting_profile(h, NE) - lifting_profile(0.0, NE)) / h == pytest.approx(1.0, abs=1e-6)
    assert (lifting_profile(1.0, NE) - lifting_profile(1.0 - h, NE)) / h == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("regime", REGIMES)
def test_actuation_coeff_matches_quadrature(regime):
    # b_n = -<r, phi_n>, closed form vs composite Simpson
    for n in mode_indices(regime, 50):
        oracle = integrate_01(lambda x: -lifting_profile(x, regime)
                              * eigenfunction_value(n, regime, x))
        assert actuation_coeff(n, regime) == pytest.approx(oracle, abs=1e-10)


def test_actuation_coeff_frozen_values():
    assert actuation_coeff(1, D) == pytest.approx(-0.450158158078553, abs=1e-12)
    assert actuation_coeff(0, NE) == pytest.approx(-1.0 / 3.0, abs=1e-15)
    assert actuation_coeff(1, NE) == pytest.approx(0.143289792062689, abs=1e-12)
    for regime in REGIMES:
        for n in mode_indices(regime, 40):
            assert actuation_coeff(n, regime) != 0.0


@pytest.mark.parametrize("regime,N", [(r, N) for r in REGIMES for N in range(1, 21)])
def test_tail_bound_dominates_brute_force_sum(regime, N):
    # brute-force partial sum of b_n^2 for n = N+1 .. 1e6 (the summand decays
    # at least like n^-2, so the remainder beyond 1e6 is < 2e-7 and cannot
    # flip the comparison at these magnitudes)
    n = np.arange(N + 1, 1_000_001, dtype=float)
    if regime is D:
        terms = 2.0 / (math.pi**2 * n**2)
    else:
        terms = 2.0 / (math.pi**4 * n**4)
    # spot-check the vectorized summand against the scalar closed form
    for probe in (N + 1, N + 7):
        assert terms[probe - (N + 1)] == pytest.approx(
            actuation_coeff(probe, regime) ** 2, rel=1e-13)
    brute = float(np.sum(terms[::-1]))
    assert brute <= tail_bound(N, regime)
    # the bound is tight up to a constant factor, not vacuous
    assert tail_bound(N, regime) <= 4.05 * brute


def test_tail_bound_rejects_degenerate_order():
    with pytest.raises(ValueError):
        tail_bound(0, D)


# --- sensing coefficients -------------------------------------------------

def test_sensing_coeff_dirichlet_is_eigenfunction_trace():
    x_star = 1.0 / math.pi
    for n in range(1, 12):
        assert sensing_coeff(n, D, x_star) == pytest.approx(
            eigenfunction_value(n, D, x_star), rel=1e-15)
    assert sensing_coeff(1, D, x_star) == pytest.approx(1.19001967906, abs=1e-10)
    with pytest.raises(ValueError):
        sensing_coeff(1, D)


def test_sensing_coeff_neumann_is_boundary_trace():
    assert sensing_coeff(0, NE) == 1.0
    for n in range(1, 12):
        assert sensing_coeff(n, NE) == pytest.approx(
            eigenfunction_value(n, NE, 0.0), rel=1e-15)
        assert sensing_coeff(n, NE) == pytest.approx(math.sqrt(2.0), rel=1e-15)


# --- mode counting --------------------------------------------------------

@pytest.mark.parametrize("nu,delta,expected", [
    (10.0, 1.0, 1),
    (10.0, 0.0, 1),
    (1.0, 0.0, 0),
    (50.0, 0.0, 2),
    (10.0, 1200.0, 2),
    (200.0, 0.0, 4),
])
def test_unstable_mode_count_cases(nu, delta, expected):
    assert unstable_mode_count(nu, delta, D) == expected
    assert unstable_mode_count(nu, delta, NE) == expected


def test_unstable_mode_count_matches_exhaustive_scan():
    for nu in (0.5, 5.0, 10.0, 25.0, 120.0):
        for delta in (0.0, 1.0, 50.0):
            satisfied = [n for n in range(1, 200)
                         if -eigenvalue(n, D) ** 2 + nu * eigenvalue(n, D) >= -delta]
            expected = max(satisfied) if satisfied else 0
            assert unstable_mode_count(nu, delta, D) == expected


def test_mode_one_growth_rate_frozen():
    lam1 = eigenvalue(1, D)
    assert -lam1**2 + 10.0 * lam1 == pytest.approx(1.28695297689, abs=1e-9)


# --- Parseval identities and the pointwise Sobolev bound ------------------

@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-3.0, 3.0), min_size=1, max_size=8))
def test_h1_seminorm_parseval_dirichlet(coeffs):
    # ||h'||^2 = sum lambda_n h_n^2 for h in the span of the sine basis
    h_n = np.asarray(coeffs)
    ns = np.arange(1, len(h_n) + 1)

    def h_prime(x):
        return sum(h_n[k] * math.sqrt(2.0) * n * math.pi * np.cos(n * math.pi * x)
                   for k, n in enumerate(ns))

    oracle = integrate_01(lambda x: h_prime(x) ** 2)
    series = sum(eigenvalue(int(n), D) * h_n[k] ** 2 for k, n in enumerate(ns))
    assert oracle == pytest.approx(series, rel=1e-8, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-3.0, 3.0), min_size=1, max_size=8))
def test_h2_seminorm_parseval_neumann(coeffs):
    # ||h''||^2 = sum lambda_n^2 h_n^2 for h in the span of the cosine basis
    h_n = np.asarray(coeffs)
    ns = np.arange(0, len(h_n))

    def h_second(x):
        return sum(-h_n[k] * eigenvalue(int(n), NE) * eigenfunction_value(int(n), NE, x)
                   for k, n in enumerate(ns))

    oracle = integrate_01(lambda x: h_second(x) ** 2)
    series = sum(eigenvalue(int(n), NE) ** 2 * h_n[k] ** 2 for k, n in enumerate(ns))
    assert oracle == pytest.approx(series, rel=1e-8, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-2.0, 2.0), min_size=1, max_size=6),
       st.sampled_from([0.1, 1.0, 10.0]))
def test_pointwise_sobolev_bound_neumann(coeffs, Gamma):
    # max |h|^2 <= (1+Gamma) ||h||^2 + Gamma^-1 ||h'||^2, cosine-basis h
    h_n = np.asarray(coeffs)
    ns = np.arange(0, len(h_n))

    def h(x):
        return sum(h_n[k] * eigenfunction_value(int(n), NE, x) for k, n in enumerate(ns))

    peak_sq = grid_max_abs(h) ** 2
    l2_sq = float(np.sum(h_n**2))
    h1_sq = sum(eigenvalue(int(n), NE) * h_n[k] ** 2 for k, n in enumerate(ns))
    assert peak_sq <= (1.0 + Gamma) * l2_sq + h1_sq / Gamma + 1e-9


def test_sobolev_weight_closed_form():
    for Gamma in (0.1, 1.0, 10.0):
        for n in range(0, 8):
            assert sobolev_weight(n, Gamma) == pytest.approx(
                1.0 + Gamma + eigenvalue(n, NE) / Gamma, rel=1e-15)
        # per-mode consistency: max phi_n^2 is 1 (n=0) or 2, always <= mu_n
        assert sobolev_weight(0, Gamma) >= 1.0
        for n in range(1, 8):
            assert sobolev_weight(n, Gamma) >= 2.0 or Gamma > 1.0
    with pytest.raises(ValueError):
        sobolev_weight(1, 0.0)


# --- assumption checks ----------------------------------------------------

def test_assumption1_detects_sensing_node():
    ok, idx = check_assumption1(0.5, N0=2)
    assert not ok and idx == 2
    ok, idx = check_assumption1(0.5, N0=1)
    assert ok and idx is None
    ok, idx = check_assumption1(1.0 / math.pi, N0=10)
    assert ok and idx is None
    with pytest.raises(ValueError):
        check_assumption1(0.0, N0=1)


def test_assumption2_detects_resonant_nu():
    ok, pair = check_assumption2(math.pi**2, n_max=5)
    assert not ok and pair == (1, 0)
    ok, pair = check_assumption2(5.0 * math.pi**2, n_max=5)
    assert not ok and pair == (2, 1)
    # equal indices are excluded from the resonance set: 2*pi^2 is fine
    ok, pair = check_assumption2(2.0 * math.pi**2, n_max=5)
    assert ok and pair is None
    ok, pair = check_assumption2(10.0, n_max=50)
    assert ok and pair is None


# --- configuration validation and model assembly --------------------------

def test_plant_config_validation():
    with pytest.raises(ValueError):
        PlantConfig(nu=-1.0, regime=D, x_star=0.3)
    with pytest.raises(ValueError):
        PlantConfig(nu=10.0, regime=D)  # missing sensing point
    with pytest.raises(ValueError):
        PlantConfig(nu=10.0, regime=D, x_star=1.2)
    with pytest.raises(ValueError):
        PlantConfig(nu=10.0, regime=NE)  # missing Gamma
    with pytest.raises(ValueError):
        PlantConfig(nu=10.0, regime=NE, Gamma=1.0, rho_w=-0.1)
    with pytest.raises(ValueError):
        PlantConfig(nu=10.0, regime=D, x_star=0.3, gamma=0.0)
    with pytest.raises(ValueError):
        PlantConfig(nu=10.0, regime=D, x_star=0.3, delta=-1.0)


def test_build_spectral_model_dirichlet():
    plant = PlantConfig(nu=10.0, regime=D, x_star=1.0 / math.pi, delta=1.0)
    model = build_spectral_model(plant, N=4, M=60)
    assert model.N0 == 1 and model.N == 4 and model.M == 60
    assert len(model.lam) == 60 and len(model.b) == 60 and len(model.c) == 60
    assert model.lam_of(1) == pytest.approx(math.pi**2)
    assert model.b_of(3) == pytest.approx(actuation_coeff(3, D))
    assert model.c_of(2) == pytest.approx(sensing_coeff(2, D, plant.x_star))
    with pytest.raises(IndexError):
        model.lam_of(61)
    with pytest.raises(IndexError):
        model.lam_of(0)


def test_build_spectral_model_neumann_includes_zero_mode():
    plant = PlantConfig(nu=10.0, regime=NE, Gamma=1.0, delta=1.0)
    model = build_spectral_model(plant, N=6, M=60)
    assert model.N0 == 1
    assert len(model.lam) == 61  # modes 0..60
    assert model.lam_of(0) == 0.0
    assert model.b_of(0) == pytest.approx(-1.0 / 3.0)
    assert model.c_of(0) == 1.0


def test_build_spectral_model_rejects_bad_orders():
    plant = PlantConfig(nu=200.0, regime=D, x_star=1.0 / math.pi)
    with pytest.raises(ValueError):
        build_spectral_model(plant, N=2)  # N0 = 4 here
    plant = PlantConfig(nu=10.0, regime=D, x_star=1.0 / math.pi)
    with pytest.raises(ValueError):
        build_spectral_model(plant, N=6, M=4)


def test_build_spectral_model_raises_on_assumption_failures():
    nodal = PlantConfig(nu=10.0, regime=D, x_star=0.5, delta=1200.0)  # N0=2
    with pytest.raises(AssumptionError):
        build_spectral_model(nodal, N=4)
    resonant = PlantConfig(nu=5.0 * math.pi**2, regime=NE, Gamma=1.0)
    with pytest.raises(AssumptionError):
        build_spectral_model(resonant, N=4)


# --- closed-form trigonometric projections --------------------------------

@pytest.mark.parametrize("regime", REGIMES)
@pytest.mark.parametrize("k", [0.0, 1.0, 10.0, math.pi, 3.0 * math.pi])
def test_trig_projections_match_quadrature(regime, k):
    for n in mode_indices(regime, 6):
        qs = integrate_01(lambda x: np.sin(k * x) * eigenfunction_value(n, regime, x))
        qc = integrate_01(lambda x: np.cos(k * x) * eigenfunction_value(n, regime, x))
        assert sine_projection(k, n, regime) == pytest.approx(qs, abs=1e-10)
        assert cosine_projection(k, n, regime) == pytest.approx(qc, abs=1e-10)
