"""Gain-design tests: reduced-model structure, eigenvalue assignment against
its defining property, Lyapunov verification against direct eigenvalue
oracles, and the published reference gains as fixtures."""

import math

import numpy as np
import pytest

from kse_synth.gains import (
    GainSet,
    ReducedModel,
    build_reduced_model,
    design_gains,
    make_gain_set,
    place_controller_gain,
    place_observer_gain,
    verify_gain_inequality,
)
from kse_synth.spectral import BoundaryRegime, PlantConfig, build_spectral_model

D = BoundaryRegime.DIRICHLET
NE = BoundaryRegime.NEUMANN


def dirichlet_model(nu=10.0, x_star=1.0 / math.pi, delta=1.0, N=4):
    plant = PlantConfig(nu=nu, regime=D, x_star=x_star, delta=delta)
    return build_reduced_model(build_spectral_model(plant, N=N, M=max(N, 10)))

def neumann_model(nu=10.0, Gamma=1.0, delta=1.0, N=6):
    plant = PlantConfig(nu=nu, regime=NE, Gamma=Gamma, delta=delta)
    return build_reduced_model(build_spectral_model(plant, N=N, M=max(N, 10)))


# --- reduced model structure ----------------------------------------------

def test_reduced_model_dirichlet_structure():
    rm = dirichlet_model()
    assert rm.N0 == 1
    assert rm.A0.shape == (1, 1)
    assert rm.A0[0, 0] == pytest.approx(1.28695297689, abs=1e-9)
    assert rm.Atilde0.shape == (2, 2)
    assert np.allclose(rm.Atilde0, [[0.0, 0.0], [0.0, rm.A0[0, 0]]])
    assert rm.Btilde0.shape == (2, 1)
    assert rm.Btilde0[0, 0] == 1.0
    assert rm.Btilde0[1, 0] == pytest.approx(-0.45015815808, abs=1e-9)
    assert rm.C0.shape == (1, 1)
    assert rm.C0[0, 0] == pytest.approx(1.19001967906, abs=1e-9)
    assert np.array_equal(rm.Aobs, rm.A0)
    assert rm.ctrl_dim == 2 and rm.obs_dim == 1


def test_reduced_model_neumann_structure():
    rm = neumann_model()
    assert rm.N0 == 1
    # state order [u, w_0, w_1]: u feeds the zero mode with gain nu
    assert rm.Atilde0.shape == (3, 3)
    assert rm.Atilde0[1, 0] == 10.0
    assert rm.Atilde0[2, 2] == pytest.approx(1.28695297689, abs=1e-9)
    assert np.count_nonzero(rm.Atilde0) == 2
    assert np.allclose(rm.Btilde0.ravel(),
                       [1.0, -1.0 / 3.0, 0.143289792063], atol=1e-9)
    assert np.allclose(rm.C0.ravel(), [1.0, math.sqrt(2.0)])
    assert rm.Aobs.shape == (2, 2)
    assert rm.Aobs[0, 0] == 0.0
    assert rm.Aobs[1, 1] == pytest.approx(1.28695297689, abs=1e-9)
    assert rm.ctrl_dim == 3 and rm.obs_dim == 2


def test_reduced_model_two_slow_modes():
    rm = dirichlet_model(nu=50.0, delta=0.0)
    assert rm.N0 == 2
    assert np.allclose(np.diag(rm.A0), [396.071129025, 415.375423667], atol=1e-8)
    assert np.count_nonzero(rm.A0 - np.diag(np.diag(rm.A0))) == 0
    assert rm.Atilde0.shape == (3, 3)


def test_reduced_model_rejects_mismatched_nu():
    plant = PlantConfig(nu=10.0, regime=D, x_star=0.3)
    sm = build_spectral_model(plant, N=4)
    with pytest.raises(ValueError):
        build_reduced_model(sm, nu=12.0)


# --- eigenvalue assignment ------------------------------------------------

def test_observer_placement_scalar_formula():
    # 1D pole placement: L0 = (a + p)/c for target -p
    rm = dirichlet_model()
    L0 = place_observer_gain(rm, 1.5)
    expected = (rm.A0[0, 0] + 1.5) / rm.C0[0, 0]
    assert L0.shape == (1, 1)
    assert L0[0, 0] == pytest.approx(expected, rel=1e-12)
    assert L0[0, 0] == pytest.approx(2.34193856281, abs=1e-9)
    # the published observer gain corresponds to this pole within print precision
    assert L0[0, 0] == pytest.approx(2.3419, abs=5e-4)


@pytest.mark.parametrize("delta0", [1.0, 1.5, 5.0])
@pytest.mark.parametrize("make", [dirichlet_model, neumann_model])
def test_placement_hits_targets(make, delta0):
    rm = make()
    K0 = place_controller_gain(rm, delta0)
    eigs_c = np.sort(np.linalg.eigvals(rm.Atilde0 + rm.Btilde0 @ K0).real)
    targets_c = -delta0 - np.arange(rm.ctrl_dim, dtype=float)
    assert np.allclose(eigs_c, np.sort(targets_c), atol=1e-6)

    L0 = place_observer_gain(rm, delta0)
    eigs_o = np.sort(np.linalg.eigvals(rm.Aobs - L0 @ rm.C0).real)
    targets_o = -delta0 - np.arange(rm.obs_dim, dtype=float)
    assert np.allclose(eigs_o, np.sort(targets_o), atol=1e-6)


def test_placement_duality():
    # observer placement equals controller placement on the transposed pair
    rm = neumann_model()
    L0 = place_observer_gain(rm, 2.0)
    dual = ReducedModel(regime=rm.regime, nu=rm.nu, N0=rm.N0, A0=rm.A0,
                        Atilde0=rm.Aobs.T, Btilde0=rm.C0.T, C0=rm.C0)
    K_dual = place_controller_gain(dual, 2.0)
    assert np.allclose(L0, -K_dual.T, rtol=1e-9)


def test_placement_rejects_unassignable_pair():
    rm = dirichlet_model()
    broken = ReducedModel(regime=rm.regime, nu=rm.nu, N0=rm.N0, A0=rm.A0,
                          Atilde0=rm.Atilde0,
                          Btilde0=np.zeros_like(rm.Btilde0), C0=rm.C0)
    with pytest.raises(ValueError):
        place_controller_gain(broken, 1.0)
    with pytest.raises(ValueError):
        place_observer_gain(rm, 0.0)


# --- Lyapunov verification ------------------------------------------------

def test_verify_gain_inequality_scalar_cases():
    P = verify_gain_inequality(np.array([[-2.0]]), 1.0)
    assert P is not None and P[0, 0] == pytest.approx(0.5, rel=1e-12)
    assert verify_gain_inequality(np.array([[-0.5]]), 1.0) is None


def test_verify_gain_inequality_degenerate_operator():
    # eigenvalue pair summing to zero makes the Lyapunov operator singular
    with pytest.raises(ValueError):
        verify_gain_inequality(np.array([[-1.0]]), 1.0)
    with pytest.raises(ValueError):
        verify_gain_inequality(np.array([[0.0, 1.0], [-1.0, 0.0]]), 0.0)
    with pytest.raises(ValueError):
        verify_gain_inequality(np.ones((2, 3)), 1.0)


def test_verify_gain_inequality_random_matrices():
    # eigenvalues strictly below -delta  -> PD certificate with small residual;
    # any eigenvalue above -delta        -> infeasible
    rng = np.random.default_rng(20260815)
    delta = 1.0
    for _ in range(25):
        n = int(rng.integers(1, 5))
        Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        stable = Q @ np.diag(rng.uniform(-10.0, -delta - 0.1, size=n)) @ Q.T
        P = verify_gain_inequality(stable, delta)
        assert P is not None
        M = stable + delta * np.eye(n)
        assert np.linalg.norm(M.T @ P + P @ M + np.eye(n)) < 1e-8
        assert np.allclose(P, P.T)

        lams = rng.uniform(-10.0, -delta - 0.1, size=n)
        lams[int(rng.integers(0, n))] = rng.uniform(-delta + 0.1, 2.0)
        if np.min(np.abs(lams[:, None] + lams[None, :] + 2 * delta)) < 1e-6:
            continue  # skip draws that land on the degenerate set
        unstable = Q @ np.diag(lams) @ Q.T
        assert verify_gain_inequality(unstable, delta) is None


# --- gain sets -------------------------------------------------------------

PUBLISHED_DIRICHLET_STAB = (np.array([[7.1415, 26.0901]]), np.array([[2.3419]]))
PUBLISHED_NEUMANN_STAB = (np.array([[477.83, 32.61, -3315.44]]),
                      np.array([[-6.147], [8.101]]))


def test_published_stabilization_gains_certify_at_delta_one():
    rm = dirichlet_model()
    gs = make_gain_set(rm, *PUBLISHED_DIRICHLET_STAB, delta0=5.0, delta=1.0)
    eigs = np.linalg.eigvals(rm.Atilde0 + rm.Btilde0 @ gs.K0)
    assert np.allclose(np.sort(eigs.imag), [-2.5380009, 2.5380009], atol=1e-6)
    assert np.allclose(eigs.real, -1.65810919, atol=1e-6)

    rmN = neumann_model()
    gsN = make_gain_set(rmN, *PUBLISHED_NEUMANN_STAB, delta0=5.0, delta=1.0)
    assert np.linalg.eigvals(rmN.Atilde0 + rmN.Btilde0 @ gsN.K0).real.max() < -1.0
    assert np.linalg.eigvals(rmN.Aobs - gsN.L0 @ rmN.C0).real.max() < -1.0


def test_designed_gains_pass_verification_near_margin():
    for rm, delta0 in [(dirichlet_model(), 1.5), (dirichlet_model(), 5.0),
                       (neumann_model(), 1.5), (neumann_model(), 5.0)]:
        gs = design_gains(rm, delta0)
        assert isinstance(gs, GainSet)
        for P in (gs.Pc, gs.Po):
            assert np.allclose(P, P.T)
            assert np.linalg.eigvalsh(P).min() > 0.0


def test_designed_gains_stiff_plant_needs_looser_certificate():
    # eigenvalues near +415 moved to -2: the 1e-6 default margin is below
    # what float arithmetic can certify, a visible margin works
    rm = dirichlet_model(nu=50.0, delta=0.0)
    with pytest.raises(ValueError):
        design_gains(rm, 2.0)
    gs = design_gains(rm, 2.0, certify_at=1.9)
    assert np.linalg.eigvalsh(gs.Pc).min() > 0.0


def test_make_gain_set_rejects_bad_inputs():
    rm = dirichlet_model()
    with pytest.raises(ValueError):
        make_gain_set(rm, np.zeros((1, 3)), np.array([[2.0]]), delta0=1.0)
    with pytest.raises(ValueError):
        make_gain_set(rm, np.zeros((1, 2)), np.array([[2.0]]), delta0=1.0)
