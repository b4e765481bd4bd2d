"""Tests for the eight identification algorithms and their shared plumbing.

Each method gets: a hand-checkable or analytically forced case, its
documented error paths, and a determinism check.  The hybrid methods also
pin the degenerate configurations that reduce them to their parents.
"""

import numpy as np
import pytest

from armcal import identify
from armcal import kinematics as kin
from armcal import measurement as ms
from armcal.errors import (DegenerateWeightsError, DivergedError,
                           InvalidArgumentError, RankDeficiencyError)
from armcal.identify import (EKFConfig, GAConfig, LMConfig, PFConfig,
                             SGAConfig, SVMConfig, EPFConfig, LMGAConfig)
from armcal.identify.base import corrected_residuals, rmse
from armcal.identify.ekf import ekf_identify, scalar_update
from armcal.identify.ga import ga_identify
from armcal.identify.hybrids import epf_identify, lmga_identify, sga_identify
from armcal.identify.lm import lm_identify, lm_step
from armcal.identify.pf import (normalized_weights, pf_identify,
                                systematic_resample)
from armcal.identify.svm import loss_and_grads, svm_fit, svm_identify

CHAIN = kin.default_chain()
MODEL = ms.default_encoder()


def _dataset(true_flat=None, n=60, sigma=0.0, seed=0, joint_range=None):
    flat = np.zeros(24) if true_flat is None else np.asarray(true_flat, float)
    x = kin.KinematicErrorVector.from_flat(flat)
    kwargs = {} if joint_range is None else {"joint_range": joint_range}
    return ms.simulate_dataset(MODEL, CHAIN, x, n=n, noise_sigma=sigma,
                               seed=seed, **kwargs)


def _small_truth(seed=4):
    rng = np.random.default_rng(seed)
    flat = np.concatenate([
        rng.uniform(-1, 1, 12) * 0.8,
        rng.uniform(-1, 1, 11) * 0.004,
        [0.0],  # the last twist never shows up in a length measurement
    ])
    return flat


# --- EKF ---

def test_ekf_zero_innovation_is_a_no_op():
    data = _dataset()  # perfect nominal chain, no noise
    res = ekf_identify(data, MODEL, CHAIN)
    assert np.abs(res.x_hat.flatten()).max() < 1e-12
    assert res.history[-1] < 1e-12


def test_scalar_update_hand_case():
    # P = I, j = e0, R = 1: gain is e0/2, variance halves on that axis
    x = np.zeros(24)
    P = np.eye(24)
    j = np.zeros(24)
    j[0] = 1.0
    x2, P2, S = scalar_update(x, P, j, innovation=1.0, R=1.0)
    assert S == pytest.approx(2.0, abs=1e-15)
    assert x2[0] == pytest.approx(0.5, abs=1e-15)
    assert np.abs(x2[1:]).max() == 0.0
    assert P2[0, 0] == pytest.approx(0.5, abs=1e-15)
    assert P2[1, 1] == pytest.approx(1.0, abs=1e-15)
    assert np.abs(P2 - P2.T).max() == 0.0


def test_ekf_noiseless_recovery():
    data = _dataset(_small_truth(), n=96)
    res = ekf_identify(data, MODEL, CHAIN)
    assert res.history[-1] < 0.01 * res.history[0]


def test_ekf_covariance_stays_psd():
    data = _dataset(_small_truth(), n=40, sigma=0.1, seed=2)
    res = ekf_identify(data, MODEL, CHAIN)
    assert res.diagnostics["min_covariance_eigenvalue"] >= -1e-9


def test_ekf_deterministic():
    data = _dataset(_small_truth(), n=30, sigma=0.05, seed=3)
    a = ekf_identify(data, MODEL, CHAIN)
    b = ekf_identify(data, MODEL, CHAIN)
    assert np.array_equal(a.x_hat.flatten(), b.x_hat.flatten())


# --- LM ---

def test_lm_perfect_data_stays_at_zero():
    data = _dataset()
    res = lm_identify(data, MODEL, CHAIN)
    assert np.abs(res.x_hat.flatten()).max() < 1e-10


def test_lm_step_zero_damping_equals_pseudo_inverse():
    rng = np.random.default_rng(7)
    J = rng.normal(size=(40, 23))
    E = rng.normal(size=40)
    delta = lm_step(J, E, 0.0)
    assert np.allclose(delta, np.linalg.pinv(J) @ E, atol=1e-8)


def test_lm_step_reports_rank_deficiency():
    data = _dataset(n=40)
    J = ms.length_jacobian(MODEL, CHAIN.as_array(), data.joints_matrix())
    # the full 24-column jacobian contains the structurally dead column
    with pytest.raises(RankDeficiencyError):
        lm_step(J, np.zeros(len(J)), 0.0)


def test_lm_noiseless_recovery_componentwise():
    truth = _small_truth()
    data = _dataset(truth, n=96)
    res = lm_identify(data, MODEL, CHAIN)
    assert np.abs(res.x_hat.flatten() - truth).max() < 1e-3
    assert res.history[-1] <= 0.01 * res.history[0]


def test_lm_stops_early_on_tiny_steps():
    data = _dataset(_small_truth(), n=60)
    res = lm_identify(data, MODEL, CHAIN, iterations=50)
    assert res.iterations < 50


def test_lm_active_subset_freezes_other_components():
    truth = np.zeros(24)
    truth[2] = 0.9
    data = _dataset(truth, n=60)
    res = lm_identify(data, MODEL, CHAIN, active=[2])
    flat = res.x_hat.flatten()
    assert flat[2] == pytest.approx(0.9, abs=1e-6)
    others = np.delete(flat, 2)
    assert np.abs(others).max() == 0.0


# --- PF ---

def test_pf_weight_sums_are_one():
    data = _dataset(_small_truth(), n=30, sigma=0.1, seed=5)
    cfg = PFConfig(n_particles=80, iterations=15, seed=0)
    res = pf_identify(data, MODEL, CHAIN, cfg)
    sums = np.array(res.diagnostics["weight_sums"])
    assert len(sums) == 15
    assert np.abs(sums - 1.0).max() < 1e-12


def test_pf_singleton_particle_returns_prior_center():
    data = _dataset(n=20)
    cfg = PFConfig(n_particles=1, prior_sigma=0.0, U_sigma=0.0,
                   iterations=3, seed=1)
    res = pf_identify(data, MODEL, CHAIN, cfg)
    assert np.array_equal(res.x_hat.flatten(), np.zeros(24))


def test_normalized_weights_shift_invariant():
    lw = np.array([-3.0, -1.0, -2.0])
    w1 = normalized_weights(lw)
    w2 = normalized_weights(lw - 500.0)
    assert np.allclose(w1, w2, atol=1e-15)
    assert w1.sum() == pytest.approx(1.0, abs=1e-15)


def test_normalized_weights_degenerate():
    with pytest.raises(DegenerateWeightsError):
        normalized_weights(np.array([-np.inf, -np.inf]))


def test_systematic_resample_concentrated_weights():
    rng = np.random.default_rng(0)
    w = np.zeros(10)
    w[6] = 1.0
    picks = systematic_resample(w, rng)
    assert np.array_equal(picks, np.full(10, 6))


def test_pf_improves_over_prior():
    truth = _small_truth(seed=9)
    data = _dataset(truth, n=40, sigma=0.05, seed=6, joint_range=np.pi / 4)
    cfg = PFConfig(n_particles=200, iterations=30, seed=0)
    res = pf_identify(data, MODEL, CHAIN, cfg)
    assert res.history[-1] < 0.5 * res.history[0]


def test_pf_deterministic():
    data = _dataset(_small_truth(), n=25, sigma=0.1, seed=8)
    cfg = PFConfig(n_particles=60, iterations=10, seed=12)
    a = pf_identify(data, MODEL, CHAIN, cfg)
    b = pf_identify(data, MODEL, CHAIN, cfg)
    assert np.array_equal(a.x_hat.flatten(), b.x_hat.flatten())


# --- SVM ---

def test_svm_zero_epochs_default_init_predicts_target_mean():
    data = _dataset(_small_truth(), n=30, sigma=0.0, seed=1)
    targets = ms.residuals(MODEL, CHAIN, data)
    pred = svm_fit(data.joints_matrix(), targets, SVMConfig(epochs=0))
    got = pred(data.joints_matrix())
    assert np.allclose(got, np.mean(targets), atol=1e-12)


def test_svm_single_unit_hand_arithmetic():
    joints = np.array([
        [0.1, -0.2, 0.3, 0.0, 0.2, -0.1],
        [0.4, 0.1, -0.3, 0.2, 0.0, 0.1],
        [-0.2, 0.3, 0.1, -0.1, 0.3, 0.2],
    ])
    targets = np.array([0.5, -0.2, 0.3])
    init = (np.array([2.0]), np.array([-0.3]), np.array([0.7]), 0.25)
    cfg = SVMConfig(hidden_width=1, epochs=0, init=init)
    pred = svm_fit(joints, targets, cfg)
    ref = joints[0]  # width 1 keeps only the first configuration
    for q in joints:
        z = 2.0 * float(q @ ref) - 0.3
        want = 0.7 / (1.0 + np.exp(-z)) + 0.25
        assert pred(q) == pytest.approx(want, abs=1e-12)


def test_svm_gradients_match_finite_differences():
    rng = np.random.default_rng(17)
    n, width = 12, 5
    feats = rng.normal(size=(n, width))
    targets = rng.normal(size=n)
    lambda1 = 1e-3
    for _ in range(3):
        w1 = rng.normal(size=width)
        b1 = rng.normal(size=width)
        w2 = rng.normal(size=width)
        b2 = float(rng.normal())
        _, dw1, db1, dw2, db2 = loss_and_grads(w1, b1, w2, b2, feats,
                                               targets, lambda1)
        analytic = np.concatenate([dw1, db1, dw2, [db2]])

        def loss_at(vec):
            p = np.split(vec[:-1], 3)
            return loss_and_grads(p[0], p[1], p[2], vec[-1], feats, targets,
                                  lambda1)[0]

        theta = np.concatenate([w1, b1, w2, [b2]])
        h = 1e-6
        fd = np.empty_like(theta)
        for i in range(len(theta)):
            up, dn = theta.copy(), theta.copy()
            up[i] += h
            dn[i] -= h
            fd[i] = (loss_at(up) - loss_at(dn)) / (2 * h)
        rel = np.linalg.norm(analytic - fd) / max(np.linalg.norm(analytic), 1e-12)
        assert rel < 1e-4


def test_svm_fit_never_returns_worse_than_start():
    data = _dataset(_small_truth(), n=50, sigma=0.1, seed=3)
    targets = ms.residuals(MODEL, CHAIN, data)
    pred = svm_fit(data.joints_matrix(), targets,
                   SVMConfig(hidden_width=16, epochs=100))
    final = rmse(targets - pred(data.joints_matrix()))
    assert final <= pred.history[0] + 1e-12


def test_svm_diverged_error():
    data = _dataset(n=20)
    targets = ms.residuals(MODEL, CHAIN, data)
    huge = (np.full(4, 1e8), np.zeros(4), np.full(4, 1e8), 0.0)
    cfg = SVMConfig(hidden_width=4, epochs=5, lambda1=1e-6, init=huge)
    with pytest.raises(DivergedError):
        svm_fit(data.joints_matrix(), targets, cfg)


def test_svm_identify_learns_residual_function():
    data = _dataset(_small_truth(), n=80, sigma=0.0, seed=7,
                    joint_range=np.pi / 4)
    res = svm_identify(data, MODEL, CHAIN, SVMConfig(epochs=400))
    assert res.x_hat is None and res.residual_predictor is not None
    train_after = rmse(corrected_residuals(res, MODEL, CHAIN, data))
    assert train_after < 0.35 * res.history[0]


def test_svm_deterministic():
    data = _dataset(_small_truth(), n=30, sigma=0.05, seed=4)
    cfg = SVMConfig(hidden_width=8, epochs=50, seed=5)
    a = svm_identify(data, MODEL, CHAIN, cfg)
    b = svm_identify(data, MODEL, CHAIN, cfg)
    qs = data.joints_matrix()
    assert np.array_equal(a.residual_predictor(qs), b.residual_predictor(qs))


# --- GA ---

def test_ga_zero_generations_returns_zero_vector():
    data = _dataset(_small_truth(), n=20, sigma=0.1, seed=1)
    res = ga_identify(data, MODEL, CHAIN, GAConfig(generations=0))
    assert np.array_equal(res.x_hat.flatten(), np.zeros(24))
    assert res.iterations == 0


def test_ga_keeps_planted_optimum():
    truth = _small_truth(seed=2)
    data = _dataset(truth, n=40, sigma=0.0, seed=2)
    cfg = GAConfig(population=20, generations=5, seed=0)
    res = ga_identify(data, MODEL, CHAIN, cfg, initial_population=truth)
    # elitism must never lose the planted perfect candidate
    assert res.history[-1] < 1e-9
    assert np.abs(res.x_hat.flatten() - truth).max() < 1e-12


def test_ga_history_is_monotone_after_first_generation():
    data = _dataset(_small_truth(), n=30, sigma=0.1, seed=3)
    cfg = GAConfig(population=30, generations=15, seed=4)
    res = ga_identify(data, MODEL, CHAIN, cfg)
    hist = np.array(res.history[1:])
    assert np.all(np.diff(hist) <= 1e-12)


def test_ga_respects_search_bounds():
    data = _dataset(_small_truth(), n=25, sigma=0.2, seed=5)
    cfg = GAConfig(population=25, generations=10, seed=6,
                   search_bounds=(0.5, 0.5, 0.002, 0.002))
    res = ga_identify(data, MODEL, CHAIN, cfg)
    flat = np.abs(res.x_hat.flatten())
    assert np.all(flat[:12] <= 0.5 + 1e-12)
    assert np.all(flat[12:] <= 0.002 + 1e-12)


def test_ga_deterministic():
    data = _dataset(_small_truth(), n=25, sigma=0.1, seed=6)
    cfg = GAConfig(population=20, generations=8, seed=7)
    a = ga_identify(data, MODEL, CHAIN, cfg)
    b = ga_identify(data, MODEL, CHAIN, cfg)
    assert np.array_equal(a.x_hat.flatten(), b.x_hat.flatten())


# --- EPF ---

def test_epf_single_frozen_particle_is_one_ekf_pass():
    data = _dataset(_small_truth(), n=40, sigma=0.05, seed=7)
    n = len(data)
    pf_cfg = PFConfig(n_particles=1, prior_sigma=0.0, U_sigma=0.0,
                      iterations=n, resample_threshold=0.0, seed=0)
    ekf_cfg = EKFConfig(passes=1)
    hybrid = epf_identify(data, MODEL, CHAIN, pf_cfg, ekf_cfg)
    plain = ekf_identify(data, MODEL, CHAIN, ekf_cfg)
    assert np.allclose(hybrid.x_hat.flatten(), plain.x_hat.flatten(),
                       atol=1e-10)


def test_epf_weight_sums_are_one():
    data = _dataset(_small_truth(), n=25, sigma=0.1, seed=8)
    pf_cfg = PFConfig(n_particles=40, iterations=12, seed=3)
    res = epf_identify(data, MODEL, CHAIN, pf_cfg)
    sums = np.array(res.diagnostics["weight_sums"])
    assert len(sums) == 12
    assert np.abs(sums - 1.0).max() < 1e-12


def test_epf_deterministic():
    data = _dataset(_small_truth(), n=25, sigma=0.1, seed=9)
    pf_cfg = PFConfig(n_particles=30, iterations=8, seed=4)
    a = epf_identify(data, MODEL, CHAIN, pf_cfg)
    b = epf_identify(data, MODEL, CHAIN, pf_cfg)
    assert np.array_equal(a.x_hat.flatten(), b.x_hat.flatten())


# --- LMGA ---

def test_lmga_with_inert_ga_equals_plain_lm():
    data = _dataset(_small_truth(), n=50, sigma=0.05, seed=10)
    res = lmga_identify(data, MODEL, CHAIN, GAConfig(generations=0))
    plain = lm_identify(data, MODEL, CHAIN)
    assert np.allclose(res.x_hat.flatten(), plain.x_hat.flatten(), atol=1e-12)


def test_lmga_never_worse_than_its_ga_stage():
    data = _dataset(_small_truth(), n=40, sigma=0.1, seed=11)
    cfg = GAConfig(population=20, generations=10, seed=2)
    res = lmga_identify(data, MODEL, CHAIN, cfg)
    assert "polish_accepted" in res.diagnostics
    assert res.history[-1] <= res.diagnostics["ga_train_rmse"] + 1e-12


# --- SGA ---

def test_sga_zero_epoch_zero_init_reduces_to_ga():
    data = _dataset(_small_truth(), n=40, sigma=0.1, seed=12)
    ga_cfg = GAConfig(population=20, generations=6, seed=3)
    svm_cfg = SVMConfig(epochs=0, init="zero")
    res = sga_identify(data, MODEL, CHAIN, ga_cfg, svm_cfg)
    plain = ga_identify(data, MODEL, CHAIN, ga_cfg)
    r_hybrid = corrected_residuals(res, MODEL, CHAIN, data)
    r_plain = corrected_residuals(plain, MODEL, CHAIN, data)
    assert np.allclose(r_hybrid, r_plain, atol=1e-12)


def test_sga_training_never_degrades_its_ga_stage():
    data = _dataset(_small_truth(), n=40, sigma=0.1, seed=13)
    ga_cfg = GAConfig(population=20, generations=6, seed=5)
    res = sga_identify(data, MODEL, CHAIN, ga_cfg, SVMConfig(epochs=60))
    assert "svm_stage_kept" in res.diagnostics
    assert res.history[-1] <= res.diagnostics["ga_train_rmse"] + 1e-12


# --- front door ---

def test_fit_method_unknown_name():
    data = _dataset(n=10)
    with pytest.raises(InvalidArgumentError, match="valid methods"):
        identify.fit_method("newton", data, MODEL, CHAIN)


def test_fit_method_dispatches_every_name():
    data = _dataset(_small_truth(), n=25, sigma=0.1, seed=14)
    fast = {
        "ekf": EKFConfig(passes=1),
        "lm": LMConfig(iterations=3),
        "pf": PFConfig(n_particles=20, iterations=3, seed=0),
        "svm": SVMConfig(hidden_width=8, epochs=10),
        "ga": GAConfig(population=10, generations=2, seed=0),
        "epf": EPFConfig(pf=PFConfig(n_particles=10, iterations=3, seed=0)),
        "lmga": LMGAConfig(ga=GAConfig(population=10, generations=2, seed=0),
                           lm=LMConfig(iterations=3)),
        "sga": SGAConfig(ga=GAConfig(population=10, generations=2, seed=0),
                         svm=SVMConfig(hidden_width=8, epochs=10)),
    }
    for name in identify.METHOD_NAMES:
        res = identify.fit_method(name, data, MODEL, CHAIN, config=fast[name])
        assert res.method == name


def test_reseeded_updates_nested_seeds():
    assert identify.reseeded(PFConfig(), 42).seed == 42
    assert identify.reseeded(LMConfig(), 42) == LMConfig()
    epf = identify.reseeded(EPFConfig(), 42)
    assert epf.pf.seed == 42
    sga = identify.reseeded(SGAConfig(), 42)
    assert sga.ga.seed == 42 and sga.svm.seed == 42


def test_result_json_round_trip_geometric():
    data = _dataset(_small_truth(), n=30, sigma=0.05, seed=15)
    res = lm_identify(data, MODEL, CHAIN)
    back = identify.result_from_json(identify.result_to_json(res))
    assert back.method == "lm"
    assert np.allclose(back.x_hat.flatten(), res.x_hat.flatten(), atol=0)
    r1 = corrected_residuals(res, MODEL, CHAIN, data)
    r2 = corrected_residuals(back, MODEL, CHAIN, data)
    assert np.array_equal(r1, r2)


def test_result_json_round_trip_predictor():
    data = _dataset(_small_truth(), n=30, sigma=0.05, seed=16)
    res = svm_identify(data, MODEL, CHAIN, SVMConfig(hidden_width=8, epochs=20))
    back = identify.result_from_json(identify.result_to_json(res))
    qs = data.joints_matrix()
    assert np.array_equal(back.residual_predictor(qs),
                          res.residual_predictor(qs))


def test_result_json_rejects_other_documents():
    from armcal.errors import ParseError
    with pytest.raises(ParseError):
        identify.result_from_json("{\"format\": \"something-else\"}")
    with pytest.raises(ParseError):
        identify.result_from_json("not json at all")
