import math

import numpy as np
import pytest

from pseudolind.dynamics import integrate_master
from pseudolind.plform import JumpPair
from pseudolind.plqt import (
    StepKernel,
    StepSizeError,
    Trajectory,
    observable_series,
    plqt_step,
    run_ensemble,
    sign_statistics,
    trajectory_stream,
)

SM = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|, decay of |1>
H2 = np.diag([0.0, 1.0]).astype(complex)
EXCITED = np.array([0, 1], dtype=complex)
P1 = np.diag([0.0, 1.0]).astype(complex)


def test_streams_are_keyed():
    a = trajectory_stream(3, 0).random(4)
    assert np.array_equal(a, trajectory_stream(3, 0).random(4))
    assert not np.array_equal(a, trajectory_stream(3, 1).random(4))
    assert not np.array_equal(a, trajectory_stream(4, 0).random(4))


def test_no_jump_channel_is_unitary():
    h = np.array([[0, 1], [1, 0]], dtype=complex)
    res = run_ensemble(EXCITED, h, [], 3, np.arange(0, 1.01, 0.25), 0.01, observables={"p1": P1})
    mean, se = observable_series(res, "p1")
    assert np.allclose(mean, np.cos(res.times) ** 2, atol=1e-12)
    assert np.all(res.log_norm2 == pytest.approx(0.0, abs=1e-12))


def test_step_size_guard():
    with pytest.raises(StepSizeError):
        run_ensemble(EXCITED, H2, [JumpPair(10 * SM, np.zeros((2, 2)))], 2, [0, 0.1], 0.1)


def test_grid_validation():
    with pytest.raises(ValueError):
        run_ensemble(EXCITED, H2, [], 2, [0.0, 0.015], 0.01)
    with pytest.raises(ValueError):
        run_ensemble(EXCITED, H2, [], 2, [0.5, 1.0], 0.01)
    with pytest.raises(ValueError):
        run_ensemble(np.array([1, 1], dtype=complex), H2, [], 2, [0.0], 0.01)


def test_single_step_matches_batch_kernel():
    pair = JumpPair(0.8 * SM, 0.3 * SM.T)
    traj = Trajectory(np.array([0.6, 0.8j]), rng_stream=5)
    new = plqt_step(traj, H2, [pair], 0.01, rng=trajectory_stream(0, 5))
    kernel = StepKernel.build(H2, [pair], 0.01)
    psi = traj.psi.reshape(2, 1).astype(complex).copy()
    logw, sign = np.zeros(1), np.ones(1, dtype=np.int8)
    kernel.step(psi, logw, sign, trajectory_stream(0, 5).random(1))
    assert np.allclose(new.psi, psi[:, 0]) and new.log_norm2 == pytest.approx(logw[0])
    assert new.t == pytest.approx(0.01) and new.sign == sign[0]


def test_pseudo_lindblad_ensemble_is_unbiased():
    """Ensemble of a genuinely pseudo-Lindblad two-level problem against direct integration."""
    pair = JumpPair(0.6 * SM + 0.2 * SM.T, 0.25 * SM.T)
    psi0 = np.array([0.8, 0.6], dtype=complex)
    t = np.arange(0, 4.01, 0.5)
    res = run_ensemble(psi0, H2, [pair], 20000, t, 0.005, master_seed=11, observables={"p1": P1})
    rho_t = integrate_master(lambda r: -1j * (H2 @ r - r @ H2) + pair.dissipator(r), np.outer(psi0, psi0.conj()), t, 0.005)
    mean, se = observable_series(res, "p1")
    exact = rho_t[:, 1, 1].real
    assert np.all(np.abs(mean - exact)[1:] < 4 * se[1:] + 1e-3)
    assert sign_statistics(res).negative_fraction[-1] > 0


def test_gksl_decay_signs_stay_positive():
    gamma = 0.5
    t = np.arange(0, 4.01, 0.5)
    res = run_ensemble(EXCITED, H2, [JumpPair(math.sqrt(gamma) * SM, np.zeros((2, 2)))], 4000, t, 0.01, 2, {"p1": P1})
    assert np.all(res.signs == 1)
    st = sign_statistics(res)
    assert st.censored == 4000 and math.isinf(st.mean_first_negative_time)
    mean, se = observable_series(res, "p1")
    assert np.all(np.abs(mean - np.exp(-gamma * t)) <= 3 * se + 1e-12)
    # weights drift by O(dt) per unit time: exp(-Gamma dt) / (1 - Gamma dt) != 1
    assert np.allclose(res.normalization, 1.0, atol=5 * gamma * 0.01)


def test_thread_count_does_not_change_results():
    pair = JumpPair(0.6 * SM, 0.25 * SM.T)
    kw = dict(t_grid=np.arange(0, 2.01, 0.5), dt=0.01, master_seed=99, observables={"p1": P1}, batch_size=64)
    r1 = run_ensemble(EXCITED, H2, [pair], 300, threads=1, **kw)
    r4 = run_ensemble(EXCITED, H2, [pair], 300, threads=4, **kw)
    assert np.array_equal(r1.signs, r4.signs)
    assert np.array_equal(r1.log_norm2, r4.log_norm2)
    assert np.array_equal(r1.rho_sample, r4.rho_sample)
    assert np.array_equal(r1.observables["p1"], r4.observables["p1"])
