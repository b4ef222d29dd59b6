"""Acceptance criteria 1-10, each at its stated tolerance.

Every test prints one ``criterion k: PASS/FAIL`` line; the lines are repeated
in the pytest terminal summary.
"""

import math
import os

import numpy as np
import pytest

from conftest import random_channel, random_density, report
from pseudolind.bath import BathSpec, OhmicDrude, coupling_density, coupling_density_real, gpp_decomposition
from pseudolind.benchmark import HubbardProblem, group_estimates, reference_bath, time_averaged_relative_error
from pseudolind.dynamics import gibbs_state, rates_from_weight_difference, rwa_rates, steady_state
from pseudolind.hpz import (
    HPZCoefficients,
    brownian_limit_pair,
    hpz_generator,
    hpz_jump_pair,
    hpz_operators,
    hpz_optimal_params,
    hpz_pseudo_lindblad_rhs,
)
from pseudolind.hubbard import HubbardSpec
from pseudolind.opcore import frobenius_norm_sq, gksl_dissipator, truncated_boson_ops
from pseudolind.plform import (
    JumpPair,
    TransformParams,
    kossakowski_eigensystem,
    kossakowski_matrix,
    lambda_phi_jumps,
    minimal_weights,
    optimal_params,
    weights,
)
from pseudolind.plqt import EnsembleResult, expected_density, observable_series, run_ensemble
from pseudolind.redfield import sigma_x_dissipator

THREADS = os.cpu_count() or 1
DT = 0.01
T_GRID = np.arange(61) * 0.5  # Jt in [0, 30]
N_TRAJ = 10_000
FIG1_SEEDS = (1, 2, 3)
POOL_SEEDS = tuple(range(1, 11))


def _instances(seed=2024, n=50):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        d = int(rng.integers(2, 9))
        yield rng, d, random_channel(rng, d)


# 1 and 3 ----------------------------------------------------------------


@pytest.fixture(scope="module")
def transform_sweep():
    worst_diss, worst_diff = 0.0, 0.0
    for rng, d, (s, ss) in _instances():
        rho = random_density(rng, d)
        ref = sigma_x_dissipator(s, ss, rho)
        target = 2 * np.sum(ss * s.T).real
        for lam, phi in zip(np.exp(rng.uniform(np.log(0.1), np.log(10), 100)), rng.uniform(-1.2, 1.2, 100)):
            pair = lambda_phi_jumps(s, ss, TransformParams(lam, phi))
            res = np.abs(pair.dissipator(rho) - ref).max() / np.abs(ref).max()
            worst_diss = max(worst_diss, res)
            wp, wm = frobenius_norm_sq(pair.a_plus), frobenius_norm_sq(pair.a_minus)
            worst_diff = max(worst_diff, abs((wp - wm) - target) / abs(target))
    return worst_diss, worst_diff


def test_criterion_01_dissipator_invariance(transform_sweep):
    worst = transform_sweep[0]
    ok = worst <= 1e-12
    report(1, ok, f"max relative residual {worst:.2e} over 50 x 100 transforms (tol 1e-12)")
    assert ok


def test_criterion_03_weight_difference(transform_sweep):
    worst = transform_sweep[1]
    ok = worst <= 1e-12
    report(3, ok, f"max relative |(w+ - w-) - 2 Re tr(SS S)| {worst:.2e} (tol 1e-12)")
    assert ok


# 2 ----------------------------------------------------------------------


def _grid_min_minus_weight(s, ss, p_opt, n=400):
    """Explicit ||A-||^2 on an n x n grid of (lam, phi) around the optimum."""
    lams = p_opt.lam * np.geomspace(0.1, 10, n)
    phis = np.linspace(-1.55, 1.55, n)
    best = np.inf
    for phi in phis:
        c = 1 / math.sqrt(2 * math.cos(phi))
        am = c * (-lams[:, None, None] * np.exp(0.5j * phi) * s + np.exp(-0.5j * phi) / lams[:, None, None] * ss)
        best = min(best, float(np.min(np.sum(np.abs(am) ** 2, axis=(1, 2)))))
    return best


def _optimality(s, ss):
    p = optimal_params(s, ss)
    w_closed = minimal_weights(s, ss)
    explicit = lambda_phi_jumps(s, ss, p).weights()
    at_opt = weights(s, ss, p)
    scale = w_closed[0]
    match = max(abs(w_closed[0] - at_opt[0]), abs(w_closed[1] - at_opt[1]), abs(w_closed[1] - explicit[1])) / scale
    grid = _grid_min_minus_weight(s, ss, p)
    return w_closed[1] - grid, match, scale


def test_criterion_02_optimality():
    cases = [ss for _, _, ss in _instances(seed=77, n=20)]
    for mode in ("real_part_only", "full"):
        prob = HubbardProblem.build(HubbardSpec(bath=reference_bath()), mode)
        cases += [(c.s_op, c.s_conv) for c in prob.channels]
    worst_gap, worst_match = -np.inf, 0.0
    for s, ss in cases:
        gap, match, scale = _optimality(s, ss)
        worst_gap = max(worst_gap, gap / scale)
        worst_match = max(worst_match, match)
    ok = worst_gap <= 1e-12 and worst_match <= 1e-12
    report(2, ok, f"{len(cases)} channels: closed form minus grid minimum <= {worst_gap:.2e} (relative), closed-form match {worst_match:.2e}")
    assert ok


# 4 ----------------------------------------------------------------------


def test_criterion_04_kossakowski():
    bath = reference_bath()
    prob = HubbardProblem.build(HubbardSpec(bath=bath), "full")
    g = np.array([[coupling_density(d, bath) for d in row] for row in prob.basis.splittings])
    m = kossakowski_matrix(g)
    ev, vec = np.linalg.eigh(m)
    norm_m = np.linalg.norm(m, 2)
    big = np.abs(ev) > 1e-10 * norm_m
    ks = kossakowski_eigensystem(prob.basis, bath, "full")
    vals = ev[big]
    n_big = int(big.sum())
    eig_err = max(abs(vals.max() - ks.g_plus) / abs(ks.g_plus), abs(vals.min() - ks.g_minus) / abs(ks.g_minus)) if n_big == 2 else np.inf

    rng = np.random.default_rng(4)
    d = prob.basis.dim
    worst = 0.0
    for ch in prob.channels:
        rho = random_density(rng, d)
        ref = sigma_x_dissipator(ch.s_op, ch.s_conv, rho)
        out = np.zeros_like(ref)
        for k in np.nonzero(big)[0]:
            a = math.sqrt(abs(ev[k])) * vec[:, k].reshape(d, d) * ch.s_op
            out += np.sign(ev[k]) * gksl_dissipator(a, rho)
        closed = lambda_phi_jumps(ch.s_op, ch.s_conv, ks.params).dissipator(rho)
        scale = np.abs(ref).max()
        worst = max(worst, np.abs(out - ref).max() / scale, np.abs(closed - ref).max() / scale)
    ok = n_big == 2 and eig_err <= 1e-8 and worst <= 1e-10
    report(4, ok, f"{m.shape[0]}x{m.shape[1]} matrix: {n_big} non-zero eigenvalues, closed-form error {eig_err:.2e}, dissipator residual {worst:.2e}")
    assert ok


# 5 ----------------------------------------------------------------------


def test_criterion_05_bath():
    bath = reference_bath()
    g_rn = gpp_decomposition(0.3, bath)[0]
    rn_err = abs(g_rn + bath.model.cutoff / 2)
    grid = np.linspace(0.05, 2.5, 50)
    db = float(np.max(np.abs(coupling_density_real(grid, bath) / coupling_density_real(-grid, bath) - np.exp(-bath.beta * grid))))
    sum_err = 0.0
    for delta in np.linspace(-2.5, 2.5, 11):
        if delta == 0:
            continue
        sum_err = max(sum_err, abs(sum(gpp_decomposition(delta, bath)) - coupling_density(delta, bath).imag))
    ok = rn_err <= 1e-6 and db <= 1e-10 and sum_err <= 1e-6
    report(5, ok, f"G''_RN error {rn_err:.1e}, detailed balance {db:.1e}, sum rule {sum_err:.1e}")
    assert ok


# 6 ----------------------------------------------------------------------


def test_criterion_06_detailed_balance_and_gibbs():
    bath = reference_bath()
    prob = HubbardProblem.build(HubbardSpec(bath=bath), "full")
    e = prob.basis.energies
    db, wd_err, inv_err = 0.0, 0.0, 0.0
    for ch in prob.channels:
        r = rwa_rates(ch.s_op, prob.basis, bath).rates
        scale = r.max()
        for k in range(len(e)):
            for q in range(len(e)):
                if k != q and r[q, k] > 1e-14 * scale and r[k, q] > 0:
                    db = max(db, abs(r[k, q] / r[q, k] / math.exp(-bath.beta * (e[k] - e[q])) - 1))
        off = ~np.eye(len(e), dtype=bool)
        ref = None
        for p in (TransformParams(), optimal_params(ch.s_op, ch.s_conv), TransformParams(0.3, 0.9), TransformParams(4.0, -1.3)):
            wd = rates_from_weight_difference(lambda_phi_jumps(ch.s_op, ch.s_conv, p)).rates
            wd_err = max(wd_err, np.abs(wd - r)[off].max() / scale)
            if ref is None:
                ref = wd
            inv_err = max(inv_err, np.abs(wd - ref)[off].max() / scale)
    dist = []
    for gamma in (0.25, 0.1, 0.05):
        pr = HubbardProblem.build(HubbardSpec(gamma=gamma, bath=bath), "full")
        ss = steady_state(pr.generator, pr.basis.dim)
        dist.append(float(np.abs(np.diag(ss).real - np.diag(gibbs_state(pr.basis, bath.beta)).real).sum()))
    mono = dist[0] > dist[1] > dist[2]
    ok = db <= 1e-8 and wd_err <= 1e-10 and inv_err <= 1e-12 and mono
    report(6, ok, f"detailed balance {db:.1e}, weight-difference vs RWA {wd_err:.1e}, invariance {inv_err:.1e}, Gibbs distances {['%.4f' % x for x in dist]}")
    assert ok


# 7 and 8: Hubbard benchmark ensembles -------------------------------------


@pytest.fixture(scope="module")
def benchmark():
    prob = HubbardProblem.build(HubbardSpec(bath=reference_bath()), "real_part_only")
    exact = prob.population(prob.reference(T_GRID, DT))
    return prob, exact


_ENSEMBLES: dict = {}


def _ensemble(prob, optimize: bool, seed: int) -> EnsembleResult:
    key = (optimize, seed)
    if key not in _ENSEMBLES:
        _ENSEMBLES[key] = run_ensemble(
            prob.psi0, prob.generator.h_total, prob.pairs(optimize), N_TRAJ, T_GRID, DT,
            master_seed=seed, observables={"p_0": prob.p0}, threads=THREADS,
        )
    return _ENSEMBLES[key]


def test_criterion_07_figure1(benchmark):
    prob, exact = benchmark
    late = T_GRID >= 5
    lines, ok = [], True
    for seed in FIG1_SEEDS:
        m_opt, se_opt = observable_series(_ensemble(prob, True, seed), "p_0")
        m_non, _ = observable_series(_ensemble(prob, False, seed), "p_0")
        band = 3 * se_opt + 1e-12  # SE vanishes at t = 0 where every trajectory is identical
        inside = bool(np.all(np.abs(m_opt - exact) <= band))
        z = float(np.max(np.abs(m_opt - exact)[1:] / se_opt[1:]))
        leaves = bool(np.any(np.abs(m_non - exact)[late] > band[late]))
        ok &= inside and leaves
        lines.append(f"seed {seed}: optimized max |dev|/SE {z:.2f}, non-optimized leaves band {leaves}")
    report(7, ok, "; ".join(lines))
    assert ok


def test_step_size_self_consistency(benchmark):
    """Halving dt moves the infinite-ensemble means by less than one standard error at N = 1e4."""
    prob, _ = benchmark
    worst = 0.0
    for optimize in (True, False):
        pairs = prob.pairs(optimize)
        ests = []
        for dt in (DT, DT / 2):
            rho = expected_density(prob.psi0, prob.generator.h_total, pairs, T_GRID, dt)
            ests.append(prob.population(rho) / np.trace(rho, axis1=1, axis2=2).real)
        _, se = observable_series(_ensemble(prob, optimize, FIG1_SEEDS[0]), "p_0")
        worst = max(worst, float(np.max(np.abs(ests[0] - ests[1])[1:] / se[1:])))
    ok = worst < 1
    report("dt check    ", ok, f"max |p(dt) - p(dt/2)| / SE = {worst:.3f} at dt J = {DT}")
    assert ok


def _pooled(results: list[EnsembleResult]) -> EnsembleResult:
    return EnsembleResult(
        times=results[0].times,
        signs=np.concatenate([r.signs for r in results], axis=1),
        log_norm2=np.concatenate([r.log_norm2 for r in results], axis=1),
        observables={"p_0": np.concatenate([r.observables["p_0"] for r in results], axis=1)},
        rho_sample=results[0].rho_sample,
        normalization=results[0].normalization,
        first_negative_time=np.concatenate([r.first_negative_time for r in results]),
    )


def test_criterion_08_figure2(benchmark):
    prob, exact = benchmark
    pool = _pooled([_ensemble(prob, True, s) for s in POOL_SEEDS])
    sizes = (100, 1000, 10_000)
    errs = [float(time_averaged_relative_error(group_estimates(pool, "p_0", n), exact, T_GRID).mean()) for n in sizes]
    slope = float(np.polyfit(np.log(sizes), np.log(errs), 1)[0])
    non = float(time_averaged_relative_error(group_estimates(_ensemble(prob, False, FIG1_SEEDS[0]), "p_0", N_TRAJ), exact, T_GRID)[0])
    ratio = non / errs[-1]
    ok = abs(slope + 0.5) <= 0.15 and ratio >= 3
    report(8, ok, f"errors {['%.4f' % e for e in errs]} at N={list(sizes)}, slope {slope:.3f}; non-optimized/optimized at 1e4 = {ratio:.1f}")
    assert ok


# 9 ----------------------------------------------------------------------


def test_criterion_09_hpz():
    dim = 30
    coeffs = HPZCoefficients.brownian(0.1, 2.0)
    q, p = hpz_operators(dim)
    rng = np.random.default_rng(9)
    dual = 0.0
    for _ in range(20):
        rho = random_density(rng, dim)
        ref = hpz_generator(coeffs, 0.0, rho, q, p)
        for other in (hpz_generator(coeffs, 0.0, rho, q, p, form="redfield"), hpz_pseudo_lindblad_rhs(coeffs, 0.0, rho, q, p)):
            dual = max(dual, np.abs(other - ref).max() / np.abs(ref).max())
    phi_zero = hpz_optimal_params(coeffs, 0.0).phi == 0.0
    beta = 1e-10  # deep in the high-temperature limit the displayed operators are exact to O(Omega beta)
    pair = hpz_jump_pair(HPZCoefficients.brownian(0.1, beta), 0.0, q, p)
    lim = brownian_limit_pair(0.1, beta, q, p)
    dev = max(
        np.linalg.norm(pair.a_plus - lim.a_plus) / np.linalg.norm(lim.a_plus),
        np.linalg.norm(pair.a_minus - lim.a_minus) / np.linalg.norm(lim.a_minus),
    )
    a, ad = truncated_boson_ops(dim)
    nq, np_ = frobenius_norm_sq(q), frobenius_norm_sq(p)
    ident = max(abs(np.trace(a @ ad - ad @ a)) / dim, abs(np.trace(q @ p)) / math.sqrt(nq * np_), abs(np_ / nq - 1.0))
    ok = dual <= 1e-12 and phi_zero and dev <= 1e-10 and ident <= 1e-13
    report(9, ok, f"dual-form residual {dual:.1e}, phi_HPZ = 0 {phi_zero}, Brownian-limit deviation {dev:.1e}, truncation identities {ident:.1e}")
    assert ok


# 10 ---------------------------------------------------------------------


def test_criterion_10_plqt_sanity():
    gamma = 1.0
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    h = np.diag([0.0, 1.0]).astype(complex)
    pair = JumpPair(math.sqrt(gamma) * sm, np.zeros((2, 2), dtype=complex))
    obs = {"p1": np.diag([0.0, 1.0]).astype(complex)}
    t = np.arange(0, 5.01, 0.25)
    psi0 = np.array([0, 1], dtype=complex)
    runs = [run_ensemble(psi0, h, [pair], 10_000, t, DT, master_seed=123, observables=obs, threads=k) for k in (1, 3)]
    mean, se = observable_series(runs[0], "p1")
    z = np.abs(mean - np.exp(-gamma * t)) / np.where(se > 0, se, np.inf)
    within = bool(np.all(np.abs(mean - np.exp(-gamma * t)) <= 3 * se + 1e-12))
    signs = bool(np.all(runs[0].signs == 1))
    same = all(np.array_equal(getattr(runs[0], f), getattr(runs[1], f)) for f in ("signs", "log_norm2", "rho_sample"))
    same &= np.array_equal(runs[0].observables["p1"], runs[1].observables["p1"])
    ok = within and signs and same
    report(10, ok, f"max |dev|/SE {np.max(z):.2f}, all signs +1 {signs}, bitwise identical across thread counts {same}")
    assert ok
