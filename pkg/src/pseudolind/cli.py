"""Command-line front end: ``pseudolind <command> --config run.json``.

Every command writes its tables into the output directory together with a
``manifest.json`` holding the validated config, the package version and the
wall time. Re-running a manifest's config reproduces the CSVs bitwise.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .benchmark import HubbardProblem, convergence_ladder, effective_sample_size
from .config import COMMANDS, ConfigError, HPZSystem, HubbardSystem, RunConfig, load_config, parse_config
from .dynamics import (
    RateMatrix,
    gibbs_state,
    integrate_master,
    pauli_evolve,
    pauli_stationary,
    rates_from_weight_difference,
    rwa_rates,
    truncated_gksl_generator,
)
from .hpz import (
    brownian_limit_pair,
    hpz_generator,
    hpz_jump_pair,
    hpz_lamb_shift,
    hpz_operators,
    hpz_optimal_params,
    hpz_pseudo_lindblad_rhs,
    normalized_weights_convergence,
)
from .opcore import frobenius_norm_sq, truncated_boson_ops
from .plform import kossakowski_eigensystem, lambda_phi_jumps, minimal_weights, optimal_params, weights
from .plqt import observable_series, run_ensemble, sign_statistics


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_, int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path: Path, header: list[str], rows) -> Path:
    """Write rows with floats at 17 significant digits."""
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def _time_grid(cfg: RunConfig) -> np.ndarray:
    r = cfg.run
    n = int(round(r.t_max / r.output_every))
    return np.arange(n + 1) * r.output_every


def _hubbard(cfg: RunConfig) -> HubbardProblem:
    if not isinstance(cfg.system, HubbardSystem):
        raise ConfigError("this command needs a Hubbard system (system.kind = 'hubbard')")
    spec = cfg.system.spec(cfg.bath.spec())
    return HubbardProblem.build(spec, cfg.run.channel_mode, cfg.run.include_lamb_shift, tuple(cfg.system.initial_occupation))


def _plot_enabled(cfg: RunConfig) -> bool:
    return "png" in cfg.output.formats


def _series_rows(t, rho_t, p0):
    for ti, rho in zip(t, rho_t):
        yield (ti, np.real(np.trace(p0 @ rho)), np.real(np.trace(rho)), np.real(np.trace(rho @ rho)))


# commands ---------------------------------------------------------------


def cmd_optimize(cfg: RunConfig, out: Path) -> dict:
    if isinstance(cfg.system, HPZSystem):
        return _optimize_hpz(cfg, out)
    prob = _hubbard(cfg)
    kos = kossakowski_eigensystem(prob.basis, cfg.bath.spec(), cfg.run.channel_mode)
    table = []
    for ch in prob.channels:
        p = optimal_params(ch.s_op, ch.s_conv)
        w_min = minimal_weights(ch.s_op, ch.s_conv)
        w_bare = weights(ch.s_op, ch.s_conv, type(p)())
        table.append(
            {
                "channel": ch.label,
                "lambda_min": p.lam,
                "phi_min": p.phi,
                "weight_plus": w_min[0],
                "weight_minus": w_min[1],
                "weight_difference": w_min[0] - w_min[1],
                "weight_plus_unoptimized": w_bare[0],
                "weight_minus_unoptimized": w_bare[1],
                "lambda_0": kos.lam0,
                "phi_0": kos.phi0,
                "lambda_ratio": p.lam / kos.lam0,
                "phi_offset": p.phi - kos.phi0,
            }
        )
    report = {
        "channels": table,
        "kossakowski": {"g_plus": kos.g_plus, "g_minus": kos.g_minus, "lambda_0": kos.lam0, "phi_0": kos.phi0},
    }
    (out / "optimize.json").write_text(json.dumps(report, indent=2))
    print(f"{'channel':>8} {'lambda':>10} {'phi':>10} {'|A+|^2':>10} {'|A-|^2':>10}")
    for row in table:
        print(f"{row['channel']:>8} {row['lambda_min']:10.5f} {row['phi_min']:10.5f} {row['weight_plus']:10.5f} {row['weight_minus']:10.5f}")
    print(f"Kossakowski reference: lambda_0={kos.lam0:.5f} phi_0={kos.phi0:.5f}")
    return {"files": ["optimize.json"], "report": report}


def _optimize_hpz(cfg: RunConfig, out: Path) -> dict:
    sysc = cfg.system
    coeffs = sysc.coefficients(cfg.bath.beta)
    q, p = hpz_operators(sysc.dim, sysc.mass, sysc.omega)
    params = hpz_optimal_params(coeffs, sysc.time)
    pair = hpz_jump_pair(coeffs, sysc.time, q, p)
    w = pair.weights()
    nq = frobenius_norm_sq(q)
    report = {
        "lambda_hpz": params.lam,
        "phi_hpz": params.phi,
        "weight_plus": w[0],
        "weight_minus": w[1],
        "weight_difference": w[0] - w[1],
        "weight_plus_per_norm_q": w[0] / nq,
        "weight_minus_per_norm_q": w[1] / nq,
    }
    (out / "optimize.json").write_text(json.dumps(report, indent=2))
    print(f"lambda_HPZ={params.lam:.8g} phi_HPZ={params.phi:g} |A+|^2={w[0]:.6g} |A-|^2={w[1]:.6g}")
    return {"files": ["optimize.json"], "report": report}


def cmd_evolve(cfg: RunConfig, out: Path) -> dict:
    prob = _hubbard(cfg)
    t = _time_grid(cfg)
    start = time.perf_counter()
    rho_t = prob.reference(t, cfg.run.dt)
    header = ["t", "p_0", "tr_rho", "purity"]
    files = [write_csv(out / "evolve.csv", header, _series_rows(t, rho_t, prob.p0)).name]
    curves = {"Redfield": prob.population(rho_t)}
    if cfg.run.truncated_gksl:
        tg = truncated_gksl_generator(prob.generator, prob.params(cfg.run.optimize))
        rho_g = integrate_master(tg, prob.rho0, t, cfg.run.dt)
        files.append(write_csv(out / "evolve_truncated.csv", header, _series_rows(t, rho_g, prob.p0)).name)
        curves["truncated GKSL"] = prob.population(rho_g)
    if _plot_enabled(cfg):
        from .plotting import plot_population

        files.append(plot_population(out / "evolve.png", t, curves).name)
    print(f"integrated {len(t) - 1} intervals in {time.perf_counter() - start:.2f} s; p_0(t_max)={curves['Redfield'][-1]:.6f}")
    return {"files": files}


def cmd_plqt(cfg: RunConfig, out: Path) -> dict:
    prob = _hubbard(cfg)
    r = cfg.run
    t = _time_grid(cfg)
    pairs = prob.pairs(r.optimize)
    res = run_ensemble(
        prob.psi0, prob.generator.h_total, pairs, r.n_trajectories, t, r.dt,
        master_seed=r.master_seed, observables={"p_0": prob.p0}, threads=r.threads,
    )
    mean, se = observable_series(res, "p_0")
    stats = sign_statistics(res)
    n_eff = effective_sample_size(res)
    anomalies = res.anomalies
    rows = zip(t, mean, se, stats.negative_fraction, n_eff, anomalies)
    files = [write_csv(out / "plqt.csv", ["t", "p_0_mean", "p_0_stderr", "neg_sign_fraction", "N_eff", "anomalies"], rows).name]

    exact = prob.population(prob.reference(t, r.dt))
    ladder = [n for n in r.n_ladder if n <= r.n_trajectories]
    conv = convergence_ladder(res, "p_0", exact, ladder) if ladder else []
    files.append(write_csv(out / "plqt_convergence.csv", ["N", "time_avg_rel_error"], [(n, e) for n, e, _ in conv]).name)
    if _plot_enabled(cfg):
        from .plotting import plot_convergence, plot_population, plot_sign_fraction

        files.append(plot_population(out / "plqt.png", t, {"PLQT": mean, "direct": exact}, {"PLQT": se}).name)
        files.append(plot_sign_fraction(out / "plqt_signs.png", t, stats.negative_fraction).name)
        if len(conv) > 1:
            files.append(plot_convergence(out / "plqt_convergence.png", [c[0] for c in conv], [c[1] for c in conv]).name)
    tau = stats.mean_first_negative_time
    print(f"{r.n_trajectories} trajectories; mean first negative jump at t={tau:.3g}; anomalies={int(anomalies.sum())}")
    for n, e, _ in conv:
        print(f"  N={n:>7d}  time-averaged relative error {e:.4g}")
    return {"files": files, "mean_first_negative_time": tau if math.isfinite(tau) else None}


def cmd_rates(cfg: RunConfig, out: Path) -> dict:
    prob = _hubbard(cfg)
    bath = cfg.bath.spec()
    params = prob.params(cfg.run.optimize)
    rwa = sum(rwa_rates(ch.s_op, prob.basis, bath).rates for ch in prob.channels)
    wd = sum(
        rates_from_weight_difference(lambda_phi_jumps(ch.s_op, ch.s_conv, p)).rates for ch, p in zip(prob.channels, params)
    )
    d = prob.basis.dim
    rows = [(k, q, rwa[k, q], wd[k, q]) for k in range(d) for q in range(d) if k != q]
    files = [write_csv(out / "rates.csv", ["to_k", "from_q", "rate_rwa", "rate_weight_difference"], rows).name]
    rm = RateMatrix(rwa)
    t = _time_grid(cfg)
    p_init = np.abs(prob.psi0) ** 2
    pops = pauli_evolve(rm, p_init, t)
    files.append(write_csv(out / "pauli.csv", ["t"] + [f"p_{k}" for k in range(d)], [(ti, *pi) for ti, pi in zip(t, pops)]).name)
    stationary = pauli_stationary(rm)
    gibbs = np.real(np.diag(gibbs_state(prob.basis, cfg.bath.beta)))
    summary = {
        "stationary": stationary.tolist(),
        "gibbs": gibbs.tolist(),
        "stationary_gibbs_distance": float(np.abs(stationary - gibbs).sum()),
        "max_rate_discrepancy": float(np.abs(rwa - wd).max()),
    }
    (out / "rates.json").write_text(json.dumps(summary, indent=2))
    files.append("rates.json")
    if _plot_enabled(cfg):
        from .plotting import plot_rates

        files.append(plot_rates(out / "rates.png", rwa).name)
    print(f"stationary vs Gibbs (l1): {summary['stationary_gibbs_distance']:.3e}; RWA vs weight-difference: {summary['max_rate_discrepancy']:.3e}")
    return {"files": files, "report": summary}


def cmd_hpz_check(cfg: RunConfig, out: Path) -> dict:
    sysc = cfg.system
    if not isinstance(sysc, HPZSystem):
        raise ConfigError("hpz-check needs an HPZ system (system.kind = 'hpz')")
    beta = cfg.bath.beta
    coeffs = sysc.coefficients(beta)
    q, p = hpz_operators(sysc.dim, sysc.mass, sysc.omega)
    a, ad = truncated_boson_ops(sysc.dim)
    rng = np.random.default_rng(cfg.run.master_seed)
    dual, equiv = [], []
    for _ in range(20):
        x = rng.normal(size=(sysc.dim,) * 2) + 1j * rng.normal(size=(sysc.dim,) * 2)
        rho = x @ x.conj().T
        rho /= np.trace(rho)
        ref = hpz_generator(coeffs, sysc.time, rho, q, p)
        scale = np.abs(ref).max()
        dual.append(np.abs(ref - hpz_generator(coeffs, sysc.time, rho, q, p, form="redfield")).max() / scale)
        equiv.append(np.abs(ref - hpz_pseudo_lindblad_rhs(coeffs, sysc.time, rho, q, p)).max() / scale)
    pair = hpz_jump_pair(coeffs, sysc.time, q, p)
    lim = brownian_limit_pair(sysc.gamma, beta, q, p, sysc.mass)
    scale = np.linalg.norm(pair.a_plus)
    report = {
        "dual_form_residual": float(max(dual)),
        "pseudo_lindblad_residual": float(max(equiv)),
        "phi_hpz": hpz_optimal_params(coeffs, sysc.time).phi,
        "brownian_limit_deviation_plus": float(np.linalg.norm(pair.a_plus - lim.a_plus) / scale),
        "brownian_limit_deviation_minus": float(np.linalg.norm(pair.a_minus - lim.a_minus) / scale),
        "tr_commutator_a_adag": float(abs(np.trace(a @ ad - ad @ a))),
        "tr_qp": float(abs(np.trace(q @ p))),
        "norm_ratio_residual": float(frobenius_norm_sq(p) / frobenius_norm_sq(q) - (sysc.mass * sysc.omega) ** 2),
        "lamb_shift_offset": hpz_lamb_shift(coeffs, sysc.time, q, p).offset,
        "weight_truncation_change": normalized_weights_convergence(coeffs, sysc.time, sysc.dim),
    }
    (out / "hpz_check.json").write_text(json.dumps(report, indent=2))
    for k, v in report.items():
        print(f"{k:>32}: {v:.3e}")
    return {"files": ["hpz_check.json"], "report": report}


HANDLERS = {
    "optimize": cmd_optimize,
    "evolve": cmd_evolve,
    "plqt": cmd_plqt,
    "rates": cmd_rates,
    "hpz-check": cmd_hpz_check,
}


def run(command: str, cfg: RunConfig, out: Path) -> dict:
    """Execute ``command`` and write its manifest; returns the manifest dict."""
    if cfg.mode is not None and cfg.mode != command:
        raise ConfigError(f"config is for mode {cfg.mode!r} but command {command!r} was requested")
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    result = HANDLERS[command](cfg, out)
    manifest = {
        "command": command,
        "config": json.loads(cfg.model_dump_json()),
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_time_s": time.perf_counter() - start,
        "outputs": result["files"],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pseudolind", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, type=Path, help="JSON run configuration")
    ap.add_argument("--out", type=Path, help="output directory (overrides output.directory)")
    ap.add_argument("--seed", type=int, help="master seed (overrides run.master_seed)")
    ap.add_argument("--threads", type=int, help="worker threads for trajectory batches")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["master_seed"] = args.seed
        if args.threads is not None:
            overrides["threads"] = args.threads
        if overrides:
            raw = json.loads(cfg.model_dump_json())
            raw["run"].update(overrides)
            cfg = parse_config(raw)
        out = args.out if args.out is not None else Path(cfg.output.directory)
        run(args.command, cfg, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # surface integrator and quadrature failures with context
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
