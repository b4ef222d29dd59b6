"""Sign-bit quantum trajectories for pseudo-Lindblad equations.

Every trajectory carries a normalized state, the logarithm of its squared
norm, and a sign. A jump through ``A-`` flips the sign. The sample estimate of
the density matrix is ``sum s_n |psi_n><psi_n| / sum s_n <psi_n|psi_n>``.

One step of length ``dt`` (with ``p_j = dt <A_j^H A_j>`` and ``P = sum p_j``):

* with probability ``p_j``: ``psi <- A_j psi / ||A_j psi||``, norm kept, sign
  multiplied by the sign of channel ``j``;
* otherwise: ``psi <- exp(-i dt H_eff) psi / sqrt(1 - P)`` with
  ``H_eff = H - i/2 sum_pairs (A+^H A+ - A-^H A-)``; the norm is free to drift.

The ensemble average of ``s psi psi^H`` then follows the pseudo-Lindblad
generator to first order in ``dt``.

Random numbers come from one Philox stream per trajectory keyed by
``(master_seed, trajectory index)``, and trajectories are processed in fixed
batches, so results do not depend on how many worker threads run.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .plform import JumpPair

log = logging.getLogger(__name__)

MAX_STEP_PROBABILITY = 0.1
BATCH_SIZE = 500
COLLAPSE_TOL = 1e-6


class StepSizeError(RuntimeError):
    """Jump probability per step exceeded the allowed bound."""


def trajectory_stream(master_seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one trajectory."""
    key = np.array([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class Trajectory:
    psi: np.ndarray
    sign: int = 1
    t: float = 0.0
    rng_stream: int = 0
    log_norm2: float = 0.0

    @property
    def unnormalized(self) -> np.ndarray:
        return self.psi * math.exp(0.5 * self.log_norm2)


@dataclass(frozen=True, eq=False)
class StepKernel:
    """Precomputed operators for stepping many trajectories at once."""

    jumps: np.ndarray  # (n_jumps, D, D)
    signs: np.ndarray  # (n_jumps,) of +-1
    propagator: np.ndarray  # exp(-i dt H_eff)
    dt: float

    @classmethod
    def build(cls, h_total, pairs: list[JumpPair], dt: float) -> "StepKernel":
        if not dt > 0:
            raise ValueError("dt must be positive")
        h_total = np.asarray(h_total, dtype=np.complex128)
        dim = h_total.shape[0]
        jumps, signs = [], []
        drift = np.zeros((dim, dim), dtype=np.complex128)
        for pair in pairs:
            for op, s in ((pair.a_plus, 1), (pair.a_minus, -1)):
                op = np.asarray(op, dtype=np.complex128)
                if not np.any(op):
                    continue
                jumps.append(op)
                signs.append(s)
                drift += s * (op.conj().T @ op)
        jumps_arr = np.array(jumps) if jumps else np.zeros((0, dim, dim), dtype=np.complex128)
        h_eff = h_total - 0.5j * drift
        return cls(jumps_arr, np.array(signs, dtype=np.int8), linalg.expm(-1j * dt * h_eff), dt)

    def step(self, psi: np.ndarray, log_norm2: np.ndarray, sign: np.ndarray, u: np.ndarray):
        """Advance a batch in place. ``psi`` has shape ``(D, B)`` with unit columns.

        Returns the boolean mask of trajectories that jumped through a negative channel.
        """
        dt = self.dt
        nojump = self.propagator @ psi
        if len(self.jumps) == 0:
            n2 = np.sum(nojump.real**2 + nojump.imag**2, axis=0)
            psi[...] = nojump / np.sqrt(n2)
            log_norm2 += np.log(n2)
            return np.zeros(psi.shape[1], dtype=bool)
        n_j, dim = self.jumps.shape[:2]
        phi = (self.jumps.reshape(n_j * dim, dim) @ psi).reshape(n_j, dim, -1)
        amp = np.einsum("jdb,jdb->jb", phi.real, phi.real) + np.einsum("jdb,jdb->jb", phi.imag, phi.imag)
        probs = dt * amp
        cum = np.cumsum(probs, axis=0)
        total = cum[-1]
        worst = float(total.max())
        if worst >= MAX_STEP_PROBABILITY:
            suggestion = dt * 0.5 * MAX_STEP_PROBABILITY / worst
            raise StepSizeError(f"jump probability {worst:.3f} per step; use dt <= {suggestion:.2e}")
        jumped = u < total
        n2 = np.sum(nojump.real**2 + nojump.imag**2, axis=0)
        new_psi = nojump / np.sqrt(n2)
        log_norm2 += np.where(jumped, 0.0, np.log(n2) - np.log1p(-total))
        negative = np.zeros(psi.shape[1], dtype=bool)
        if np.any(jumped):
            cols = np.nonzero(jumped)[0]
            which = np.argmax(cum[:, cols] > u[cols], axis=0)
            vec = phi[which, :, cols]  # (k, D)
            vec = vec / np.sqrt(amp[which, cols])[:, None]
            new_psi[:, cols] = vec.T
            chan = self.signs[which]
            sign[cols] *= chan
            negative[cols] = chan < 0
        psi[...] = new_psi
        return negative


def plqt_step(traj: Trajectory, h_total, pairs: list[JumpPair], dt: float, rng: np.random.Generator | None = None) -> Trajectory:
    """One stochastic step of a single trajectory (returns a new object)."""
    kernel = StepKernel.build(h_total, pairs, dt)
    rng = rng if rng is not None else trajectory_stream(0, traj.rng_stream)
    psi = np.asarray(traj.psi, dtype=np.complex128).reshape(-1, 1).copy()
    nrm = np.linalg.norm(psi)
    psi /= nrm
    logw = np.array([traj.log_norm2 + 2 * math.log(nrm)])
    sign = np.array([traj.sign], dtype=np.int8)
    kernel.step(psi, logw, sign, np.array([rng.random()]))
    return Trajectory(psi[:, 0], int(sign[0]), traj.t + dt, traj.rng_stream, float(logw[0]))


@dataclass
class EnsembleResult:
    times: np.ndarray
    signs: np.ndarray  # (T, N) int8
    log_norm2: np.ndarray  # (T, N)
    observables: dict[str, np.ndarray]  # name -> (T, N) expectation in the normalized state
    rho_sample: np.ndarray  # (T, D, D)
    normalization: np.ndarray  # (T,) N(t)/N
    first_negative_time: np.ndarray  # (N,), inf when no negative jump occurred
    meta: dict = field(default_factory=dict)

    @property
    def n_trajectories(self) -> int:
        return self.signs.shape[1]

    @property
    def anomalies(self) -> np.ndarray:
        """Times at which sign cancellation leaves the estimator unusable."""
        return np.abs(self.normalization) < COLLAPSE_TOL


def _run_batch(kernel, psi0, start, stop, master_seed, steps_per_output, observables):
    b = stop - start
    n_steps = int(sum(steps_per_output))
    dim = psi0.shape[0]
    uniforms = np.empty((n_steps, b))
    for j in range(b):
        uniforms[:, j] = trajectory_stream(master_seed, start + j).random(n_steps)
    psi = np.repeat(psi0[:, None], b, axis=1)
    logw = np.zeros(b)
    sign = np.ones(b, dtype=np.int8)
    first_neg = np.full(b, np.inf)
    n_out = len(steps_per_output)
    out_sign = np.empty((n_out, b), dtype=np.int8)
    out_logw = np.empty((n_out, b))
    out_obs = {k: np.empty((n_out, b)) for k in observables}
    partial = np.empty((n_out, dim, dim), dtype=np.complex128)
    partial_scale = np.empty(n_out)
    step = 0
    for i, n in enumerate(steps_per_output):
        for _ in range(n):
            neg = kernel.step(psi, logw, sign, uniforms[step])
            step += 1
            if np.any(neg):
                fresh = neg & np.isinf(first_neg)
                first_neg[fresh] = step * kernel.dt
        out_sign[i] = sign
        out_logw[i] = logw
        for k, op in observables.items():
            out_obs[k][i] = np.real(np.sum(psi.conj() * (op @ psi), axis=0))
        c = float(logw.max())
        w = sign * np.exp(logw - c)
        partial[i] = (psi * w) @ psi.conj().T
        partial_scale[i] = c
    return out_sign, out_logw, out_obs, partial, partial_scale, first_neg


def run_ensemble(
    psi0,
    h_total,
    pairs: list[JumpPair],
    n_trajectories: int,
    t_grid,
    dt: float,
    master_seed: int = 0,
    observables: dict[str, np.ndarray] | None = None,
    threads: int = 1,
    batch_size: int = BATCH_SIZE,
) -> EnsembleResult:
    """Propagate ``n_trajectories`` sign-bit trajectories and collect estimates at ``t_grid``.

    ``t_grid`` must start at 0 and its points must be multiples of ``dt``.
    """
    if n_trajectories < 1:
        raise ValueError("need at least one trajectory")
    psi0 = np.asarray(psi0, dtype=np.complex128).ravel()
    if abs(np.linalg.norm(psi0) - 1) > 1e-10:
        raise ValueError("initial state must be normalized")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid[0] != 0 or np.any(np.diff(t_grid) < 0):
        raise ValueError("t_grid must start at 0 and be ascending")
    ticks = t_grid / dt
    if np.any(np.abs(ticks - np.round(ticks)) > 1e-6):
        raise ValueError("t_grid points must be multiples of dt")
    steps = np.diff(np.concatenate([[0], np.round(ticks).astype(int)]))
    observables = {k: np.asarray(v, dtype=np.complex128) for k, v in (observables or {}).items()}
    kernel = StepKernel.build(h_total, pairs, dt)

    bounds = [(s, min(s + batch_size, n_trajectories)) for s in range(0, n_trajectories, batch_size)]

    def work(bd):
        return _run_batch(kernel, psi0, bd[0], bd[1], master_seed, steps, observables)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(bd) for bd in bounds]

    signs = np.concatenate([p[0] for p in parts], axis=1)
    logw = np.concatenate([p[1] for p in parts], axis=1)
    obs = {k: np.concatenate([p[2][k] for p in parts], axis=1) for k in observables}
    first_neg = np.concatenate([p[5] for p in parts])

    # ordered reduction of the batch partial sums onto a common scale
    scales = np.stack([p[4] for p in parts])  # (n_batches, T)
    top = scales.max(axis=0)
    rho = np.zeros((len(t_grid),) + parts[0][3].shape[1:], dtype=np.complex128)
    for p, c in zip(parts, scales):
        rho += p[3] * np.exp(c - top)[:, None, None]
    norm_scaled = np.trace(rho, axis1=1, axis2=2).real
    with np.errstate(invalid="ignore", divide="ignore"):
        rho_sample = rho / norm_scaled[:, None, None]
    normalization = norm_scaled * np.exp(top) / n_trajectories
    return EnsembleResult(
        times=t_grid,
        signs=signs,
        log_norm2=logw,
        observables=obs,
        rho_sample=rho_sample,
        normalization=normalization,
        first_negative_time=first_neg,
        meta={"master_seed": int(master_seed), "dt": float(dt), "n_trajectories": int(n_trajectories)},
    )


def expected_density(psi0, h_total, pairs: list[JumpPair], t_grid, dt: float) -> np.ndarray:
    """Exact ensemble expectation of ``s w psi psi^H`` under the discrete stepping scheme.

    One step maps ``rho -> K rho K^H + dt sum_j s_j A_j rho A_j^H`` with ``K`` the
    no-jump propagator, so the infinite-ensemble limit at finite ``dt`` is
    deterministic. Comparing it at ``dt`` and ``dt/2`` isolates the step-size bias.
    """
    kernel = StepKernel.build(h_total, pairs, dt)
    psi0 = np.asarray(psi0, dtype=np.complex128).ravel()
    rho = np.outer(psi0, psi0.conj())
    t_grid = np.asarray(t_grid, dtype=float)
    ticks = np.round(t_grid / dt).astype(int)
    if np.any(np.abs(t_grid / dt - ticks) > 1e-6) or ticks[0] != 0:
        raise ValueError("t_grid must start at 0 and be multiples of dt")
    k = kernel.propagator
    out = np.empty((len(t_grid),) + rho.shape, dtype=np.complex128)
    done = 0
    for i, n in enumerate(ticks):
        for _ in range(n - done):
            new = k @ rho @ k.conj().T
            for a, sgn in zip(kernel.jumps, kernel.signs):
                new += dt * sgn * (a @ rho @ a.conj().T)
            rho = new
        done = n
        out[i] = rho
    return out


def observable_series(result: EnsembleResult, name: str) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and standard error of ``p^(n) = s_n <O>_n w_n N / sum_m s_m w_m``."""
    vals = result.observables[name]
    n = result.n_trajectories
    c = result.log_norm2.max(axis=1, keepdims=True)
    w = result.signs * np.exp(result.log_norm2 - c)
    norm = w.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        samples = w * vals * n / norm
    mean = samples.mean(axis=1)
    if n > 1:
        stderr = samples.std(axis=1, ddof=1) / math.sqrt(n)
    else:
        stderr = np.zeros_like(mean)
    return mean, stderr


@dataclass(frozen=True)
class SignStatistics:
    negative_fraction: np.ndarray
    mean_first_negative_time: float
    censored: int


def sign_statistics(result: EnsembleResult) -> SignStatistics:
    frac = np.mean(result.signs < 0, axis=1)
    t = result.first_negative_time
    seen = np.isfinite(t)
    tau = float(t[seen].mean()) if np.any(seen) else math.inf
    return SignStatistics(frac, tau, int(np.sum(~seen)))
