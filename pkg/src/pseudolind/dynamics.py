"""Deterministic solvers and the ultraweak-coupling rate picture.

Rate matrices use ``R[k, q]`` for the rate of a jump ``|q> -> |k>`` (row is
the destination). The diagonal is carried along but never enters the rate
equation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .bath import BathSpec, coupling_density_table
from .opcore import SpectralBasis, as_operator, check_same_dim, commutator, gksl_dissipator, hermitize
from .plform import JumpPair, TransformParams, lambda_phi_jumps
from .redfield import RedfieldGenerator, superoperator_matrix

log = logging.getLogger(__name__)

TRACE_ABORT = 1e-6
RATE_CLAMP = 1e-10


class IntegrationError(RuntimeError):
    pass


class SteadyStateError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class RateMatrix:
    rates: np.ndarray

    @property
    def dim(self) -> int:
        return self.rates.shape[0]

    def generator(self) -> np.ndarray:
        """``Q`` with ``dp/dt = Q p``; columns sum to zero."""
        r = self.rates.copy()
        np.fill_diagonal(r, 0.0)
        return r - np.diag(r.sum(axis=0))


def _as_superop(gen, dim: int) -> np.ndarray:
    if isinstance(gen, np.ndarray) and gen.shape == (dim * dim, dim * dim):
        return gen
    return superoperator_matrix(gen, dim)


def integrate_master(gen, rho0, t_grid, dt: float) -> np.ndarray:
    """Fixed-step RK4 for ``drho/dt = gen(rho)``; returns ``rho`` at each ``t_grid`` point.

    ``gen`` is any linear callable on operators (or its superoperator matrix).
    Each step is Hermitized; trace drift beyond ``1e-6`` aborts.
    """
    rho0 = as_operator(rho0)
    if not dt > 0:
        raise ValueError("dt must be positive")
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) < 0):
        raise ValueError("t_grid must be ascending")
    dim = rho0.shape[0]
    lmat = _as_superop(gen, dim)
    tr0 = np.trace(rho0).real
    out = np.empty((len(t_grid), dim, dim), dtype=np.complex128)
    rho = hermitize(rho0)
    t = t_grid[0]
    for i, target in enumerate(t_grid):
        span = target - t
        n = int(np.ceil(span / dt - 1e-9)) if span > 0 else 0
        if n:
            h = span / n
            v = rho.ravel()
            for _ in range(n):
                k1 = lmat @ v
                k2 = lmat @ (v + 0.5 * h * k1)
                k3 = lmat @ (v + 0.5 * h * k2)
                k4 = lmat @ (v + h * k3)
                v = v + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                m = v.reshape(dim, dim)
                v = (0.5 * (m + m.conj().T)).ravel()
            rho = v.reshape(dim, dim)
            t = target
        drift = abs(np.trace(rho).real - tr0)
        if drift > TRACE_ABORT:
            raise IntegrationError(f"trace drifted by {drift:.2e} at t={target}")
        out[i] = rho
    return out


def steady_state(gen, dim: int, tol: float = 1e-9) -> np.ndarray:
    """Unique normalized null vector of the generator, reshaped to a density matrix."""
    lmat = _as_superop(gen, dim)
    _, svals, vh = linalg.svd(lmat)
    scale = max(svals[0], 1e-300)
    null = np.sum(svals < tol * scale)
    if null != 1:
        raise SteadyStateError(f"null space has dimension {null}, expected 1")
    rho = vh[-1].conj().reshape(dim, dim)
    rho = hermitize(rho)
    return rho / np.trace(rho).real


def rwa_rates(s_op, basis: SpectralBasis, bath: BathSpec) -> RateMatrix:
    """Quantum-optical rates ``R[k, q] = 2 G'(E_k - E_q) |S_kq|^2``."""
    s = as_operator(s_op)
    check_same_dim(s, basis.vectors)
    g = coupling_density_table(basis.splittings, bath, "real_part_only").real
    return RateMatrix(2.0 * g * np.abs(s) ** 2)


def rwa_lamb_shift(s_op, basis: SpectralBasis, bath: BathSpec, mode: str = "full") -> np.ndarray:
    """Diagonal ``sum_q G''(E_q - E_k) |S_qk|^2 |k><k|``."""
    s = as_operator(s_op)
    check_same_dim(s, basis.vectors)
    g = coupling_density_table(basis.splittings, bath, mode).imag
    return np.diag(np.sum(g * np.abs(s) ** 2, axis=0)).astype(np.complex128)


def pauli_evolve(rates: RateMatrix, p0, t_grid) -> np.ndarray:
    """Populations under ``dp_q/dt = sum_k [R_qk p_k - R_kq p_q]``."""
    r = rates.rates
    if np.any(r < 0):
        raise ValueError("rate matrix has negative entries")
    p0 = np.asarray(p0, dtype=float)
    if abs(p0.sum() - 1) > 1e-10:
        raise ValueError("initial populations must sum to 1")
    q = rates.generator()
    t_grid = np.asarray(t_grid, dtype=float)
    out = np.empty((len(t_grid), len(p0)))
    p, t = p0.copy(), t_grid[0]
    for i, target in enumerate(t_grid):
        if target > t:
            p = linalg.expm(q * (target - t)) @ p
            t = target
        out[i] = p
    return out


def pauli_stationary(rates: RateMatrix) -> np.ndarray:
    q = rates.generator()
    _, _, vh = linalg.svd(q)
    p = np.abs(vh[-1])
    return p / p.sum()


def rates_from_weight_difference(pair: JumpPair) -> RateMatrix:
    """``R[q, k] = |<q|A+|k>|^2 - |<q|A-|k>|^2``; tiny negatives are clamped to zero."""
    r = np.abs(pair.a_plus) ** 2 - np.abs(pair.a_minus) ** 2
    scale = max(float(np.max(np.abs(pair.a_plus)) ** 2), 1.0)
    worst = float(r.min())
    if worst < -RATE_CLAMP * scale:
        raise ValueError(f"weight-difference rate {worst:.3e} is negative beyond tolerance")
    return RateMatrix(np.where(r < 0, 0.0, r))


def gibbs_state(basis: SpectralBasis, beta: float) -> np.ndarray:
    """Canonical state, diagonal in the energy basis."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    e = basis.energies
    w = np.exp(-beta * (e - e.min()))
    return np.diag(w / w.sum()).astype(np.complex128)


@dataclass(frozen=True, eq=False)
class TruncatedGKSL:
    """Redfield coherent part plus only the positive term ``D(A+)`` of each channel."""

    h_total: np.ndarray
    pairs: list[JumpPair]

    def __call__(self, rho) -> np.ndarray:
        rho = as_operator(rho)
        out = -1j * commutator(self.h_total, rho)
        for pair in self.pairs:
            out = out + gksl_dissipator(pair.a_plus, rho)
        return out


def truncated_gksl_generator(gen: RedfieldGenerator, params: list[TransformParams]) -> TruncatedGKSL:
    if len(params) != len(gen.channels):
        raise ValueError("need one TransformParams per channel")
    pairs = [lambda_phi_jumps(ch.s_op, ch.s_conv, p) for ch, p in zip(gen.channels, params)]
    return TruncatedGKSL(gen.h_total, pairs)


def pseudo_lindblad_pairs(gen: RedfieldGenerator, params: list[TransformParams]) -> list[JumpPair]:
    if len(params) != len(gen.channels):
        raise ValueError("need one TransformParams per channel")
    return [lambda_phi_jumps(ch.s_op, ch.s_conv, p) for ch, p in zip(gen.channels, params)]
