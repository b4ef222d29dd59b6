"""Redfield generator in the energy eigenbasis.

A coupling channel is a Hermitian operator ``S`` together with its convolved
partner ``SS`` (entries ``G(E_q - E_k) S_qk``). The dissipator uses the
off-diagonal Kossakowski matrix ``sigma_x`` pairing ``S`` with ``SS``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bath import BathSpec, coupling_density_table
from .opcore import (
    HERMITIAN_TOL,
    NotHermitianError,
    SpectralBasis,
    as_operator,
    check_same_dim,
    commutator,
    hermitian_residual,
    hermitize,
)


def convolved_coupling(s_op, basis: SpectralBasis, bath: BathSpec, mode: str = "full") -> np.ndarray:
    """Entrywise ``G(delta_qk) * S_qk`` for ``S`` given in the energy basis.

    ``mode="real_part_only"`` keeps only ``G'``.
    """
    s_op = as_operator(s_op)
    check_same_dim(s_op, basis.vectors)
    g = coupling_density_table(basis.splittings, bath, mode)
    return g * s_op


def lamb_shift(s_op, s_conv) -> np.ndarray:
    """``(S SS - SS^H S) / 2i``."""
    s_op = as_operator(s_op)
    s_conv = as_operator(s_conv)
    check_same_dim(s_op, s_conv)
    h = (s_op @ s_conv - s_conv.conj().T @ s_op) / 2j
    scale = max(1.0, float(np.max(np.abs(h))))
    if hermitian_residual(h) > 1e-12 * scale * s_op.shape[0]:
        raise NotHermitianError(hermitian_residual(h))
    return hermitize(h)


def sigma_x_dissipator(s_op, s_conv, rho) -> np.ndarray:
    """``sum_ij sigma^x_ij [S_i rho S_j^H - 1/2 {S_j^H S_i, rho}]`` with ``(S_1, S_2) = (S, SS)``."""
    s, ss, rho = as_operator(s_op), as_operator(s_conv), as_operator(rho)
    check_same_dim(s, ss, rho)
    sd, ssd = s.conj().T, ss.conj().T
    anti = ssd @ s + sd @ ss
    return s @ rho @ ssd + ss @ rho @ sd - 0.5 * (anti @ rho + rho @ anti)


@dataclass(frozen=True, eq=False)
class CouplingChannel:
    s_op: np.ndarray
    s_conv: np.ndarray
    bath: BathSpec | None = None
    label: str = ""

    def __post_init__(self):
        s = as_operator(self.s_op)
        if hermitian_residual(s) > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(s)))):
            raise NotHermitianError(hermitian_residual(s))
        check_same_dim(s, as_operator(self.s_conv))

    @classmethod
    def from_basis(cls, s_op, basis: SpectralBasis, bath: BathSpec, mode: str = "full", label: str = ""):
        return cls(as_operator(s_op), convolved_coupling(s_op, basis, bath, mode), bath, label)


def redfield_dissipator(channel: CouplingChannel, rho) -> np.ndarray:
    return sigma_x_dissipator(channel.s_op, channel.s_conv, rho)


@dataclass(frozen=True, eq=False)
class RedfieldGenerator:
    """``rho -> -i[H_S + H_LS, rho] + sum_channels D_red[rho]``."""

    h_sys: np.ndarray
    h_lamb: np.ndarray
    channels: list[CouplingChannel] = field(default_factory=list)

    @classmethod
    def build(cls, h_sys, channels, include_lamb_shift: bool = True):
        h_sys = as_operator(h_sys)
        h_lamb = np.zeros_like(h_sys)
        if include_lamb_shift:
            for ch in channels:
                h_lamb = h_lamb + lamb_shift(ch.s_op, ch.s_conv)
        return cls(h_sys, h_lamb, list(channels))

    @property
    def dim(self) -> int:
        return self.h_sys.shape[0]

    @property
    def h_total(self) -> np.ndarray:
        return self.h_sys + self.h_lamb

    def __call__(self, rho) -> np.ndarray:
        return generator_apply(self, rho)


def generator_apply(gen: RedfieldGenerator, rho) -> np.ndarray:
    rho = as_operator(rho)
    check_same_dim(gen.h_sys, rho)
    out = -1j * commutator(gen.h_total, rho)
    for ch in gen.channels:
        out = out + redfield_dissipator(ch, rho)
    return out


def superoperator_matrix(generator, dim: int) -> np.ndarray:
    """Matrix of a linear map on ``dim x dim`` operators, acting on row-major ``vec(rho)``."""
    mat = np.empty((dim * dim, dim * dim), dtype=np.complex128)
    unit = np.zeros((dim, dim), dtype=np.complex128)
    for j in range(dim * dim):
        unit.flat[j] = 1.0
        mat[:, j] = np.asarray(generator(unit)).ravel()
        unit.flat[j] = 0.0
    return mat
