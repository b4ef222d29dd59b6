"""Assembly of the Hubbard-chain benchmark: generator, initial state, observable, error metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bath import BathSpec, OhmicDrude
from .dynamics import integrate_master, pseudo_lindblad_pairs
from .hubbard import HubbardSpec, benchmark_channels, build_hamiltonian, occupation_state
from .opcore import SpectralBasis, eigendecompose
from .plform import JumpPair, TransformParams, optimal_params
from .plqt import EnsembleResult
from .redfield import CouplingChannel, RedfieldGenerator

DEFAULT_OCCUPATION = (0, 2)


def reference_bath() -> BathSpec:
    """Ohmic-Drude bath with ``omega_D = J`` at ``T = 0.1 J``."""
    return BathSpec(OhmicDrude(1.0), beta=10.0)


def ground_projector(basis: SpectralBasis, tol: float = 1e-9) -> np.ndarray:
    """Projector onto the lowest eigenspace, in the energy basis."""
    mask = np.abs(basis.energies - basis.energies[0]) < tol
    return np.diag(mask.astype(np.complex128))


@dataclass(frozen=True, eq=False)
class HubbardProblem:
    spec: HubbardSpec
    basis: SpectralBasis
    channels: list[CouplingChannel]
    generator: RedfieldGenerator
    psi0: np.ndarray  # energy basis
    p0: np.ndarray  # ground-manifold projector, energy basis

    @classmethod
    def build(
        cls,
        spec: HubbardSpec,
        mode: str = "real_part_only",
        include_lamb_shift: bool = True,
        occupied: tuple[int, ...] = DEFAULT_OCCUPATION,
    ) -> "HubbardProblem":
        if spec.bath is None:
            raise ValueError("the benchmark needs a bath")
        basis = eigendecompose(build_hamiltonian(spec))
        channels = benchmark_channels(spec, mode, basis)
        h = np.diag(basis.energies).astype(np.complex128)
        gen = RedfieldGenerator.build(h, channels, include_lamb_shift)
        psi0 = basis.vectors.conj().T @ occupation_state(spec, occupied)
        return cls(spec, basis, channels, gen, psi0, ground_projector(basis))

    @property
    def rho0(self) -> np.ndarray:
        return np.outer(self.psi0, self.psi0.conj())

    def params(self, optimize: bool) -> list[TransformParams]:
        if optimize:
            return [optimal_params(c.s_op, c.s_conv) for c in self.channels]
        return [TransformParams() for _ in self.channels]

    def pairs(self, optimize: bool) -> list[JumpPair]:
        return pseudo_lindblad_pairs(self.generator, self.params(optimize))

    def reference(self, t_grid, dt: float) -> np.ndarray:
        """Direct integration, returns ``rho(t)`` on ``t_grid``."""
        return integrate_master(self.generator, self.rho0, t_grid, dt)

    def population(self, rho_t: np.ndarray) -> np.ndarray:
        return np.real(np.einsum("ij,tji->t", self.p0, rho_t))


def group_estimates(result: EnsembleResult, name: str, group_size: int) -> np.ndarray:
    """Ratio estimates of ``name`` from disjoint groups of ``group_size`` trajectories.

    Returns an array of shape ``(n_groups, T)``.
    """
    n_groups = result.n_trajectories // group_size
    if n_groups < 1:
        raise ValueError(f"pool of {result.n_trajectories} cannot hold a group of {group_size}")
    c = result.log_norm2.max(axis=1, keepdims=True)
    w = result.signs * np.exp(result.log_norm2 - c)
    v = result.observables[name]
    used = n_groups * group_size
    w = w[:, :used].reshape(w.shape[0], n_groups, group_size)
    wv = (w * v[:, :used].reshape(w.shape)).sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        return (wv / w.sum(axis=2)).T


def time_averaged_relative_error(estimate: np.ndarray, exact: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Mean over ``t > 0`` of ``|estimate - exact| / |exact|``; works row-wise on 2-D input."""
    sel = np.asarray(times) > 0
    rel = np.abs(np.asarray(estimate)[..., sel] - exact[sel]) / np.abs(exact[sel])
    return rel.mean(axis=-1)


def convergence_ladder(result: EnsembleResult, name: str, exact: np.ndarray, sizes) -> list[tuple[int, float, float]]:
    """``(N, mean error, standard error of the mean)`` averaged over disjoint groups of each size."""
    rows = []
    for n in sizes:
        errs = time_averaged_relative_error(group_estimates(result, name, n), exact, result.times)
        se = float(errs.std(ddof=1) / np.sqrt(len(errs))) if len(errs) > 1 else float("nan")
        rows.append((int(n), float(errs.mean()), se))
    return rows


def effective_sample_size(result: EnsembleResult) -> np.ndarray:
    """Kish size ``(sum s w)^2 / sum w^2`` of the signed weights at each output time."""
    c = result.log_norm2.max(axis=1, keepdims=True)
    w = np.exp(result.log_norm2 - c)
    return (result.signs * w).sum(axis=1) ** 2 / (w**2).sum(axis=1)
