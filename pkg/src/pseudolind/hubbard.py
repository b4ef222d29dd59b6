"""Extended Hubbard chain of spinless fermions in a fixed particle-number sector."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .bath import BathSpec
from .opcore import SpectralBasis, eigendecompose
from .redfield import CouplingChannel


@dataclass(frozen=True)
class HubbardSpec:
    sites: int = 4
    particles: int = 2
    tunneling: float = 1.0
    interaction: float = 1.0
    boundary: str = "periodic"
    gamma: float = 0.25
    bath: BathSpec | None = None

    def __post_init__(self):
        if self.sites < 1:
            raise ValueError("need at least one site")
        if not 0 <= self.particles <= self.sites:
            raise ValueError(f"particle number {self.particles} outside [0, {self.sites}]")
        if self.boundary not in ("periodic", "open"):
            raise ValueError(f"boundary must be 'periodic' or 'open', got {self.boundary!r}")
        if not self.tunneling > 0:
            raise ValueError("tunneling must be positive")
        if not self.gamma >= 0:
            raise ValueError("gamma must be non-negative")

    @property
    def dim(self) -> int:
        return math.comb(self.sites, self.particles)

    def bonds(self) -> list[tuple[int, int]]:
        m = self.sites
        out = [(l, l + 1) for l in range(m - 1)]
        if self.boundary == "periodic" and m > 2:
            out.append((m - 1, 0))
        return out


def sector_states(spec: HubbardSpec) -> list[tuple[int, ...]]:
    """Occupation tuples of the sector, in lexicographic order of occupied sites."""
    states = []
    for occ in combinations(range(spec.sites), spec.particles):
        states.append(tuple(1 if i in occ else 0 for i in range(spec.sites)))
    return states


def _hop(state, i, j):
    """Apply ``c_i^dag c_j`` with site-ascending Jordan-Wigner ordering."""
    if state[j] == 0 or (state[i] == 1 and i != j):
        return None, 0
    s = list(state)
    # c_j: sign from occupied sites before j
    sign = (-1) ** sum(s[:j])
    s[j] = 0
    sign *= (-1) ** sum(s[:i])
    s[i] = 1
    return tuple(s), sign


def build_hamiltonian(spec: HubbardSpec) -> np.ndarray:
    states = sector_states(spec)
    index = {st: k for k, st in enumerate(states)}
    dim = len(states)
    h = np.zeros((dim, dim), dtype=np.complex128)
    for k, st in enumerate(states):
        for a, b in spec.bonds():
            for i, j in ((a, b), (b, a)):
                new, sign = _hop(st, i, j)
                if new is not None:
                    h[index[new], k] += -spec.tunneling * sign
            h[k, k] += spec.interaction * st[a] * st[b]
    return h


def site_densities(spec: HubbardSpec) -> list[np.ndarray]:
    """Number operators ``n_l`` in the occupation basis of the sector."""
    states = sector_states(spec)
    return [np.diag([float(st[l]) for st in states]).astype(np.complex128) for l in range(spec.sites)]


def site_coupling_operators(spec: HubbardSpec, basis: SpectralBasis | None = None) -> list[np.ndarray]:
    """``sqrt(gamma) n_l`` for each site, rotated to the energy basis."""
    if basis is None:
        basis = eigendecompose(build_hamiltonian(spec))
    root = math.sqrt(spec.gamma)
    return [basis.to_energy(root * n) for n in site_densities(spec)]


def benchmark_channels(spec: HubbardSpec, mode: str = "real_part_only", basis: SpectralBasis | None = None) -> list[CouplingChannel]:
    if spec.bath is None:
        raise ValueError("HubbardSpec.bath is required to build coupling channels")
    if basis is None:
        basis = eigendecompose(build_hamiltonian(spec))
    ops = site_coupling_operators(spec, basis)
    return [CouplingChannel.from_basis(s, basis, spec.bath, mode, label=f"site{l}") for l, s in enumerate(ops)]


def occupation_state(spec: HubbardSpec, occupied: tuple[int, ...]) -> np.ndarray:
    """Fock state vector (occupation basis) with the given sites filled."""
    target = tuple(1 if i in occupied else 0 for i in range(spec.sites))
    states = sector_states(spec)
    if target not in states:
        raise ValueError(f"occupation {occupied} is not in the {spec.particles}-particle sector")
    vec = np.zeros(len(states), dtype=np.complex128)
    vec[states.index(target)] = 1.0
    return vec
