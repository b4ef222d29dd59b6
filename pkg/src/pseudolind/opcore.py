"""Dense operator primitives shared by the rest of the package.

Operators are plain ``numpy.ndarray`` objects of shape ``(D, D)`` and dtype
``complex128``. Nothing here keeps state; every function is pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

HERMITIAN_TOL = 1e-10

ComplexArray = NDArray[np.complex128]


class DimensionError(ValueError):
    """Operators of incompatible shape were combined."""


class NotHermitianError(ValueError):
    """An operator expected to be Hermitian is not."""

    def __init__(self, asymmetry: float):
        super().__init__(f"operator is not Hermitian: max |A - A^H| = {asymmetry:.3e}")
        self.asymmetry = asymmetry


def as_operator(a: ArrayLike) -> ComplexArray:
    """Return ``a`` as a square complex matrix, raising on bad shapes."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def check_same_dim(*ops: NDArray) -> int:
    dims = {op.shape for op in ops}
    if len(dims) != 1:
        raise DimensionError(f"dimension mismatch: {sorted(dims)}")
    return ops[0].shape[0]


def dagger(a: NDArray) -> NDArray:
    return a.conj().T


def hermitian_residual(a: NDArray) -> float:
    """Largest entry of ``|A - A^H|``."""
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def hermitize(a: NDArray) -> NDArray:
    return 0.5 * (a + a.conj().T)


def commutator(a: NDArray, b: NDArray) -> NDArray:
    return a @ b - b @ a


def anticommutator(a: NDArray, b: NDArray) -> NDArray:
    return a @ b + b @ a


def frobenius_norm_sq(a: ArrayLike) -> float:
    """Squared Frobenius norm ``tr(A A^H) = sum |A_ij|^2``."""
    arr = np.asarray(a)
    return float(np.sum(arr.real**2 + arr.imag**2))


def gksl_dissipator(a: ArrayLike, rho: ArrayLike) -> ComplexArray:
    """Apply ``D(A)[rho] = A rho A^H - 1/2 {A^H A, rho}``."""
    a = as_operator(a)
    rho = as_operator(rho)
    check_same_dim(a, rho)
    ad = a.conj().T
    ada = ad @ a
    return a @ rho @ ad - 0.5 * (ada @ rho + rho @ ada)


def truncated_boson_ops(dim: int) -> tuple[ComplexArray, ComplexArray]:
    """Annihilation and creation operators on the first ``dim`` Fock states.

    ``a[n, n+1] = sqrt(n+1)``. Because of the truncation ``[a, a^H]`` has
    ``1 - dim`` as its last diagonal entry, so the commutator is traceless.
    """
    if int(dim) != dim or dim < 2:
        raise ValueError(f"truncation dimension must be an integer >= 2, got {dim}")
    dim = int(dim)
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(np.complex128)
    return a, a.conj().T


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Eigen-decomposition of a Hermitian Hamiltonian.

    Attributes
    ----------
    energies : (D,) float array, ascending.
    vectors : (D, D) unitary matrix whose columns are the eigenvectors.
    splittings : (D, D) table ``E_q - E_k``.
    """

    energies: NDArray[np.float64]
    vectors: ComplexArray
    splittings: NDArray[np.float64]

    @property
    def dim(self) -> int:
        return self.energies.shape[0]

    def to_energy(self, op: ArrayLike) -> ComplexArray:
        """Rotate an operator from the original basis into the eigenbasis."""
        op = as_operator(op)
        check_same_dim(op, self.vectors)
        return self.vectors.conj().T @ op @ self.vectors

    def from_energy(self, op: ArrayLike) -> ComplexArray:
        op = as_operator(op)
        check_same_dim(op, self.vectors)
        return self.vectors @ op @ self.vectors.conj().T


def _canonical_phase(vectors: NDArray) -> NDArray:
    # make the largest-magnitude entry of each column real and positive
    # (first such entry wins on ties, to within rounding)
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        mags = np.abs(col)
        idx = int(np.argmax(mags > mags.max() * (1 - 1e-9)))
        out[:, j] = col * (abs(col[idx]) / col[idx])
    return out


def eigendecompose(h: ArrayLike, degeneracy_tol: float = 1e-9) -> SpectralBasis:
    """Diagonalize a Hermitian operator.

    Eigenvalues come out ascending. Within a (numerically) degenerate cluster
    the eigenvectors are phase-fixed and then ordered lexicographically by
    their entries, so repeated calls give identical splitting tables.
    """
    h = as_operator(h)
    asym = hermitian_residual(h)
    scale = max(1.0, float(np.max(np.abs(h))))
    if asym > HERMITIAN_TOL * scale:
        raise NotHermitianError(asym)
    energies, vectors = np.linalg.eigh(hermitize(h))
    vectors = _canonical_phase(vectors)

    order = list(range(len(energies)))
    start = 0
    while start < len(order):
        stop = start + 1
        while stop < len(order) and energies[stop] - energies[start] <= degeneracy_tol * scale:
            stop += 1
        if stop - start > 1:
            block = order[start:stop]

            def key(j):
                v = np.round(vectors[:, j], 9)
                return tuple(x for z in v for x in (-z.real, -z.imag))

            order[start:stop] = sorted(block, key=key)
        start = stop
    # energies inside a cluster agree to rounding, so they keep their sorted order
    vectors = vectors[:, order]
    splittings = energies[:, None] - energies[None, :]
    return SpectralBasis(energies=energies, vectors=vectors, splittings=splittings)
