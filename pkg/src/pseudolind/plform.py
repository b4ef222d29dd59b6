"""Pseudo-Lindblad pairs, their symmetry transformations and optimal weights.

A pair ``(A+, A-)`` represents the dissipator ``D(A+) - D(A-)``. For a
Redfield channel ``(S, SS)`` every equivalent pair is reached by the
two-parameter family

    A_sigma = [sigma*lam*exp(-i sigma phi/2) S + exp(i sigma phi/2) SS / lam] / sqrt(2 cos phi)

and the weights (squared Frobenius norms) of that family have a closed-form
minimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bath import BathSpec, coupling_density_table
from .opcore import SpectralBasis, as_operator, check_same_dim, frobenius_norm_sq, gksl_dissipator

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
U_DIAG = np.array([[1, -1], [1, 1]], dtype=np.complex128) / math.sqrt(2)


class OptimizationError(ValueError):
    """No finite optimum exists for the given channel."""


@dataclass(frozen=True)
class TransformParams:
    """Rescaling ``lam > 0`` and phase ``|phi| < pi/2``."""

    lam: float = 1.0
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not abs(self.phi) < math.pi / 2:
            raise ValueError(f"|phi| must be below pi/2, got {self.phi}")

    @classmethod
    def from_w(cls, w: float, phi: float = 0.0) -> "TransformParams":
        """Hyperbolic chart: ``lam = cosh(w) - sinh(w) = exp(-w)``."""
        return cls(math.exp(-w), phi)

    @property
    def w(self) -> float:
        return -math.log(self.lam)


@dataclass(frozen=True, eq=False)
class JumpPair:
    a_plus: np.ndarray
    a_minus: np.ndarray

    def __post_init__(self):
        check_same_dim(as_operator(self.a_plus), as_operator(self.a_minus))

    def dissipator(self, rho) -> np.ndarray:
        return gksl_dissipator(self.a_plus, rho) - gksl_dissipator(self.a_minus, rho)

    def weights(self) -> tuple[float, float]:
        return frobenius_norm_sq(self.a_plus), frobenius_norm_sq(self.a_minus)


def symmetry_matrix_w(w: float, phi: float = 0.0, alpha: float = 0.0, beta: float = 0.0) -> np.ndarray:
    """General pseudo-unitary 2x2 matrix, ``W sigma_z W^H = sigma_z``."""
    ch, sh = math.cosh(w), math.sinh(w)
    return np.exp(1j * alpha) * np.array(
        [
            [np.exp(0.5j * (phi + beta)) * ch, np.exp(0.5j * (phi - beta)) * sh],
            [np.exp(-0.5j * (phi - beta)) * sh, np.exp(-0.5j * (phi + beta)) * ch],
        ]
    )


def apply_pair_matrix(ops: tuple[np.ndarray, np.ndarray], mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row vector of operators times a 2x2 matrix: ``(X1, X2) @ mat``."""
    x1, x2 = ops
    return mat[0, 0] * x1 + mat[1, 0] * x2, mat[0, 1] * x1 + mat[1, 1] * x2


def transform_pair(pair: JumpPair, w: float, phi: float) -> JumpPair:
    """``(A+, A-) -> (A+, A-) W(w, phi)``; leaves the dissipator unchanged."""
    ap, am = apply_pair_matrix((pair.a_plus, pair.a_minus), symmetry_matrix_w(w, phi))
    return JumpPair(ap, am)


def diagonalize_channel(s_op, s_conv) -> JumpPair:
    """Rotate the sigma_x Kossakowski matrix to sigma_z: ``A+- = (SS +- S)/sqrt(2)``."""
    s, ss = as_operator(s_op), as_operator(s_conv)
    check_same_dim(s, ss)
    return JumpPair(*apply_pair_matrix((s, ss), U_DIAG))


def lambda_phi_jumps(s_op, s_conv, params: TransformParams) -> JumpPair:
    s, ss = as_operator(s_op), as_operator(s_conv)
    check_same_dim(s, ss)
    lam, phi = params.lam, params.phi
    norm = 1.0 / math.sqrt(2.0 * math.cos(phi))
    pair = []
    for sigma in (1, -1):
        a = norm * (sigma * lam * np.exp(-0.5j * sigma * phi) * s + np.exp(0.5j * sigma * phi) / lam * ss)
        pair.append(a)
    return JumpPair(*pair)


def _traces(s, ss):
    s, ss = as_operator(s), as_operator(ss)
    check_same_dim(s, ss)
    return complex(np.sum(ss * s.T)), frobenius_norm_sq(s), frobenius_norm_sq(ss)


def weights(s_op, s_conv, params: TransformParams) -> tuple[float, float]:
    """Closed-form ``(||A+||^2, ||A-||^2)`` of :func:`lambda_phi_jumps`."""
    tr, ns, nss = _traces(s_op, s_conv)
    lam, phi = params.lam, params.phi
    common = -math.tan(phi) * tr.imag + (lam**2 * ns + nss / lam**2) / (2.0 * math.cos(phi))
    return tr.real + common, -tr.real + common


def _optimum_inputs(s_op, s_conv):
    tr, ns, nss = _traces(s_op, s_conv)
    if ns == 0 or nss == 0:
        raise OptimizationError("optimal parameters need non-zero S and SS")
    root = math.sqrt(ns * nss)
    if abs(tr.imag) > root * (1 + 1e-12):
        raise OptimizationError(
            f"|Im tr(SS S)| = {abs(tr.imag):.6e} exceeds ||S|| ||SS|| = {root:.6e}; inputs are corrupt"
        )
    return tr, ns, nss, root


def optimal_params(s_op, s_conv) -> TransformParams:
    """``lam^2 = ||SS||/||S||`` and ``sin phi = Im tr(SS S) / (||SS|| ||S||)``."""
    tr, ns, nss, root = _optimum_inputs(s_op, s_conv)
    sin_phi = tr.imag / root
    if abs(sin_phi) >= 1 - 1e-12:
        raise OptimizationError("sin(phi_min) = +-1: G is purely imaginary on the support of S")
    return TransformParams(math.sqrt(math.sqrt(nss / ns)), math.asin(sin_phi))


def minimal_weights(s_op, s_conv) -> tuple[float, float]:
    tr, ns, nss, _ = _optimum_inputs(s_op, s_conv)
    root = math.sqrt(max(ns * nss - tr.imag**2, 0.0))
    return tr.real + root, max(-tr.real + root, 0.0)


def weighted_average(s_op, basis: SpectralBasis, f) -> complex | float:
    """``<f>_S = sum |S_qk|^2 f(delta_qk) / ||S||^2``; ``f`` maps the splitting table elementwise."""
    s = as_operator(s_op)
    check_same_dim(s, basis.vectors)
    w = np.abs(s) ** 2
    total = w.sum()
    if total == 0:
        raise ValueError("weighted average needs a non-zero operator")
    vals = np.asarray(f(basis.splittings))
    out = np.sum(w * vals) / total
    return complex(out) if np.iscomplexobj(out) else float(out)


def weighted_variance(s_op, basis: SpectralBasis, f) -> float:
    """``V[f]_S = <f^2>_S - <f>_S^2`` for real ``f``."""
    m = weighted_average(s_op, basis, f)
    m2 = weighted_average(s_op, basis, lambda d: np.asarray(f(d)) ** 2)
    return float(np.real(m2 - m * m))


def minimal_weights_from_averages(s_op, basis: SpectralBasis, g_table: np.ndarray) -> tuple[float, float]:
    """Minimal weights via S-weighted mean and variances of ``G'`` and ``G''``."""
    s = as_operator(s_op)
    ns = frobenius_norm_sq(s)
    w = np.abs(s) ** 2 / ns
    gr, gi = g_table.real, g_table.imag
    mean_r = np.sum(w * gr)
    var_r = np.sum(w * gr**2) - mean_r**2
    var_i = np.sum(w * gi**2) - np.sum(w * gi) ** 2
    root = math.sqrt(1.0 + (var_r + var_i) / mean_r**2)
    return ns * mean_r * (1 + root), ns * mean_r * (-1 + root)


@dataclass(frozen=True)
class KossakowskiEigensystem:
    g_plus: float
    g_minus: float
    lam0: float
    phi0: float
    bare_averages: dict

    @property
    def params(self) -> TransformParams:
        return TransformParams(self.lam0, self.phi0)


def bare_averages(g_table: np.ndarray) -> dict:
    gr, gi = g_table.real, g_table.imag
    return {
        "mean_re": float(gr.mean()),
        "mean_im": float(gi.mean()),
        "mean_abs2": float((np.abs(g_table) ** 2).mean()),
        "var_re": float((gr**2).mean() - gr.mean() ** 2),
        "var_im": float((gi**2).mean() - gi.mean() ** 2),
    }


def kossakowski_eigensystem_from_table(g_table: np.ndarray) -> KossakowskiEigensystem:
    """Closed-form non-zero eigenvalues of ``M_(qk),(q'k') = G_qk + conj(G_q'k')``."""
    g_table = np.asarray(g_table, dtype=np.complex128)
    n = g_table.size
    av = bare_averages(g_table)
    if not av["mean_re"] > 0:
        raise ValueError(f"mean of G' must be positive, got {av['mean_re']}")
    root = math.sqrt(1.0 + (av["var_re"] + av["var_im"]) / av["mean_re"] ** 2)
    g_plus = n * av["mean_re"] * (1 + root)
    g_minus = n * av["mean_re"] * (1 - root)
    lam0 = av["mean_abs2"] ** 0.25
    phi0 = math.asin(av["mean_im"] / math.sqrt(av["mean_abs2"]))
    return KossakowskiEigensystem(g_plus, g_minus, lam0, phi0, av)


def kossakowski_eigensystem(basis: SpectralBasis, bath: BathSpec, mode: str = "full") -> KossakowskiEigensystem:
    return kossakowski_eigensystem_from_table(coupling_density_table(basis.splittings, bath, mode))


def kossakowski_matrix(g_table: np.ndarray) -> np.ndarray:
    """Explicit ``D^2 x D^2`` Kossakowski matrix (row-major ``(q, k)`` index)."""
    g = np.asarray(g_table, dtype=np.complex128).ravel()
    return g[:, None] + g.conj()[None, :]


def lambda_matrix(lam: float, phi: float, alpha: float = 0.0, beta: float = 0.0) -> np.ndarray:
    """2x2 transformation leaving ``sigma_x`` invariant, ``L sigma_x L^H = sigma_x``."""
    pref = np.exp(1j * alpha) / math.sqrt(math.cos(phi))
    return pref * np.array(
        [
            [lam * math.cos(0.5 * (phi + beta)), 1j * lam * math.sin(0.5 * (phi + beta))],
            [-1j / lam * math.sin(0.5 * (phi - beta)), math.cos(0.5 * (phi - beta)) / lam],
        ]
    )


@dataclass(frozen=True)
class SymmetryCheck:
    invariance_residual: float
    jump_residual: float | None


def lambda_symmetry_check(lam: float, phi: float, alpha: float = 0.0, beta: float = 0.0, s_op=None, s_conv=None):
    """Check ``L sigma_x L^H = sigma_x`` and, for given ``(S, SS)``, compare ``(S, SS) L U``
    with :func:`lambda_phi_jumps`.

    ``L`` carries the opposite phase convention to :func:`lambda_phi_jumps`, so
    the comparison is made at ``-phi``; global phases make the jump comparison
    meaningful only for ``alpha = beta = 0``.
    """
    if not lam > 0 or not abs(phi) < math.pi / 2:
        raise ValueError("need lam > 0 and |phi| < pi/2")
    lm = lambda_matrix(lam, phi, alpha, beta)
    inv = float(np.max(np.abs(lm @ SIGMA_X @ lm.conj().T - SIGMA_X)))
    jump = None
    if s_op is not None and s_conv is not None:
        ap, am = apply_pair_matrix((as_operator(s_op), as_operator(s_conv)), lm @ U_DIAG)
        ref = lambda_phi_jumps(s_op, s_conv, TransformParams(lam, -phi))
        scale = max(1.0, float(np.max(np.abs(ref.a_plus))), float(np.max(np.abs(ref.a_minus))))
        jump = float(max(np.max(np.abs(ap - ref.a_plus)), np.max(np.abs(am - ref.a_minus)))) / scale
    return SymmetryCheck(inv, jump)
