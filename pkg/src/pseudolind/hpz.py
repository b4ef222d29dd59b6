"""Hu-Paz-Zhang equation of the damped oscillator in Redfield and pseudo-Lindblad form.

With coupling operator ``q`` the equation has Redfield structure with the
convolved partner ``SS = M^2 D_p q + (i gamma_p/2 - M D_q) p``, so the
whole pseudo-Lindblad machinery of :mod:`pseudolind.plform` applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .opcore import anticommutator, as_operator, commutator, frobenius_norm_sq, hermitize, truncated_boson_ops
from .plform import JumpPair, OptimizationError, TransformParams

Coefficient = Callable[[float], float]


def _const(value: float) -> Coefficient:
    return lambda t: value


@dataclass(frozen=True)
class HPZCoefficients:
    """Time-dependent coefficients; each field maps ``t`` to a float."""

    gamma_q: Coefficient
    gamma_p: Coefficient
    d_q: Coefficient
    d_p: Coefficient
    mass: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        if not (self.mass > 0 and self.omega > 0):
            raise ValueError("mass and omega must be positive")

    @classmethod
    def constant(cls, gamma_q, gamma_p, d_q, d_p, mass=1.0, omega=1.0):
        return cls(_const(gamma_q), _const(gamma_p), _const(d_q), _const(d_p), mass, omega)

    @classmethod
    def brownian(cls, gamma: float, beta: float, mass: float = 1.0, omega: float = 1.0):
        """High-temperature asymptotic limit: ``gamma_q = omega^2``, ``gamma_p = gamma``,
        ``D_q = 0``, ``D_p = gamma/(M beta)``."""
        if not beta > 0:
            raise ValueError("beta must be positive")
        return cls.constant(omega**2, gamma, 0.0, gamma / (mass * beta), mass, omega)

    def at(self, t: float) -> tuple[float, float, float, float]:
        return float(self.gamma_q(t)), float(self.gamma_p(t)), float(self.d_q(t)), float(self.d_p(t))


def hpz_operators(dim: int, mass: float = 1.0, omega: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Truncated position and momentum, ``q = (a^H + a)/sqrt(2 M W)``, ``p = i sqrt(M W/2)(a^H - a)``."""
    a, ad = truncated_boson_ops(dim)
    q = (ad + a) / math.sqrt(2 * mass * omega)
    p = 1j * math.sqrt(mass * omega / 2) * (ad - a)
    return q, p


def hpz_convolved(coeffs: HPZCoefficients, t: float, q, p) -> np.ndarray:
    _, gp, dq, dp = coeffs.at(t)
    m = coeffs.mass
    return m**2 * dp * as_operator(q) + (0.5j * gp - m * dq) * as_operator(p)


def oscillator_hamiltonian(coeffs: HPZCoefficients, t: float, q, p) -> np.ndarray:
    """``p^2/2M + M gamma_q q^2 / 2`` in the truncated space."""
    gq = coeffs.at(t)[0]
    q, p = as_operator(q), as_operator(p)
    return p @ p / (2 * coeffs.mass) + 0.5 * coeffs.mass * gq * (q @ q)


def hpz_generator(coeffs: HPZCoefficients, t: float, rho, q, p, form: str = "commutator") -> np.ndarray:
    """Right-hand side of the HPZ equation.

    ``form="commutator"`` uses the nested commutator expression;
    ``form="redfield"`` uses ``SS rho q - q SS rho + h.c.``.
    """
    q, p, rho = as_operator(q), as_operator(p), as_operator(rho)
    _, gp, dq, dp = coeffs.at(t)
    m = coeffs.mass
    out = -1j * commutator(oscillator_hamiltonian(coeffs, t, q, p), rho)
    if form == "commutator":
        out = out - m**2 * dp * commutator(q, commutator(q, rho))
        out = out - 0.5j * gp * commutator(q, anticommutator(p, rho))
        out = out + m * dq * commutator(q, commutator(p, rho))
    elif form == "redfield":
        ss = hpz_convolved(coeffs, t, q, p)
        x = ss @ rho @ q - q @ ss @ rho
        out = out + x + x.conj().T
    else:
        raise ValueError(f"unknown form {form!r}")
    return out


@dataclass(frozen=True, eq=False)
class HPZLambShift:
    """``(gamma_p/4){q, p} - (M D_q / 2i)[q, p]``.

    ``commutator_part`` is the truncated ``[q, p]`` term, which would be the
    constant ``-M D_q / 2`` without truncation; that constant is ``offset``.
    """

    anticommutator_part: np.ndarray
    commutator_part: np.ndarray
    offset: float

    @property
    def operator(self) -> np.ndarray:
        return self.anticommutator_part + self.commutator_part


def hpz_lamb_shift(coeffs: HPZCoefficients, t: float, q, p) -> HPZLambShift:
    q, p = as_operator(q), as_operator(p)
    _, gp, dq, _ = coeffs.at(t)
    m = coeffs.mass
    anti = hermitize(0.25 * gp * anticommutator(q, p))
    comm = hermitize(-(m * dq / 2j) * commutator(q, p))
    return HPZLambShift(anti, comm, -0.5 * m * dq)


def hpz_optimal_params(coeffs: HPZCoefficients, t: float) -> TransformParams:
    """Closed-form optimum; the phase is identically zero because ``tr(q p) = 0``."""
    lam2, _ = _optimal_lambda_excess(coeffs, t)
    return TransformParams(math.sqrt(lam2), 0.0)


def _optimal_lambda_excess(coeffs: HPZCoefficients, t: float) -> tuple[float, float]:
    """``(lambda^2, lambda^2 - M^2 D_p)`` at the optimum, the second without cancellation."""
    _, gp, dq, dp = coeffs.at(t)
    m, w = coeffs.mass, coeffs.omega
    if not dp > 0:
        raise OptimizationError(f"D_p must be positive for an optimum, got {dp}")
    x = w**2 * gp**2 / (4 * m**2 * dp**2) + w**2 * dq**2 / dp**2
    base = m**2 * dp
    excess = base * x / (math.sqrt(1 + x) + 1)
    return base + excess, excess


def hpz_jump_pair(coeffs: HPZCoefficients, t: float, q, p, params: TransformParams | None = None) -> JumpPair:
    """Jump pair ``(q-coefficient) q + (i gamma_p/2 - M D_q) p`` over ``lambda sqrt(2 cos phi)``.

    ``params=None`` picks the optimum and evaluates the small ``A-`` coefficient
    ``M^2 D_p - lambda^2`` in cancellation-free form.
    """
    q, p = as_operator(q), as_operator(p)
    _, gp, dq, dp = coeffs.at(t)
    m = coeffs.mass
    if params is None:
        lam2, excess = _optimal_lambda_excess(coeffs, t)
        lam, phi = math.sqrt(lam2), 0.0
        cq = {1: lam2 + m**2 * dp, -1: -excess}
    else:
        lam, phi = params.lam, params.phi
        cq = {s: s * lam**2 * np.exp(-1j * s * phi) + m**2 * dp for s in (1, -1)}
    cp = 0.5j * gp - m * dq
    norm = lam * math.sqrt(2 * math.cos(phi))
    return JumpPair((cq[1] * q + cp * p) / norm, (cq[-1] * q + cp * p) / norm)


def hpz_pseudo_lindblad_rhs(coeffs: HPZCoefficients, t: float, rho, q, p, params: TransformParams | None = None) -> np.ndarray:
    """``-i[H + H_LS, rho] + D(A+) - D(A-)``; equals :func:`hpz_generator`."""
    rho = as_operator(rho)
    pair = hpz_jump_pair(coeffs, t, q, p, params)
    h = oscillator_hamiltonian(coeffs, t, q, p) + hpz_lamb_shift(coeffs, t, q, p).operator
    return -1j * commutator(h, rho) + pair.dissipator(rho)


def hpz_weights(coeffs: HPZCoefficients, t: float, norm_q2: float, params: TransformParams | None = None) -> tuple[float, float]:
    """Closed-form weights given ``||q||^2``, using ``||p||^2 = M^2 W^2 ||q||^2`` and ``tr(qp) = 0``."""
    if params is None:
        params = hpz_optimal_params(coeffs, t)
    _, gp, dq, dp = coeffs.at(t)
    m, w = coeffs.mass, coeffs.omega
    lam2, phi = params.lam**2, params.phi
    c = math.cos(phi)
    norm_p2 = m**2 * w**2 * norm_q2
    out = []
    for sigma in (1, -1):
        a = (lam2**2 + sigma * lam2 * m**2 * dp * 2 * c + m**4 * dp**2) * norm_q2
        b = (gp**2 / 4 + m**2 * dq**2) * norm_p2
        out.append((a + b) / (lam2 * 2 * c))
    return out[0], out[1]


def brownian_limit_pair(gamma: float, beta: float, q, p, mass: float = 1.0) -> JumpPair:
    """Leading-order optimal pair in the Brownian limit."""
    q, p = as_operator(q), as_operator(p)
    pre = math.sqrt(gamma / 2)
    a_plus = pre * (math.sqrt(4 * mass / beta) * q + 1j * math.sqrt(beta / (4 * mass)) * p)
    a_minus = 1j * pre * math.sqrt(beta / (4 * mass)) * p
    return JumpPair(a_plus, a_minus)


def normalized_weights_convergence(coeffs: HPZCoefficients, t: float, dim: int) -> float:
    """Relative change of ``||A_sigma||^2 / ||q||^2`` when the truncation is doubled."""
    vals = []
    for d in (dim, 2 * dim):
        q, p = hpz_operators(d, coeffs.mass, coeffs.omega)
        pair = hpz_jump_pair(coeffs, t, q, p)
        nq = frobenius_norm_sq(q)
        vals.append(np.array(pair.weights()) / nq)
    return float(np.max(np.abs(vals[1] - vals[0]) / np.maximum(np.abs(vals[0]), 1e-300)))
