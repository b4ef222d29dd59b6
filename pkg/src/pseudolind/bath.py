"""Bath spectral densities and the complex coupling density ``G(delta)``.

``G(delta) = J(delta) n(delta) + i PV int J(w) n(w) / (w - delta) dw / pi``
with ``n`` the Bose function. The real part is the thermal product of the
spectral density and the occupation, the imaginary part a principal-value
integral evaluated by symmetric singularity subtraction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

PV_REL_TOL = 1e-6


class QuadratureError(RuntimeError):
    """An integral did not converge to the requested accuracy."""


@dataclass(frozen=True)
class OhmicDrude:
    """Ohmic spectral density with a Drude cutoff, ``J(w) = w / (1 + w^2/wD^2)``."""

    cutoff: float
    kind = "ohmic_drude"

    def __post_init__(self):
        if not self.cutoff > 0:
            raise ValueError(f"cutoff must be positive, got {self.cutoff}")

    def j_over_omega(self, omega):
        """``J(w)/w``; even in ``w`` and finite at zero."""
        omega = np.asarray(omega, dtype=float)
        return 1.0 / (1.0 + (omega / self.cutoff) ** 2)

    def spectral_density(self, omega):
        omega = np.asarray(omega, dtype=float)
        return omega * self.j_over_omega(omega)

    def reorganization_scale(self) -> float:
        return self.cutoff


SpectralDensityModel = OhmicDrude
"""Antisymmetric spectral densities expose ``j_over_omega`` (even, regular at 0)
and ``spectral_density``; ``OhmicDrude`` is the only model shipped."""


@dataclass(frozen=True)
class BathSpec:
    model: SpectralDensityModel
    beta: float
    gamma: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be finite and positive, got {self.beta}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")

    @property
    def temperature(self) -> float:
        return 1.0 / self.beta


def bose_occupation(delta, beta: float):
    """Bose function ``1/(exp(beta*delta) - 1)``; the pole at ``delta = 0`` is an error."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    delta = np.asarray(delta, dtype=float)
    if np.any(delta == 0):
        raise ZeroDivisionError("Bose function has a pole at delta = 0; use thermal_product")
    with np.errstate(over="ignore"):
        out = 1.0 / np.expm1(beta * delta)
    return out if out.ndim else float(out)


def _x_over_expm1(x):
    x = np.asarray(x, dtype=float)
    safe = np.where(x == 0, 1.0, x)
    with np.errstate(over="ignore"):
        val = safe / np.expm1(safe)
    return np.where(x == 0, 1.0, val)


def thermal_product(omega, model: SpectralDensityModel, beta: float):
    """``J(w) n(w)``, continued through ``w = 0`` where it equals ``J'(0)/beta``."""
    omega = np.asarray(omega, dtype=float)
    out = model.j_over_omega(omega) * _x_over_expm1(beta * omega) / beta
    return out if out.ndim else float(out)


def _quad(f, a, b, **kw):
    # quad warns when it cannot reach the (deliberately tight) tolerance;
    # the returned error estimate is policed by _check instead
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-11, limit=400, **kw)
    return val, err


def _check(val, err, what):
    if err > PV_REL_TOL * max(abs(val), 1e-9):
        raise QuadratureError(f"{what}: estimated error {err:.2e} for value {val:.6e}")


def _breakpoints(center: float, scales: list[float]) -> list[float]:
    return sorted({center + s * m for s in scales for m in (-8, -2, -0.5, 0.5, 2, 8)})


def _pv_full_line(f, delta: float, scales: list[float]) -> tuple[float, float]:
    """``PV int_{-inf}^{inf} f(w)/(w - delta) dw`` for smooth ``f``.

    Inside ``[delta - a, delta + a]`` the integrand is folded onto
    ``[f(delta+u) - f(delta-u)]/u``, which subtracts the pole exactly since
    ``PV int du/u`` over a symmetric window vanishes. The remaining tails are
    integrated directly, split at the model's natural scales.
    """
    a = max(scales)
    total, err_total = 0.0, 0.0

    def folded(u):
        return (f(delta + u) - f(delta - u)) / u

    pts = [p for p in sorted({s * m for s in scales for m in (0.25, 1.0)}) if 0 < p < a]
    v, e = _quad(folded, 0.0, a, points=pts or None)
    total, err_total = total + v, err_total + e

    lo, hi = delta - a, delta + a
    reach = 40 * a
    for left, right in ((hi, hi + reach), (lo - reach, lo)):
        inner = [p for p in _breakpoints(0.0, scales) if left < p < right]
        v, e = _quad(lambda w: f(w) / (w - delta), left, right, points=inner or None)
        total, err_total = total + v, err_total + e
    v, e = _quad(lambda w: f(w) / (w - delta), hi + reach, np.inf)
    total, err_total = total + v, err_total + e
    v, e = _quad(lambda w: f(w) / (w - delta), -np.inf, lo - reach)
    total, err_total = total + v, err_total + e
    return total, err_total


def _pv_half_line(h, c: float, scales: list[float]) -> tuple[float, float]:
    """``PV int_0^inf h(w)/(w - c) dw`` for smooth ``h`` and ``c != 0``."""
    if c < 0:
        v1, e1 = _quad(lambda w: h(w) / (w - c), 0.0, max(scales))
        v2, e2 = _quad(lambda w: h(w) / (w - c), max(scales), np.inf)
        return v1 + v2, e1 + e2
    v1, e1 = _quad(lambda u: (h(c + u) - h(c - u)) / u, 0.0, c)
    v2, e2 = _quad(lambda w: h(w) / (w - c), 2 * c, 2 * c + 40 * max(scales))
    v3, e3 = _quad(lambda w: h(w) / (w - c), 2 * c + 40 * max(scales), np.inf)
    return v1 + v2 + v3, e1 + e2 + e3


def _scales(delta: float, bath: BathSpec) -> list[float]:
    return [bath.model.reorganization_scale(), 1.0 / bath.beta, max(abs(delta), 1e-3)]


@lru_cache(maxsize=65536)
def _coupling_density_cached(delta: float, bath: BathSpec) -> complex:
    model, beta = bath.model, bath.beta
    real = thermal_product(delta, model, beta)

    def f(w):
        return thermal_product(w, model, beta)

    val, err = _pv_full_line(f, delta, _scales(delta, bath))
    imag = val / math.pi
    _check(imag, err / math.pi, f"PV integral at delta={delta}")
    return complex(real, imag)


def coupling_density(delta: float, bath: BathSpec) -> complex:
    """Complex coupling density ``G(delta)`` (memoized per ``(delta, bath)``)."""
    return _coupling_density_cached(float(delta), bath)


def coupling_density_real(delta, bath: BathSpec):
    """Only ``G'(delta) = J(delta) n(delta)``; cheap and vectorized."""
    return thermal_product(delta, bath.model, bath.beta)


def coupling_density_table(splittings, bath: BathSpec, mode: str = "full") -> np.ndarray:
    """Evaluate ``G`` entrywise on a splitting table.

    ``mode="real_part_only"`` drops the principal-value part.
    """
    splittings = np.asarray(splittings, dtype=float)
    if mode == "real_part_only":
        return coupling_density_real(splittings, bath).astype(np.complex128)
    if mode != "full":
        raise ValueError(f"unknown coupling mode {mode!r}")
    out = np.empty(splittings.shape, dtype=np.complex128)
    for idx, d in np.ndenumerate(splittings):
        out[idx] = coupling_density(d, bath)
    return out


def gpp_decomposition(delta: float, bath: BathSpec) -> tuple[float, float, float]:
    """Split ``G''(delta)`` into reorganization, zero-point and thermal parts.

    Returns ``(g_rn, g_zero, g_thermal)``; their sum is ``coupling_density(delta).imag``.
    """
    model, beta = bath.model, bath.beta
    delta = float(delta)
    scales = _scales(delta, bath)

    v1, e1 = _quad(model.j_over_omega, 0.0, model.reorganization_scale())
    v2, e2 = _quad(model.j_over_omega, model.reorganization_scale(), np.inf)
    g_rn = -(v1 + v2) / math.pi
    _check(g_rn, (e1 + e2) / math.pi, "reorganization integral")

    if delta == 0.0:
        return g_rn, 0.0, 0.0

    v, e = _pv_half_line(model.j_over_omega, -delta, scales)
    g_zero = delta * v / math.pi
    _check(g_zero, abs(delta) * e / math.pi, f"zero-point integral at delta={delta}")

    def f(w):
        return thermal_product(w, model, beta)

    vp, ep = _pv_half_line(f, delta, scales)
    vm, em = _pv_half_line(f, -delta, scales)
    g_thermal = (vp - vm) / math.pi
    _check(g_thermal, (ep + em) / math.pi + 1e-15, f"thermal integral at delta={delta}")
    return g_rn, g_zero, g_thermal
