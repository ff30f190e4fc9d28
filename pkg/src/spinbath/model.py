"""Model parameters, unit conventions and the bath continuum mapping.

Everything is dimensionless: energies and temperatures are measured in units
of the bath cutoff (omega_c = 1) and hbar = k_B = 1. The system-bath
coupling is Ohmic, J(omega) = 2 * alpha * omega up to the sharp cutoff.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import IntegrationError, QuadratureSpec, integrate_adaptive

#: Bath cutoff frequency; the unit of energy throughout.
CUTOFF = 1.0


class BathKind(enum.Enum):
    """Which reservoir dresses the two-level system.

    SPIN:  infinitely many two-level modes, each with a single excited state.
    BOSON: harmonic oscillators with an unbounded excitation ladder.
    """

    SPIN = "spin"
    BOSON = "boson"


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless model parameters.

    delta is the bare tunneling (0 < delta), alpha the dimensionless
    coupling (alpha >= 0) and temperature the bath temperature (>= 0,
    with 0 the exact zero-temperature limit), all in units of the cutoff.
    """

    bath: BathKind
    delta: float
    alpha: float
    temperature: float = 0.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        if self.temperature < 0:
            raise ValueError(
                f"temperature must be non-negative, got {self.temperature}"
            )


@dataclass(frozen=True)
class TimeSeries:
    """A sampled observable: (t, value) pairs plus provenance metadata."""

    t: np.ndarray
    value: np.ndarray
    method: str
    params: dict = field(default_factory=dict)
    quadrature_tol: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))
        object.__setattr__(self, "value", np.asarray(self.value, dtype=float))
        if self.t.shape != self.value.shape:
            raise ValueError("t and value must have the same shape")


def spectral_density(omega, alpha):
    """Ohmic spectral density J(omega) = 2*alpha*omega below the cutoff.

    Vanishes for omega < 0 and for omega >= 1 (the step function at the
    cutoff is taken as 0 exactly at omega = 1, a measure-zero convention
    that keeps integrands finite). Accepts scalars or arrays.
    """
    w = np.asarray(omega, dtype=float)
    out = np.where((w >= 0.0) & (w < CUTOFF), 2.0 * alpha * w, 0.0)
    if np.isscalar(omega) or w.ndim == 0:
        return float(out)
    return out


def continuum_sum(f, alpha, spec=None):
    """Thermodynamic-limit evaluation of a bath-mode sum sum_l f(omega_l, g_l^2).

    Under the constant density of states the sum becomes
    rho0 * int_0^1 f(omega, 2*alpha*omega/rho0) d(omega); for integrands
    containing exactly one factor of g^2 per mode (the only case with a
    finite thermodynamic limit) this equals int_0^1 f(omega, 2*alpha*omega)
    d(omega), which is what is computed here. O(1/rho0) corrections, e.g.
    the difference between bare and renormalized mode frequencies inside
    smooth integrands, are dropped.
    """
    spec = spec or QuadratureSpec(abs_tol=1e-12, rel_tol=1e-10)
    try:
        value, _ = integrate_adaptive(
            lambda w: f(w, 2.0 * alpha * w), 0.0, CUTOFF, spec
        )
    except IntegrationError as exc:
        raise IntegrationError(
            "continuum sum failed: "
            + _diagnose_singularity(f, alpha)
            + f" ({exc})",
            value=exc.value, error_estimate=exc.error_estimate,
        ) from exc
    return value


def _diagnose_singularity(f, alpha):
    """Estimate the power-law behavior of the integrand near omega = 0."""
    try:
        probes = [1e-3, 1e-5, 1e-7]
        vals = [abs(f(w, 2.0 * alpha * w)) for w in probes]
        if min(vals) == 0.0:
            return "integrand vanishes near omega=0"
        p = (math.log(vals[2]) - math.log(vals[0])) / (
            math.log(probes[2]) - math.log(probes[0])
        )
        return f"integrand behaves like omega^{p:.2f} near omega=0"
    except Exception:
        return "integrand could not be probed near omega=0"
