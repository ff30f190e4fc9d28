"""Self-consistent tunneling renormalization and the ground-state energy bound.

The coupling to the bath dresses the bare tunneling delta down to
eta * delta, with eta in (0, 1] fixed by a self-consistency condition.
For the spin bath

    eta = exp(-alpha * ln((1 + eta*delta)/(eta*delta)) + alpha/(1 + eta*delta))

which is temperature independent; the boson bath acquires a coth(omega/2T)
thermal weight in the exponent and its eta_B decreases with temperature.
In the scaling limit delta << 1 the spin-bath solution reduces to
eta = (e*delta)^(alpha/(1-alpha)), with localization (eta = 0) for alpha >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import BathKind, CUTOFF, ModelParams
from .numerics import QuadratureSpec, fixed_point, integrate_adaptive

#: Iterates below this are treated as collapse to the localized fixed point.
ETA_FLOOR = 1e-250
#: Exponent cap for the boson solver: exp(-50) is reported as eta_B = 0.
BOSON_EXPONENT_CAP = 50.0


@dataclass(frozen=True)
class RenormalizedSystem:
    """A solved renormalization fixed point.

    eta = 0 together with localized=True tags the regime where only the
    trivial fixed point exists (strong coupling, or thermal collapse for
    the boson bath); it is a legitimate state, not an error.
    """

    params: ModelParams
    eta: float
    residual: float
    localized: bool = False

    @property
    def effective_tunneling(self):
        """Renormalized tunneling eta * delta (units of the cutoff)."""
        return self.eta * self.params.delta


@dataclass(frozen=True)
class GroundEnergy:
    """Variational upper bound of the ground-state energy (units of cutoff)."""

    value: float
    system: RenormalizedSystem


def _zero_t_exponent(a):
    # int_0^1 x/(x+a)^2 dx = ln((1+a)/a) + a/(1+a) - 1
    return math.log((1.0 + a) / a) + a / (1.0 + a) - 1.0


def _spin_map(delta, alpha):
    def F(eta):
        if eta <= 0.0:
            return 0.0
        return math.exp(-alpha * _zero_t_exponent(eta * delta))

    return F


def solve_eta_spin(delta, alpha, tol=1e-10):
    """Solve the spin-bath renormalization factor eta.

    Temperature never enters: each bath spin has a single excited state, so
    the dressing exponent carries no thermal weight. Damped iteration from
    eta = 1 converges monotonically to the largest fixed point; collapse
    below the floor is reported as a localized system (eta = 0).
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if tol <= 0:
        raise ValueError("tol must be positive")
    params = ModelParams(BathKind.SPIN, delta, alpha)
    if alpha == 0.0:
        return RenormalizedSystem(params, 1.0, 0.0)
    eta, residual = fixed_point(
        _spin_map(delta, alpha), 1.0, damping=0.5, tol=tol,
        max_iter=10_000, bisect_interval=(1e-12, 1.0), floor=ETA_FLOOR,
    )
    if eta == 0.0:
        return RenormalizedSystem(params, 0.0, 0.0, localized=True)
    return RenormalizedSystem(params, eta, residual)


def _thermal_exponent(a, temperature, spec):
    """int_0^1 omega * 2 n(omega) / (omega+a)^2 domega, n the Bose factor.

    The integrand tends to 2T/a^2 at omega -> 0 (regular for a > 0); the
    2T/omega infrared growth of the occupation is what drives eta_B to zero
    once a becomes small, which callers detect through the exponent cap.
    """
    T = temperature

    def f(w):
        u = w / T
        if u > 700.0:
            return 0.0
        if u < 1e-6:
            num = 2.0 * T / (1.0 + 0.5 * u + u * u / 6.0)  # w * 2/(e^u - 1)
        else:
            num = 2.0 * w / math.expm1(u)
        return num / (w + a) ** 2

    value, _ = integrate_adaptive(f, 0.0, CUTOFF, spec)
    return value


def solve_eta_boson(delta, alpha, temperature, tol=1e-10):
    """Solve the boson-bath renormalization factor eta_B.

    At T = 0 the thermal weight is 1 and the computation reduces exactly to
    solve_eta_spin. For T > 0 the occupation factor enhances the exponent;
    once it exceeds the cap the solver reports a thermally collapsed
    (localized) system instead of chasing sub-floor iterates.
    """
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    if temperature == 0.0:
        spin = solve_eta_spin(delta, alpha, tol)
        params = ModelParams(BathKind.BOSON, delta, alpha, 0.0)
        return RenormalizedSystem(params, spin.eta, spin.residual,
                                  spin.localized)
    if not delta > 0:
        raise ValueError("delta must be positive")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    params = ModelParams(BathKind.BOSON, delta, alpha, temperature)
    if alpha == 0.0:
        return RenormalizedSystem(params, 1.0, 0.0)

    spec = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11,
                          panel_splits=(min(temperature, 0.5),))
    collapsed = False

    def F(eta):
        nonlocal collapsed
        if eta <= 0.0:
            return 0.0
        a = eta * delta
        exponent = alpha * (_zero_t_exponent(a)
                            + _thermal_exponent(a, temperature, spec))
        if exponent > BOSON_EXPONENT_CAP:
            collapsed = True
            return 0.0
        return math.exp(-exponent)

    eta, residual = fixed_point(
        F, 1.0, damping=0.5, tol=tol, max_iter=10_000,
        bisect_interval=(1e-10, 1.0), floor=math.exp(-BOSON_EXPONENT_CAP),
    )
    if eta == 0.0 or collapsed:
        return RenormalizedSystem(params, 0.0, 0.0, localized=True)
    return RenormalizedSystem(params, eta, residual)


def renormalized_frequency(omega, g2, eta_delta):
    """Dressed bath-mode frequency.

    omega' = [omega*(omega + eta*delta) + g^2] / sqrt((omega + eta*delta)^2 + g^2),
    continuous at omega -> 0 and equal to omega for an uncoupled mode.
    """
    if omega < 0:
        raise ValueError("omega must be non-negative")
    if g2 < 0:
        raise ValueError("g2 must be non-negative")
    a = eta_delta
    return (omega * (omega + a) + g2) / math.sqrt((omega + a) ** 2 + g2)


def ground_state_energy(delta, alpha):
    """Upper bound of the ground-state energy, -eta*delta/2 - (alpha/2)/(1 + eta*delta).

    The second term is the bath-relaxation energy sum_l (omega_l' - omega_l)/2
    evaluated in the continuum limit; it is non-positive, so the bound never
    exceeds -eta*delta/2.
    """
    sys = solve_eta_spin(delta, alpha)
    a = sys.effective_tunneling
    value = -0.5 * a - 0.5 * alpha / (1.0 + a)
    return GroundEnergy(value, sys)
