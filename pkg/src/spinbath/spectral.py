"""Closed-form self-energy for both baths and the resulting spectral weight.

The dressed two-level resolvent is 1/(omega - eta*delta - Sigma(omega)) with
Sigma built from the renormalized couplings V_l; its real and imaginary
parts R(omega) and gamma(omega) have closed Ohmic forms below the cutoff.
The spin-bath pair is temperature independent; the boson-bath pair carries
coth(omega/2T) occupation factors plus a principal-value thermal level
shift. The Lorentzian-like weight

    S(omega) = gamma(omega) / ([omega - eta*delta - R(omega)]^2 + gamma^2)

is the engine of the population dynamics, the equilibrium correlation
function and the susceptibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from .model import BathKind, CUTOFF
from .numerics import (
    QuadratureSpec,
    find_root_bracketed,
    integrate_adaptive,
    principal_value,
)

_PV_SPEC = QuadratureSpec(abs_tol=1e-8, rel_tol=1e-8, max_subdivisions=400)


def _check_spin_domain(omega):
    if omega < 0.0 or omega >= CUTOFF:
        raise ValueError(
            f"omega={omega:g} outside [0, 1): the level shift has a log "
            "divergence at the cutoff"
        )


def r_spin(omega, alpha, eta_delta):
    """Level-shift part R(omega) of the spin-bath self-energy, 0 <= omega < 1.

    Equals the principal-value Hilbert transform of gamma_spin/pi over the
    band. Continuous at omega = 0 with R(0) = -2*alpha*eta_delta/(1+eta_delta);
    a two-term series replaces the omega*log(omega) form below 1e-8.
    """
    _check_spin_domain(omega)
    a = eta_delta
    if a <= 0:
        raise ValueError("eta_delta must be positive")
    r0 = -2.0 * alpha * a / (1.0 + a)
    if omega == 0.0:
        return r0
    log_term = math.log(omega * (1.0 + a) / (a * (1.0 - omega)))
    if omega < 1e-8:
        return r0 + 2.0 * alpha * omega * (1.0 / (1.0 + a) + log_term)
    return (-2.0 * alpha * a * a / (omega + a)
            * (1.0 / (1.0 + a) - omega / (omega + a) * log_term))


def gamma_spin(omega, alpha, eta_delta):
    """Decay rate gamma(omega) = 2*alpha*pi*omega*(eta*delta)^2/(omega+eta*delta)^2.

    Zero outside the band [0, 1]; temperature never enters. The maximum sits
    at omega = eta*delta with value alpha*pi*eta*delta/2.
    """
    if omega < 0.0 or omega > CUTOFF:
        return 0.0
    a = eta_delta
    return 2.0 * alpha * math.pi * omega * a * a / (omega + a) ** 2


def _bose2_times_omega(omega, temperature):
    """omega * 2 n(omega), finite at omega = 0 where it equals 2 T."""
    u = omega / temperature
    if u > 700.0:
        return 0.0
    if u < 1e-6:
        return 2.0 * temperature / (1.0 + 0.5 * u + u * u / 6.0)
    return 2.0 * omega / math.expm1(u)


def thermal_level_shift(omega, alpha, eta_delta, temperature, spec=None):
    """Thermal part of R_B: sum_l V_l^2 * 2 n(omega_l) / (omega - omega_l).

    Evaluated as a principal-value integral under the continuum mapping for
    omega inside the band, and as a regular integral outside (omega < 0 is
    needed for locating below-band resolvent poles). Diverges like
    4*alpha*T*ln|omega| as omega -> 0.
    """
    a = eta_delta
    T = temperature
    if T == 0.0:
        return 0.0
    if omega == 0.0:
        return -math.inf

    def g(x):
        return _bose2_times_omega(x, T) / (x + a) ** 2

    # principal_value computes PV int g/(x - omega); the shift carries 1/(omega - x)
    value, _ = principal_value(g, 0.0, CUTOFF, omega, spec or _PV_SPEC)
    return -2.0 * alpha * a * a * value


def r_boson(omega, alpha, eta_delta, temperature, spec=None):
    """Level-shift part of the boson-bath self-energy for 0 <= omega < 1.

    The zero-temperature piece has the same algebraic shape as r_spin; the
    occupation factor adds the principal-value thermal term, so at T = 0
    this reduces to r_spin exactly.
    """
    _check_spin_domain(omega)
    base = r_spin(omega, alpha, eta_delta)
    if temperature == 0.0:
        return base
    return base + thermal_level_shift(omega, alpha, eta_delta, temperature,
                                      spec)


def gamma_boson(omega, alpha, eta_delta, temperature):
    """Boson-bath decay rate gamma_spin(omega) * coth(omega/2T) on the band.

    The omega -> 0 limit at T > 0 is finite, 4*alpha*pi*T, because
    coth(omega/2T) ~ 2T/omega cancels the Ohmic factor.
    """
    if temperature == 0.0:
        return gamma_spin(omega, alpha, eta_delta)
    if omega < 0.0 or omega > CUTOFF:
        return 0.0
    if omega < 1e-10:
        return 4.0 * alpha * math.pi * temperature
    x = 0.5 * omega / temperature
    coth = 1.0 if x > 20.0 else 1.0 / math.tanh(x)
    return gamma_spin(omega, alpha, eta_delta) * coth


@dataclass(frozen=True)
class SelfEnergy:
    """R and gamma bundled for one bath at one coupling point.

    Spin-bath instances take no temperature (the API enforces the physics);
    boson instances cache the thermal level shift on a log grid so that
    repeated weight evaluations inside quadratures stay cheap.
    """

    bath: BathKind
    alpha: float
    eta_delta: float
    temperature: float | None = None

    def __post_init__(self):
        if self.bath is BathKind.SPIN and self.temperature is not None:
            raise ValueError("spin-bath self-energy is temperature free; "
                             "pass temperature=None")
        if self.bath is BathKind.BOSON and self.temperature is None:
            raise ValueError("boson-bath self-energy needs a temperature")

    @property
    def _thermal(self):
        return self.bath is BathKind.BOSON and self.temperature > 0.0

    @cached_property
    def _thermal_spline(self):
        # ln(omega) grid: the shift is asymptotically linear in ln(omega)
        # near the band edge, so a cubic spline in u = ln(omega) is accurate.
        u = np.linspace(math.log(1e-9), math.log(CUTOFF - 1e-9), 240)
        vals = [
            thermal_level_shift(math.exp(ui), self.alpha, self.eta_delta,
                                self.temperature)
            for ui in u
        ]
        return CubicSpline(u, vals, extrapolate=True)

    def r(self, omega):
        if self.bath is BathKind.SPIN or not self._thermal:
            return r_spin(omega, self.alpha, self.eta_delta)
        _check_spin_domain(omega)
        if omega == 0.0:
            return -math.inf
        return (r_spin(omega, self.alpha, self.eta_delta)
                + float(self._thermal_spline(math.log(omega))))

    def gamma(self, omega):
        if self.bath is BathKind.SPIN:
            return gamma_spin(omega, self.alpha, self.eta_delta)
        return gamma_boson(omega, self.alpha, self.eta_delta,
                           self.temperature)

    def detuning(self, omega):
        """D(omega) = omega - eta*delta - R(omega), the resonance condition."""
        return omega - self.eta_delta - self.r(omega)


def self_energy_for(sys):
    """Build the SelfEnergy matching a solved RenormalizedSystem."""
    if sys.params.bath is BathKind.SPIN:
        return SelfEnergy(BathKind.SPIN, sys.params.alpha,
                          sys.effective_tunneling)
    return SelfEnergy(BathKind.BOSON, sys.params.alpha,
                      sys.effective_tunneling, sys.params.temperature)


@dataclass(frozen=True)
class Pole:
    """Real root of the resonance condition D(omega) = 0."""

    omega0: float
    gamma_at_pole: float
    half_width: float


@dataclass(frozen=True)
class SpectralWeight:
    """S(omega) = gamma / (D^2 + gamma^2), sampled on demand.

    Carries a deterministic panelization (keyed on the resonance position
    and width) so every quadrature against the weight resolves the peak.
    """

    self_energy: SelfEnergy

    @property
    def eta_delta(self):
        return self.self_energy.eta_delta

    def __call__(self, omega):
        if omega <= 0.0 or omega >= CUTOFF:
            return 0.0  # band edges: gamma vanishes / level shift diverges
        se = self.self_energy
        g = se.gamma(omega)
        d = se.detuning(omega)
        if math.isinf(d):
            return 0.0
        return g / (d * d + g * g)

    @cached_property
    def band_roots(self):
        """All D(omega) = 0 crossings inside the band, as Pole objects."""
        se = self.self_energy
        a = self.eta_delta
        lo_edge, hi_edge = 1e-12, CUTOFF - 1e-12
        if se._thermal:
            grid = np.concatenate([
                np.geomspace(1e-7, 0.1, 120),
                np.linspace(0.1, hi_edge, 140)[1:],
            ])
        else:
            d0 = -(a + r_spin(0.0, se.alpha, a))
            if d0 > 0.0:
                return ()
            if d0 == 0.0:
                return (Pole(0.0, 0.0, 0.0),)
            grid = np.concatenate([
                np.geomspace(max(lo_edge, 1e-9), a, 60),
                np.linspace(a, min(4 * a, hi_edge), 20)[1:],
            ])
        vals = np.array([se.detuning(w) for w in grid])
        roots = []
        sign = math.copysign(1.0, vals[0]) if vals[0] != 0 else 1.0
        for i in range(1, len(grid)):
            if vals[i] == 0.0:
                roots.append(grid[i])
                sign = -sign
                continue
            s = math.copysign(1.0, vals[i])
            if s != sign:
                roots.append(find_root_bracketed(se.detuning, grid[i - 1],
                                                 grid[i], tol=1e-14))
                sign = s
        out = []
        for w0 in roots:
            g0 = se.gamma(w0)
            h = max(1e-9, 1e-5 * max(w0, a))
            wl, wr = max(lo_edge, w0 - h), min(hi_edge, w0 + h)
            dprime = (se.detuning(wr) - se.detuning(wl)) / (wr - wl)
            width = g0 / abs(dprime) if dprime != 0.0 else 0.0
            out.append(Pole(w0, g0, width))
        return tuple(out)

    @cached_property
    def resonance(self):
        """The low-frequency resonance pole, or None (incoherent regime)."""
        roots = self.band_roots
        return roots[0] if roots else None

    def breakpoints(self):
        """Interior panel splits resolving every resonance peak."""
        pts = {self.eta_delta}
        for p in self.band_roots:
            w0, hw = p.omega0, p.half_width
            scales = (hw if hw > 0 else 0.05 * max(w0, self.eta_delta),)
            for s in scales:
                for k in (-50.0, -15.0, -5.0, -1.5, 0.0, 1.5, 5.0, 15.0, 50.0):
                    pts.add(w0 + k * s)
        return tuple(sorted(p for p in pts if 1e-13 < p < CUTOFF - 1e-13))

    def quad_spec(self, base=None):
        base = base or QuadratureSpec()
        return QuadratureSpec(
            abs_tol=base.abs_tol, rel_tol=base.rel_tol,
            max_subdivisions=max(base.max_subdivisions, 400),
            panel_splits=self.breakpoints(),
        )


def below_band_poles(self_energy, search_lo=-2.0):
    """Real resolvent poles below the band, [(omega_p, residue), ...].

    For the spin bath (and the boson bath at T = 0) the detuning is
    negative throughout omega < 0 in the coherent regime, so the list is
    empty; at T > 0 the thermal level shift diverges to -inf at omega -> 0-
    and pushes exactly one pole below the band. The residue 1/D'(omega_p)
    is the spectral weight carried by the pole.
    """
    se = self_energy

    def D(w):
        base = w - se.eta_delta - _r_below_band(w, se)
        return base

    grid = -np.geomspace(1e-10, abs(search_lo), 160)[::-1]
    vals = [D(w) for w in grid]
    poles = []
    for i in range(1, len(grid)):
        if vals[i - 1] * vals[i] < 0:
            wp = find_root_bracketed(D, grid[i - 1], grid[i], tol=1e-14)
            h = max(1e-10, 1e-5 * abs(wp))
            dprime = (D(wp + h) - D(wp - h)) / (2 * h)
            poles.append((wp, 1.0 / dprime))
    return poles


def _r_below_band(omega, se):
    """Re Sigma(omega) for omega < 0 (regular integrals, no principal value)."""
    a = se.eta_delta
    alpha = se.alpha
    # T = 0 piece: 2*alpha*a^2 * int_0^1 x / ((x+a)^2 (omega - x)) dx
    def f0(x):
        return x / ((x + a) ** 2 * (omega - x))

    base, _ = integrate_adaptive(f0, 0.0, CUTOFF, _PV_SPEC)
    base *= 2.0 * alpha * a * a
    if not se._thermal:
        return base

    T = se.temperature

    def fth(x):
        return _bose2_times_omega(x, T) / ((x + a) ** 2 * (omega - x))

    th, _ = integrate_adaptive(fth, 0.0, CUTOFF, _PV_SPEC)
    return base + 2.0 * alpha * a * a * th
