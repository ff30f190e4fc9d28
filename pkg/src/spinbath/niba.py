"""Noninteracting-blip reference dynamics via a time-domain Volterra solver.

The blip kernel is K(t) = delta^2 cos(Q1(t)) exp(-Q2(t)) with bath phase
and damping integrals

    Q1(t) = int sin(omega t) [tanh(omega/2T)] J(omega)/omega^2 domega
    Q2(t) = int (1 - cos(omega t)) [coth(omega/2T)] J(omega)/omega^2 domega

where the spin bath carries the tanh in Q1 (and no thermal factor in Q2)
while the boson bath carries the coth in Q2 (and none in Q1); at T = 0 both
reduce to the same pair 2*alpha*Si(t) and 2*alpha*Cin(t). The population
P(t) then solves dP/dt = -(K*P)(t), P(0) = 1, the time-domain form of the
resolvent P(s) = 1/(s + K(s)); direct product-integration stepping avoids
numerical inverse Laplace transforms. The coherence boundary is scanned by
the negative-lobe rule: a coupling is past the boundary once P(t) no longer
dips below -0.01.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import sici

from .model import BathKind, TimeSeries
from .numerics import (
    BracketError,
    IterationError,
    QuadratureSpec,
    integrate_adaptive,
    integrate_oscillatory,
    volterra_solve,
)

_EULER_GAMMA = 0.5772156649015329
_OSC_SPEC = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-10)


@dataclass(frozen=True)
class NibaKernel:
    """Bath input of the blip kernel: coupling, statistics, temperature.

    A custom ``spectrum`` callable J(omega) on [0, 1] replaces the Ohmic
    default 2*alpha*omega (used e.g. to fold thermal factors into an
    effective spectrum); closed forms are only available on the default.
    """

    bath: BathKind
    alpha: float
    temperature: float = 0.0
    spectrum: object = None

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")

    @property
    def ohmic(self):
        return self.spectrum is None


def _si(t):
    return sici(t)[0]


def _cin(t):
    """Cin(t) = int_0^t (1 - cos u)/u du = euler_gamma + ln t - Ci(t)."""
    if t == 0.0:
        return 0.0
    si, ci = sici(t)
    return _EULER_GAMMA + math.log(t) - ci


def _tanh_over_omega(omega, temperature):
    """tanh(omega/2T)/omega, extended continuously to 1/(2T) at omega = 0."""
    x = 0.5 * omega / temperature
    if x < 1e-8:
        return 0.5 / temperature
    return math.tanh(x) / omega


def _coth_reduced(omega, temperature):
    """(coth(omega/2T) - 2T/omega)/omega, smooth with value 1/(6T) at 0."""
    T = temperature
    x = 0.5 * omega / T
    if x < 0.05:
        # (coth(x) - 1/x)/(2Tx) with coth(x) - 1/x = x/3 - x^3/45 + 2x^5/945
        return (1.0 / 6.0 - x * x / 90.0 + x ** 4 / 945.0) / T
    return (1.0 / math.tanh(x) - 1.0 / x) / omega


def q1(t, kernel):
    """Blip phase Q1(t); 2*alpha*Si(t) for the Ohmic boson bath (and at T=0)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0.0:
        return 0.0
    k = kernel
    if k.ohmic:
        if k.bath is BathKind.BOSON or k.temperature == 0.0:
            return 2.0 * k.alpha * float(_si(t))
        f = lambda w: 2.0 * k.alpha * _tanh_over_omega(w, k.temperature)
    elif k.bath is BathKind.SPIN and k.temperature > 0.0:
        f = _clamped(lambda w: k.spectrum(w)
                     * _tanh_over_omega(w, k.temperature) / w)
    else:
        f = _clamped(lambda w: k.spectrum(w) / (w * w))
    val, _ = integrate_oscillatory(f, 0.0, 1.0, t, "sin", _OSC_SPEC)
    return val


def q2(t, kernel):
    """Blip damping Q2(t); 2*alpha*Cin(t) for the Ohmic spin bath (any T)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0.0:
        return 0.0
    k = kernel
    if k.ohmic:
        if k.bath is BathKind.SPIN or k.temperature == 0.0:
            return 2.0 * k.alpha * _cin(t)
        # coth/omega = 2T/omega^2 + smooth remainder; the 2T/omega^2 piece
        # integrates against (1 - cos omega t) to 2T (t Si(t) - (1 - cos t))
        T = k.temperature
        si = float(_si(t))
        singular = 2.0 * T * (t * si - (1.0 - math.cos(t)))
        m = lambda w: _coth_reduced(w, T)
        m0, _ = integrate_adaptive(m, 0.0, 1.0, _OSC_SPEC)
        mc, _ = integrate_oscillatory(m, 0.0, 1.0, t, "cos", _OSC_SPEC)
        return 2.0 * k.alpha * (singular + m0 - mc)
    g = _q2_weight(k)
    g0, _ = integrate_adaptive(g, 0.0, 1.0, _OSC_SPEC)
    gc, _ = integrate_oscillatory(g, 0.0, 1.0, t, "cos", _OSC_SPEC)
    return g0 - gc


def _clamped(f, floor=1e-12):
    """Keep custom-spectrum integrands off the omega = 0 endpoint."""
    return lambda w: f(max(w, floor))


def _q2_weight(k):
    if k.bath is BathKind.BOSON and k.temperature > 0.0:
        T = k.temperature
        return _clamped(lambda w: k.spectrum(w) * (
            _coth_reduced(w, T) + 2.0 * T / (w * w)) / w)
    return _clamped(lambda w: k.spectrum(w) / (w * w))


def niba_kernel(t, delta, kernel):
    """Blip kernel K(t) = delta^2 cos(Q1) exp(-Q2); K(0) = delta^2."""
    return delta * delta * math.cos(q1(t, kernel)) * math.exp(-q2(t, kernel))


def _kernel_samples(t_grid, delta, kernel):
    """K on a grid, vectorized through the Ohmic closed forms where possible."""
    k = kernel
    t = np.asarray(t_grid, dtype=float)
    if k.ohmic and k.temperature == 0.0:
        si, ci = sici(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            cin = np.where(t > 0.0, _EULER_GAMMA + np.log(t) - ci, 0.0)
        q1v = 2.0 * k.alpha * si
        q2v = 2.0 * k.alpha * cin
        return delta * delta * np.cos(q1v) * np.exp(-q2v)
    if k.ohmic and k.bath is BathKind.SPIN:
        si, ci = sici(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            q2v = 2.0 * k.alpha * np.where(
                t > 0.0, _EULER_GAMMA + np.log(t) - ci, 0.0)
        q1v = np.array([q1(ti, k) for ti in t])
        return delta * delta * np.cos(q1v) * np.exp(-q2v)
    q1v = np.array([q1(ti, k) for ti in t])
    q2v = np.array([q2(ti, k) for ti in t])
    return delta * delta * np.cos(q1v) * np.exp(-q2v)


def unit_phase_integrals(t_grid, kernel):
    """(Q1/2alpha, Q2/2alpha) on a grid for the Ohmic kernel.

    Both integrals are independent of the coupling, so boundary scans can
    sweep alpha by rescaling instead of re-integrating.
    """
    if not kernel.ohmic:
        raise ValueError("unit integrals are defined for the Ohmic kernel")
    unit = NibaKernel(kernel.bath, 0.5, kernel.temperature)
    t = np.asarray(t_grid, dtype=float)
    si, ci = sici(t)
    if kernel.bath is BathKind.BOSON or kernel.temperature == 0.0:
        i1 = si
    else:
        i1 = np.array([q1(ti, unit) for ti in t])
    if kernel.bath is BathKind.SPIN or kernel.temperature == 0.0:
        with np.errstate(divide="ignore", invalid="ignore"):
            i2 = np.where(t > 0.0, _EULER_GAMMA + np.log(t) - ci, 0.0)
    else:
        i2 = np.array([q2(ti, unit) for ti in t])
    return i1, i2


def niba_population(t_grid, delta, kernel, tol=1e-6, refine_check=True):
    """NIBA population on a uniform grid by product-integration stepping.

    The scheme is second order; with refine_check the solve is repeated at
    half the step and the change must stay below tol (the halved-step
    values are the ones returned). Raises IterationError with the
    Richardson error estimate when the grid is too coarse.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) < 2:
        raise ValueError("need a 1-d grid with at least two points")
    h = t[1] - t[0]
    if not np.allclose(np.diff(t), h, rtol=1e-10, atol=1e-12):
        raise ValueError("grid must be uniform")

    if not refine_check:
        K = _kernel_samples(t, delta, kernel)
        P = volterra_solve(K, h)
        return _series(t, P, delta, kernel, tol)

    fine = np.linspace(t[0], t[-1], 2 * (len(t) - 1) + 1)
    K_fine = _kernel_samples(fine, delta, kernel)
    P_fine = volterra_solve(K_fine, 0.5 * h)
    P_coarse = volterra_solve(K_fine[::2], h)
    change = float(np.max(np.abs(P_fine[::2] - P_coarse)))
    if change > tol:
        raise IterationError(
            f"step {h:g} too coarse: halving changes P by {change:.3e} "
            f"(Richardson error estimate {change / 3.0:.3e}); refine the grid",
            residual=change,
        )
    return _series(t, P_fine[::2], delta, kernel, tol)


def _series(t, P, delta, kernel, tol):
    return TimeSeries(
        t, P, "niba-population",
        params={"bath": kernel.bath.value, "delta": delta,
                "alpha": kernel.alpha, "temperature": kernel.temperature},
        quadrature_tol=tol,
    )


#: P(t) must dip below this for the dynamics to count as coherent.
LOBE_THRESHOLD = -0.01


def niba_boundary(temperature, delta, bath=BathKind.SPIN,
                  alpha_bracket=(0.15, 1.5), tol=1e-3, horizon=None,
                  points=4000):
    """Coupling at which the NIBA negative lobe crosses the -0.01 threshold.

    Scans P(t) up to the horizon (default 50/delta) on a fixed grid; the
    boundary coupling is bisected between a clearly coherent and a clearly
    overdamped bracket edge. For the spin bath the boundary moves to
    stronger coupling with temperature; for the boson bath it moves down.
    """
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    horizon = horizon or 50.0 / delta
    t = np.linspace(0.0, horizon, points)
    kernel = NibaKernel(bath, 1.0, temperature)
    i1, i2 = unit_phase_integrals(t, kernel)
    d2 = delta * delta

    def min_p(alpha):
        K = d2 * np.cos(2.0 * alpha * i1) * np.exp(-2.0 * alpha * i2)
        return float(np.min(volterra_solve(K, t[1])))

    lo, hi = alpha_bracket
    lobe_lo, lobe_hi = min_p(lo), min_p(hi)
    if lobe_lo >= LOBE_THRESHOLD:
        raise BracketError(
            f"alpha={lo:g} shows no negative lobe below {LOBE_THRESHOLD} "
            f"(min P = {lobe_lo:.4f}) within t <= {horizon:g}; "
            "widen the bracket downward"
        )
    if lobe_hi < LOBE_THRESHOLD:
        raise BracketError(
            f"alpha={hi:g} still dips to {lobe_hi:.4f} within t <= "
            f"{horizon:g}; widen the bracket upward"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if min_p(mid) < LOBE_THRESHOLD:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
