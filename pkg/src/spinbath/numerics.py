"""Shared numerical kernels.

Adaptive and oscillatory quadrature, principal-value integrals, bracketed
root finding, damped fixed-point iteration, Richardson extrapolation and the
trapezoidal product-integration stepper for Volterra convolution equations.
All routines are deterministic: identical inputs give bitwise identical
outputs (QUADPACK subdivision is not randomized, panel splits are explicit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize


class NumericsError(Exception):
    """Base class for numerical failures in this package."""


class IntegrationError(NumericsError):
    """A quadrature did not reach the requested tolerance."""

    def __init__(self, message, value=None, error_estimate=None):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class IterationError(NumericsError):
    """An iterative solver exhausted its budget."""

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class BracketError(NumericsError):
    """A bracketing solver was handed an invalid bracket."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and panelization for the quadrature routines.

    panel_splits are interior breakpoints (points strictly inside the
    integration interval are used, the rest are ignored), typically placed
    on resonance peaks so adaptive subdivision always resolves them.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 200
    panel_splits: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 10:
            raise ValueError("max_subdivisions must be at least 10")


#: Default spec for scalar quantities (eta, chi0, alpha_c).
SCALAR_SPEC = QuadratureSpec()
#: Default spec for time-series points.
SERIES_SPEC = QuadratureSpec(abs_tol=1e-6, rel_tol=1e-8)


def _interior_splits(spec, a, b):
    if spec is None or not spec.panel_splits:
        return []
    lo, hi = (a, b) if a < b else (b, a)
    pts = sorted({float(p) for p in spec.panel_splits if lo < p < hi})
    return pts


def integrate_adaptive(f, a, b, spec=None):
    """Adaptive quadrature of ``f`` on [a, b].

    Returns (value, error_estimate). Raises IntegrationError when the
    subdivision budget is exhausted before the tolerance is met.
    """
    spec = spec or SCALAR_SPEC
    pts = _interior_splits(spec, a, b)
    out = integrate.quad(
        f, a, b,
        points=pts or None,
        epsabs=spec.abs_tol, epsrel=spec.rel_tol,
        limit=spec.max_subdivisions, full_output=True,
    )
    value, err = out[0], out[1]
    if len(out) > 3:
        raise IntegrationError(
            f"adaptive quadrature on [{a}, {b}] failed: {out[3]}",
            value=value, error_estimate=err,
        )
    if err > max(spec.abs_tol, spec.rel_tol * abs(value)) * 10:
        raise IntegrationError(
            f"adaptive quadrature on [{a}, {b}] reached error {err:.3e} "
            f"above tolerance", value=value, error_estimate=err,
        )
    return value, err


def integrate_oscillatory(f, a, b, omega, kind="cos", spec=None):
    """Quadrature of f(x)*cos(omega*x) or f(x)*sin(omega*x) on [a, b].

    Uses QUADPACK's oscillatory (Clenshaw-Curtis moment) rule, which stays
    accurate when many oscillations fit in the interval; panel splits from
    ``spec`` are honored by integrating panel by panel. For |omega| below
    1e-12 the weight degenerates to 1 (kind='cos') or 0 (kind='sin') and the
    plain adaptive rule is used.
    """
    if kind not in ("cos", "sin"):
        raise ValueError("kind must be 'cos' or 'sin'")
    spec = spec or SCALAR_SPEC
    if abs(omega) < 1e-12:
        if kind == "sin":
            return 0.0, 0.0
        return integrate_adaptive(f, a, b, spec)

    edges = [a] + _interior_splits(spec, a, b) + [b]
    total, err_total = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        out = integrate.quad(
            f, lo, hi, weight=kind, wvar=omega,
            epsabs=spec.abs_tol, epsrel=spec.rel_tol,
            limit=spec.max_subdivisions, full_output=True,
        )
        if len(out) > 3:
            raise IntegrationError(
                f"oscillatory ({kind}, omega={omega:g}) quadrature on "
                f"[{lo}, {hi}] failed: {out[3]}",
                value=out[0], error_estimate=out[1],
            )
        total += out[0]
        err_total += out[1]
    return total, err_total


def principal_value(f, a, b, pole, spec=None):
    """Cauchy principal value of ``f(x) / (x - pole)`` over [a, b].

    The pole must lie strictly inside the interval; outside, the integrand
    is regular and the plain adaptive rule is used.
    """
    spec = spec or SCALAR_SPEC
    if not (a < pole < b):
        return integrate_adaptive(lambda x: f(x) / (x - pole), a, b, spec)
    out = integrate.quad(
        f, a, b, weight="cauchy", wvar=pole,
        epsabs=spec.abs_tol, epsrel=spec.rel_tol,
        limit=spec.max_subdivisions, full_output=True,
    )
    if len(out) > 3:
        raise IntegrationError(
            f"principal-value quadrature on [{a}, {b}] at pole {pole:g} "
            f"failed: {out[3]}", value=out[0], error_estimate=out[1],
        )
    return out[0], out[1]


def find_root_bracketed(g, lo, hi, tol=1e-12):
    """Root of ``g`` on [lo, hi] given a sign change (Brent's method)."""
    glo, ghi = g(lo), g(hi)
    if glo * ghi > 0:
        raise BracketError(
            f"no sign change on [{lo}, {hi}]: g(lo)={glo:g}, g(hi)={ghi:g}"
        )
    root, res = optimize.brentq(g, lo, hi, xtol=tol, full_output=True)
    if not res.converged:
        raise IterationError("brentq failed to converge", last_iterate=root)
    return root


def fixed_point(F, x0, damping=0.5, tol=1e-10, max_iter=10_000,
                bisect_interval=None, floor=None):
    """Damped fixed-point iteration x <- (1-d) x + d F(x).

    Returns (x, residual) with residual = |x - F(x)| <= tol. If the iterate
    falls below ``floor`` the pair (0.0, 0.0) is returned (collapse to the
    trivial fixed point; callers decide how to tag it). On cycling without
    convergence a bisection fallback on g(x) = x - F(x) over
    ``bisect_interval`` is attempted before raising IterationError.
    """
    x = float(x0)
    prev_residuals = []
    for _ in range(max_iter):
        fx = F(x)
        residual = abs(x - fx)
        if residual <= tol:
            return x, residual
        if floor is not None and fx < floor:
            return 0.0, 0.0
        prev_residuals.append(residual)
        if len(prev_residuals) > 40:
            window = prev_residuals[-40:]
            if window[-1] > 0.999 * max(window[:-1]):
                break  # stagnating or cycling
        x = (1.0 - damping) * x + damping * fx
    if bisect_interval is not None:
        lo, hi = bisect_interval
        try:
            root = find_root_bracketed(lambda y: y - F(y), lo, hi, tol=tol)
            return root, abs(root - F(root))
        except BracketError:
            pass
    raise IterationError(
        f"fixed point not converged after {max_iter} iterations",
        last_iterate=x, residual=abs(x - F(x)),
    )


def richardson_extrapolate(values, ratio, order=1):
    """Richardson extrapolation of a sequence f(h), f(h/r), f(h/r^2), ...

    ``order`` gives the error exponent killed at each level: an int means
    h^order, h^(order+1), ... (power-series errors); a sequence pins the
    exponent per level explicitly. Repeating an exponent handles
    logarithmic errors (c * h^p * log h takes two sweeps at the same p:
    the first leaves a pure h^p term, the second removes it). Returns
    (limit, error_estimate) where the estimate is the last table correction.
    """
    vals = [float(v) for v in values]
    if len(vals) < 2:
        raise ValueError("need at least two values to extrapolate")
    if isinstance(order, int):
        orders = [order + k for k in range(len(vals) - 1)]
    else:
        orders = list(order)
        if len(orders) < len(vals) - 1:
            raise ValueError("need one order per extrapolation level")
    table = list(vals)
    correction = math.inf
    for level in range(1, len(vals)):
        factor = ratio ** orders[level - 1]
        nxt = [
            (factor * table[i + 1] - table[i]) / (factor - 1.0)
            for i in range(len(table) - 1)
        ]
        correction = abs(nxt[-1] - table[-1])
        table = nxt
    return table[-1], correction


def volterra_step(history, kernel_samples, h):
    """One trapezoidal product-integration step of dP/dt = -(K*P)(t).

    ``history`` holds P(0..t_n) on the uniform grid with step ``h`` and
    ``kernel_samples`` holds K(0..t_{n+1}); returns P(t_{n+1}).
    """
    n = len(history) - 1
    K = kernel_samples
    P = history
    if len(K) < n + 2:
        raise ValueError("kernel_samples must cover t_{n+1}")
    # F_n = int_0^{t_n} K(t_n - s) P(s) ds, trapezoidal weights
    if n == 0:
        F_n = 0.0
    else:
        F_n = h * (0.5 * K[n] * P[0]
                   + float(np.dot(K[n - 1:0:-1], P[1:n]))
                   + 0.5 * K[0] * P[n])
    # Known part of F_{n+1} (everything except the 0.5*K0*P_{n+1} term)
    G = h * (0.5 * K[n + 1] * P[0] + float(np.dot(K[n:0:-1], P[1:n + 1])))
    return (P[n] - 0.5 * h * (F_n + G)) / (1.0 + 0.25 * h * h * K[0])


def volterra_solve(kernel_samples, h, p0=1.0):
    """Solve dP/dt = -(K*P)(t), P(0)=p0 on the uniform grid of ``kernel_samples``."""
    K = np.asarray(kernel_samples, dtype=float)
    n_pts = len(K)
    P = np.empty(n_pts)
    P[0] = p0
    F_prev = 0.0
    denom = 1.0 + 0.25 * h * h * K[0]
    for n in range(n_pts - 1):
        G = h * (0.5 * K[n + 1] * P[0] + float(np.dot(K[n:0:-1], P[1:n + 1])))
        P[n + 1] = (P[n] - 0.5 * h * (F_prev + G)) / denom
        F_prev = G + 0.5 * h * K[0] * P[n + 1]
    return P
