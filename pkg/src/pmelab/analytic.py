"""Closed-form reference objects for the nonlinear diffusion problem u_t = lap(u^m).

These serve as independent oracles for the finite-difference solver and for
the estimate harness: the source-type (Barenblatt) solution and its exponents,
the propagation lower-bound radius, the Hoelder exponent rule with its explicit
gradient-bound constant, and the exact heat solution by Gaussian-kernel
quadrature.

All functions are pure; everything can be called concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .fields import Field, Grid


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


# ---------------------------------------------------------------------------
# source-type solution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SelfSimilarParams:
    """Exponents of the source-type solution.

    lam = n / (n(m-1) + 2),  mu = lam / n,  kappa = lam (m-1) / (2 m n).
    """

    lam: float
    mu: float
    kappa: float


def barenblatt_constants(m: float, n: int) -> SelfSimilarParams:
    """Self-similar exponents (lam, mu, kappa) for exponent m and dimension n.

    Only m > 1 is a degenerate-diffusion regime; m <= 1 is rejected.
    """
    if m <= 1.0:
        raise ValueError(f"self-similar constants need m > 1, got m={m}")
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n}")
    n = int(n)
    lam = n / (n * (m - 1.0) + 2.0)
    return SelfSimilarParams(lam=lam, mu=lam / n, kappa=lam * (m - 1.0) / (2.0 * m * n))


@dataclass(frozen=True)
class BarenblattSpec:
    """Source-type solution u(x,t) = t^(-lam) (C - kappa |x|^2 / t^(2 mu))_+^(1/(m-1)).

    ``t0`` shifts the evaluation time (t + t0), so a run can start from the
    bounded profile at a positive time instead of the point-mass singularity.
    """

    m: float
    n: int
    C: float
    t0: float = 0.0

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError(f"profile constant must be positive, got {self.C}")
        if self.t0 < 0:
            raise ValueError(f"time offset must be >= 0, got {self.t0}")
        barenblatt_constants(self.m, self.n)  # validates m, n

    @property
    def params(self) -> SelfSimilarParams:
        return barenblatt_constants(self.m, self.n)


def _shifted_time(t: float, spec: BarenblattSpec) -> float:
    ts = t + spec.t0
    if ts <= 0.0:
        raise ValueError(f"evaluation time t + t0 must be positive, got {ts}")
    return ts


def barenblatt_eval(x, t: float, spec: BarenblattSpec):
    """Evaluate the source-type solution at points x and time t.

    For n = 1, ``x`` is a scalar or array of coordinates; for n >= 2 the last
    axis of ``x`` holds the coordinates.  Zero outside the support ball.
    """
    ts = _shifted_time(t, spec)
    p = spec.params
    x = np.asarray(x, dtype=float)
    if spec.n == 1:
        r2 = x * x
    else:
        if x.shape[-1] != spec.n:
            raise ValueError(f"expected points with last axis {spec.n}, got shape {x.shape}")
        r2 = (x * x).sum(axis=-1)
    profile = spec.C - p.kappa * r2 / ts ** (2.0 * p.mu)
    out = ts ** (-p.lam) * np.clip(profile, 0.0, None) ** (1.0 / (spec.m - 1.0))
    return float(out) if out.ndim == 0 else out


def barenblatt_field(grid: Grid, t: float, spec: BarenblattSpec) -> Field:
    """Sample the source-type solution on a grid."""
    if grid.ndim != spec.n:
        raise ValueError(f"grid dimension {grid.ndim} != solution dimension {spec.n}")
    ts = _shifted_time(t, spec)
    p = spec.params
    r = grid.radius()
    profile = spec.C - p.kappa * (r / ts**p.mu) ** 2
    values = ts ** (-p.lam) * np.clip(profile, 0.0, None) ** (1.0 / (spec.m - 1.0))
    return Field(grid, t, values)


def barenblatt_trajectory(grid: Grid, times, spec: BarenblattSpec) -> list[Field]:
    """Sample the source-type solution at several times (an exact trajectory)."""
    return [barenblatt_field(grid, float(t), spec) for t in times]


def barenblatt_support_radius(t: float, spec: BarenblattSpec) -> float:
    """Radius of the support ball at time t: (t+t0)^mu sqrt(C/kappa)."""
    ts = _shifted_time(t, spec)
    p = spec.params
    return float(ts**p.mu * math.sqrt(spec.C / p.kappa))


_SPHERE_SURFACE = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


def _mass_quadrature_at(t: float, spec: BarenblattSpec, rtol: float) -> float:
    p = spec.params
    radius = barenblatt_support_radius(t, spec)
    ts = t + spec.t0
    power = 1.0 / (spec.m - 1.0)

    def integrand(r):
        profile = spec.C - p.kappa * (r / ts**p.mu) ** 2
        return max(profile, 0.0) ** power * r ** (spec.n - 1)

    value, abserr = integrate.quad(integrand, 0.0, radius,
                                   epsabs=0.0, epsrel=rtol, limit=200)
    value *= _SPHERE_SURFACE[spec.n] * ts ** (-p.lam)
    if abs(abserr) > 10.0 * rtol * abs(value):
        raise QuadratureError(
            f"mass quadrature error {abserr:.3e} exceeds tolerance for {spec}")
    return float(value)


def barenblatt_mass(spec: BarenblattSpec, rtol: float = 1e-10) -> float:
    """Total mass of the source-type solution by adaptive radial quadrature.

    Mass is time-invariant; this is asserted numerically by evaluating at two
    well-separated times.
    """
    m1 = _mass_quadrature_at(1.0, spec, rtol)
    m2 = _mass_quadrature_at(10.0, spec, rtol)
    if abs(m1 - m2) > 1e-10 * abs(m1):
        raise QuadratureError(
            f"mass not time-invariant to 1e-10: {m1!r} at t=1 vs {m2!r} at t=10")
    return m1


def barenblatt_mass_closed_form(spec: BarenblattSpec) -> float:
    """Closed-form mass, independent cross-check for the quadrature route.

    Integrating the profile over its support ball gives
    mass = C^(1/(m-1) + n/2) kappa^(-n/2) pi^(n/2) Gamma(1/(m-1) + 1)
           / Gamma(1/(m-1) + 1 + n/2).
    For m=2, n=1 this reduces to (8 sqrt(3)/3) C^(3/2).
    """
    p = spec.params
    a = 1.0 / (spec.m - 1.0)
    return float(
        spec.C ** (a + spec.n / 2.0)
        * p.kappa ** (-spec.n / 2.0)
        * math.pi ** (spec.n / 2.0)
        * math.gamma(a + 1.0)
        / math.gamma(a + 1.0 + spec.n / 2.0)
    )


def barenblatt_constant_for_mass(mass: float, m: float, n: int) -> float:
    """Invert the mass map: profile constant C giving the requested total mass."""
    if mass <= 0:
        raise ValueError(f"mass must be positive, got {mass}")
    p = barenblatt_constants(m, n)
    a = 1.0 / (m - 1.0)
    unit = (
        p.kappa ** (-n / 2.0)
        * math.pi ** (n / 2.0)
        * math.gamma(a + 1.0)
        / math.gamma(a + 1.0 + n / 2.0)
    )
    return float((mass / unit) ** (1.0 / (a + n / 2.0)))


# ---------------------------------------------------------------------------
# propagation lower bound
# ---------------------------------------------------------------------------

def propagation_lower_bound(t: float, m: float, n: int, mass: float) -> float:
    """Lower bound for the outer support radius of a compactly started solution.

    Returns [ (m-1) pi^((1-m)n/2) Gamma(1+n/2)^(m-1) mass^(m-1) t ]^(1/(2+(m-1)n)).
    """
    if m <= 1.0:
        raise ValueError(f"propagation bound needs m > 1, got m={m}")
    if mass <= 0.0:
        raise ValueError(f"propagation bound needs positive mass, got {mass}")
    if t <= 0.0:
        raise ValueError(f"propagation bound needs t > 0, got {t}")
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n}")
    n = int(n)
    base = (
        (m - 1.0)
        * math.pi ** ((1.0 - m) * n / 2.0)
        * math.gamma(1.0 + n / 2.0) ** (m - 1.0)
        * mass ** (m - 1.0)
        * t
    )
    return float(base ** (1.0 / (2.0 + (m - 1.0) * n)))


# ---------------------------------------------------------------------------
# Hoelder exponent rule and gradient-bound constant
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HolderSpec:
    """Hoelder parameter h with the derived space/time exponents 1/h and 1/(2h)."""

    m: float
    h: float
    inv_h: float
    inv_2h: float


def holder_exponent_rule(m: float, choice: float | None = None) -> HolderSpec:
    """Admissible Hoelder parameter: h = 1 for 1 < m < 2, h in (m-1, m) for m >= 2.

    For m >= 2 the parameter is free inside the open interval; when no choice
    is supplied the midpoint m - 1/2 is used so reports are reproducible.
    """
    if m <= 1.0:
        raise ValueError(f"Hoelder rule needs m > 1, got m={m}")
    if m < 2.0:
        if choice is not None and choice != 1.0:
            raise ValueError(f"for 1 < m < 2 the Hoelder parameter is 1, got choice={choice}")
        h = 1.0
    else:
        h = (m - 0.5) if choice is None else float(choice)
        if not (m - 1.0 < h < m):
            raise ValueError(
                f"Hoelder parameter must lie in the open interval ({m - 1.0}, {m}), got {h}")
    return HolderSpec(m=m, h=h, inv_h=1.0 / h, inv_2h=1.0 / (2.0 * h))


def gradient_bound_constant(m: float, h: float, M: float) -> float:
    """Explicit constant C1 in the gradient decay bound |grad u^h|^2 <= 1/(C1 t).

    With q = m/h required inside (1, m/(m-1)),
    C1 = 2 m |(q-1)(q-1-q/m)| M^(m - 2m/q - 1).
    """
    if M <= 0:
        raise ValueError(f"sup bound M must be positive, got {M}")
    if h <= 0:
        raise ValueError(f"Hoelder parameter must be positive, got {h}")
    q = m / h
    if not (1.0 < q < m / (m - 1.0)):
        raise ValueError(
            f"q = m/h = {q} outside (1, {m / (m - 1.0)}); h must lie in ({m - 1.0}, {m})")
    return float(2.0 * m * abs((q - 1.0) * (q - 1.0 - q / m)) * M ** (m - 2.0 * m / q - 1.0))


# ---------------------------------------------------------------------------
# exact heat solution (Gaussian-kernel quadrature)
# ---------------------------------------------------------------------------

def _simpson_weights(npts: int, dx: float) -> np.ndarray:
    # npts is odd for every Grid, so composite Simpson applies directly
    w = np.ones(npts)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (dx / 3.0)


def heat_kernel(r2, t: float, n: int):
    """Gaussian heat kernel (4 pi t)^(-n/2) exp(-r^2/(4t)) given squared distance."""
    if t <= 0:
        raise ValueError(f"heat kernel needs t > 0, got {t}")
    return (4.0 * math.pi * t) ** (-n / 2.0) * np.exp(-np.asarray(r2, dtype=float) / (4.0 * t))


def heat_exact_eval(x, t: float, initial: Field):
    """Solution of v_t = lap(v), v(.,0) = initial, at points x and elapsed time t.

    Computed as the Gaussian-kernel convolution with the standard
    (4 pi t)^(-n/2) normalization, by Simpson quadrature over the sampled
    initial data.  Exact mass conservation of the kernel is what fixes the
    normalization.
    """
    if t <= 0:
        raise ValueError(f"heat solution needs elapsed time t > 0, got {t}")
    grid = initial.grid
    x = np.asarray(x, dtype=float)
    if grid.ndim == 1:
        xi = grid.axis()
        w = _simpson_weights(grid.npts, grid.dx)
        r2 = (x[..., None] - xi) ** 2
        out = heat_kernel(r2, t, 1) @ (initial.values * w)
    else:
        if x.shape[-1] != 2:
            raise ValueError(f"expected points with last axis 2, got shape {x.shape}")
        xi = grid.axis()
        w = _simpson_weights(grid.npts, grid.dx)
        kx = heat_kernel((x[..., 0:1] - xi) ** 2, t, 1)
        ky = heat_kernel((x[..., 1:2] - xi) ** 2, t, 1)
        weighted = initial.values * np.outer(w, w)
        out = np.einsum("...i,ij,...j->...", kx, weighted, ky)
    return float(out) if np.ndim(out) == 0 else out


def heat_exact_field(grid: Grid, t: float, initial: Field) -> Field:
    """Exact heat solution sampled on a grid (separable fast path in 2-D)."""
    if t <= initial.t:
        raise ValueError(f"target time {t} must exceed initial time {initial.t}")
    elapsed = t - initial.t
    src = initial.grid
    w = _simpson_weights(src.npts, src.dx)
    k = heat_kernel((grid.axis()[:, None] - src.axis()) ** 2, elapsed, 1)
    if grid.ndim == 1:
        values = k @ (initial.values * w)
    else:
        values = k @ (initial.values * np.outer(w, w)) @ k.T
    return Field(grid, t, np.clip(values, 0.0, None))
