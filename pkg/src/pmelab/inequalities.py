"""Standalone property kit for two elementary analytic inequalities.

* power difference: |a-b|^beta <= |a^beta - b^beta| for a, b >= 0, beta > 1,
  with equality exactly when a = b or one of them is 0;
* ball Poincare: ||u||_L2 <= rho ||grad u||_L2 for u vanishing on the
  boundary of a domain contained in a ball of radius rho.

Test functions live on the unit ball and are dilated, u_rho(x) = F(x / rho),
so the rho-scaling of the Poincare ratio is structurally exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


# ---------------------------------------------------------------------------
# power-difference inequality
# ---------------------------------------------------------------------------

@dataclass
class PowDiffResult:
    lhs: np.ndarray | float
    rhs: np.ndarray | float
    holds: np.ndarray | bool


def pow_diff_holds(a, b, beta) -> PowDiffResult:
    """Check |a-b|^beta <= |a^beta - b^beta| (vectorized).

    Only beta > 1 is admissible; the inequality reverses direction below
    that.  ``holds`` allows a unit-rounding slack so cancellation in the
    right-hand side cannot produce spurious violations.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("power-difference inequality needs a, b >= 0")
    if np.any(beta <= 1.0):
        raise ValueError("power-difference inequality needs beta > 1")
    abeta = a**beta
    bbeta = b**beta
    lhs = np.abs(a - b) ** beta
    rhs = np.abs(abeta - bbeta)
    slack = 8.0 * np.finfo(float).eps * (abeta + bbeta)
    holds = lhs <= rhs + slack
    if lhs.ndim == 0:
        return PowDiffResult(float(lhs), float(rhs), bool(holds))
    return PowDiffResult(lhs, rhs, holds)


@dataclass
class PowDiffSweep:
    cases: int
    violations: int
    strict_failures: int  # sampled a != b (both positive) where lhs >= rhs


def pow_diff_sweep(cases: int = 1_000_000, seed: int = 0,
                   a_max: float = 10.0, beta_max: float = 8.0,
                   chunk: int = 200_000) -> PowDiffSweep:
    """Randomized search for violations; also confirms strictness off the
    equality set {a = b} union {min(a,b) = 0}."""
    rng = np.random.default_rng(seed)
    violations = 0
    strict_failures = 0
    remaining = cases
    while remaining > 0:
        n = min(chunk, remaining)
        remaining -= n
        a = rng.uniform(0.0, a_max, n)
        b = rng.uniform(0.0, a_max, n)
        beta = rng.uniform(1.0, beta_max, n)
        beta[beta == 1.0] = 1.0 + 1e-12
        res = pow_diff_holds(a, b, beta)
        violations += int((~res.holds).sum())
        interior = (a != b) & (a > 0) & (b > 0)
        strict_failures += int((res.lhs[interior] >= res.rhs[interior]).sum())
    return PowDiffSweep(cases=cases, violations=violations,
                        strict_failures=strict_failures)


# ---------------------------------------------------------------------------
# ball Poincare inequality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunctionSpec:
    """A boundary-vanishing test function on the ball of radius rho.

    ``kind``: polynomial-bump, cosine-bump, or random-smooth (a seeded finite
    cosine series times the boundary factor 1 - |x/rho|^2).
    """

    __test__ = False  # not a pytest collectible despite the name

    kind: str
    rho: float = 1.0
    n: int = 1
    samples: int = 1001
    seed: int = 0
    modes: int = 4

    def __post_init__(self):
        if self.kind not in ("polynomial-bump", "cosine-bump", "random-smooth"):
            raise ValueError(f"unknown test-function kind {self.kind!r}")
        if self.rho <= 0:
            raise ValueError(f"ball radius must be positive, got {self.rho}")
        if self.n not in (1, 2):
            raise ValueError(f"Poincare quadrature supports n in (1, 2), got {self.n}")
        if self.samples < 64:
            raise ValueError("need at least 64 quadrature points per axis")


def _random_series(spec: TestFunctionSpec):
    rng = np.random.default_rng(spec.seed)
    coeffs = rng.normal(0.0, 1.0, (spec.modes,) * spec.n)
    phases = rng.uniform(0.0, 2.0 * math.pi, (spec.modes,) * spec.n)
    return coeffs, phases


def _unit_eval(spec: TestFunctionSpec, y: np.ndarray):
    """(F(y), grad F(y)) on the unit ball; gradients are analytic."""
    if spec.n == 1:
        y1 = y
        if spec.kind == "polynomial-bump":
            return 1.0 - y1**2, (-2.0 * y1)[None, :]
        if spec.kind == "cosine-bump":
            return np.cos(math.pi * y1 / 2.0), (-(math.pi / 2.0) * np.sin(math.pi * y1 / 2.0))[None, :]
        coeffs, phases = _random_series(spec)
        series = np.zeros_like(y1)
        dseries = np.zeros_like(y1)
        for j in range(spec.modes):
            wj = (j + 1) * math.pi
            series += coeffs[j] * np.cos(wj * y1 + phases[j])
            dseries += -coeffs[j] * wj * np.sin(wj * y1 + phases[j])
        bump = 1.0 - y1**2
        return bump * series, (bump * dseries - 2.0 * y1 * series)[None, :]

    y1, y2 = y[..., 0], y[..., 1]
    r2 = y1**2 + y2**2
    if spec.kind == "polynomial-bump":
        return 1.0 - r2, np.stack([-2.0 * y1, -2.0 * y2])
    if spec.kind == "cosine-bump":
        r = np.sqrt(r2)
        f = np.cos(math.pi * r / 2.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(r > 0, -(math.pi / 2.0) * np.sin(math.pi * r / 2.0) / np.where(r > 0, r, 1.0), 0.0)
        return f, np.stack([scale * y1, scale * y2])
    coeffs, phases = _random_series(spec)
    series = np.zeros_like(y1)
    d1 = np.zeros_like(y1)
    d2 = np.zeros_like(y1)
    for j in range(spec.modes):
        for l in range(spec.modes):
            w1, w2 = (j + 1) * math.pi, (l + 1) * math.pi
            arg = w1 * y1 + w2 * y2 + phases[j, l]
            series += coeffs[j, l] * np.cos(arg)
            d1 += -coeffs[j, l] * w1 * np.sin(arg)
            d2 += -coeffs[j, l] * w2 * np.sin(arg)
    bump = 1.0 - r2
    return bump * series, np.stack([bump * d1 - 2.0 * y1 * series,
                                    bump * d2 - 2.0 * y2 * series])


def spec_eval(spec: TestFunctionSpec, x: np.ndarray):
    """(u(x), grad u(x)) for u(x) = F(x/rho); the chain rule supplies 1/rho."""
    f, g = _unit_eval(spec, np.asarray(x, dtype=float) / spec.rho)
    return f, g / spec.rho


@dataclass
class PoincareResult:
    l2_norm: float
    grad_norm: float
    ratio: float
    rho: float
    holds: bool


def poincare_ratio(spec: TestFunctionSpec, slack: float = 1e-3) -> PoincareResult:
    """Quadrature check of ||u||_L2 <= rho ||grad u||_L2 on the ball.

    Gauss-Legendre on the interval (1-D) or on a polar product grid (2-D);
    the nodes are the dilated reference nodes, so amplitude invariance and
    the linear rho-scaling of the ratio hold to rounding.  Functions that do
    not vanish on the boundary are rejected.
    """
    nodes, weights = np.polynomial.legendre.leggauss(spec.samples)

    if spec.n == 1:
        x = spec.rho * nodes
        w = spec.rho * weights
        f, g = spec_eval(spec, x)
        l2 = float((w * f * f).sum())
        grad2 = float((w * (g[0] ** 2)).sum())
        fb, _ = spec_eval(spec, np.array([-spec.rho, spec.rho]))
        boundary_max = float(np.abs(fb).max())
    else:
        # polar product rule: r in (0, rho), theta in (0, 2 pi)
        r = spec.rho * 0.5 * (nodes + 1.0)
        wr = spec.rho * 0.5 * weights
        # midpoint rule in the angle is spectrally accurate on the periodic
        # integrand; 256 nodes far exceeds the series bandwidth
        ntheta = max(256, spec.modes * 16)
        theta = 2.0 * math.pi * (np.arange(ntheta) + 0.5) / ntheta
        wt = 2.0 * math.pi / ntheta
        x = np.stack([r[:, None] * np.cos(theta), r[:, None] * np.sin(theta)], axis=-1)
        f, g = spec_eval(spec, x)
        area = (wr * r)[:, None] * wt
        l2 = float((area * f * f).sum())
        grad2 = float((area * (g[0] ** 2 + g[1] ** 2)).sum())
        xb = np.stack([spec.rho * np.cos(theta), spec.rho * np.sin(theta)], axis=-1)
        fb, _ = spec_eval(spec, xb)
        boundary_max = float(np.abs(fb).max())

    amplitude = math.sqrt(max(l2, 1e-300))
    if boundary_max > 1e-9 * max(amplitude, 1.0):
        raise ValueError(
            f"test function does not vanish on the boundary (max |u| = {boundary_max:.3e})")
    ratio = math.sqrt(l2 / grad2)
    return PoincareResult(l2_norm=math.sqrt(l2), grad_norm=math.sqrt(grad2),
                          ratio=ratio, rho=spec.rho,
                          holds=ratio <= spec.rho * (1.0 + slack))
