"""Graph surface of phi = u^beta: metric stretch, flattening in time, and the
classical residual of the equation phi itself satisfies.

The graph of phi over R^n carries the induced metric; along the gradient
direction the stretch of arclength against the flat metric is exactly
1 + |grad phi|^2, which is the extremal eigenvalue of the induced quadratic
form.  All statements about the metric pinch therefore reduce to statements
about max |grad phi|^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fields import Field, gradient, laplacian
from .free_boundary import PositivityMask, default_threshold, erode
from .reporting import CheckReport, upper_check


@dataclass
class SurfaceField:
    """phi = u^beta with its centered gradient.

    ``epsilon = beta - h``; the tangency statement needs epsilon > 0, the
    classical-equation statement needs beta > 2h (i.e. epsilon > h).
    """

    beta: float
    base: Field
    phi: np.ndarray
    grad_phi: np.ndarray  # shape (ndim,) + grid.shape
    epsilon: float
    threshold: float

    @property
    def t(self) -> float:
        return self.base.t

    def mask(self) -> PositivityMask:
        return PositivityMask(self.base.grid, self.base.t,
                              self.base.values > self.threshold, self.threshold)


@dataclass
class MetricSample:
    """Stretch (ds)^2/(drho)^2 along the gradient direction at one cell."""

    location: tuple
    ratio: float


def build_surface(field: Field, beta: float, h: float,
                  threshold: float | None = None) -> SurfaceField:
    """Lift a snapshot to the surface phi = u^beta.

    Requires beta > h.  Values at or below the positivity threshold are
    clamped to exactly zero so the surface meets the zero plane cleanly.
    """
    if beta <= h:
        raise ValueError(f"surface exponent must exceed the Hoelder parameter: {beta} <= {h}")
    if threshold is None:
        threshold = default_threshold(max(field.sup(), 1e-300))
    u = np.where(field.values > threshold, field.values, 0.0)
    phi = u**beta
    return SurfaceField(beta=float(beta), base=field, phi=phi,
                        grad_phi=gradient(phi, field.grid.dx),
                        epsilon=float(beta - h), threshold=float(threshold))


def metric_stretch(surface: SurfaceField) -> np.ndarray:
    """Per-cell stretch 1 + |grad phi|^2 (>= 1 by construction)."""
    g = surface.grad_phi
    return 1.0 + (g * g).sum(axis=0)


def max_stretch(surface: SurfaceField) -> MetricSample:
    ratio = metric_stretch(surface)
    idx = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    return MetricSample(location=tuple(int(i) for i in idx), ratio=float(ratio[idx]))


def _loglog_slope(ts: np.ndarray, values: np.ndarray) -> float:
    lt = np.log(ts)
    lv = np.log(values)
    lt = lt - lt.mean()
    return float((lt * (lv - lv.mean())).sum() / (lt * lt).sum())


def metric_flattening_check(surfaces: Sequence[SurfaceField], m: float, n: int,
                            exponent_rtol: float = 0.15) -> CheckReport:
    """Fit the decay of max(stretch - 1) over time against the predicted rate.

    The theoretical pinch is stretch <= 1 + C t^p with
    p = -2 n epsilon / (n(m-1)+2) - 1 and C fitted at the earliest snapshot
    (the theory asserts existence of C, not its value).  The check passes when
    the log-log fitted decay exponent of the measured statistic matches p
    within ``exponent_rtol``.  The report also notes whether the fitted
    envelope itself holds at later times (it does whenever the measured decay
    is at least as fast as p).
    """
    if len(surfaces) < 4:
        raise ValueError("metric flattening regression needs at least 4 snapshots")
    ts = np.array([s.t for s in surfaces])
    if ts[-1] / ts[0] < 10.0 - 1e-9:
        raise ValueError("metric flattening regression needs a decade of time")
    eps = surfaces[0].epsilon
    stats = np.array([max_stretch(s).ratio - 1.0 for s in surfaces])
    predicted = -2.0 * n * eps / (n * (m - 1.0) + 2.0) - 1.0
    measured = _loglog_slope(ts, stats)
    c_fit = stats[0] / ts[0] ** predicted
    bounds = c_fit * ts**predicted
    envelope_holds = bool(np.all(stats <= bounds * (1.0 + 1e-9)))
    series = [(float(t), float(s), float(b)) for t, s, b in zip(ts, stats, bounds)]
    return upper_check(
        "metric_flattening",
        {
            "m": m, "n": n, "beta": surfaces[0].beta, "epsilon": eps,
            "measured_exponent": measured, "predicted_exponent": predicted,
            "fitted_coefficient": c_fit, "envelope_holds": envelope_holds,
            "direction": "upper",
        },
        statistic=abs(measured - predicted),
        bound=0.0,
        tolerance=exponent_rtol * abs(predicted),
        series=series,
    )


def _clamped_power(phi: np.ndarray, exponent: float) -> np.ndarray:
    # phi^exponent with 0^negative treated as 0: wherever it multiplies a
    # higher-order vanishing factor the product limit is 0
    if exponent >= 0:
        return phi**exponent
    out = np.zeros_like(phi)
    pos = phi > 0
    out[pos] = phi[pos] ** exponent
    return out


def surface_equation(phi: np.ndarray, beta: float, m: float, dx: float) -> np.ndarray:
    """Right-hand side m [phi^((m-1)/beta) lap(phi)
    + ((m-beta)/beta) phi^((m-beta-1)/beta) |grad phi|^2], centered differences."""
    lap = laplacian(phi, dx)
    g = gradient(phi, dx)
    grad2 = (g * g).sum(axis=0)
    term1 = _clamped_power(phi, (m - 1.0) / beta) * lap
    term2 = ((m - beta) / beta) * _clamped_power(phi, (m - beta - 1.0) / beta) * grad2
    return m * (term1 + term2)


def surface_equation_residual(fields: Sequence[Field], beta: float, m: float, h: float,
                              threshold: float | None = None,
                              interior_margin: int = 1,
                              band_width: int = 3) -> dict:
    """Classical residual |phi_t - rhs| of the equation satisfied by phi = u^beta.

    Needs beta > 2h (below that phi_t need not be continuous across the
    interface) and at least 3 snapshots for the centered time difference.
    Returns the max residual over interior cells (``interior_margin`` rings
    inside the discrete interface) and over the near-interface band of
    ``band_width`` rings; the latter must vanish under refinement if phi is a
    classical solution across the interface.
    """
    if beta <= 2.0 * h:
        raise ValueError(f"classical-equation residual needs beta > 2h: {beta} <= {2.0 * h}")
    if len(fields) < 3:
        raise ValueError("centered time differencing needs at least 3 snapshots")
    if threshold is None:
        threshold = default_threshold(max(max(f.sup() for f in fields), 1e-300))
    grid = fields[0].grid
    phis = [np.where(f.values > threshold, f.values, 0.0) ** beta for f in fields]
    interior_stat = 0.0
    band_stat = 0.0
    rows = []
    for k in range(1, len(fields) - 1):
        a = fields[k].t - fields[k - 1].t
        b = fields[k + 1].t - fields[k].t
        # 3-point one-derivative formula, exact on quadratics in t
        phi_t = (phis[k + 1] * a**2 - phis[k - 1] * b**2
                 + phis[k] * (b**2 - a**2)) / (a * b * (a + b))
        resid = np.abs(phi_t - surface_equation(phis[k], beta, m, grid.dx))
        flags = fields[k].values > threshold
        interior = erode(flags, times=interior_margin + 1)
        band = flags & ~erode(flags, times=band_width)
        s_int = float(resid[interior].max()) if interior.any() else 0.0
        s_band = float(resid[band].max()) if band.any() else 0.0
        interior_stat = max(interior_stat, s_int)
        band_stat = max(band_stat, s_band)
        rows.append((fields[k].t, s_int, s_band))
    return {
        "interior": interior_stat,
        "near_interface": band_stat,
        "rows": rows,
        "threshold": threshold,
    }


def time_quotient_bound_exponent(beta: float, h: float) -> float:
    """Exponent (beta - 2h)/(2h) of the phi_t difference-quotient envelope.

    Positive exactly when beta > 2h: then the quotient bound decays as the
    time separation shrinks, which is what makes phi_t vanish on the zero
    set.  For h < beta <= 2h the envelope loses its decay (negative control).
    """
    if beta <= h:
        raise ValueError(f"quotient envelope needs beta > h: {beta} <= {h}")
    return (beta - 2.0 * h) / (2.0 * h)


def write_surface_tables(surface: SurfaceField, out_dir, prefix: str = "surface") -> list:
    """Dump phi, |grad phi| and the stretch in the field table format."""
    from pathlib import Path

    from .fields import write_field

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = surface.base.grid
    gmag = np.sqrt((surface.grad_phi * surface.grad_phi).sum(axis=0))
    paths = []
    for tag, values in (("phi", surface.phi), ("grad", gmag), ("stretch", metric_stretch(surface))):
        path = out / f"{prefix}_{tag}.dat"
        write_field(path, Field(grid, surface.t, values))
        paths.append(path)
    return paths
