"""Numerical verification of the a-priori estimates over solver trajectories.

Each check measures a statistic over snapshots, compares it against the
theoretical bound at a stated tolerance, and returns a CheckReport.  The
one-sided estimates that hold in the distributional sense are tested
pointwise away from the discrete interface, with tolerances calibrated on
the analytic equality cases.

Empirical constants (the Hoelder modulus nu, the decay coefficient, the
metric-pinch coefficient) are fitted, never derived: the checks assert
boundedness and stability under refinement, which is the verifiable content
of the statements.

Checks are pure functions of immutable snapshots; a sweep may run them
concurrently and merge reports by sorted name.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .analytic import gradient_bound_constant, propagation_lower_bound
from .fields import Field, gradient_magnitude, laplacian
from .free_boundary import default_threshold, erode, positivity_set, support_radius_numeric
from .reporting import CheckReport, lower_check, upper_check
from .solver import PMEProblem, SchemeConfig, solve_heat, solve_pme, stable_timestep


# ---------------------------------------------------------------------------
# conservation and one-sided time/pressure estimates
# ---------------------------------------------------------------------------

def check_mass(fields: Sequence[Field], tolerance: float = 1e-12) -> CheckReport:
    """Relative drift of the discrete mass sum(u) dx^n across snapshots."""
    if not fields:
        raise ValueError("mass check needs at least one snapshot")
    masses = np.array([f.mass() for f in fields])
    drifts = np.abs(masses / masses[0] - 1.0)
    series = [(f.t, float(d), 0.0) for f, d in zip(fields, drifts)]
    return upper_check(
        "mass_conservation",
        {"initial_mass": float(masses[0]), "direction": "upper"},
        statistic=float(drifts.max()), bound=0.0, tolerance=tolerance, series=series)


def check_time_derivative(fields: Sequence[Field], m: float,
                          tolerance: float | None = None) -> CheckReport:
    """One-sided bound u_t >= -u / ((m-1) t).

    Forward differences between consecutive snapshots, evaluated with the
    earlier snapshot's time.  The statistic is the worst (most negative)
    value of du/dt + u/((m-1)t) over all cells and snapshot pairs.
    """
    if m <= 1.0:
        raise ValueError(f"time-derivative bound needs m > 1, got m={m}")
    pairs = [(a, b) for a, b in zip(fields, fields[1:]) if a.t > 0]
    if not pairs:
        raise ValueError("time-derivative bound needs >= 2 snapshots at t > 0")
    M = max(f.sup() for f in fields)
    t_min = min(a.t for a, _ in pairs)
    if tolerance is None:
        tolerance = 1e-3 * M / t_min
    stat = np.inf
    series = []
    for a, b in pairs:
        dt = b.t - a.t
        local = (b.values - a.values) / dt + a.values / ((m - 1.0) * a.t)
        worst = float(local.min())
        stat = min(stat, worst)
        series.append((a.t, worst, 0.0))
    return lower_check(
        "time_derivative_bound",
        {"m": m, "sup": M, "direction": "lower"},
        statistic=stat, bound=0.0, tolerance=tolerance, series=series)


def pressure_values(values: np.ndarray, m: float) -> np.ndarray:
    """Pressure variable p = (m/(m-1)) u^(m-1)."""
    if m <= 1.0:
        raise ValueError(f"pressure variable needs m > 1, got m={m}")
    return (m / (m - 1.0)) * values ** (m - 1.0)


def _interior_scan(field: Field, threshold: float, margin: int) -> np.ndarray:
    flags = field.values > threshold
    return erode(flags, times=margin)


def pressure_laplacian_residual(field: Field, m: float, n: int,
                                threshold: float | None = None,
                                margin: int = 2,
                                exclusion_width: float = 0.0) -> dict:
    """lap(p) + n/((n(m-1)+2) t) over interior support cells.

    On the source solution the pressure is an exact interior paraboloid and
    this residual vanishes; its measured size calibrates the tolerance of
    all pressure-type checks.  Cells within ``margin`` rings of the discrete
    interface are excluded (the estimate is distributional there and
    pointwise second differences straddling the interface are meaningless);
    ``exclusion_width`` widens the excluded band to a physical length, which
    solver fields need because the numerical front carries a boundary layer
    a few cells wide.
    """
    if field.t <= 0:
        raise ValueError(f"pressure bound needs t > 0, got t={field.t}")
    if threshold is None:
        threshold = default_threshold(max(field.sup(), 1e-300))
    rings = max(margin, math.ceil(exclusion_width / field.grid.dx))
    scan = _interior_scan(field, threshold, rings)
    shift = n / ((n * (m - 1.0) + 2.0) * field.t)
    if not scan.any():
        return {"min": 0.0, "max_abs": 0.0, "cells": 0, "shift": shift}
    resid = laplacian(pressure_values(field.values, m), field.grid.dx)[scan] + shift
    return {"min": float(resid.min()), "max_abs": float(np.abs(resid).max()),
            "cells": int(scan.sum()), "shift": shift}


def check_pressure_laplacian(fields: Sequence[Field], m: float, n: int,
                             threshold: float | None = None,
                             tolerance: float | None = None,
                             margin: int = 2,
                             exclusion_fraction: float = 0.4) -> CheckReport:
    """One-sided bound lap((m/(m-1)) u^(m-1)) >= -n / ((n(m-1)+2) t).

    The excluded near-interface band is ``exclusion_fraction`` of the support
    radius (when the mask is not full): wide enough to clear the numerical
    front layer at desk resolutions while the O(dx^2) tolerance stays
    calibrated on the analytic equality case.
    """
    usable = [f for f in fields if f.t > 0]
    if not usable:
        raise ValueError("pressure bound needs snapshots at t > 0")
    if tolerance is None:
        tolerance = 5.0 * usable[0].grid.dx ** 2
    stat = np.inf
    series = []
    for f in usable:
        thr = threshold if threshold is not None else default_threshold(max(f.sup(), 1e-300))
        mask = positivity_set(f, thr)
        width = 0.0
        if not mask.is_full() and not mask.is_empty():
            width = exclusion_fraction * support_radius_numeric(mask).radius
        r = pressure_laplacian_residual(f, m, n, threshold=thr, margin=margin,
                                        exclusion_width=width)
        stat = min(stat, r["min"])
        series.append((f.t, r["min"], 0.0))
    return lower_check(
        "pressure_laplacian_bound",
        {"m": m, "n": n, "margin_cells": margin,
         "exclusion_fraction": exclusion_fraction, "direction": "lower"},
        statistic=float(stat), bound=0.0, tolerance=tolerance, series=series)


# ---------------------------------------------------------------------------
# gradient decay, sup decay, propagation
# ---------------------------------------------------------------------------

def gradient_decay_statistic(field: Field, m: float, h: float, M: float) -> float:
    """max |grad(u^h)|^2 * C1 * t, which the gradient bound caps at 1."""
    c1 = gradient_bound_constant(m, h, M)
    gmag = gradient_magnitude(field.values**h, field.grid.dx)
    return float((gmag**2).max() * c1 * field.t)


def check_gradient_decay(fields: Sequence[Field], m: float, h: float, M: float,
                         tolerance: float | None = None) -> CheckReport:
    """Gradient decay bound |grad(u^h)|^2 <= 1/(C1 t) with the explicit C1."""
    usable = [f for f in fields if f.t > 0]
    if not usable:
        raise ValueError("gradient bound needs snapshots at t > 0")
    if tolerance is None:
        tolerance = usable[0].grid.dx
    stats = [(f.t, gradient_decay_statistic(f, m, h, M), 1.0) for f in usable]
    statistic = max(s for _, s, _ in stats)
    return upper_check(
        "gradient_decay_bound",
        {"m": m, "h": h, "sup": M, "C1": gradient_bound_constant(m, h, M),
         "direction": "upper"},
        statistic=statistic, bound=1.0, tolerance=tolerance, series=stats)


def check_sup_decay(fields: Sequence[Field], m: float, n: int,
                    headroom: float = 1.05) -> CheckReport:
    """sup u(t) * t^(n/(n(m-1)+2)) must not grow: fitted coefficient from the
    first snapshot, 5% headroom."""
    usable = [f for f in fields if f.t > 0]
    if len(usable) < 2:
        raise ValueError("sup-decay check needs >= 2 snapshots at t > 0")
    gamma = n / (n * (m - 1.0) + 2.0)
    stats = np.array([f.sup() * f.t**gamma for f in usable])
    bound = float(stats[0] * headroom)
    series = [(f.t, float(s), bound) for f, s in zip(usable, stats)]
    return upper_check(
        "sup_decay_trend",
        {"m": m, "n": n, "exponent": gamma, "fitted_coefficient": float(stats[0]),
         "direction": "upper"},
        statistic=float(stats.max()), bound=bound, tolerance=0.0, series=series)


def check_propagation(fields: Sequence[Field], m: float, n: int, mass: float,
                      threshold: float | None = None) -> CheckReport:
    """Support radius never falls below the explicit lower-bound radius.

    Tolerance is one grid spacing: the discrete radius is only located to
    within a cell.
    """
    usable = [f for f in fields if f.t > 0]
    if not usable:
        raise ValueError("propagation check needs snapshots at t > 0")
    if threshold is None:
        threshold = default_threshold(max(f.sup() for f in usable))
    stat = np.inf
    series = []
    ratios = []
    for f in usable:
        radius = support_radius_numeric(positivity_set(f, threshold)).radius
        lb = propagation_lower_bound(f.t, m, n, mass)
        stat = min(stat, radius - lb)
        ratios.append(radius / lb)
        series.append((f.t, radius, lb))
    return lower_check(
        "propagation_bound",
        {"m": m, "n": n, "mass": mass, "radius_over_bound": ratios,
         "direction": "lower"},
        statistic=float(stat), bound=0.0, tolerance=usable[0].grid.dx, series=series)


# ---------------------------------------------------------------------------
# empirical Hoelder modulus
# ---------------------------------------------------------------------------

@dataclass
class HolderEstimate:
    """Empirical modulus: the sup of |u(p1)-u(p2)| / (|dx|^(1/h) + |dt|^(1/2h))."""

    h: float
    nu_hat: float
    sample_count: int


def _pair_quotients(U: np.ndarray, pts: np.ndarray, ts: np.ndarray, h: float,
                    k1, i1, k2, i2) -> np.ndarray:
    du = np.abs(U[k1, i1] - U[k2, i2])
    if pts.ndim == 1:
        dx = np.abs(pts[i1] - pts[i2])
    else:
        dx = np.linalg.norm(pts[i1] - pts[i2], axis=-1)
    dt = np.abs(ts[k1] - ts[k2])
    denom = dx ** (1.0 / h) + dt ** (1.0 / (2.0 * h))
    good = denom > 0
    return du[good] / denom[good]


def holder_quotient(fields: Sequence[Field], h: float,
                    tau: float | None = None, K: float | None = None,
                    n_random: int = 100_000, seed: int = 0,
                    threshold: float | None = None) -> HolderEstimate:
    """Scan space-time pairs for the worst two-point quotient.

    Pair families: every adjacent same-snapshot pair, every cell paired with
    the discrete interface cells of its snapshot (the worst quotients live at
    the interface), every cell paired with itself across consecutive
    snapshots, and ``n_random`` seeded uniform pairs.  Restricted to
    |x| <= K and t >= tau.
    """
    if tau is None:
        tau = min(f.t for f in fields if f.t > 0)
    snaps = [f for f in fields if f.t >= tau]
    if len(snaps) < 1:
        raise ValueError("Hoelder scan needs at least one snapshot at t >= tau")
    grid = snaps[0].grid
    if K is None:
        K = grid.half_width
    if threshold is None:
        threshold = default_threshold(max(max(f.sup() for f in snaps), 1e-300))

    pts_all = grid.points().reshape(-1, grid.ndim) if grid.ndim > 1 else grid.axis()
    radius = grid.radius().ravel()
    sel = np.flatnonzero(radius <= K + 1e-12)
    pos = np.full(radius.size, -1, dtype=int)
    pos[sel] = np.arange(sel.size)
    pts = pts_all[sel]
    U = np.stack([f.values.ravel()[sel] for f in snaps])
    ts = np.array([f.t for f in snaps])
    nsnap, ncell = U.shape

    quotients = []
    count = 0

    # (a) adjacent same-snapshot pairs (1-D neighbours; both axes in 2-D)
    if grid.ndim == 1:
        pa = pos[np.arange(grid.npts - 1)]
        pb = pos[np.arange(1, grid.npts)]
        keep = (pa >= 0) & (pb >= 0)
        adj = [(pa[keep], pb[keep])]
    else:
        idx = np.arange(grid.npts * grid.npts).reshape(grid.npts, grid.npts)
        adj = []
        for a, b in ((idx[:, :-1], idx[:, 1:]), (idx[:-1, :], idx[1:, :])):
            pa, pb = pos[a.ravel()], pos[b.ravel()]
            keep = (pa >= 0) & (pb >= 0)
            adj.append((pa[keep], pb[keep]))
    for ia, ib in adj:
        for k in range(nsnap):
            quotients.append(_pair_quotients(U, pts, ts, h, k, ia, k, ib))
            count += ia.size

    # (b) every cell against the interface cells of the same snapshot: the
    # worst quotients pair interior values with the zero set
    for k, f in enumerate(snaps):
        full = f.values > threshold
        if full.all() or not full.any():
            continue
        ring = full & ~erode(full)
        bidx = pos[np.flatnonzero(ring.ravel())]
        bidx = bidx[bidx >= 0]
        if bidx.size == 0:
            continue
        ii, bb = np.meshgrid(np.arange(ncell), bidx, indexing="ij")
        quotients.append(_pair_quotients(U, pts, ts, h, k, ii.ravel(), k, bb.ravel()))
        count += ii.size

    # (c) same cell, consecutive snapshots
    for k in range(nsnap - 1):
        cells = np.arange(ncell)
        quotients.append(_pair_quotients(U, pts, ts, h, k, cells, k + 1, cells))
        count += ncell

    # (d) seeded uniform random space-time pairs
    rng = np.random.default_rng(seed)
    k1 = rng.integers(0, nsnap, n_random)
    k2 = rng.integers(0, nsnap, n_random)
    i1 = rng.integers(0, ncell, n_random)
    i2 = rng.integers(0, ncell, n_random)
    quotients.append(_pair_quotients(U, pts, ts, h, k1, i1, k2, i2))
    count += n_random

    nu_hat = float(max(q.max() for q in quotients if q.size))
    return HolderEstimate(h=float(h), nu_hat=nu_hat, sample_count=int(count))


def check_holder_stability(levels: Sequence[Sequence[Field]], h: float,
                           tau: float | None = None, K: float | None = None,
                           n_random: int = 100_000, seed: int = 0,
                           variation_bound: float = 0.20) -> CheckReport:
    """Empirical modulus must be stable across a grid-refinement ladder.

    The statistic is the cumulative relative variation of nu_hat from the
    coarsest level; a bounded modulus stays within ``variation_bound``
    (applied across the whole ladder: a supercritical exponent grows a few
    percent per refinement, which only a cumulative rule can flag).
    """
    if len(levels) < 2:
        raise ValueError("stability scan needs at least two refinement levels")
    estimates = [holder_quotient(fields, h, tau=tau, K=K, n_random=n_random, seed=seed)
                 for fields in levels]
    nus = np.array([e.nu_hat for e in estimates])
    variation = np.abs(nus / nus[0] - 1.0)
    series = [(float(lv[0].grid.dx), float(nu), float(nus[0]))
              for lv, nu in zip(levels, nus)]
    return upper_check(
        "holder_stability",
        {"h": h, "inv_h": 1.0 / h, "nu_hats": [float(v) for v in nus],
         "samples": [e.sample_count for e in estimates], "direction": "upper"},
        statistic=float(variation.max()), bound=0.0, tolerance=variation_bound,
        series=series)


# ---------------------------------------------------------------------------
# closeness to the heat equation
# ---------------------------------------------------------------------------

def ball_l2_distance(a: Field, b: Field, k_radius: float) -> float:
    """Discrete integral of (a-b)^2 over |x| <= k_radius."""
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    sel = a.grid.radius() <= k_radius + 1e-12
    diff = a.values[sel] - b.values[sel]
    return float((diff * diff).sum() * a.grid.cell_volume)


def heat_closeness_sweep(ms: Sequence[float], k_radius: float,
                         problem: PMEProblem, grid, config: SchemeConfig,
                         ) -> tuple[list[CheckReport], CheckReport]:
    """Sweep the exponent toward 1 and measure the L2 distance to the heat run.

    For each m the nonlinear and the linear run share the same initial data
    and the same time step, so m = 1 reproduces the heat run exactly and the
    statistic is identically zero there.  The sweep's verifiable content is
    the trend: the max-over-time statistic decreases as m decreases to 1.
    Per-run bounds use the smallest constant that covers the whole sweep in
    the form C ((m-1) + 1/k); the constant is fitted, not derived.
    """
    ms = [float(m) for m in ms]
    if sorted(ms, reverse=True) != ms:
        raise ValueError("exponent sweep must be strictly decreasing toward 1")
    stats = []
    for m in ms:
        prob_m = replace(problem, m=m)
        dt = stable_timestep(prob_m, grid, config)
        shared = replace(config, dt_override=dt)
        upme = solve_pme(prob_m, grid, shared)
        uheat = solve_heat(prob_m, grid, shared)
        dists = [ball_l2_distance(v, u, k_radius)
                 for u, v in zip(upme.fields, uheat.fields) if u.t > problem.t0]
        stats.append(max(dists))

    shape = [(m - 1.0) + 1.0 / k_radius for m in ms]
    cstar = max((s / f for s, f in zip(stats, shape)), default=0.0)
    reports = []
    for m, s, f in zip(ms, stats, shape):
        reports.append(upper_check(
            "heat_closeness",
            {"m": m, "k": k_radius, "fitted_constant": cstar, "direction": "upper"},
            statistic=s, bound=cstar * f, tolerance=1e-12 * max(stats),
            series=[(m, s, cstar * f)]))

    ratios = [b / a if a > 0 else 0.0 for a, b in zip(stats, stats[1:])]
    trend = upper_check(
        "heat_closeness_trend",
        {"ms": ms, "k": k_radius, "statistics": stats, "direction": "upper"},
        statistic=max(ratios) if ratios else 0.0, bound=1.0, tolerance=0.0,
        series=[(m, s, s) for m, s in zip(ms, stats)])
    return reports, trend


def heat_closeness_affine_fit(ms: Sequence[float], ks: Sequence[float],
                              problem: PMEProblem, grid, config: SchemeConfig,
                              residual_bound: float = 0.15) -> CheckReport:
    """Fit the (m, k) sweep of max-over-time L2 distances to a (m-1) + b/k + c.

    Growing the integration ball can only grow the statistic, so
    monotonicity in k is not implied; what the bound's shape does predict is
    an affine dependence on (m-1) and 1/k.  The check fits that model by
    least squares and requires the relative rms residual to be small.
    """
    ms = [float(m) for m in ms]
    ks = sorted(float(k) for k in ks)
    if len(ms) < 2 or len(ks) < 2:
        raise ValueError("affine fit needs at least two exponents and two radii")
    rows = []
    for m in ms:
        prob_m = replace(problem, m=m)
        dt = stable_timestep(prob_m, grid, config)
        shared = replace(config, dt_override=dt)
        upme = solve_pme(prob_m, grid, shared)
        uheat = solve_heat(prob_m, grid, shared)
        for k in ks:
            dists = [ball_l2_distance(v, u, k)
                     for u, v in zip(upme.fields, uheat.fields) if u.t > problem.t0]
            rows.append((m, k, max(dists)))
    design = np.array([[m - 1.0, 1.0 / k, 1.0] for m, k, _ in rows])
    target = np.array([s for _, _, s in rows])
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = design @ coef - target
    scale = max(target.max(), 1e-300)
    rel_rms = float(np.sqrt((residual**2).mean()) / scale)
    series = [(m, s, float(d @ coef)) for (m, _, s), d in zip(rows, design)]
    return upper_check(
        "heat_closeness_affine_fit",
        {"ms": ms, "ks": ks, "coefficients": [float(c) for c in coef],
         "statistics": [float(s) for s in target], "direction": "upper"},
        statistic=rel_rms, bound=0.0, tolerance=residual_bound, series=series)


# ---------------------------------------------------------------------------
# negative controls: constructed violations that must FAIL their checks
# ---------------------------------------------------------------------------

def control_mislabeled_exponent(fields: Sequence[Field], true_m: float,
                                label_m: float = 5.0,
                                tolerance: float | None = None) -> CheckReport:
    """Run the time-derivative bound with a wrong exponent label.

    A run with true exponent m violates the bound labeled m' as soon as
    1/(m'-1) < lam(m): the center of a source-type solution decays at rate
    -lam(m)/t, faster than the mislabeled allowance.
    """
    report = check_time_derivative(fields, label_m, tolerance=tolerance)
    params = dict(report.params)
    params.update({"true_m": true_m, "mislabeled_m": label_m})
    return CheckReport("control_mislabeled_exponent", params, report.statistic,
                       report.bound, report.tolerance, report.direction, report.series)


def control_frozen_snapshot(field: Field, m: float, h: float, M: float,
                            relabel_factor: float = 100.0) -> CheckReport:
    """Relabel a frozen snapshot at a much later time.

    The gradient-decay statistic grows linearly in the claimed time, so a
    frozen field relabeled far enough in the future must violate the bound:
    on true trajectories the gradient decay compensates, here it cannot.
    """
    relabeled = field.relabeled(field.t * relabel_factor)
    report = check_gradient_decay([relabeled], m, h, M)
    params = dict(report.params)
    params.update({"original_t": field.t, "relabel_factor": relabel_factor})
    return CheckReport("control_frozen_snapshot", params, report.statistic,
                       report.bound, report.tolerance, report.direction, report.series)


def control_supercritical_exponent(levels: Sequence[Sequence[Field]],
                                   inv_h: float = 0.6,
                                   n_random: int = 100_000, seed: int = 0) -> CheckReport:
    """Run the modulus-stability scan with a spatial exponent steeper than the
    interface can support; nu_hat then grows under refinement and the scan
    must flag it."""
    report = check_holder_stability(levels, h=1.0 / inv_h,
                                    n_random=n_random, seed=seed)
    params = dict(report.params)
    params.update({"supercritical_inv_h": inv_h})
    return CheckReport("control_supercritical_exponent", params, report.statistic,
                       report.bound, report.tolerance, report.direction, report.series)
