"""Explicit conservative finite-difference solver for u_t = lap(u^m), m >= 1.

The scheme updates u with the flux form of lap(u^m) so the discrete sum
``sum(u) dx^n`` telescopes exactly under zero-flux boundaries, making mass
conservation a machine-precision statement.  The regularized problem
(initial data u0 + eta) runs through the same stepper; ``eta_continuation``
drives eta -> 0 and reports the successive differences.

``m = 1`` is the linear heat equation and shares the identical code path, so
a heat run and an m = 1 run on the same configuration produce bit-identical
trajectories.

A single run is sequential and deterministic.  Distinct runs share no mutable
state and may execute concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace
from typing import Sequence

import numpy as np

from . import kernels
from .analytic import BarenblattSpec, barenblatt_constant_for_mass, barenblatt_field
from .fields import Field, Grid, read_field


class InstabilityError(RuntimeError):
    """The explicit step produced a negative, NaN, or overflowing value."""


class DomainTooSmallError(RuntimeError):
    """The support (or a non-negligible amount of mass) reached the domain boundary."""


class ContinuationError(RuntimeError):
    """The eta -> 0 continuation did not produce decreasing differences."""


@dataclass(frozen=True)
class SchemeConfig:
    """Knobs of the explicit scheme.

    ``boundary`` is ``"zero-flux"`` (mirrored flux, conservative) or
    ``"zero-value"`` (absorbing, mass may leak).  ``boundary_tolerance``
    scales the zero-flux monitor that aborts a run whose boundary cells move
    by more than ``boundary_tolerance * M``.
    """

    cfl_safety: float = 0.9
    boundary: str = "zero-flux"
    dt_override: float | None = None
    backend: str | None = None
    monitor_interval: int = 256
    boundary_tolerance: float = 1e-12

    def __post_init__(self):
        if not (0.0 < self.cfl_safety <= 1.0):
            raise ValueError(f"cfl_safety must be in (0, 1], got {self.cfl_safety}")
        if self.boundary not in ("zero-flux", "zero-value"):
            raise ValueError(f"boundary must be 'zero-flux' or 'zero-value', got {self.boundary!r}")

    @property
    def zero_flux(self) -> bool:
        return self.boundary == "zero-flux"


@dataclass(frozen=True)
class PMEProblem:
    """Full specification of a Cauchy run.

    ``initial`` is a mapping with an ``kind`` key: ``barenblatt`` (params
    ``C`` or ``mass``, optional ``offset``), ``gaussian`` (``amplitude``,
    ``sigma``), ``bump`` (``amplitude``, ``radius``), or ``file``
    (``path``).  ``M`` optionally declares the sup of the raw initial data;
    the sampled data must not exceed it.
    """

    m: float
    initial: dict
    t0: float
    t1: float
    snapshot_times: tuple[float, ...]
    eta: float = 0.0
    M: float | None = None

    def __post_init__(self):
        if self.m < 1.0:
            raise ValueError(f"exponent must satisfy m >= 1 (m = 1 is the heat case), got {self.m}")
        if self.eta < 0.0:
            raise ValueError(f"regularization level must be >= 0, got {self.eta}")
        if not (self.t1 > self.t0 >= 0.0):
            raise ValueError(f"need t1 > t0 >= 0, got t0={self.t0}, t1={self.t1}")
        times = tuple(float(t) for t in self.snapshot_times)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("snapshot times must be strictly increasing")
        if times and (times[0] < self.t0 - 1e-12 or times[-1] > self.t1 + 1e-12):
            raise ValueError(f"snapshot times must lie in [{self.t0}, {self.t1}]")
        object.__setattr__(self, "snapshot_times", times)


@dataclass
class Trajectory:
    """Snapshots of one run plus its running diagnostics."""

    problem: PMEProblem
    grid: Grid
    config: SchemeConfig
    fields: list[Field]
    diagnostics: dict = dc_field(default_factory=dict)

    @property
    def times(self) -> list[float]:
        return [f.t for f in self.fields]

    @property
    def m(self) -> float:
        return self.problem.m


def _initial_values(problem: PMEProblem, grid: Grid) -> np.ndarray:
    spec = dict(problem.initial)
    kind = spec.pop("kind", None)
    if kind == "barenblatt":
        offset = float(spec.pop("offset", 0.0))
        if "C" in spec:
            C = float(spec.pop("C"))
            spec.pop("mass", None)
        elif "mass" in spec:
            C = barenblatt_constant_for_mass(float(spec.pop("mass")), problem.m, grid.ndim)
        else:
            raise ValueError("barenblatt initial data needs 'C' or 'mass'")
        bspec = BarenblattSpec(m=problem.m, n=grid.ndim, C=C, t0=offset)
        return barenblatt_field(grid, problem.t0, bspec).values
    if kind == "gaussian":
        amplitude = float(spec.pop("amplitude", 1.0))
        sigma = float(spec.pop("sigma", 1.0))
        if amplitude <= 0 or sigma <= 0:
            raise ValueError("gaussian initial data needs positive amplitude and sigma")
        r = grid.radius()
        return amplitude * np.exp(-(r * r) / (2.0 * sigma * sigma))
    if kind == "bump":
        amplitude = float(spec.pop("amplitude", 1.0))
        radius = float(spec.pop("radius", 1.0))
        if amplitude <= 0 or radius <= 0:
            raise ValueError("bump initial data needs positive amplitude and radius")
        r = grid.radius()
        return amplitude * np.clip(1.0 - (r / radius) ** 2, 0.0, None) ** 2
    if kind == "file":
        loaded = read_field(spec.pop("path"))
        if loaded.grid != grid:
            raise ValueError(
                f"file grid {loaded.grid} does not match run grid {grid}")
        return loaded.values.copy()
    raise ValueError(f"unknown initial-data kind {kind!r}")


def build_initial(problem: PMEProblem, grid: Grid) -> Field:
    """Sampled initial data u0 + eta at t = t0.

    Rejects data violating the admissibility conditions: negative samples,
    zero mass, or a sup exceeding the declared bound M.
    """
    base = _initial_values(problem, grid)
    if base.min() < 0.0:
        raise ValueError(f"initial data has a negative sample (min {base.min()})")
    if base.sum() <= 0.0:
        raise ValueError("initial data has zero mass")
    sup = float(base.max())
    if problem.M is not None and sup > problem.M * (1.0 + 1e-12):
        raise ValueError(f"initial data sup {sup} exceeds declared bound M={problem.M}")
    return Field(grid, problem.t0, base + problem.eta)


def _declared_sup(problem: PMEProblem, initial: Field) -> float:
    # sup of the raw data; the run's ceiling is M + eta
    measured = float(initial.values.max()) - problem.eta
    return problem.M if problem.M is not None else measured


def diffusivity_bound(m: float, sup: float) -> float:
    """Upper bound m * sup^(m-1) for the diffusivity of u_t = lap(u^m)."""
    return 1.0 if m == 1.0 else m * sup ** (m - 1.0)


def stable_timestep(problem: PMEProblem, grid: Grid, config: SchemeConfig,
                    initial: Field | None = None) -> float:
    """CFL-limited step: cfl_safety * dx^2 / (2 n * m * (M+eta)^(m-1)).

    A ``dt_override`` is accepted only if it does not exceed this bound.
    """
    if initial is None:
        initial = build_initial(problem, grid)
    sup = _declared_sup(problem, initial) + problem.eta
    allowed = config.cfl_safety * grid.dx**2 / (2.0 * grid.ndim * diffusivity_bound(problem.m, sup))
    if config.dt_override is not None:
        if config.dt_override > allowed * (1.0 + 1e-12):
            raise ValueError(
                f"dt_override {config.dt_override} exceeds the stability bound {allowed}")
        return float(config.dt_override)
    return float(allowed)


def step(fld: Field, m: float, dt: float, config: SchemeConfig = SchemeConfig(),
         enforce_stability: bool = True) -> Field:
    """One explicit step.  ``dt`` must respect the hard bound set by sup(u).

    ``enforce_stability=False`` skips the a-priori rejection so the
    a-posteriori positivity monitor can be observed catching a blow-up.
    """
    hard = fld.grid.dx**2 / (2.0 * fld.grid.ndim * diffusivity_bound(m, fld.sup()))
    if enforce_stability and dt > hard * (1.0 + 1e-12):
        raise ValueError(f"dt {dt} exceeds the hard stability bound {hard}")
    values = fld.values.copy()
    kernels.advance(values, m, dt / fld.grid.dx**2, 1,
                    zero_flux=config.zero_flux, backend=config.backend)
    _check_state(values, where=f"step from t={fld.t}")
    return Field(fld.grid, fld.t + dt, values)


def _check_state(values: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(values)):
        raise InstabilityError(f"non-finite value during {where}")
    if values.min() < 0.0:
        raise InstabilityError(
            f"negative value {values.min():.3e} during {where} (CFL bound violated?)")


def _boundary_view(values: np.ndarray) -> np.ndarray:
    if values.ndim == 1:
        return np.array([values[0], values[-1]])
    return np.concatenate([values[0, :], values[-1, :], values[:, 0], values[:, -1]])


def support_radius_estimate(values: np.ndarray, grid: Grid, floor: float) -> float:
    flagged = values > floor
    if not flagged.any():
        return 0.0
    return float(grid.radius()[flagged].max())


def predicted_support_radius(r0: float, t0: float, t1: float, m: float, n: int) -> float:
    """A-priori support growth r0 (t1/t0)^(1/(n(m-1)+2)), exact on the source solution."""
    return r0 * (t1 / t0) ** (1.0 / (n * (m - 1.0) + 2.0))


def solve_pme(problem: PMEProblem, grid: Grid, config: SchemeConfig = SchemeConfig()) -> Trajectory:
    """Run the explicit scheme, returning snapshots at the requested times.

    Raises ``DomainTooSmallError`` when the support would (a priori) or does
    (boundary monitor) reach the truncated domain, and ``InstabilityError``
    on any negative/non-finite state.
    """
    initial = build_initial(problem, grid)
    M = _declared_sup(problem, initial)
    dt = stable_timestep(problem, grid, config, initial=initial)

    # a-priori domain check for degenerate, compactly supported, unregularized runs
    if problem.m > 1.0 and problem.eta == 0.0 and problem.t0 > 0.0:
        r0 = support_radius_estimate(initial.values, grid, 1e-12 * max(M, 1e-300))
        if r0 < grid.half_width - 2 * grid.dx:
            r_pred = predicted_support_radius(r0, problem.t0, problem.t1, problem.m, grid.ndim)
            if r_pred >= grid.half_width:
                raise DomainTooSmallError(
                    f"predicted support radius {r_pred:.3g} at t1={problem.t1} reaches "
                    f"half-width {grid.half_width}; enlarge the domain")

    boundary_baseline = _boundary_view(initial.values)
    boundary_budget = config.boundary_tolerance * max(M, 1e-300)

    u = initial.values.copy()
    inv_dx2 = 1.0 / grid.dx**2
    snapshots: list[Field] = []
    times = list(problem.snapshot_times) or [problem.t1]
    mass_series: list[float] = []
    sup_series: list[float] = []
    boundary_series: list[float] = []
    nsteps_total = 0

    def record(t: float) -> None:
        fld = Field(grid, t, u.copy())
        snapshots.append(fld)
        mass_series.append(fld.mass())
        sup_series.append(fld.sup())
        boundary_series.append(float(np.abs(_boundary_view(u) - boundary_baseline).max()))

    t_cur = problem.t0
    if times[0] <= problem.t0 + 1e-15:
        record(problem.t0)
        times = times[1:]

    for t_next in times:
        segment = t_next - t_cur
        nsteps = max(1, math.ceil(segment / dt - 1e-9))
        dt_seg = segment / nsteps
        nu = dt_seg * inv_dx2
        done = 0
        while done < nsteps:
            chunk = min(config.monitor_interval, nsteps - done)
            kernels.advance(u, problem.m, nu, chunk,
                            zero_flux=config.zero_flux, backend=config.backend)
            done += chunk
            _check_state(u, where=f"advance to t={t_next}")
            if config.zero_flux:
                drift = np.abs(_boundary_view(u) - boundary_baseline).max()
                if drift > boundary_budget:
                    raise DomainTooSmallError(
                        f"boundary cells moved by {drift:.3e} (> {boundary_budget:.3e}) "
                        f"near t={t_cur + done * dt_seg:.6g}; support reached the domain edge")
        nsteps_total += nsteps
        t_cur = t_next
        record(t_cur)

    return Trajectory(
        problem=problem, grid=grid, config=config, fields=snapshots,
        diagnostics={
            "dt": dt,
            "nsteps": nsteps_total,
            "initial_mass": initial.mass(),
            "initial_sup": float(initial.values.max()),
            "declared_sup": M,
            "mass_series": mass_series,
            "sup_series": sup_series,
            "boundary_drift_series": boundary_series,
            "backend": config.backend or kernels.BACKEND,
        })


def solve_heat(problem: PMEProblem, grid: Grid, config: SchemeConfig = SchemeConfig()) -> Trajectory:
    """Heat-equation run with the matched linear stencil (the m = 1 code path)."""
    return solve_pme(replace(problem, m=1.0), grid, config)


@dataclass
class EtaContinuationResult:
    etas: tuple[float, ...]
    trajectories: list[Trajectory]
    difference_norms: list[float]
    pointwise_ordered: bool

    @property
    def trajectory(self) -> Trajectory:
        """The run at the smallest eta: the continuation's answer."""
        return self.trajectories[-1]

    @property
    def converged(self) -> bool:
        d = self.difference_norms
        return all(b < a for a, b in zip(d, d[1:]))


def eta_continuation(problem: PMEProblem, grid: Grid, config: SchemeConfig,
                     etas: Sequence[float],
                     require_convergence: bool = True) -> EtaContinuationResult:
    """Run the regularized problem along a decreasing eta sequence.

    All runs share one time step (the stability bound of the largest eta) so
    the discrete comparison principle applies across runs; successive L1
    differences at t1 must decrease.
    """
    etas = tuple(float(e) for e in etas)
    if not etas or any(e <= 0 for e in etas):
        raise ValueError("eta sequence must be nonempty and positive")
    if any(b >= a for a, b in zip(etas, etas[1:])):
        raise ValueError("eta sequence must be strictly decreasing")

    dt_shared = min(
        stable_timestep(replace(problem, eta=e), grid, config) for e in etas)
    shared_config = replace(config, dt_override=dt_shared)

    runs = [solve_pme(replace(problem, eta=e), grid, shared_config) for e in etas]

    vol = grid.cell_volume
    diffs = [
        float(np.abs(a.fields[-1].values - b.fields[-1].values).sum() * vol)
        for a, b in zip(runs, runs[1:])
    ]
    scale = max(f.sup() for r in runs for f in r.fields)
    ordered = all(
        float((a.fields[k].values - b.fields[k].values).min()) >= -1e-13 * scale
        for a, b in zip(runs, runs[1:]) for k in range(len(a.fields)))

    result = EtaContinuationResult(etas=etas, trajectories=runs,
                                   difference_norms=diffs, pointwise_ordered=ordered)
    if require_convergence and len(diffs) > 1 and not result.converged:
        raise ContinuationError(
            f"difference norms not strictly decreasing: {diffs}")
    return result
