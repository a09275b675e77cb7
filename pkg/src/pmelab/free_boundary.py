"""Positivity set H(t) = {u > threshold}, its radius, persistence, and tangency.

The exact positivity set is replaced by a thresholded one (default cutoff
1e-10 * M): floating-point underflow and scheme noise make exact-zero tests
meaningless.  The discrete interface is the set of flagged cells with an
unflagged 2n-neighbor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fields import Field, Grid, gradient_magnitude


DEFAULT_THRESHOLD_FACTOR = 1e-10


def default_threshold(sup_bound: float) -> float:
    return DEFAULT_THRESHOLD_FACTOR * sup_bound


@dataclass
class PositivityMask:
    grid: Grid
    t: float
    flags: np.ndarray
    threshold: float

    def is_empty(self) -> bool:
        return not bool(self.flags.any())

    def is_full(self) -> bool:
        return bool(self.flags.all())


def positivity_set(field: Field, threshold: float | None = None) -> PositivityMask:
    """Thresholded positivity set of a snapshot."""
    if threshold is None:
        threshold = default_threshold(field.sup() if field.sup() > 0 else 1.0)
    if threshold <= 0:
        raise ValueError(f"positivity threshold must be > 0, got {threshold}")
    return PositivityMask(field.grid, field.t, field.values > threshold, float(threshold))


def erode(flags: np.ndarray, times: int = 1) -> np.ndarray:
    """Peel ``times`` rings off a mask (2n-neighborhood; the domain edge is
    treated as a mirror so a full mask stays full)."""
    out = flags.copy()
    for _ in range(times):
        nxt = out.copy()
        if out.ndim == 1:
            nxt[1:-1] &= out[2:] & out[:-2]
            nxt[0] &= out[1]
            nxt[-1] &= out[-2]
        else:
            nxt[1:-1, :] &= out[2:, :] & out[:-2, :]
            nxt[0, :] &= out[1, :]
            nxt[-1, :] &= out[-2, :]
            nxt[:, 1:-1] &= out[:, 2:] & out[:, :-2]
            nxt[:, 0] &= out[:, 1]
            nxt[:, -1] &= out[:, -2]
        out = nxt
    return out


def boundary_flags(mask: PositivityMask) -> np.ndarray:
    """Flagged cells adjacent (2n-neighborhood) to an unflagged cell."""
    return mask.flags & ~erode(mask.flags)


@dataclass
class SupportStats:
    radius: float
    boundary_cells: np.ndarray  # index array, shape (k, ndim)


def support_radius_numeric(mask: PositivityMask) -> SupportStats:
    """Outer radius sup{|x| : flagged} and the discrete interface cells."""
    if mask.is_empty():
        raise ValueError("cannot measure the support radius of an empty mask")
    radius = float(mask.grid.radius()[mask.flags].max())
    cells = np.argwhere(boundary_flags(mask))
    return SupportStats(radius=radius, boundary_cells=cells)


@dataclass
class PersistenceReport:
    passed: bool
    violation_count: int
    first_violation: tuple | None  # (t_earlier, t_later, cell index)


def persistence_check(fields: Sequence[Field], threshold: float) -> PersistenceReport:
    """Once positive, always positive: masks must be nested increasing in time.

    Violations are report content, not faults.
    """
    if len(fields) < 2:
        raise ValueError("persistence check needs at least two snapshots")
    masks = [positivity_set(f, threshold) for f in fields]
    count = 0
    first = None
    for a, b in zip(masks, masks[1:]):
        lost = a.flags & ~b.flags
        n = int(lost.sum())
        if n and first is None:
            first = (a.t, b.t, tuple(int(i) for i in np.argwhere(lost)[0]))
        count += n
    return PersistenceReport(passed=(count == 0), violation_count=count,
                             first_violation=first)


@dataclass
class TangencyResult:
    max_boundary_gradient: float
    beta: float
    h: float
    in_hypothesis: bool  # beta > h required for the vanishing-gradient statement


def write_mask(path, mask: PositivityMask) -> None:
    """Dump a mask (1.0 inside, 0.0 outside) in the field table format."""
    from .fields import write_field

    write_field(path, Field(mask.grid, mask.t, mask.flags.astype(float)))


def write_interface(path, mask: PositivityMask) -> None:
    """Dump the discrete interface indicator in the field table format."""
    from .fields import write_field

    write_field(path, Field(mask.grid, mask.t, boundary_flags(mask).astype(float)))


def tangency_profile(field: Field, beta: float, mask: PositivityMask,
                     h: float) -> TangencyResult:
    """Largest |grad(u^beta)| over the discrete interface cells.

    For beta > h this must decrease under grid refinement (the surface
    u^beta is tangent to the zero plane at the interface); beta <= h is
    flagged as out-of-hypothesis, where the statistic need not vanish.
    """
    phi = np.where(mask.flags, field.values, 0.0) ** beta
    gmag = gradient_magnitude(phi, field.grid.dx)
    b = boundary_flags(mask)
    value = float(gmag[b].max()) if b.any() else 0.0
    return TangencyResult(max_boundary_gradient=value, beta=float(beta), h=float(h),
                          in_hypothesis=beta > h)
