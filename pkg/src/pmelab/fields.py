"""Uniform origin-centered grids, nonnegative sampled fields, and their plain-text format.

A field file is a header followed by one value per row (row-major for 2-D)::

    # pme-field
    # n 1
    # N 401
    # L 4.0
    # t 1.0
    0.0
    ...

Values are written with ``repr`` so a write/read round trip is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-L, L]^ndim, symmetric about the origin.

    ``npts`` is odd so that x = 0 is a sample point and symmetric data
    stays symmetric under the symmetric stencils.
    """

    ndim: int
    half_width: float
    npts: int

    def __post_init__(self):
        if self.ndim not in (1, 2):
            raise ValueError(f"grid dimension must be 1 or 2, got {self.ndim}")
        if self.half_width <= 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if self.npts < 3:
            raise ValueError(f"need at least 3 points per axis, got {self.npts}")
        if self.npts % 2 == 0:
            raise ValueError(f"points per axis must be odd, got {self.npts}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / (self.npts - 1)

    @property
    def shape(self) -> tuple:
        return (self.npts,) * self.ndim

    @property
    def cell_volume(self) -> float:
        return self.dx**self.ndim

    def axis(self) -> np.ndarray:
        """Coordinates along one axis."""
        return np.linspace(-self.half_width, self.half_width, self.npts)

    def radius(self) -> np.ndarray:
        """|x| at every grid point."""
        ax = self.axis()
        if self.ndim == 1:
            return np.abs(ax)
        return np.hypot(ax[:, None], ax[None, :])

    def points(self) -> np.ndarray:
        """Grid points, shape (npts,) in 1-D or (npts, npts, 2) in 2-D."""
        ax = self.axis()
        if self.ndim == 1:
            return ax
        xx, yy = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([xx, yy], axis=-1)

    def refined(self) -> "Grid":
        """Same domain with dx halved."""
        return Grid(self.ndim, self.half_width, 2 * self.npts - 1)


@dataclass
class Field:
    """A nonnegative solution snapshot on a grid at one time."""

    grid: Grid
    t: float
    values: np.ndarray
    _skip_checks: bool = dc_field(default=False, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid shape {self.grid.shape}")
        if not self._skip_checks:
            if not np.all(np.isfinite(self.values)):
                raise ValueError("field contains non-finite values")
            if self.values.min() < 0.0:
                raise ValueError(f"field contains negative values (min {self.values.min()})")

    def mass(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)

    def sup(self) -> float:
        return float(self.values.max())

    def relabeled(self, t: float) -> "Field":
        """Same data stamped with a different time (used by negative controls)."""
        return Field(self.grid, t, self.values.copy())

    def copy(self) -> "Field":
        return Field(self.grid, self.t, self.values.copy())


def gradient(values: np.ndarray, dx: float) -> np.ndarray:
    """Centered-difference gradient; one-sided at the domain edge.

    Returns shape (ndim,) + values.shape.
    """
    return np.stack(np.gradient(values, dx), axis=0) if values.ndim > 1 else \
        np.gradient(values, dx)[None, :]


def gradient_magnitude(values: np.ndarray, dx: float) -> np.ndarray:
    g = gradient(values, dx)
    return np.sqrt((g * g).sum(axis=0))


def laplacian(values: np.ndarray, dx: float) -> np.ndarray:
    """Centered 3-point (5-point in 2-D) Laplacian on interior cells.

    Edge cells are filled with the adjacent interior value; estimate scans
    never use them (they stay away from the domain boundary).
    """
    out = np.empty_like(values)
    inv = 1.0 / (dx * dx)
    if values.ndim == 1:
        out[1:-1] = ((values[2:] + values[:-2]) - 2.0 * values[1:-1]) * inv
        out[0] = out[1]
        out[-1] = out[-2]
        return out
    core = ((values[2:, 1:-1] + values[:-2, 1:-1]) - 2.0 * values[1:-1, 1:-1]) * inv
    core = core + ((values[1:-1, 2:] + values[1:-1, :-2]) - 2.0 * values[1:-1, 1:-1]) * inv
    out[1:-1, 1:-1] = core
    out[0, :] = out[1, :]
    out[-1, :] = out[-2, :]
    out[:, 0] = out[:, 1]
    out[:, -1] = out[:, -2]
    return out


def write_field(path: str | Path, fld: Field) -> None:
    lines = [
        "# pme-field",
        f"# n {fld.grid.ndim}",
        f"# N {fld.grid.npts}",
        f"# L {fld.grid.half_width!r}",
        f"# t {fld.t!r}",
    ]
    lines.extend(repr(float(v)) for v in fld.values.ravel())
    Path(path).write_text("\n".join(lines) + "\n")


def read_field(path: str | Path) -> Field:
    text = Path(path).read_text().splitlines()
    header: dict[str, str] = {}
    rows: list[float] = []
    for line in text:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2:
                header[parts[0]] = parts[1]
            continue
        rows.append(float(line))
    for key in ("n", "N", "L", "t"):
        if key not in header:
            raise ValueError(f"field file {path}: missing header line '# {key} ...'")
    grid = Grid(int(header["n"]), float(header["L"]), int(header["N"]))
    values = np.asarray(rows, dtype=float)
    if values.size != int(np.prod(grid.shape)):
        raise ValueError(
            f"field file {path}: expected {int(np.prod(grid.shape))} samples, got {values.size}")
    return Field(grid, float(header["t"]), values.reshape(grid.shape))
