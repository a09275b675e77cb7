"""Numpy reference implementation of the explicit conservative stepper.

Kept arithmetically identical to the compiled kernels (same expression trees)
so the two backends agree to rounding.
"""

from __future__ import annotations

import numpy as np


def _laplacian_1d(w: np.ndarray, lap: np.ndarray, zero_flux: bool) -> None:
    lap[1:-1] = (w[2:] + w[:-2]) - 2.0 * w[1:-1]
    if zero_flux:
        lap[0] = w[1] - w[0]
        lap[-1] = w[-2] - w[-1]
    else:
        lap[0] = w[1] - 2.0 * w[0]
        lap[-1] = w[-2] - 2.0 * w[-1]


def _laplacian_axis0(w: np.ndarray, lap: np.ndarray, zero_flux: bool) -> None:
    lap[1:-1, :] = (w[2:, :] + w[:-2, :]) - 2.0 * w[1:-1, :]
    if zero_flux:
        lap[0, :] = w[1, :] - w[0, :]
        lap[-1, :] = w[-2, :] - w[-1, :]
    else:
        lap[0, :] = w[1, :] - 2.0 * w[0, :]
        lap[-1, :] = w[-2, :] - 2.0 * w[-1, :]


def advance(u: np.ndarray, m: float, nu: float, nsteps: int, zero_flux: bool) -> None:
    w = np.empty_like(u)
    lap = np.empty_like(u)
    if u.ndim == 2:
        lap2 = np.empty_like(u)
    for _ in range(nsteps):
        if m == 1.0:
            np.copyto(w, u)
        elif m == 2.0:
            np.multiply(u, u, out=w)
        else:
            np.power(u, m, out=w)
        if u.ndim == 1:
            _laplacian_1d(w, lap, zero_flux)
            u += nu * lap
        else:
            _laplacian_axis0(w, lap, zero_flux)
            _laplacian_axis0(w.T, lap2.T, zero_flux)
            u += nu * (lap + lap2)
