"""Stencil kernels for the explicit time stepper.

Two interchangeable backends:

* ``compiled`` -- Cython loops (``pmelab.kernels._stencils``), built at install
  time when a C compiler is available;
* ``reference`` -- vectorized numpy, always available.

The fastest available backend is selected at import.  ``advance`` runs
``nsteps`` explicit conservative steps in place:

    u <- u + nu * lap(u^m)     with nu = dt/dx^2

Zero-flux boundaries mirror the flux (discrete mass telescopes exactly);
zero-value boundaries pad with w = 0 (mass may leak, by design).
"""

from __future__ import annotations

import os

import numpy as np

from . import _reference

try:
    from . import _stencils  # type: ignore[attr-defined]

    _HAVE_COMPILED = True
except ImportError:  # pragma: no cover - depends on install environment
    _stencils = None
    _HAVE_COMPILED = False

BACKEND = "compiled" if _HAVE_COMPILED else "reference"

_forced = os.environ.get("PMELAB_BACKEND")
if _forced:
    if _forced not in ("compiled", "reference"):
        raise RuntimeError(f"PMELAB_BACKEND must be 'compiled' or 'reference', got {_forced!r}")
    if _forced == "compiled" and not _HAVE_COMPILED:
        raise RuntimeError("PMELAB_BACKEND=compiled, but the compiled kernels are not built")
    BACKEND = _forced


def available_backends() -> tuple[str, ...]:
    return ("compiled", "reference") if _HAVE_COMPILED else ("reference",)


def advance(u: np.ndarray, m: float, nu: float, nsteps: int,
            zero_flux: bool = True, backend: str | None = None) -> None:
    """Advance ``u`` in place by ``nsteps`` explicit steps.

    ``backend`` forces a specific implementation (used by the equivalence
    tests and the benchmark); the default is the module-level selection.
    """
    if nsteps <= 0:
        return
    name = BACKEND if backend is None else backend
    if name == "reference":
        _reference.advance(u, m, nu, nsteps, zero_flux)
    elif name == "compiled":
        if not _HAVE_COMPILED:
            raise RuntimeError("compiled kernels are not available in this installation")
        if u.ndim == 1:
            _stencils.pme_steps_1d(u, m, nu, nsteps, zero_flux)
        else:
            _stencils.pme_steps_2d(u, m, nu, nsteps, zero_flux)
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
