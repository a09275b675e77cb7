"""pmelab: a desk-scale laboratory for the degenerate diffusion equation
u_t = lap(u^m).

Subpackages and modules:

* ``analytic``      closed-form reference solutions and constants
* ``solver``        explicit conservative finite-difference solver
* ``free_boundary`` positivity set, support radius, persistence, tangency
* ``surface``       the graph surface of u^beta and its metric diagnostics
* ``harness``       named numerical checks of the a-priori estimates
* ``inequalities``  property kit for the elementary inequalities
* ``kernels``       compiled/reference stencil backends
* ``cli``           command-line front end (``pmelab`` entry point)
"""

from .kernels import BACKEND as kernel_backend  # noqa: F401

__version__ = "0.1.0"
