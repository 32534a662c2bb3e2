"""Numerical laboratory for truncated Maass-Selberg machinery on SL(n).

Subpackages:

* ``weyl``       exact root-system / Weyl-group combinatorics
* ``xifunc``     completed zeta, c-function, special-function backends
* ``intertwine`` intertwining coefficients M(w, lambda)
* ``msrel``      the Maass-Selberg double Weyl sum and its limits
* ``mellin``     test functions, Mellin transforms, saddle asymptotics
* ``contour``    vertical-line quadrature and the headline pipelines
* ``cancel``     mechanized singularity-cancellation checks
* ``lattice``    primitive-sublattice enumeration and Monte Carlo oracles
* ``cli``        the ``ms-lab`` command-line front end
"""

__version__ = "0.1.0"
