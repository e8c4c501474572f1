"""
Riesz products on the circle and on the unit sphere of C^2.

Modules: ``poly`` (sparse polynomials and exact sphere integrals),
``circle`` (classical Riesz products), ``harmonics`` (H(p, q) bases and
projections), ``sphere`` (Riesz triples and their products), ``rw``
(Ryll-Wojtaszczyk candidates), ``estimators`` (dimension estimates and
pluriharmonic torus measures) and ``cli``.
"""
__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402,F401
