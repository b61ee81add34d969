"""Heavy-tailed Langevin dynamics toolkit.

Modules: ``stable`` (alpha-stable sampling and densities), ``special``
(hypergeometric drift and spectral Riesz derivative), ``kinetic``
(kinetic-energy tables), ``potentials`` (checked objectives), ``dynamics``
(Euler-Maruyama integrators), ``measure`` (ergodic diagnostics), ``optim``
(the momentum optimizer and a desk-scale model), ``cli`` (experiment harness).
"""

from . import dynamics, kinetic, measure, optim, potentials, special, stable
from .stable import AlphaStable

__all__ = [
    "AlphaStable",
    "dynamics",
    "kinetic",
    "measure",
    "optim",
    "potentials",
    "special",
    "stable",
]

__version__ = "0.1.0"
