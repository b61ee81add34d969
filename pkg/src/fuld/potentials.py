"""Objective functions ("potentials") with checked analytic gradients.

Built-ins cover the experiment suite: the quartic double-well
``x**4/4 - x**2/2``, the pure quartic ``x**4/4``, and the Cauchy log-density
well ``-log(1/pi * 1/(1+x**2))``.  User potentials register through
:func:`register_potential`, which enforces the finite-difference gradient
check at registration time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Potential",
    "register_potential",
    "get_potential",
    "registered_names",
    "check_gradient",
]


@dataclass(frozen=True)
class Potential:
    name: str
    dim: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    analytic: bool = True


def check_gradient(
    pot: Potential, rng: np.random.Generator, n_probes: int = 16, rtol: float = 1e-5
) -> None:
    """Central finite differences of ``value`` must match ``gradient``.

    Probes are drawn uniformly from [-2, 2]^d; relative tolerance refers to
    the gradient scale at each probe.
    """
    h = 1e-6
    for _ in range(n_probes):
        x = rng.uniform(-2.0, 2.0, size=pot.dim)
        g = np.asarray(pot.gradient(x), dtype=float)
        fd = np.empty_like(g)
        for i in range(pot.dim):
            e = np.zeros(pot.dim)
            e[i] = h
            fd[i] = (pot.value(x + e) - pot.value(x - e)) / (2.0 * h)
        scale = max(np.max(np.abs(g)), 1.0)
        if np.max(np.abs(fd - g)) > rtol * scale:
            raise ValueError(
                f"gradient of potential {pot.name!r} disagrees with finite "
                f"differences at x = {x}"
            )


_REGISTRY: dict[str, Callable[[int], Potential]] = {}


def register_potential(
    name: str,
    value: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    analytic: bool = True,
) -> None:
    """Register a dimension-generic potential under ``name``.

    The gradient check runs immediately on a 1-d and a 3-d instance.
    """

    def factory(dim: int) -> Potential:
        return Potential(name, dim, value, gradient, analytic)

    rng = np.random.default_rng(20_240_501)
    for d in (1, 3):
        check_gradient(factory(d), rng)
    _REGISTRY[name] = factory


def get_potential(name: str, dim: int = 1) -> Potential:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(
            f"unknown potential {name!r}; registered: {sorted(_REGISTRY)}"
        ) from None
    return factory(dim)


def registered_names() -> list[str]:
    return sorted(_REGISTRY)


def _quartic_well_value(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sum(x**4 / 4.0 - x**2 / 2.0))


def _quartic_well_grad(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x**3 - x


def _pure_quartic_value(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sum(x**4 / 4.0))


def _pure_quartic_grad(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x**3


def _cauchy_log_value(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sum(np.log(np.pi) + np.log1p(x**2)))


def _cauchy_log_grad(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return 2.0 * x / (1.0 + x**2)


register_potential("quartic-well", _quartic_well_value, _quartic_well_grad)
register_potential("pure-quartic", _pure_quartic_value, _pure_quartic_grad)
register_potential("cauchy-log", _cauchy_log_value, _cauchy_log_grad)
