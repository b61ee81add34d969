"""Ergodic averages, weighted histograms, and comparison against Gibbs targets.

The empirical measure of a trajectory weights each recorded state by its step
size, so decaying-step runs produce the correct time average.  Out-of-range
mass is kept in explicit underflow/overflow bins rather than silently clipped,
which matters for heavy-tailed runs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.signal import find_peaks

from .dynamics import StepSchedule
from .potentials import Potential

__all__ = [
    "EmpiricalMeasure",
    "GibbsTarget",
    "ergodic_average",
    "histogram",
    "histogram2d",
    "tv_distance",
    "modes",
    "ks_statistic",
]


@dataclass
class EmpiricalMeasure:
    """Step-size-weighted histogram with explicit out-of-range mass."""

    edges: np.ndarray
    weights: np.ndarray
    under_weight: float
    over_weight: float

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum() + self.under_weight + self.over_weight)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def normalized(self) -> np.ndarray:
        """Bin probabilities including out-of-range mass in the normalizer."""
        total = self.total_weight
        if total == 0.0:
            return np.zeros_like(self.weights)
        return self.weights / total

    @property
    def overflow_fraction(self) -> float:
        total = self.total_weight
        if total == 0.0:
            return 0.0
        return (self.under_weight + self.over_weight) / total


def ergodic_average(
    trajectory: np.ndarray, schedule: StepSchedule, h: Callable[[np.ndarray], np.ndarray]
) -> float:
    """Step-size-weighted trajectory average of the test function ``h``.

    Computes ``sum_k eta_k h(x_k) / sum_k eta_k`` over the recorded states;
    with constant steps this is the plain mean.
    """
    xs = np.asarray(trajectory, dtype=float)
    if xs.size == 0:
        raise ValueError("trajectory must be nonempty")
    etas = schedule.etas(xs.shape[0])
    values = np.asarray(h(xs), dtype=float).reshape(xs.shape[0], -1)[:, 0]
    if not np.isfinite(values).all():
        raise ValueError("test function produced non-finite values on the trajectory")
    return float(np.sum(etas * values) / np.sum(etas))


def histogram(
    trajectory: np.ndarray,
    edges: np.ndarray,
    schedule: StepSchedule | None = None,
    warn_overflow: float = 0.01,
) -> EmpiricalMeasure:
    """Step-size-weighted histogram of scalar samples.

    ``edges`` must be strictly increasing; samples outside accumulate into
    the under/overflow weights and a warning fires when that exceeds
    ``warn_overflow`` of the total mass.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("edges must be a strictly increasing 1-d array")
    xs = np.asarray(trajectory, dtype=float).reshape(-1)
    etas = (
        np.full(xs.size, 1.0)
        if schedule is None
        else schedule.etas(xs.size)
    )
    under = xs < edges[0]
    over = xs >= edges[-1]
    inside = ~(under | over)
    weights, _ = np.histogram(xs[inside], bins=edges, weights=etas[inside])
    m = EmpiricalMeasure(
        edges=edges,
        weights=weights,
        under_weight=float(etas[under].sum()),
        over_weight=float(etas[over].sum()),
    )
    if m.total_weight > 0 and m.overflow_fraction > warn_overflow:
        warnings.warn(
            f"{100 * m.overflow_fraction:.2f}% of the mass fell outside the bins",
            stacklevel=2,
        )
    return m


def histogram2d(
    xs: np.ndarray, vs: np.ndarray, x_edges: np.ndarray, v_edges: np.ndarray,
    schedule: StepSchedule | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Phase-space histogram (weights matrix, x_edges, v_edges)."""
    xs = np.asarray(xs, float).reshape(-1)
    vs = np.asarray(vs, float).reshape(-1)
    etas = np.full(xs.size, 1.0) if schedule is None else schedule.etas(xs.size)
    H, xe, ve = np.histogram2d(xs, vs, bins=[x_edges, v_edges], weights=etas)
    return H, xe, ve


class GibbsTarget:
    """Normalized density exp(-beta f(x)) / Z for a one-dimensional potential.

    Z is computed by adaptive quadrature on [-L, L] with L grown until the
    boundary integrand falls below 1e-14 of the peak.
    """

    def __init__(self, potential: Potential, beta: float = 1.0):
        if potential.dim != 1:
            raise ValueError("GibbsTarget is one-dimensional")
        if beta <= 0.0:
            raise ValueError("beta must be positive")
        self.potential = potential
        self.beta = beta
        f0 = min(
            potential.value(np.array([x]))
            for x in np.linspace(-5.0, 5.0, 2001)
        )
        self._f_min = f0
        L = 2.0
        peak = 1.0
        while True:
            edge = self._unnormalized(np.array([L]))[0]
            if edge < 1e-14 * peak:
                break
            L *= 2.0
            if L > 1e6:
                raise ValueError("potential tails too heavy to normalize")
        self.half_width = L
        self.z, _ = quad(lambda x: self._unnormalized(np.array([x]))[0], -L, L, limit=400)

    def _unnormalized(self, x: np.ndarray) -> np.ndarray:
        vals = np.array([self.potential.value(np.array([xi])) for xi in np.atleast_1d(x)])
        return np.exp(-self.beta * (vals - self._f_min))

    def density(self, x) -> np.ndarray:
        return self._unnormalized(np.asarray(x, float)) / self.z

    def bin_probabilities(self, edges: np.ndarray) -> np.ndarray:
        """Exact bin masses by per-bin quadrature."""
        edges = np.asarray(edges, dtype=float)
        masses = np.empty(edges.size - 1)
        for i in range(edges.size - 1):
            masses[i], _ = quad(
                lambda x: float(self.density(np.array([x]))[0]), edges[i], edges[i + 1],
                limit=100,
            )
        return masses

    def expectation(self, h: Callable[[np.ndarray], np.ndarray]) -> float:
        """Quadrature expectation of a test function under the target."""
        L = self.half_width
        val, _ = quad(
            lambda x: float(h(np.array([x]))[0] if np.ndim(h(np.array([x]))) else h(np.array([x])))
            * float(self.density(np.array([x]))[0]),
            -L,
            L,
            limit=400,
        )
        return val


def tv_distance(m: EmpiricalMeasure, target: GibbsTarget | np.ndarray) -> float:
    """Total-variation distance between the binned measure and the target.

    The target may be a :class:`GibbsTarget` (integrated over the same bins,
    with its out-of-range mass matched against the measure's overflow bins) or
    a precomputed probability vector over the same bins.  An empty measure is
    maximally distant from any target.
    """
    if m.total_weight == 0.0:
        return 1.0
    p_bins = m.normalized()
    p_under = m.under_weight / m.total_weight
    p_over = m.over_weight / m.total_weight
    if isinstance(target, GibbsTarget):
        q_bins = target.bin_probabilities(m.edges)
        q_out = max(1.0 - q_bins.sum(), 0.0)
        # split target out-of-range mass by side
        q_under = q_out / 2.0
        q_over = q_out / 2.0
    else:
        q_bins = np.asarray(target, dtype=float)
        if q_bins.shape != p_bins.shape:
            raise ValueError("target histogram shape mismatch")
        q_under = q_over = 0.0
    return 0.5 * (
        np.abs(p_bins - q_bins).sum()
        + abs(p_under - q_under)
        + abs(p_over - q_over)
    )


def modes(m: EmpiricalMeasure, min_prominence: float = 0.05, smooth_bins: int = 5) -> list[float]:
    """Bin centers of local maxima of the smoothed weights.

    Weights are smoothed by a centered moving average over ``smooth_bins``
    bins; peaks must exceed ``min_prominence`` times the smoothed maximum.
    """
    w = m.weights.astype(float)
    if w.size == 0 or w.sum() == 0.0:
        return []
    kernel = np.ones(smooth_bins) / smooth_bins
    smoothed = np.convolve(w, kernel, mode="same")
    peaks, _ = find_peaks(smoothed, prominence=min_prominence * smoothed.max())
    return sorted(float(c) for c in m.centers[peaks])


def ks_statistic(samples: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Sup-norm distance between the empirical CDF and ``cdf``."""
    s = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    n = s.size
    if n < 100:
        raise ValueError("need at least 100 samples")
    F = np.asarray(cdf(s), dtype=float)
    if np.any(np.diff(F) < -1e-12):
        raise ValueError("reference cdf must be monotone")
    grid = np.arange(1, n + 1) / n
    return float(max(np.max(grid - F), np.max(F - (grid - 1.0 / n))))
