"""Kinetic-energy functions g and their gradients.

The practical kinetic energy is the negative log-density of a stable law
whose scale ``alpha**(-1/alpha)`` matches the driving noise; its gradient is
tabulated on a fine velocity grid and linearly interpolated, with an
asymptotic ``(1 + alpha) / v`` model beyond the grid.  ``alpha = 1`` and
``alpha = 2`` bypass tabulation entirely (exact closed forms).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import binio, stable

__all__ = [
    "KineticTable",
    "build_table",
    "grad_G",
    "g_values_at",
    "lipschitz_bound",
    "save_table",
    "load_table",
    "export_csv",
    "cache_path",
]

_MAGIC = b"FULDKT01"
_VERSION = 1


@dataclass(frozen=True)
class KineticTable:
    """Tabulated g_alpha and g'_alpha on a uniform symmetric velocity grid."""

    alpha: float
    sigma: float
    grid: np.ndarray
    g_values: np.ndarray
    dg_values: np.ndarray
    tail_coefficient: float
    lipschitz: float = field(default=math.nan)

    @property
    def v_max(self) -> float:
        return float(self.grid[-1])

    @property
    def n_points(self) -> int:
        return int(self.grid.size)

    @property
    def analytic(self) -> bool:
        """Closed forms exist at alpha = 1 (Cauchy) and alpha = 2 (Gaussian)."""
        return self.alpha in (1.0, 2.0)

    @property
    def sup_dg(self) -> float:
        """Supremum of |g'| over grid and tail (tail model is decreasing)."""
        return float(np.max(np.abs(self.dg_values)))


def _closed_form_dg(alpha: float, v: np.ndarray) -> np.ndarray:
    if alpha == 2.0:
        return np.asarray(v, dtype=float)
    if alpha == 1.0:
        v = np.asarray(v, dtype=float)
        return 2.0 * v / (1.0 + v * v)
    raise ValueError("closed forms exist only for alpha in {1, 2}")


def _closed_form_g(alpha: float, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if alpha == 2.0:
        return 0.5 * math.log(2.0 * math.pi) + 0.5 * v * v
    if alpha == 1.0:
        return math.log(math.pi) + np.log1p(v * v)
    raise ValueError("closed forms exist only for alpha in {1, 2}")


def build_table(
    alpha: float,
    v_max: float = 100.0,
    n_points: int = 200001,
    cache_dir: str | Path | None = None,
) -> KineticTable:
    """Tabulate g_alpha(v) = -log(stable density at scale alpha**(-1/alpha)).

    The default grid ([-100, 100], spacing 1e-3) keeps interpolation error far
    below the statistical error of any simulation.  ``cache_dir`` enables a
    binary disk cache keyed by (alpha, v_max, n_points); building at the
    default resolution is the dominant startup cost, a cache hit is instant.
    Density evaluation cross-checks its quadrature and series regimes at the
    switch point and raises on disagreement.
    """
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    if v_max < 20.0:
        raise ValueError(f"v_max must be >= 20, got {v_max}")
    if n_points < 4001:
        raise ValueError(f"n_points must be >= 4001, got {n_points}")
    if cache_dir is not None:
        path = cache_path(alpha, v_max, n_points, cache_dir)
        if path.exists():
            return load_table(path)
    sigma = alpha ** (-1.0 / alpha)
    grid = np.linspace(-v_max, v_max, n_points)
    if alpha in (1.0, 2.0):
        g = _closed_form_g(alpha, grid)
        dg = _closed_form_dg(alpha, grid)
    else:
        dist = stable.AlphaStable(alpha, sigma)
        psi, dpsi, _ = stable.density_grid(dist, grid, check_boundary=True)
        g = -np.log(psi)
        dg = -dpsi / psi
    tail_coefficient = float(dg[-1] * grid[-1])
    table = KineticTable(
        alpha=alpha,
        sigma=sigma,
        grid=grid,
        g_values=g,
        dg_values=dg,
        tail_coefficient=tail_coefficient,
    )
    table = KineticTable(**{**table.__dict__, "lipschitz": lipschitz_bound(table)})
    if cache_dir is not None:
        save_table(table, path)
    return table


def grad_G(table: KineticTable, v) -> np.ndarray:
    """Coordinatewise g'_alpha: exact closed form at alpha in {1, 2}, linear
    interpolation on the grid otherwise, and the asymptotic tail model
    ``tail_coefficient * sign(v) / |v|`` beyond it (continuous at the edge)."""
    v = np.asarray(v, dtype=float)
    if table.analytic:
        return _closed_form_dg(table.alpha, v)
    out = np.interp(v, table.grid, table.dg_values)
    av = np.abs(v)
    outside = av > table.v_max
    if np.any(outside):
        out = np.where(outside, table.tail_coefficient * np.sign(v) / np.maximum(av, 1e-300), out)
    return out


def g_values_at(table: KineticTable, v) -> np.ndarray:
    """Kinetic energy g_alpha itself (grid interpolation, logarithmic tail)."""
    v = np.asarray(v, dtype=float)
    if table.analytic:
        return _closed_form_g(table.alpha, v)
    out = np.interp(v, table.grid, table.g_values)
    av = np.abs(v)
    outside = av > table.v_max
    if np.any(outside):
        tail = table.g_values[-1] + table.tail_coefficient * np.log(
            np.maximum(av, table.v_max) / table.v_max
        )
        out = np.where(outside, tail, out)
    return out


def lipschitz_bound(table: KineticTable) -> float:
    """Max over the grid of central finite-difference |g''_alpha|."""
    dg = table.dg_values
    h = table.grid[1] - table.grid[0]
    return float(np.max(np.abs(dg[2:] - dg[:-2])) / (2.0 * h))


def cache_path(alpha: float, v_max: float, n_points: int, cache_dir: str | Path) -> Path:
    name = f"kinetic_a{alpha:.6g}_v{v_max:.6g}_n{n_points}.bin"
    return Path(cache_dir) / name


def save_table(table: KineticTable, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        binio.write_block(
            fh,
            _MAGIC,
            _VERSION,
            [
                table.alpha,
                table.sigma,
                table.v_max,
                float(table.n_points),
                table.tail_coefficient,
                table.lipschitz,
            ],
            [table.g_values, table.dg_values],
        )


def load_table(path: str | Path) -> KineticTable:
    with open(path, "rb") as fh:
        meta, arrays = binio.read_block(fh, _MAGIC, _VERSION)
    alpha, sigma, v_max, n_points, tail_coefficient, lipschitz = meta
    grid = np.linspace(-v_max, v_max, int(n_points))
    return KineticTable(
        alpha=alpha,
        sigma=sigma,
        grid=grid,
        g_values=arrays[0],
        dg_values=arrays[1],
        tail_coefficient=tail_coefficient,
        lipschitz=lipschitz,
    )


def export_csv(table: KineticTable, path: str | Path) -> None:
    """Human-inspectable dump with columns (v, g_alpha, dg_alpha)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["v", "g_alpha", "dg_alpha"])
        for v, g, dg in zip(table.grid, table.g_values, table.dg_values):
            writer.writerow([repr(float(v)), repr(float(g)), repr(float(dg))])
