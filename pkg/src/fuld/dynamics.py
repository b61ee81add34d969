"""Euler-Maruyama integrators for the heavy-tailed Langevin systems.

``fuld_step`` is the corrected kinetic dynamics: the velocity sees linear
friction and the position moves through the tabulated kinetic-energy gradient,
which keeps every position update bounded by ``eta * sup|g'|``.  ``ud_step``
is the uncorrected variant (position integrates the velocity directly) whose
iterates can blow up under heavy-tailed noise.  ``overdamped_step`` is the
first-order approximation with the constant drift correction
``Gamma(alpha-1)/Gamma(alpha/2)**2``.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal, Union

import numpy as np

from . import binio, kinetic, stable
from .potentials import Potential

__all__ = [
    "DIVERGENCE_THRESHOLD",
    "DivergenceError",
    "PhaseState",
    "StepSchedule",
    "SimConfig",
    "TrajectorySummary",
    "FieldGrid",
    "fuld_step",
    "ud_step",
    "overdamped_step",
    "simulate",
    "run_trajectory",
    "run_ensemble",
    "conformal_field",
    "chain_rng",
    "write_trajectory_csv",
    "save_trajectory",
    "load_trajectory",
]

DIVERGENCE_THRESHOLD = 1e12
_TRAJ_MAGIC = b"FULDTJ01"
_TRAJ_VERSION = 1


class DivergenceError(RuntimeError):
    """An iterate left the admissible range; carries the iteration index."""

    def __init__(self, k: int, what: str):
        super().__init__(f"divergence at iteration {k}: {what}")
        self.k = k


@dataclass
class PhaseState:
    """Position/velocity pair with an iteration counter."""

    x: np.ndarray
    v: np.ndarray
    k: int = 0

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.x.shape != self.v.shape:
            raise ValueError("x and v must have identical shapes")


@dataclass(frozen=True)
class StepSchedule:
    """Non-increasing step sequence; polynomial decay keeps the cumulative
    sum divergent (exponent below one)."""

    kind: Literal["constant", "polynomial-decay"] = "constant"
    eta0: float = 0.01
    decay: float = 0.0

    def __post_init__(self) -> None:
        if self.eta0 <= 0.0:
            raise ValueError("eta0 must be positive")
        if self.kind not in ("constant", "polynomial-decay"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "polynomial-decay" and not 0.0 <= self.decay < 1.0:
            raise ValueError("decay exponent must lie in [0, 1)")

    def eta(self, k: int) -> float:
        if self.kind == "constant":
            return self.eta0
        return self.eta0 / (1.0 + k) ** self.decay

    def etas(self, n: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(n, self.eta0)
        return self.eta0 / (1.0 + np.arange(n)) ** self.decay


@dataclass
class SimConfig:
    """Everything a trajectory needs: target, dynamics constants, noise seed."""

    potential: Potential
    alpha: float
    gamma: float
    beta: float
    schedule: StepSchedule
    iterations: int
    seed: int
    kinetic: Union[kinetic.KineticTable, None] = None
    x0: np.ndarray | None = None
    v0: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.gamma <= 0.0 or self.beta <= 0.0:
            raise ValueError("gamma and beta must be positive")
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError("alpha must lie in (0, 2]")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.gamma * self.schedule.eta0 >= 1.0:
            raise ValueError("require eta * gamma < 1 so the friction factor stays positive")
        if self.kinetic is not None and self.kinetic.alpha != self.alpha:
            raise ValueError("kinetic table alpha does not match config alpha")

    def initial_state(self) -> PhaseState:
        d = self.potential.dim
        x = np.zeros(d) if self.x0 is None else np.asarray(self.x0, dtype=float).copy()
        v = np.zeros(d) if self.v0 is None else np.asarray(self.v0, dtype=float).copy()
        return PhaseState(x, v, 0)

    def require_table(self) -> kinetic.KineticTable:
        if self.kinetic is None:
            raise ValueError("this operation needs a kinetic table in the config")
        return self.kinetic


def _check_finite(k: int, x: np.ndarray, v: np.ndarray) -> None:
    bad = ~np.isfinite(x) | ~np.isfinite(v)
    if bad.any() or np.max(np.abs(x)) > DIVERGENCE_THRESHOLD or np.max(
        np.abs(v)
    ) > DIVERGENCE_THRESHOLD:
        raise DivergenceError(k, f"|x| or |v| exceeded {DIVERGENCE_THRESHOLD:.0e}")


def fuld_step(state: PhaseState, cfg: SimConfig, noise: np.ndarray) -> PhaseState:
    """One corrected step: velocity first, then position through grad G.

    v <- (1 - gamma eta) v - eta grad f(x) + (eta gamma / beta)^(1/alpha) s
    x <- x + eta grad_G(v_new)
    """
    eta = cfg.schedule.eta(state.k)
    gtilde = 1.0 - cfg.gamma * eta
    v_new = (
        gtilde * state.v
        - eta * cfg.potential.gradient(state.x)
        + (eta * cfg.gamma / cfg.beta) ** (1.0 / cfg.alpha) * noise
    )
    x_new = state.x + eta * kinetic.grad_G(cfg.require_table(), v_new)
    _check_finite(state.k + 1, x_new, v_new)
    return PhaseState(x_new, v_new, state.k + 1)


def ud_step(state: PhaseState, cfg: SimConfig, noise: np.ndarray) -> PhaseState:
    """One uncorrected step: identical to :func:`fuld_step` except the position
    integrates the new velocity directly and the noise carries the 2*gamma/beta
    coefficient of the naive Brownian-to-Levy substitution."""
    eta = cfg.schedule.eta(state.k)
    gtilde = 1.0 - cfg.gamma * eta
    v_new = (
        gtilde * state.v
        - eta * cfg.potential.gradient(state.x)
        + (2.0 * cfg.gamma / cfg.beta * eta) ** (1.0 / cfg.alpha) * noise
    )
    x_new = state.x + eta * v_new
    _check_finite(state.k + 1, x_new, v_new)
    return PhaseState(x_new, v_new, state.k + 1)


def overdamped_step(x: np.ndarray, cfg: SimConfig, noise: np.ndarray, k: int = 0) -> np.ndarray:
    """First-order dynamics with the constant drift correction
    c_alpha = Gamma(alpha - 1) / Gamma(alpha / 2)**2 (requires alpha > 1)."""
    if cfg.alpha <= 1.0:
        raise ValueError("overdamped approximation requires alpha > 1")
    eta = cfg.schedule.eta(k)
    c_alpha = math.gamma(cfg.alpha - 1.0) / math.gamma(cfg.alpha / 2.0) ** 2
    x_new = (
        np.asarray(x, dtype=float)
        - eta * c_alpha * cfg.potential.gradient(x)
        + eta ** (1.0 / cfg.alpha) * cfg.beta ** (-1.0 / cfg.alpha) * noise
    )
    if not np.isfinite(x_new).all() or np.max(np.abs(x_new)) > DIVERGENCE_THRESHOLD:
        raise DivergenceError(k + 1, "overdamped iterate out of range")
    return x_new


@dataclass
class TrajectorySummary:
    steps: int
    diverged: bool
    diverged_at: int | None
    wall_time: float
    final_state: PhaseState


def _overdamped_adapter(state: PhaseState, cfg: SimConfig, noise: np.ndarray) -> PhaseState:
    x_new = overdamped_step(state.x, cfg, noise, k=state.k)
    return PhaseState(x_new, state.v, state.k + 1)


_STEPPERS: dict[str, Callable] = {
    "fuld": fuld_step,
    "ud": ud_step,
    "overdamped": _overdamped_adapter,
}


def chain_rng(seed: int, chain: int = 0) -> np.random.Generator:
    """Deterministic per-chain stream; chain 0 is the plain seeded stream."""
    return np.random.default_rng(np.random.SeedSequence([seed, chain]))


def simulate(
    cfg: SimConfig,
    recorder: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
    dynamics: str = "fuld",
    stride: int = 1,
    chain: int = 0,
    noise_block: int = 65536,
) -> TrajectorySummary:
    """Run ``cfg.iterations`` steps, streaming recorded states to ``recorder``.

    Noise is pre-drawn in blocks from the chain's dedicated stream so results
    are reproducible regardless of block size.  On divergence the run stops
    and the summary carries the offending iteration index.
    """
    step = _STEPPERS[dynamics]
    state = cfg.initial_state()
    d = state.x.size
    rng = chain_rng(cfg.seed, chain)
    dist = stable.AlphaStable(cfg.alpha, 1.0)
    t0 = time.perf_counter()
    diverged_at: int | None = None
    k = 0
    try:
        while k < cfg.iterations:
            block = min(noise_block, cfg.iterations - k)
            noise = stable.sample(dist, block * d, rng).reshape(block, d)
            for j in range(block):
                state = step(state, cfg, noise[j])
                k += 1
                if recorder is not None and k % stride == 0:
                    recorder(k, state.x, state.v)
    except DivergenceError as err:
        diverged_at = err.k
    wall = time.perf_counter() - t0
    return TrajectorySummary(
        steps=k if diverged_at is None else diverged_at - 1,
        diverged=diverged_at is not None,
        diverged_at=diverged_at,
        wall_time=wall,
        final_state=state,
    )


def run_trajectory(
    cfg: SimConfig, dynamics: str = "fuld", stride: int = 1, chain: int = 0
) -> tuple[np.ndarray, np.ndarray, TrajectorySummary]:
    """Convenience wrapper collecting the recorded states into arrays."""
    xs: list[np.ndarray] = []
    vs: list[np.ndarray] = []

    def rec(k: int, x: np.ndarray, v: np.ndarray) -> None:
        xs.append(x.copy())
        vs.append(v.copy())

    summary = simulate(cfg, rec, dynamics=dynamics, stride=stride, chain=chain)
    shape = (len(xs), cfg.potential.dim)
    x_arr = np.array(xs).reshape(shape) if xs else np.empty((0, cfg.potential.dim))
    v_arr = np.array(vs).reshape(shape) if vs else np.empty((0, cfg.potential.dim))
    return x_arr, v_arr, summary


def run_ensemble(
    cfg: SimConfig, n_chains: int, dynamics: str = "fuld"
) -> tuple[list[np.ndarray], list[TrajectorySummary]]:
    """Independent chains sharing one config, one master seed.

    Chain ``c`` consumes the stream ``chain_rng(cfg.seed, c)``, identical to a
    solo :func:`simulate` call with the same chain index, so a column of the
    ensemble is bitwise-reproducible in isolation.  Restricted to
    one-dimensional potentials, which is what the histogram experiments use;
    the chains are advanced in lockstep as a stacked coordinatewise system.
    Chains that diverge stop contributing; their recorded prefix is returned.
    """
    if cfg.potential.dim != 1:
        raise ValueError("ensembles are supported for one-dimensional potentials")
    step = _STEPPERS[dynamics]
    k_total = cfg.iterations
    dist = stable.AlphaStable(cfg.alpha, 1.0)

    def chain_noise(c: int) -> np.ndarray:
        # blocked exactly like simulate() so the streams coincide bitwise
        rng = chain_rng(cfg.seed, c)
        parts = []
        remaining = k_total
        while remaining > 0:
            block = min(65536, remaining)
            parts.append(stable.sample(dist, block, rng))
            remaining -= block
        return np.concatenate(parts) if parts else np.empty(0)

    noises = np.column_stack([chain_noise(c) for c in range(n_chains)])
    stacked = SimConfig(
        potential=Potential(
            cfg.potential.name,
            n_chains,
            cfg.potential.value,
            cfg.potential.gradient,
            cfg.potential.analytic,
        ),
        alpha=cfg.alpha,
        gamma=cfg.gamma,
        beta=cfg.beta,
        schedule=cfg.schedule,
        iterations=cfg.iterations,
        seed=cfg.seed,
        kinetic=cfg.kinetic,
        x0=np.repeat((cfg.x0 if cfg.x0 is not None else [0.0]), n_chains),
        v0=np.repeat((cfg.v0 if cfg.v0 is not None else [0.0]), n_chains),
    )
    state = stacked.initial_state()
    live = np.arange(n_chains)
    xs = np.empty((k_total, n_chains))
    summaries = [
        TrajectorySummary(0, False, None, 0.0, PhaseState(state.x[[c]], state.v[[c]]))
        for c in range(n_chains)
    ]
    t0 = time.perf_counter()
    k = 0
    while k < k_total and live.size:
        try:
            state = step(state, stacked, noises[k, live])
            xs[k, live] = state.x
            k += 1
        except DivergenceError:
            # advance surviving chains one at a time to find the culprits
            keep = []
            for idx, c in enumerate(live):
                xc, vc = state.x[idx : idx + 1], state.v[idx : idx + 1]
                sub = PhaseState(xc, vc, state.k)
                try:
                    sub = step(sub, cfg, noises[k, c : c + 1])
                    keep.append(idx)
                    state.x[idx], state.v[idx] = sub.x[0], sub.v[0]
                except DivergenceError:
                    summaries[c] = TrajectorySummary(
                        steps=k, diverged=True, diverged_at=k + 1,
                        wall_time=0.0, final_state=sub,
                    )
            xs[k, live[keep]] = state.x[keep]
            state = PhaseState(state.x[keep], state.v[keep], state.k + 1)
            live = live[keep]
            k += 1
    wall = time.perf_counter() - t0
    trajectories = []
    for c in range(n_chains):
        if summaries[c].diverged:
            trajectories.append(xs[: summaries[c].steps, c].copy())
        else:
            summaries[c] = TrajectorySummary(
                steps=k_total, diverged=False, diverged_at=None,
                wall_time=wall, final_state=PhaseState(state.x[:1], state.v[:1]),
            )
            trajectories.append(xs[:, c].copy())
    return trajectories, summaries


@dataclass
class FieldGrid:
    """Conformal decomposition of the deterministic flow on a phase grid."""

    x: np.ndarray
    v: np.ndarray
    ham_dx: np.ndarray
    ham_dv: np.ndarray
    dis_dx: np.ndarray
    dis_dv: np.ndarray
    overflow: np.ndarray

    @property
    def total_dx(self) -> np.ndarray:
        return self.ham_dx + self.dis_dx

    @property
    def total_dv(self) -> np.ndarray:
        return self.ham_dv + self.dis_dv


def conformal_field(
    potential: Potential,
    kinetic_energy: Union[kinetic.KineticTable, Literal["gaussian"]],
    gamma: float,
    alpha: float,
    x_grid: np.ndarray,
    v_grid: np.ndarray,
) -> FieldGrid:
    """Deterministic flow split into energy-conserving and dissipative parts.

    Gaussian kinetic energy: Hamiltonian part (v, -f'(x)), dissipative part
    (0, -gamma c(v, alpha)) with the explosive closed-form drift c; overflow
    nodes are flagged rather than raising.  Stable kinetic energy: flow
    (grad_G(v), -f'(x) - gamma v), split as Hamiltonian (grad_G(v), -f'(x))
    plus dissipative (0, -gamma v).
    """
    if potential.dim != 1:
        raise ValueError("phase-space fields are two-dimensional: dim must be 1")
    from . import special

    X, V = np.meshgrid(np.asarray(x_grid, float), np.asarray(v_grid, float), indexing="ij")
    grad_f = np.vectorize(lambda x: float(potential.gradient(np.array([x]))[0]))(X)
    overflow = np.zeros(X.shape, dtype=bool)
    if isinstance(kinetic_energy, str):
        if kinetic_energy != "gaussian":
            raise ValueError("kinetic_energy must be a table or 'gaussian'")
        ham_dx = V.copy()
        drift = np.empty_like(V)
        for idx, vi in np.ndenumerate(V):
            try:
                drift[idx] = special.gaussian_ke_drift(float(vi), alpha)
            except special.SpecialOverflowError:
                drift[idx] = np.nan
                overflow[idx] = True
        dis_dv = -gamma * drift
    else:
        ham_dx = kinetic.grad_G(kinetic_energy, V)
        dis_dv = -gamma * V
    return FieldGrid(
        x=X,
        v=V,
        ham_dx=ham_dx,
        ham_dv=-grad_f,
        dis_dx=np.zeros_like(X),
        dis_dv=dis_dv,
        overflow=overflow,
    )


def write_trajectory_csv(
    path: str | Path, trajectory_id: int, xs: np.ndarray, vs: np.ndarray, append: bool = False
) -> None:
    """Per-record rows (trajectory_id, k, x components, v components)."""
    xs = np.atleast_2d(xs)
    vs = np.atleast_2d(vs)
    d = xs.shape[1]
    mode = "a" if append else "w"
    with open(path, mode, newline="") as fh:
        writer = csv.writer(fh)
        if not append:
            writer.writerow(
                ["trajectory_id", "k"]
                + [f"x{i}" for i in range(d)]
                + [f"v{i}" for i in range(d)]
            )
        for k in range(xs.shape[0]):
            writer.writerow(
                [trajectory_id, k + 1]
                + [repr(float(val)) for val in xs[k]]
                + [repr(float(val)) for val in vs[k]]
            )


def save_trajectory(path: str | Path, trajectory_id: int, xs: np.ndarray, vs: np.ndarray) -> None:
    """Binary twin of the CSV stream (same versioned-header scheme as tables)."""
    xs = np.atleast_2d(xs)
    vs = np.atleast_2d(vs)
    with open(path, "wb") as fh:
        binio.write_block(
            fh,
            _TRAJ_MAGIC,
            _TRAJ_VERSION,
            [float(trajectory_id), float(xs.shape[0]), float(xs.shape[1])],
            [xs.ravel(), vs.ravel()],
        )


def load_trajectory(path: str | Path):
    with open(path, "rb") as fh:
        meta, arrays = binio.read_block(fh, _TRAJ_MAGIC, _TRAJ_VERSION)
    traj_id, n, d = int(meta[0]), int(meta[1]), int(meta[2])
    return traj_id, arrays[0].reshape(n, d), arrays[1].reshape(n, d)
