"""Estimation error as a Markov decision process.

The MDP state is the estimation error e, the action is a constant filter
gain a, and a transition draws process/measurement noise and applies

    e' = (I - a C)(A e + E xi) - a zeta,    reward = -e'^T e'

so that maximizing accumulated reward means driving the error to zero.
Pools of error states stand in for the stationary error distribution
during training: they are seeded from an initial-error sampler and rolled
forward one transition at a time.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError
from .models import LinearGaussianModel

__all__ = [
    "NoiseDraw",
    "cov_factor",
    "draw_noise",
    "step",
    "sample_initial_error",
    "refresh_pool",
    "save_pool_csv",
    "UNIFORM_BOX_BOUNDS",
    "FIXED_INITIAL_ERROR",
]

# Half-widths of the default uniform initial-error box: 5 deg of sideslip,
# 10 deg/s of yaw rate, in radians.
UNIFORM_BOX_BOUNDS = (5.0 * np.pi / 180.0, 10.0 * np.pi / 180.0)

# Deterministic initial error (5 deg, 10 deg/s) used by the fixed sampler.
FIXED_INITIAL_ERROR = np.array([np.pi / 36.0, np.pi / 18.0])

# Pool entries beyond this magnitude are treated as diverged.
_DIVERGENCE_GUARD = 1e12


@dataclass(frozen=True)
class NoiseDraw:
    """One realization (or a batch) of process and measurement noise.

    ``xi`` has trailing dimension p (raw process noise), ``zeta`` trailing
    dimension r (measurement noise).  Batched draws stack along the leading
    axis.
    """

    xi: np.ndarray
    zeta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=float))
        object.__setattr__(self, "zeta", np.asarray(self.zeta, dtype=float))


def cov_factor(cov: np.ndarray) -> np.ndarray:
    """Factor F with F F^T = cov for a symmetric PSD matrix.

    Eigenvalue-based so that singular (e.g. zero) covariances are accepted;
    tiny negative eigenvalues from roundoff are clipped.
    """
    cov = np.asarray(cov, dtype=float)
    vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def draw_noise(model: LinearGaussianModel, rng: np.random.Generator,
               size: int | None = None) -> NoiseDraw:
    """Sample zero-mean Gaussian noise with covariances Q and R."""
    fq = cov_factor(model.Q)
    fr = cov_factor(model.R)
    if size is None:
        xi = fq @ rng.standard_normal(model.p)
        zeta = fr @ rng.standard_normal(model.r)
    else:
        xi = rng.standard_normal((size, model.p)) @ fq.T
        zeta = rng.standard_normal((size, model.r)) @ fr.T
    return NoiseDraw(xi=xi, zeta=zeta)


def step(model: LinearGaussianModel, s: np.ndarray, a: np.ndarray,
         noise: NoiseDraw) -> tuple[np.ndarray, np.ndarray | float]:
    """Advance the error state one transition under gain ``a``.

    Accepts a single state (n,) or a batch (M, n) with matching noise
    shapes.  Returns the next state(s) and the reward(s) -e'^T e' attached
    to the transition.
    """
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    if a.shape != (model.n, model.r):
        raise ValueError(
            f"gain must be {model.n} x {model.r}, got {a.shape}")
    if s.shape[-1] != model.n:
        raise ValueError(f"state dimension must be {model.n}, got {s.shape}")
    xi, zeta = noise.xi, noise.zeta
    if xi.shape != s.shape[:-1] + (model.p,):
        raise ValueError(f"process noise shape {xi.shape} does not match state")
    if zeta.shape != s.shape[:-1] + (model.r,):
        raise ValueError(
            f"measurement noise shape {zeta.shape} does not match state")

    if s.ndim == 1:
        z = model.A @ s + model.E @ xi
        nxt = z - a @ (model.C @ z + zeta)
        return nxt, float(-nxt @ nxt)
    z = s @ model.A.T + xi @ model.E.T
    nxt = z - (z @ model.C.T + zeta) @ a.T
    return nxt, -np.einsum("...i,...i->...", nxt, nxt)


def sample_initial_error(model: LinearGaussianModel, mode: str,
                         rng: np.random.Generator | None = None,
                         size: int | None = None,
                         bounds: tuple[float, ...] | None = None) -> np.ndarray:
    """Draw initial error states.

    ``mode="uniform_box"`` draws each component uniformly from
    +-bounds[i]; the default bounds are the 2-D box of
    :data:`UNIFORM_BOX_BOUNDS` and therefore require a 2-dimensional model
    unless explicit bounds are given.  ``mode="fixed"`` returns
    :data:`FIXED_INITIAL_ERROR` (requires a 2-dimensional model).

    Returns shape (n,) for ``size=None`` else (size, n).
    """
    if mode == "fixed":
        if model.n != len(FIXED_INITIAL_ERROR):
            raise ValueError(
                f"fixed initial error is {len(FIXED_INITIAL_ERROR)}-dimensional "
                f"but the model has n={model.n}")
        e0 = FIXED_INITIAL_ERROR
        if size is None:
            return e0.copy()
        return np.tile(e0, (size, 1))
    if mode == "uniform_box":
        if bounds is None:
            if model.n != len(UNIFORM_BOX_BOUNDS):
                raise ValueError(
                    f"default uniform box is {len(UNIFORM_BOX_BOUNDS)}-dimensional "
                    f"but the model has n={model.n}; pass explicit bounds")
            bounds = UNIFORM_BOX_BOUNDS
        if len(bounds) != model.n:
            raise ValueError(
                f"need {model.n} bounds, got {len(bounds)}")
        if rng is None:
            raise ValueError("uniform_box sampling requires an rng")
        half = np.asarray(bounds, dtype=float)
        shape = (model.n,) if size is None else (size, model.n)
        return rng.uniform(-1.0, 1.0, shape) * half
    raise ValueError(f"unknown initial-error mode {mode!r}")


def refresh_pool(model: LinearGaussianModel, pool: np.ndarray, a: np.ndarray,
                 rng: np.random.Generator) -> np.ndarray:
    """Advance every pool member one transition with fresh independent noise.

    Raises:
        DivergenceError: if any advanced entry is non-finite or beyond the
            divergence guard (an error process under a destabilizing gain
            grows without bound).
    """
    pool = np.asarray(pool, dtype=float)
    if pool.ndim != 2 or pool.shape[0] == 0:
        raise ValueError(f"pool must be a non-empty (M, n) array, got {pool.shape}")
    noise = draw_noise(model, rng, size=pool.shape[0])
    nxt, _ = step(model, pool, a, noise)
    worst = np.abs(nxt).max()
    if not np.isfinite(worst) or worst > _DIVERGENCE_GUARD:
        raise DivergenceError(
            f"error pool diverged (max entry {worst:.3e}); the gain is "
            f"likely destabilizing")
    return nxt


def save_pool_csv(pool: np.ndarray, path) -> None:
    """Write a pool snapshot as CSV, one error vector per row."""
    pool = np.asarray(pool, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"e{i + 1}" for i in range(pool.shape[1])])
        writer.writerows(pool.tolist())
