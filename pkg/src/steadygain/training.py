"""Actor-critic policy iteration for the steady-state gain.

The critic is the quadratic value V(s; w) = -s^T w s with a symmetric
weight matrix w; the actor is the constant gain matrix itself.  Each
iteration rolls the persistent error pool one transition forward under the
current gain, evaluates the critic with a semi-gradient temporal-difference
step (bootstrap target frozen), improves the actor along the exact
derivative of the one-step return through the linear transition, and
applies Adam to both.

Two gradient estimators are available.  ``"sampled"`` uses the single
drawn noise realization per pool member, matching
:func:`critic_loss_and_grad` / :func:`actor_loss_and_grad` exactly.
``"analytic"`` (the default) integrates the Gaussian noise out of both
expectations in closed form, which removes the measurement-noise sampling
variance that otherwise dominates the gain columns tied to low-noise
measurements; the pool itself still evolves stochastically.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .error_mdp import draw_noise, sample_initial_error, step
from .errors import DivergenceError
from .kalman import symmetrize
from .models import LinearGaussianModel

__all__ = [
    "AdamState",
    "TrainerConfig",
    "TrainHistory",
    "critic_value",
    "critic_loss_and_grad",
    "actor_loss_and_grad",
    "adam_update",
    "train",
    "train_average",
]

# Iteration window for the gain-stability stopping test.
_CONVERGENCE_WINDOW = 100

# Divergence guard: |theta| beyond this multiple of the reference gain's
# max element (when a reference is supplied) aborts training.
_GUARD_FACTOR = 1e3


@dataclass(frozen=True)
class AdamState:
    """Adam accumulator state for one parameter array."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: np.ndarray, beta1: float = 0.9,
                   beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(m=np.zeros_like(params, dtype=float),
                   v=np.zeros_like(params, dtype=float),
                   t=0, beta1=beta1, beta2=beta2, eps=eps)


def adam_update(params: np.ndarray, grad: np.ndarray, state: AdamState,
                lr: float, direction: str = "descend"
                ) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam step; ``direction`` is "descend" or "ascend"."""
    if direction not in ("ascend", "descend"):
        raise ValueError(f"direction must be 'ascend' or 'descend', got {direction!r}")
    grad = np.asarray(grad, dtype=float)
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    delta = lr * m_hat / (np.sqrt(v_hat) + state.eps)
    sign = 1.0 if direction == "ascend" else -1.0
    return params + sign * delta, replace(state, m=m, v=v, t=t)


@dataclass(frozen=True)
class TrainerConfig:
    """Hyperparameters and run controls for :func:`train`."""

    batch_size: int = 256
    lr_actor: float = 0.003
    lr_critic: float = 0.01
    gamma: float = 0.99
    max_iters: int = 200000
    convergence_tol: float = 1e-6
    seed: int = 0
    init_mode: str = "uniform_box"   # pool seeding: "uniform_box" | "fixed"
    burn_in: int = 400               # pool transitions before training
    estimator: str = "analytic"      # "analytic" | "sampled"
    tail_avg_frac: float = 0.5       # fraction of final iterates averaged

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.lr_actor <= 0 or self.lr_critic <= 0:
            raise ValueError("learning rates must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if not 0.0 <= self.tail_avg_frac <= 1.0:
            raise ValueError("tail_avg_frac must be in [0, 1]")
        if self.estimator not in ("analytic", "sampled"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.init_mode not in ("uniform_box", "fixed"):
            raise ValueError(f"unknown init_mode {self.init_mode!r}")

    def to_dict(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "lr_actor": self.lr_actor,
            "lr_critic": self.lr_critic,
            "gamma": self.gamma,
            "max_iters": self.max_iters,
            "convergence_tol": self.convergence_tol,
            "seed": self.seed,
            "init_mode": self.init_mode,
            "burn_in": self.burn_in,
            "estimator": self.estimator,
            "tail_avg_frac": self.tail_avg_frac,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainerConfig":
        return cls(**doc)


@dataclass
class TrainHistory:
    """Per-iteration training record.

    ``theta`` stacks the gain after each iteration, ``diff`` the elementwise
    gap to the reference gain (NaN when no reference was supplied), and the
    loss arrays the critic/actor objective values seen that iteration.
    """

    theta: np.ndarray = field(default_factory=lambda: np.zeros((0, 0, 0)))
    diff: np.ndarray = field(default_factory=lambda: np.zeros((0, 0, 0)))
    critic_loss: np.ndarray = field(default_factory=lambda: np.zeros(0))
    actor_loss: np.ndarray = field(default_factory=lambda: np.zeros(0))
    converged: bool = False
    iterations: int = 0

    def to_csv(self, path) -> None:
        """Write one row per iteration: iter, theta.., d.., losses."""
        n, r = (self.theta.shape[1], self.theta.shape[2]) \
            if self.theta.ndim == 3 and self.theta.shape[0] else (0, 0)
        header = (["iter"]
                  + [f"theta{i + 1}{j + 1}" for i in range(n) for j in range(r)]
                  + [f"d{i + 1}{j + 1}" for i in range(n) for j in range(r)]
                  + ["critic_loss", "actor_loss"])
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for k in range(self.iterations):
                row = ([k + 1]
                       + list(self.theta[k].ravel())
                       + list(self.diff[k].ravel())
                       + [self.critic_loss[k], self.actor_loss[k]])
                writer.writerow(row)


def critic_value(w: np.ndarray, s: np.ndarray) -> float | np.ndarray:
    """Quadratic value V(s; w) = -s^T w s; batched over leading axes."""
    s = np.asarray(s, dtype=float)
    w = np.asarray(w, dtype=float)
    if s.ndim == 1:
        return float(-s @ w @ s)
    return -np.einsum("...i,ij,...j->...", s, w, s)


def critic_loss_and_grad(model: LinearGaussianModel, w: np.ndarray,
                         theta: np.ndarray, batch: np.ndarray, noise_batch,
                         gamma: float = 0.99) -> tuple[float, np.ndarray]:
    """Semi-gradient TD loss for the quadratic critic on one noise draw.

    Loss is the batch mean of 0.5 * TD^2 with
    TD = r' + gamma * V(s'; w) - V(s; w); the bootstrap target
    r' + gamma * V(s'; w) is treated as a constant, so the gradient is
    mean(TD * s s^T), symmetrized.
    """
    batch = np.asarray(batch, dtype=float)
    if batch.ndim != 2 or batch.shape[0] == 0:
        raise ValueError("batch must be a non-empty (M, n) array")
    w = np.asarray(w, dtype=float)
    nxt, reward = step(model, batch, np.asarray(theta, dtype=float), noise_batch)
    td = reward + gamma * critic_value(w, nxt) - critic_value(w, batch)
    loss = float(0.5 * np.mean(td ** 2))
    grad = (batch * td[:, None]).T @ batch / batch.shape[0]
    return loss, symmetrize(grad)


def actor_loss_and_grad(model: LinearGaussianModel, w: np.ndarray,
                        theta: np.ndarray, batch: np.ndarray, noise_batch,
                        gamma: float = 0.99) -> tuple[float, np.ndarray]:
    """One-step return plus bootstrap, differentiated through the transition.

    Loss is the batch mean of r' + gamma * V(s'; w) for the sampled noise.
    With z = A s + E xi and v = C z + zeta the next state is
    s' = z - theta v, so the exact derivative with the noise held fixed is

        d loss / d theta = mean[ (Mw + Mw^T) s' v^T ],   Mw = I + gamma w.

    Critic weights are held fixed (policy-improvement step).
    """
    batch = np.asarray(batch, dtype=float)
    if batch.ndim != 2 or batch.shape[0] == 0:
        raise ValueError("batch must be a non-empty (M, n) array")
    w = np.asarray(w, dtype=float)
    theta = np.asarray(theta, dtype=float)
    m_count = batch.shape[0]
    z = batch @ model.A.T + noise_batch.xi @ model.E.T
    v = z @ model.C.T + noise_batch.zeta
    nxt = z - v @ theta.T
    mw = np.eye(model.n) + gamma * w
    loss = float(np.mean(-np.einsum("bi,ij,bj->b", nxt, mw, nxt)))
    grad = (mw + mw.T) @ (nxt.T @ v) / m_count
    return loss, grad


def _analytic_critic_loss_and_grad(model, w, theta, batch, gamma):
    """Critic semi-gradient with the transition noise integrated out.

    Per member, E_noise[TD] = E[r'] + gamma E[V(s')] - V(s) has closed form
    because s' is Gaussian given s; the semi-gradient weights s s^T by that
    expected TD.
    """
    eye = np.eye(model.n)
    ic = eye - theta @ model.C
    mu = batch @ (ic @ model.A).T
    cov = ic @ model.effective_process_cov() @ ic.T + theta @ model.R @ theta.T
    e_reward = -(np.einsum("bi,bi->b", mu, mu) + np.trace(cov))
    e_vnext = -(np.einsum("bi,ij,bj->b", mu, w, mu) + np.trace(w @ cov))
    td = e_reward + gamma * e_vnext - critic_value(w, batch)
    loss = float(0.5 * np.mean(td ** 2))
    grad = (batch * td[:, None]).T @ batch / batch.shape[0]
    return loss, symmetrize(grad)


def _analytic_actor_loss_and_grad(model, w, theta, batch, gamma):
    """Actor loss/gradient with the transition noise integrated out.

    With P the batch second moment and Sp = A P A^T + E Q E^T, the expected
    cross moment E[s' v^T] = (I - theta C) Sp C^T - theta R replaces its
    one-sample estimate in the pathwise gradient.
    """
    m_count = batch.shape[0]
    eye = np.eye(model.n)
    ic = eye - theta @ model.C
    p_batch = batch.T @ batch / m_count
    sp = model.A @ p_batch @ model.A.T + model.effective_process_cov()
    mw = eye + gamma * w
    second = ic @ sp @ ic.T + theta @ model.R @ theta.T
    loss = float(-np.trace(mw @ second))
    cross = ic @ sp @ model.C.T - theta @ model.R
    grad = (mw + mw.T) @ cross
    return loss, grad


class _Recorder:
    def __init__(self):
        self.theta = []
        self.diff = []
        self.critic_loss = []
        self.actor_loss = []

    def freeze(self, n, r, converged):
        count = len(self.theta)
        return TrainHistory(
            theta=np.asarray(self.theta).reshape(count, n, r),
            diff=np.asarray(self.diff).reshape(count, n, r),
            critic_loss=np.asarray(self.critic_loss, dtype=float),
            actor_loss=np.asarray(self.actor_loss, dtype=float),
            converged=converged,
            iterations=count,
        )


def train(model: LinearGaussianModel, cfg: TrainerConfig,
          ref_gain: np.ndarray | None = None
          ) -> tuple[np.ndarray, TrainHistory]:
    """Run actor-critic policy iteration and return the learned gain.

    The critic starts at the identity, the actor at zero.  Each iteration
    shares one pool rollout between the evaluation and improvement steps,
    then keeps the advanced pool for the next iteration.  Training stops
    when the gain's elementwise spread over the trailing 100 iterations
    falls below ``cfg.convergence_tol`` or at ``cfg.max_iters``.  The
    returned gain averages the final ``cfg.tail_avg_frac`` of iterates,
    which suppresses the stationary jitter of the stochastic updates.

    ``ref_gain`` only adds diagnostics (the history's ``diff`` columns) and
    a divergence guard at 1000x its largest element.

    Raises:
        DivergenceError: gain guard exceeded or pool blow-up; the partial
            history rides on the exception's ``history`` attribute.
    """
    rng = np.random.default_rng(cfg.seed)
    n, r = model.n, model.r
    theta = np.zeros((n, r))
    w = np.eye(n)
    adam_theta = AdamState.for_params(theta)
    adam_w = AdamState.for_params(w)

    pool = sample_initial_error(model, cfg.init_mode, rng, size=cfg.batch_size)
    guard = None
    if ref_gain is not None:
        ref_gain = np.asarray(ref_gain, dtype=float)
        guard = _GUARD_FACTOR * max(np.abs(ref_gain).max(), 1e-300)

    def advance(current_pool, gain):
        noise = draw_noise(model, rng, size=cfg.batch_size)
        nxt, reward = step(model, current_pool, gain, noise)
        return nxt, reward, noise

    for _ in range(cfg.burn_in):
        pool, _, _ = advance(pool, theta)

    rec = _Recorder()
    window: list[np.ndarray] = []
    tail_sum = np.zeros_like(theta)
    tail_count = 0
    tail_start = int(np.ceil(cfg.max_iters * (1.0 - cfg.tail_avg_frac)))
    converged = False

    def fail(message):
        history = rec.freeze(n, r, converged=False)
        raise DivergenceError(message, history=history)

    for k in range(1, cfg.max_iters + 1):
        if cfg.estimator == "sampled":
            nxt, reward, noise = advance(pool, theta)
            td = (reward + cfg.gamma * critic_value(w, nxt)
                  - critic_value(w, pool))
            c_loss = float(0.5 * np.mean(td ** 2))
            c_grad = symmetrize((pool * td[:, None]).T @ pool / cfg.batch_size)
            w, adam_w = adam_update(w, c_grad, adam_w, cfg.lr_critic, "descend")
            w = symmetrize(w)
            a_loss, a_grad = actor_loss_and_grad(
                model, w, theta, pool, noise, gamma=cfg.gamma)
            theta, adam_theta = adam_update(
                theta, a_grad, adam_theta, cfg.lr_actor, "ascend")
            pool = nxt
        else:
            c_loss, c_grad = _analytic_critic_loss_and_grad(
                model, w, theta, pool, cfg.gamma)
            w, adam_w = adam_update(w, c_grad, adam_w, cfg.lr_critic, "descend")
            w = symmetrize(w)
            a_loss, a_grad = _analytic_actor_loss_and_grad(
                model, w, theta, pool, cfg.gamma)
            theta, adam_theta = adam_update(
                theta, a_grad, adam_theta, cfg.lr_actor, "ascend")
            pool, _, _ = advance(pool, theta)

        rec.theta.append(theta.copy())
        rec.diff.append(theta - ref_gain if ref_gain is not None
                        else np.full((n, r), np.nan))
        rec.critic_loss.append(c_loss)
        rec.actor_loss.append(a_loss)

        if not np.all(np.isfinite(theta)):
            fail("gain contains non-finite entries")
        if guard is not None and np.abs(theta).max() > guard:
            fail(f"gain magnitude exceeded the divergence guard ({guard:.3e})")
        worst_pool = np.abs(pool).max()
        if not np.isfinite(worst_pool) or worst_pool > 1e12:
            fail(f"error pool diverged (max entry {worst_pool:.3e})")

        if k >= tail_start:
            tail_sum += theta
            tail_count += 1

        window.append(theta.copy())
        if len(window) > _CONVERGENCE_WINDOW + 1:
            window.pop(0)
        if len(window) == _CONVERGENCE_WINDOW + 1:
            stack = np.asarray(window)
            spread = (stack.max(axis=0) - stack.min(axis=0)).max()
            if spread < cfg.convergence_tol:
                converged = True
                break

    final = tail_sum / tail_count if tail_count else theta
    history = rec.freeze(n, r, converged)
    return final, history


def train_average(model: LinearGaussianModel, cfg: TrainerConfig,
                  seeds, ref_gain: np.ndarray | None = None
                  ) -> tuple[np.ndarray, list[TrainHistory]]:
    """Train once per seed and average the learned gains.

    Seeds are disjoint runs of :func:`train` with ``cfg.seed`` replaced;
    histories come back in seed order for inspection or averaging.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    gains = []
    histories = []
    for seed in seeds:
        gain, history = train(model, replace(cfg, seed=int(seed)), ref_gain)
        gains.append(gain)
        histories.append(history)
    return np.mean(gains, axis=0), histories
