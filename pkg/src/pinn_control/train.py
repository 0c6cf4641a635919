"""Joint full-batch Adam optimization of network and physical parameters.

Every epoch evaluates the total loss over all data, boundary, and
residual points, takes one Adam step on the concatenated parameter
vector (network weights followed by the learnable diffusion
coefficient), and stops when the loss drops below the problem tolerance
or the epoch cap is reached.  Runs are bit-reproducible for a fixed
seed.
"""

from __future__ import annotations

import csv
from contextlib import nullcontext
from dataclasses import dataclass, field, replace

import numpy as np

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover
    threadpool_limits = None

from .autodiff.engine import Recording, grad_scalar
from .loss import LossBreakdown, LossWeights, total_loss
from .network import ModelParams, NetworkConfig, NetworkParams, init_params
from .problems import ProblemSpec
from .sampling import TrainingDataset

__all__ = [
    "TrainConfig",
    "AdamState",
    "TrainHistory",
    "HistoryEntry",
    "TrainingDiverged",
    "adam_step",
    "train",
    "write_history_csv",
]


class TrainingDiverged(RuntimeError):
    """Training produced a non-finite loss; carries the diagnostic state."""

    def __init__(self, message: str, epoch: int, nu: float, last_breakdown=None):
        super().__init__(message)
        self.epoch = epoch
        self.nu = nu
        self.last_breakdown = last_breakdown


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    epsilon_tol: float = 1e-7
    max_epochs: int = 300_000
    log_every: int = 100
    seed: int = 0


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n), step=0)


def adam_step(
    state: AdamState,
    params_flat: np.ndarray,
    grads_flat: np.ndarray,
    config: TrainConfig,
) -> tuple[AdamState, np.ndarray]:
    """One standard Adam update with bias correction."""
    if params_flat.shape != grads_flat.shape:
        raise ValueError(
            f"parameter/gradient length mismatch: {params_flat.shape} vs {grads_flat.shape}"
        )
    t = state.step + 1
    m = config.beta1 * state.m + (1.0 - config.beta1) * grads_flat
    v = config.beta2 * state.v + (1.0 - config.beta2) * grads_flat**2
    m_hat = m / (1.0 - config.beta1**t)
    v_hat = v / (1.0 - config.beta2**t)
    updated = params_flat - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps_adam)
    return AdamState(m=m, v=v, step=t), updated


@dataclass
class HistoryEntry:
    epoch: int
    breakdown: LossBreakdown
    nu: float


@dataclass
class TrainHistory:
    entries: list[HistoryEntry] = field(default_factory=list)
    stop_reason: str = ""
    epochs: int = 0

    @property
    def nu_trajectory(self) -> np.ndarray:
        return np.array([e.nu for e in self.entries])


def train(
    spec: ProblemSpec,
    dataset: TrainingDataset,
    net_config: NetworkConfig,
    train_config: TrainConfig,
    weights: LossWeights = LossWeights(),
    log_callback=None,
) -> tuple[NetworkParams, ModelParams, TrainHistory]:
    """Full-batch Adam on the total loss; returns final parameters,
    learned physical parameters, and the logged history."""
    # The per-epoch matrix products are tall and thin; multi-threaded BLAS
    # loses to thread churn on them, so the whole loop runs single-threaded
    # (which also keeps runs reproducible across machines).
    limiter = threadpool_limits(limits=1) if threadpool_limits is not None else nullcontext()
    with limiter:
        return _train_loop(spec, dataset, net_config, train_config, weights, log_callback)


def _train_loop(
    spec: ProblemSpec,
    dataset: TrainingDataset,
    net_config: NetworkConfig,
    train_config: TrainConfig,
    weights: LossWeights,
    log_callback,
) -> tuple[NetworkParams, ModelParams, TrainHistory]:
    params = init_params(replace(net_config, seed=train_config.seed))
    model = ModelParams(
        nu=spec.nu0, mu=spec.mu, lam=spec.lam,
        alpha=spec.alpha, alpha_T=spec.alpha_T, nu_learnable=True,
    )
    n_theta = params.n_params
    flat = np.concatenate([params.flatten(), [model.nu]])
    state = AdamState.zeros(flat.size)
    history = TrainHistory()
    cfg = train_config

    def log(epoch: int, breakdown: LossBreakdown, nu: float) -> None:
        entry = HistoryEntry(epoch=epoch, breakdown=breakdown.as_floats(), nu=nu)
        history.entries.append(entry)
        if log_callback is not None:
            log_callback(entry, params, model)

    epoch = 0
    while True:
        params = NetworkParams.from_flat(flat[:n_theta], params.config)
        model.nu = float(flat[n_theta])
        try:
            breakdown = total_loss(spec, params, model, dataset, weights)
        except FloatingPointError as exc:
            raise TrainingDiverged(
                f"non-finite loss at epoch {epoch} (nu={model.nu:.6g}): {exc}",
                epoch=epoch, nu=model.nu,
                last_breakdown=history.entries[-1].breakdown if history.entries else None,
            ) from exc
        total = float(breakdown.total)

        logged = False
        if epoch % cfg.log_every == 0:
            log(epoch, breakdown, model.nu)
            logged = True
        if total < cfg.epsilon_tol:
            history.stop_reason = "tolerance"
        elif epoch >= cfg.max_epochs:
            history.stop_reason = "cap"
        if history.stop_reason:
            if not logged:
                log(epoch, breakdown, model.nu)
            history.epochs = epoch
            return params, model, history

        grads = grad_scalar(breakdown.total)
        flat_grads = np.concatenate([grads.d_theta, grads.d_xi])
        state, flat = adam_step(state, flat, flat_grads, cfg)
        epoch += 1


def write_history_csv(path, history: TrainHistory) -> None:
    """One row per logged epoch: the loss terms, the total, and nu."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch"] + list(LossBreakdown.FIELD_NAMES) + ["nu"])
        for e in history.entries:
            b = e.breakdown
            writer.writerow(
                [e.epoch]
                + [repr(getattr(b, name)) for name in LossBreakdown.FIELD_NAMES]
                + [repr(e.nu)]
            )
