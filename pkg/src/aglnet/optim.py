"""Adam and the penalized training loop.

Two training modes are offered:

* ``subgradient`` adds the penalty's (sub)gradient to the risk gradient and
  lets Adam handle both. A column at exactly zero norm gets subgradient 0.
* ``proximal`` takes an Adam step on the risk alone and then applies block
  soft-thresholding to every column with threshold ``lr * lam * weight_k``,
  which produces exact zeros.

In both modes frozen columns (adaptive weights with a zero initializer) are
held at zero and receive no update.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import ContractViolation, DivergenceError
from .network import Dataset, LossKind, NetworkParams, check_loss, default_loss, empirical_risk
from .penalty import PenaltySpec


class Mode(str, enum.Enum):
    SUBGRADIENT = "subgradient"
    PROXIMAL = "proximal"


@dataclass
class AdamState:
    """Moment accumulators over the flattened parameter vector."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, n_params: int, lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
        return cls(np.zeros(n_params), np.zeros(n_params), 0, lr, beta1, beta2, eps)


def adam_step(
    state: AdamState, params: NetworkParams, grad: NetworkParams
) -> tuple[AdamState, NetworkParams]:
    """Return the state and parameters after one Adam update. Inputs are not modified."""
    theta = params.to_vector()
    g = grad.to_vector()
    if theta.shape != g.shape or state.m.shape != theta.shape:
        raise ContractViolation("parameter, gradient and state shapes disagree")
    if not np.all(np.isfinite(g)):
        raise DivergenceError("non-finite gradient passed to adam_step")
    m, v = state.m.copy(), state.v.copy()
    step = state.step + 1
    _kernels.adam_update(theta, g, m, v, step, state.lr, state.beta1, state.beta2, state.eps)
    new_state = replace(state, m=m, v=v, step=step)
    return new_state, NetworkParams.from_vector(theta, params.n_hidden, params.n_inputs)


@dataclass
class TrainConfig:
    """Optimizer and loop settings. ``loss=None`` picks the loss from the task."""

    epochs: int = 10000
    batch_size: int = 200
    lr: float = 1e-3
    mode: Mode = Mode.SUBGRADIENT
    seed: int = 0
    loss: LossKind | None = None
    init_scale: float = 0.5
    n_hidden: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if self.loss is not None:
            self.loss = LossKind(self.loss)
        if self.epochs < 1 or self.batch_size < 1 or self.n_hidden < 1:
            raise ContractViolation("epochs, batch_size and n_hidden must be positive")
        if not (self.lr > 0 and self.init_scale > 0):
            raise ContractViolation("lr and init_scale must be positive")

    def with_seed(self, seed: int) -> TrainConfig:
        return replace(self, seed=int(seed))


def objective(params: NetworkParams, data: Dataset, spec: PenaltySpec,
              loss: LossKind | None = None) -> float:
    """Full-data empirical risk plus the scaled penalty."""
    loss = default_loss(data.task) if loss is None else loss
    return empirical_risk(params, data, loss) + spec.value(params)


def train(
    data: Dataset,
    spec: PenaltySpec,
    cfg: TrainConfig,
    init: NetworkParams | None = None,
) -> tuple[NetworkParams, np.ndarray]:
    """Minimize ``risk + penalty`` with shuffled mini-batch Adam.

    Parameters
    ----------
    data : Dataset
    spec : PenaltySpec
    cfg : TrainConfig
    init : NetworkParams, optional
        Starting point. Drawn uniformly on ``[-init_scale, init_scale]`` when absent.

    Returns
    -------
    params : NetworkParams
    trace : ndarray, shape (epochs,)
        Full-data objective after each epoch.

    Raises
    ------
    DivergenceError
        If the gradient or the objective stops being finite.
    """
    loss = check_loss(data, cfg.loss if cfg.loss is not None else default_loss(data.task))
    rng = np.random.default_rng(cfg.seed)
    if init is None:
        params = NetworkParams.random(cfg.n_hidden, data.n_inputs, rng, cfg.init_scale)
    else:
        if init.n_inputs != data.n_inputs:
            raise ContractViolation("init does not match the dataset's input count")
        params = init
    n_hidden, n_inputs = params.n_hidden, params.n_inputs
    group_weight, frozen = spec.group_weights(n_inputs)

    theta = params.to_vector()
    theta[: n_hidden * n_inputs].reshape(n_hidden, n_inputs)[:, frozen] = 0.0
    X = np.ascontiguousarray(data.inputs)
    y = np.ascontiguousarray(data.targets)
    loss_code = _kernels.BCE if loss is LossKind.BCE else _kernels.SQUARED
    mode_code = _kernels.PROXIMAL if cfg.mode is Mode.PROXIMAL else _kernels.SUBGRADIENT
    batch_size = min(cfg.batch_size, data.n)

    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    grad = np.zeros_like(theta)
    h = np.zeros(n_hidden)
    norms = np.zeros(n_inputs)
    trace = np.empty(cfg.epochs)
    step = 0
    for epoch in range(cfg.epochs):
        perm = rng.permutation(data.n)
        step = _kernels.run_epoch(
            theta, m, v, step, X, y, perm, batch_size, loss_code, mode_code,
            group_weight, frozen, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, grad, h, norms,
        )
        if step < 0:
            raise DivergenceError(f"non-finite gradient in epoch {epoch}", epoch)
        obj = _kernels.risk(theta, n_hidden, n_inputs, X, y, loss_code) + _kernels.penalty_value(
            theta, n_hidden, n_inputs, group_weight, frozen, norms
        )
        if not np.isfinite(obj):
            raise DivergenceError(f"non-finite objective in epoch {epoch}", epoch)
        trace[epoch] = obj
    return NetworkParams.from_vector(theta, n_hidden, n_inputs), trace
