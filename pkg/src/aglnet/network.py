"""One-hidden-layer tanh network with a single output.

The forward map is ``f(x) = w . tanh(W x + b1) + b2``. Columns of ``W`` are
indexed by input feature; the group-sparsity penalties act on those columns.
All routines here are pure numpy and operate in float64.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation


class Task(str, enum.Enum):
    REGRESSION = "regression"
    BINARY = "binary"


class LossKind(str, enum.Enum):
    """Per-sample loss. ``BCE`` applies a sigmoid to the network output first."""

    SQUARED = "squared"
    BCE = "binary_cross_entropy"


@dataclass(eq=False)
class NetworkParams:
    """All weights of an ``(n_inputs, n_hidden, 1)`` network.

    Attributes
    ----------
    first_layer : ndarray, shape (n_hidden, n_inputs)
        Input-to-hidden weights. Column ``k`` holds every weight leaving input ``k``.
    bias1 : ndarray, shape (n_hidden,)
    output_weights : ndarray, shape (n_hidden,)
    bias2 : float
    """

    first_layer: np.ndarray
    bias1: np.ndarray
    output_weights: np.ndarray
    bias2: float

    def __post_init__(self):
        self.first_layer = np.array(self.first_layer, dtype=np.float64, ndmin=2)
        self.bias1 = np.array(self.bias1, dtype=np.float64).reshape(-1)
        self.output_weights = np.array(self.output_weights, dtype=np.float64).reshape(-1)
        self.bias2 = float(self.bias2)
        n_hidden = self.first_layer.shape[0]
        if self.first_layer.ndim != 2:
            raise ContractViolation("first_layer must be a matrix")
        if self.bias1.shape != (n_hidden,) or self.output_weights.shape != (n_hidden,):
            raise ContractViolation(
                f"inconsistent shapes: first_layer {self.first_layer.shape}, "
                f"bias1 {self.bias1.shape}, output_weights {self.output_weights.shape}"
            )
        if not (
            np.all(np.isfinite(self.first_layer))
            and np.all(np.isfinite(self.bias1))
            and np.all(np.isfinite(self.output_weights))
            and np.isfinite(self.bias2)
        ):
            raise ContractViolation("network parameters must be finite")

    @property
    def n_hidden(self) -> int:
        return self.first_layer.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.first_layer.shape[1]

    @property
    def size(self) -> int:
        return self.n_hidden * (self.n_inputs + 2) + 1

    @classmethod
    def zeros(cls, n_hidden: int, n_inputs: int) -> NetworkParams:
        return cls(np.zeros((n_hidden, n_inputs)), np.zeros(n_hidden), np.zeros(n_hidden), 0.0)

    @classmethod
    def random(
        cls, n_hidden: int, n_inputs: int, rng: np.random.Generator, scale: float = 0.5
    ) -> NetworkParams:
        """Every entry i.i.d. uniform on ``[-scale, scale]``."""
        vec = rng.uniform(-scale, scale, size=n_hidden * (n_inputs + 2) + 1)
        return cls.from_vector(vec, n_hidden, n_inputs)

    def to_vector(self) -> np.ndarray:
        """Flatten in the fixed order: first layer (row-major), bias1, output weights, bias2."""
        return np.concatenate(
            [self.first_layer.ravel(), self.bias1, self.output_weights, [self.bias2]]
        )

    @classmethod
    def from_vector(cls, vec, n_hidden: int, n_inputs: int) -> NetworkParams:
        vec = np.asarray(vec, dtype=np.float64)
        expected = n_hidden * (n_inputs + 2) + 1
        if vec.shape != (expected,):
            raise ContractViolation(f"expected a vector of length {expected}, got {vec.shape}")
        a = n_hidden * n_inputs
        return cls(
            vec[:a].reshape(n_hidden, n_inputs).copy(),
            vec[a : a + n_hidden].copy(),
            vec[a + n_hidden : a + 2 * n_hidden].copy(),
            float(vec[-1]),
        )

    def copy(self) -> NetworkParams:
        return NetworkParams(
            self.first_layer.copy(), self.bias1.copy(), self.output_weights.copy(), self.bias2
        )

    def to_dict(self) -> dict:
        return {
            "n_hidden": self.n_hidden,
            "n_inputs": self.n_inputs,
            "first_layer": self.first_layer.tolist(),
            "bias1": self.bias1.tolist(),
            "output_weights": self.output_weights.tolist(),
            "bias2": self.bias2,
        }

    @classmethod
    def from_dict(cls, d: dict) -> NetworkParams:
        params = cls(d["first_layer"], d["bias1"], d["output_weights"], d["bias2"])
        if "n_inputs" in d and params.n_inputs != d["n_inputs"]:
            raise ContractViolation("n_inputs does not match first_layer")
        return params


@dataclass(eq=False)
class Dataset:
    """``n`` rows of inputs with scalar targets."""

    inputs: np.ndarray
    targets: np.ndarray
    task: Task = Task.REGRESSION

    def __post_init__(self):
        self.inputs = np.array(self.inputs, dtype=np.float64, ndmin=2)
        self.targets = np.array(self.targets, dtype=np.float64).reshape(-1)
        self.task = Task(self.task)
        if self.inputs.ndim != 2 or self.inputs.shape[0] != self.targets.shape[0]:
            raise ContractViolation(
                f"inputs {self.inputs.shape} and targets {self.targets.shape} disagree"
            )
        if self.inputs.shape[0] < 1:
            raise ContractViolation("a dataset needs at least one row")
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.targets))):
            raise ContractViolation("dataset contains non-finite values")
        if self.task is Task.BINARY and not np.all(np.isin(self.targets, (0.0, 1.0))):
            raise ContractViolation("binary targets must be 0 or 1")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.inputs.shape[1]

    def subset(self, rows) -> Dataset:
        rows = np.asarray(rows)
        return Dataset(self.inputs[rows], self.targets[rows], self.task)

    def select_columns(self, mask) -> Dataset:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (self.n_inputs,):
            raise ContractViolation("column mask length must equal n_inputs")
        return Dataset(self.inputs[:, mask], self.targets, self.task)


def default_loss(task: Task) -> LossKind:
    return LossKind.BCE if Task(task) is Task.BINARY else LossKind.SQUARED


def check_loss(data: Dataset, loss: LossKind) -> LossKind:
    loss = LossKind(loss)
    if loss is LossKind.BCE and data.task is not Task.BINARY:
        raise ContractViolation("binary cross-entropy requires a binary task")
    return loss


def _check_dims(params: NetworkParams, n_inputs: int) -> None:
    if params.n_inputs != n_inputs:
        raise ContractViolation(
            f"network expects {params.n_inputs} inputs, got {n_inputs}"
        )


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


def forward(params: NetworkParams, x) -> float:
    """Network output for a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ContractViolation("forward takes a single input vector")
    _check_dims(params, x.shape[0])
    h = np.tanh(params.first_layer @ x + params.bias1)
    return float(params.output_weights @ h + params.bias2)


def forward_batch(params: NetworkParams, inputs) -> np.ndarray:
    """Network outputs for every row of ``inputs``."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2:
        raise ContractViolation("forward_batch takes a matrix of input rows")
    _check_dims(params, inputs.shape[1])
    return np.tanh(inputs @ params.first_layer.T + params.bias1) @ params.output_weights + params.bias2


def predict_prob(params: NetworkParams, x) -> float:
    return sigmoid(forward(params, x))


def predict_prob_batch(params: NetworkParams, inputs) -> np.ndarray:
    return sigmoid(forward_batch(params, inputs))


def _per_sample_loss(f: np.ndarray, y: np.ndarray, loss: LossKind) -> np.ndarray:
    if loss is LossKind.SQUARED:
        return (f - y) ** 2
    # log(1 + e^f) - y f, written from the logit so log(0) never occurs
    return np.logaddexp(0.0, f) - y * f


def empirical_risk(params: NetworkParams, data: Dataset, loss: LossKind = LossKind.SQUARED) -> float:
    """Mean per-sample loss over ``data``."""
    loss = check_loss(data, loss)
    f = forward_batch(params, data.inputs)
    return float(np.mean(_per_sample_loss(f, data.targets, loss)))


def grad_risk(
    params: NetworkParams, data: Dataset, loss: LossKind = LossKind.SQUARED
) -> NetworkParams:
    """Exact gradient of :func:`empirical_risk` by backpropagation.

    The result is returned as a :class:`NetworkParams` holding the partial
    derivative for every weight.
    """
    loss = check_loss(data, loss)
    X, y = data.inputs, data.targets
    _check_dims(params, X.shape[1])
    H = np.tanh(X @ params.first_layer.T + params.bias1)
    f = H @ params.output_weights + params.bias2
    if loss is LossKind.SQUARED:
        d = 2.0 * (f - y) / data.n
    else:
        d = (sigmoid(f) - y) / data.n
    delta = np.outer(d, params.output_weights) * (1.0 - H * H)
    return NetworkParams(delta.T @ X, delta.sum(axis=0), H.T @ d, d.sum())
