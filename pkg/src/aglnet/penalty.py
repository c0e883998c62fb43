"""Group penalties on first-layer columns and their proximal operator.

One group per input feature: group ``k`` is column ``k`` of the first layer.
Biases and output weights are never penalized.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .network import NetworkParams

DEFAULT_FREEZE_TOL = 1e-12


class PenaltyKind(str, enum.Enum):
    NONE = "none"
    GROUP_LASSO = "group_lasso"
    ADAPTIVE = "adaptive"


@dataclass(eq=False)
class AdaptiveWeights:
    """Per-feature adaptive penalty weights.

    ``frozen[k]`` marks a feature whose initial estimate was exactly zero. Under
    the 0/0 = 1 convention the only finite-penalty choice for such a column is
    to keep it at zero, so trainers pin it there and ``values[k]`` is unused
    (stored as 0).
    """

    values: np.ndarray
    frozen: np.ndarray
    gamma: float = 2.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        self.frozen = np.asarray(self.frozen, dtype=bool).reshape(-1)
        if self.values.shape != self.frozen.shape:
            raise ContractViolation("values and frozen must have equal length")
        live = self.values[~self.frozen]
        if not np.all(np.isfinite(live)) or np.any(live <= 0):
            raise ContractViolation("non-frozen adaptive weights must be finite and positive")
        self.values = np.where(self.frozen, 0.0, self.values)

    def __len__(self) -> int:
        return self.values.shape[0]

    @classmethod
    def ones(cls, n_inputs: int, gamma: float = 2.0) -> AdaptiveWeights:
        return cls(np.ones(n_inputs), np.zeros(n_inputs, dtype=bool), gamma)

    def to_dict(self) -> dict:
        return {
            "values": self.values.tolist(),
            "frozen": self.frozen.tolist(),
            "gamma": self.gamma,
        }


@dataclass(eq=False)
class PenaltySpec:
    """Which penalty to add to the empirical risk, and how strongly.

    ``lam`` is the group lasso constant for ``GROUP_LASSO`` and the adaptive
    constant for ``ADAPTIVE``; it is ignored for ``NONE``.
    """

    kind: PenaltyKind = PenaltyKind.NONE
    lam: float = 0.0
    weights: AdaptiveWeights | None = None
    gamma: float = 2.0

    def __post_init__(self):
        self.kind = PenaltyKind(self.kind)
        if self.lam < 0 or not np.isfinite(self.lam):
            raise ContractViolation("regularization constant must be finite and >= 0")
        if self.kind is PenaltyKind.ADAPTIVE and self.weights is None:
            raise ContractViolation("adaptive penalty requires weights")

    def group_weights(self, n_inputs: int) -> tuple[np.ndarray, np.ndarray]:
        """Effective per-group multipliers ``lam * weight_k`` and the frozen mask."""
        frozen = np.zeros(n_inputs, dtype=bool)
        if self.kind is PenaltyKind.NONE:
            return np.zeros(n_inputs), frozen
        if self.kind is PenaltyKind.GROUP_LASSO:
            return np.full(n_inputs, float(self.lam)), frozen
        if len(self.weights) != n_inputs:
            raise ContractViolation(
                f"adaptive weights have length {len(self.weights)}, network has {n_inputs} inputs"
            )
        return self.lam * self.weights.values, self.weights.frozen.copy()

    def value(self, params: NetworkParams) -> float:
        """``lam`` times the penalty at ``params`` (0 for ``NONE``)."""
        if self.kind is PenaltyKind.NONE:
            return 0.0
        if self.kind is PenaltyKind.GROUP_LASSO:
            return self.lam * group_lasso_penalty(params)
        return self.lam * adaptive_penalty(params, self.weights)


def group_norms(params: NetworkParams) -> np.ndarray:
    """Euclidean norm of each first-layer column (one entry per input feature)."""
    return np.sqrt(np.sum(params.first_layer**2, axis=0))


def group_lasso_penalty(params: NetworkParams) -> float:
    return float(np.sum(group_norms(params)))


def adaptive_weights(
    init: NetworkParams, gamma: float = 2.0, freeze_tol: float = DEFAULT_FREEZE_TOL
) -> AdaptiveWeights:
    """Weights ``||init column k||^(-gamma)``; columns with norm <= ``freeze_tol`` are frozen."""
    if not gamma > 0:
        raise ContractViolation("gamma must be positive")
    if freeze_tol < 0:
        raise ContractViolation("freeze_tol must be >= 0")
    norms = group_norms(init)
    frozen = norms <= freeze_tol
    values = np.zeros_like(norms)
    with np.errstate(over="ignore"):
        values[~frozen] = norms[~frozen] ** (-gamma)
    return AdaptiveWeights(values, frozen, gamma)


def adaptive_penalty(params: NetworkParams, weights: AdaptiveWeights) -> float:
    norms = group_norms(params)
    if len(weights) != norms.shape[0]:
        raise ContractViolation("weights length must equal n_inputs")
    if np.any(norms[weights.frozen] != 0.0):
        bad = np.flatnonzero(weights.frozen & (norms != 0.0)).tolist()
        raise ContractViolation(f"frozen feature(s) {bad} have nonzero weights")
    return float(np.sum(weights.values[~weights.frozen] * norms[~weights.frozen]))


def block_soft_threshold(column, t: float) -> np.ndarray:
    """Proximal operator of ``t * ||.||_2``.

    Returns zero when ``||column|| <= t`` and ``column * (1 - t / ||column||)``
    otherwise.
    """
    if t < 0:
        raise ContractViolation("threshold must be >= 0")
    column = np.asarray(column, dtype=np.float64)
    norm = np.linalg.norm(column)
    if norm <= t:
        return np.zeros_like(column)
    return column * (1.0 - t / norm)
