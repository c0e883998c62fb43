"""Estimators, cross-validation and feature selection.

Three pipelines are available:

``GL``
    Cross-validate the group lasso constant, fit, select.
``ERM_AGL``
    Fit the unpenalized network, use it to build adaptive weights,
    cross-validate the adaptive constant, fit, select.
``GL_AGL``
    As ``ERM_AGL`` but the initial estimate is a cross-validated group lasso fit.

A feature is selected when the norm of its first-layer column exceeds the
cutoff (strictly).
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._parallel import parallel_map
from ._rng import derive_seed, make_rng
from .errors import ContractViolation
from .network import Dataset, NetworkParams, default_loss, empirical_risk
from .optim import TrainConfig, train
from .penalty import PenaltyKind, PenaltySpec, adaptive_weights, group_norms

logger = logging.getLogger(__name__)

REGRESSION_GRID = (0.001, 0.01, 0.1, 1.0)
CLASSIFICATION_GRID = (0.001, 0.01, 0.1, 1.0, 2.0, 4.0, 8.0, 16.0)
DEFAULT_CUTOFF = 1e-3
DEFAULT_GAMMA = 2.0
DEFAULT_FOLDS = 3

_FOLD_SPLIT_KEY = 0x5E1EC7

__all__ = [
    "Method", "Grids", "SelectionResult", "PenaltySpec", "fit_erm", "fit_group_lasso",
    "fit_adaptive", "select_features", "cross_validate", "run_pipeline", "stability_run",
    "zeta_path",
]


class Method(str, enum.Enum):
    GL = "GL"
    ERM_AGL = "ERM_AGL"
    GL_AGL = "GL_AGL"


@dataclass
class Grids:
    """Hyperparameter grids. ``zeta=None`` reuses the lambda grid."""

    lam: tuple[float, ...] = REGRESSION_GRID
    zeta: tuple[float, ...] | None = None
    folds: int = DEFAULT_FOLDS
    gamma: float = DEFAULT_GAMMA
    cutoff: float = DEFAULT_CUTOFF

    def __post_init__(self):
        self.lam = tuple(float(x) for x in self.lam)
        if self.zeta is not None:
            self.zeta = tuple(float(x) for x in self.zeta)
        if not self.lam or (self.zeta is not None and not self.zeta):
            raise ContractViolation("grids must be nonempty")
        if any(x < 0 for x in self.lam + (self.zeta or ())):
            raise ContractViolation("grid values must be >= 0")

    @property
    def zeta_grid(self) -> tuple[float, ...]:
        return self.lam if self.zeta is None else self.zeta


@dataclass(eq=False)
class SelectionResult:
    fitted: NetworkParams
    norms: np.ndarray
    selected: np.ndarray
    method: Method
    chosen_lambda: float | None
    chosen_zeta: float | None
    cv_table: dict[str, list[tuple[float, float]]] = field(default_factory=dict)
    trace: np.ndarray | None = None
    initial: NetworkParams | None = None
    cutoff: float = DEFAULT_CUTOFF

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "cutoff": self.cutoff,
            "chosen_lambda": self.chosen_lambda,
            "chosen_zeta": self.chosen_zeta,
            "cv_table": {k: [list(row) for row in v] for k, v in self.cv_table.items()},
            "norms": self.norms.tolist(),
            "selected": self.selected.tolist(),
            "fitted": self.fitted.to_dict(),
            "initial": self.initial.to_dict() if self.initial is not None else None,
            "final_objective": float(self.trace[-1]) if self.trace is not None else None,
        }


# -- single fits -------------------------------------------------------------

def fit_erm(data: Dataset, cfg: TrainConfig) -> NetworkParams:
    return train(data, PenaltySpec(PenaltyKind.NONE), cfg)[0]


def fit_group_lasso(data: Dataset, lam: float, cfg: TrainConfig) -> NetworkParams:
    return train(data, PenaltySpec(PenaltyKind.GROUP_LASSO, lam), cfg)[0]


def _adaptive_spec(init: NetworkParams, zeta: float, gamma: float) -> PenaltySpec:
    return PenaltySpec(PenaltyKind.ADAPTIVE, zeta, adaptive_weights(init, gamma), gamma)


def fit_adaptive(
    data: Dataset, zeta: float, gamma: float, init: NetworkParams, cfg: TrainConfig
) -> NetworkParams:
    """Adaptive group lasso fit with weights ``||init column||^-gamma``.

    Training starts from ``init`` itself (its frozen columns are zeroed by the
    trainer).
    """
    return train(data, _adaptive_spec(init, zeta, gamma), cfg, init=init)[0]


def select_features(params: NetworkParams, cutoff: float = DEFAULT_CUTOFF) -> np.ndarray:
    if not cutoff > 0:
        raise ContractViolation("cutoff must be positive")
    return group_norms(params) > cutoff


# -- cross-validation --------------------------------------------------------

Fitter = Callable[[Dataset, float, TrainConfig], NetworkParams]


def group_lasso_fitter(train_data: Dataset, lam: float, cfg: TrainConfig) -> NetworkParams:
    return fit_group_lasso(train_data, lam, cfg)


@dataclass
class AdaptiveFitter:
    """Adaptive fits sharing one initial estimate (picklable for worker processes)."""

    init: NetworkParams
    gamma: float = DEFAULT_GAMMA

    def __call__(self, train_data: Dataset, zeta: float, cfg: TrainConfig) -> NetworkParams:
        return fit_adaptive(train_data, zeta, self.gamma, self.init, cfg)


def fold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Shuffle ``range(n)`` with ``seed`` and cut it into ``k`` contiguous blocks."""
    if k < 2:
        raise ContractViolation("need at least 2 folds")
    if n < k:
        raise ContractViolation(f"cannot split {n} rows into {k} folds")
    perm = make_rng(seed, _FOLD_SPLIT_KEY).permutation(n)
    return np.array_split(perm, k)


def _cv_task(task):
    fit, data, train_rows, val_rows, value, cfg, loss = task
    params = fit(data.subset(train_rows), value, cfg)
    return empirical_risk(params, data.subset(val_rows), loss)


def cross_validate(
    data: Dataset,
    grid,
    k: int,
    fit: Fitter,
    cfg: TrainConfig,
    jobs: int = 1,
) -> tuple[float, list[tuple[float, float]]]:
    """k-fold CV of ``fit`` over ``grid``, scored by unpenalized validation loss.

    Returns the best value and a table of ``(value, mean validation loss)`` in
    grid order. Ties go to the smaller value.
    """
    grid = [float(g) for g in grid]
    if not grid:
        raise ContractViolation("grid must be nonempty")
    folds = fold_indices(data.n, k, cfg.seed)
    loss = cfg.loss if cfg.loss is not None else default_loss(data.task)
    tasks = []
    for value in grid:
        for j, val_rows in enumerate(folds):
            train_rows = np.sort(np.concatenate([f for i, f in enumerate(folds) if i != j]))
            fold_cfg = cfg.with_seed(derive_seed(cfg.seed, j))
            tasks.append((fit, data, train_rows, val_rows, value, fold_cfg, loss))
    scores = np.asarray(parallel_map(_cv_task, tasks, jobs)).reshape(len(grid), k)
    table = [(value, float(s)) for value, s in zip(grid, scores.mean(axis=1))]
    best = min(table, key=lambda row: (row[1], row[0]))[0]
    return best, table


# -- pipelines ---------------------------------------------------------------

def _check_schedule(zeta: float, n: int, gamma: float) -> None:
    floor = n ** (-gamma / 4)
    if zeta < floor:
        warnings.warn(
            f"chosen zeta={zeta:g} is below n^(-gamma/4)={floor:g}; "
            "the consistency rate condition may not hold",
            stacklevel=3,
        )


def run_pipeline(
    data: Dataset,
    method: Method | str,
    grids: Grids | None = None,
    cfg: TrainConfig | None = None,
    jobs: int = 1,
    warn_schedule: bool = False,
) -> SelectionResult:
    method = Method(method)
    grids = grids or Grids()
    cfg = cfg or TrainConfig()
    gamma, k = grids.gamma, grids.folds
    cv_table: dict[str, list[tuple[float, float]]] = {}
    lam = zeta = None
    initial = None

    if method in (Method.GL, Method.GL_AGL):
        lam, cv_table["lambda"] = cross_validate(data, grids.lam, k, group_lasso_fitter, cfg, jobs)
        spec = PenaltySpec(PenaltyKind.GROUP_LASSO, lam)
        fitted, trace = train(data, spec, cfg)
        if method is Method.GL:
            return SelectionResult(
                fitted, group_norms(fitted), select_features(fitted, grids.cutoff), method,
                lam, None, cv_table, trace, None, grids.cutoff,
            )
        initial = fitted
    else:
        initial = fit_erm(data, cfg)

    zeta, cv_table["zeta"] = cross_validate(
        data, grids.zeta_grid, k, AdaptiveFitter(initial, gamma), cfg, jobs
    )
    if warn_schedule:
        _check_schedule(zeta, data.n, gamma)
    fitted, trace = train(data, _adaptive_spec(initial, zeta, gamma), cfg, init=initial)
    return SelectionResult(
        fitted, group_norms(fitted), select_features(fitted, grids.cutoff), method,
        lam, zeta, cv_table, trace, initial, grids.cutoff,
    )


def _stability_task(task):
    data, method, grids, cfg = task
    return run_pipeline(data, method, grids, cfg).selected


def stability_run(
    data: Dataset,
    method: Method | str,
    grids: Grids | None,
    cfg: TrainConfig,
    repeats: int,
    jobs: int = 1,
) -> np.ndarray:
    """Fraction of ``repeats`` pipeline runs (seeds ``cfg.seed + r``) selecting each feature.

    The data are not resampled; run-to-run variation comes from initialization
    and batch order.
    """
    if repeats < 1:
        raise ContractViolation("repeats must be >= 1")
    tasks = [(data, method, grids, cfg.with_seed(cfg.seed + r)) for r in range(repeats)]
    masks = np.asarray(parallel_map(_stability_task, tasks, jobs), dtype=float)
    return masks.mean(axis=0)


@dataclass
class ZetaPath:
    zetas: list[float]
    selected: list[np.ndarray]
    violations: list[tuple[float, float]]

    @property
    def monotone(self) -> bool:
        return not self.violations


def zeta_path(
    data: Dataset,
    zetas,
    init: NetworkParams,
    cfg: TrainConfig,
    gamma: float = DEFAULT_GAMMA,
    cutoff: float = DEFAULT_CUTOFF,
) -> ZetaPath:
    """Adaptive fits over increasing ``zetas`` from one init and seed.

    Larger constants should select subsets of what smaller ones select; the
    problem is non-convex, so breaches are reported as ``(zeta, next zeta)``
    pairs rather than raised.
    """
    zetas = sorted(float(z) for z in zetas)
    selected = [select_features(fit_adaptive(data, z, gamma, init, cfg), cutoff) for z in zetas]
    violations = [
        (zetas[i], zetas[i + 1])
        for i in range(len(zetas) - 1)
        if np.any(selected[i + 1] & ~selected[i])
    ]
    for lo, hi in violations:
        logger.info("selection grew from zeta=%g to zeta=%g", lo, hi)
    return ZetaPath(zetas, selected, violations)
