"""Selection-quality and prediction metrics.

The false discovery rate of a truly non-significant feature is the fraction
of replications (within one noise level and method) in which it was selected;
the true positive rate of a significant feature is defined the same way.
Replications whose fit failed are excluded from both.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ._parallel import parallel_map
from ._rng import derive_seed, make_rng
from .errors import ContractViolation
from .network import Dataset, Task, predict_prob_batch
from .optim import TrainConfig
from .pipeline import fit_erm

_SPLIT_KEY = 0x75_25


@dataclass
class ReplicationRecord:
    sigma2: float
    method: str
    replication: int
    support: list[bool]
    selected: list[bool] | None
    norms: list[float] | None = None
    chosen_lambda: float | None = None
    chosen_zeta: float | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.selected is not None


@dataclass
class ExperimentReport:
    records: list[ReplicationRecord]
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        for rec in self.records:
            if rec.selected is not None and len(rec.selected) != len(rec.support):
                raise ContractViolation("selection mask and support differ in length")

    def cells(self) -> list[tuple[float, str]]:
        """Distinct ``(sigma2, method)`` pairs, sorted."""
        return sorted({(r.sigma2, r.method) for r in self.records})

    def cell(self, sigma2: float, method) -> list[ReplicationRecord]:
        method = getattr(method, "value", method)
        recs = [r for r in self.records if r.sigma2 == sigma2 and r.method == method and r.ok]
        if not recs:
            raise ContractViolation(f"no successful replications for sigma2={sigma2}, {method}")
        return sorted(recs, key=lambda r: r.replication)

    def to_dict(self) -> dict:
        return {"config": self.config, "records": [asdict(r) for r in self.records]}

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentReport:
        return cls([ReplicationRecord(**r) for r in d["records"]], d.get("config", {}))


def _selection_rates(report: ExperimentReport, sigma2: float, method, significant: bool):
    recs = report.cell(sigma2, method)
    support = np.asarray(recs[0].support, dtype=bool)
    if any(np.any(np.asarray(r.support, dtype=bool) != support) for r in recs):
        raise ContractViolation("replications in one cell disagree on the true support")
    selected = np.asarray([r.selected for r in recs], dtype=bool)
    features = np.flatnonzero(support if significant else ~support)
    return features, selected[:, features].mean(axis=0)


def fdr_per_feature(report: ExperimentReport, sigma2: float, method) -> np.ndarray:
    """Selection frequency of each truly non-significant feature, in feature order."""
    return _selection_rates(report, sigma2, method, significant=False)[1]


def tpr_per_feature(report: ExperimentReport, sigma2: float, method) -> np.ndarray:
    """Selection frequency of each truly significant feature, in feature order."""
    return _selection_rates(report, sigma2, method, significant=True)[1]


def fdr_table(report: ExperimentReport) -> list[tuple[float, str, int, float]]:
    """Rows ``(sigma2, method, feature, fdr)``, one per non-significant feature per cell."""
    rows = []
    for sigma2, method in report.cells():
        features, rates = _selection_rates(report, sigma2, method, significant=False)
        rows.extend((sigma2, method, int(f), float(r)) for f, r in zip(features, rates))
    return rows


def tpr_table(report: ExperimentReport) -> list[tuple[float, str, int, float]]:
    rows = []
    for sigma2, method in report.cells():
        features, rates = _selection_rates(report, sigma2, method, significant=True)
        rows.extend((sigma2, method, int(f), float(r)) for f, r in zip(features, rates))
    return rows


def accuracy(predictions, truth) -> float:
    predictions = np.asarray(predictions, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if predictions.shape != truth.shape:
        raise ContractViolation("predictions and truth differ in length")
    if predictions.size == 0:
        raise ContractViolation("accuracy of an empty vector is undefined")
    return float(np.mean(predictions == truth))


def train_test_split(n: int, seed: int, test_fraction: float = 0.25) -> tuple[np.ndarray, np.ndarray]:
    perm = make_rng(seed, _SPLIT_KEY).permutation(n)
    n_test = int(round(n * test_fraction))
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def _validation_task(task):
    data, mask, cfg, seed = task
    train_rows, test_rows = train_test_split(data.n, seed)
    fit_cfg = cfg.with_seed(derive_seed(seed, 1))
    out = []
    for d in (data, data.select_columns(mask)):
        params = fit_erm(d.subset(train_rows), fit_cfg)
        test = d.subset(test_rows)
        pred = predict_prob_batch(params, test.inputs) > 0.5
        out.append(accuracy(pred, test.targets.astype(bool)))
    return out


def validation_study(
    data: Dataset, selected_mask, cfg: TrainConfig, repeats: int = 100, jobs: int = 1
) -> tuple[float, float]:
    """Mean test accuracy of unpenalized fits on all features vs. the selected ones.

    Each repeat draws a fresh 75/25 split (seeded from ``cfg.seed`` and the
    repeat index) and fits both models on the same training rows with the same
    training seed. The reduced model drops unselected columns entirely.
    """
    if data.task is not Task.BINARY:
        raise ContractViolation("validation study needs a binary task")
    mask = np.asarray(selected_mask, dtype=bool)
    if mask.shape != (data.n_inputs,) or not mask.any():
        raise ContractViolation("mask must have one entry per feature and select at least one")
    if repeats < 1:
        raise ContractViolation("repeats must be >= 1")
    tasks = [(data, mask, cfg, derive_seed(cfg.seed, r)) for r in range(repeats)]
    accs = np.asarray(parallel_map(_validation_task, tasks, jobs))
    return float(accs[:, 0].mean()), float(accs[:, 1].mean())
