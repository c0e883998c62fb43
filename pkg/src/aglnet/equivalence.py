"""Weight-space symmetries of the tanh network.

Permuting hidden nodes, or negating a node's incoming weights, bias and
outgoing weight together, leaves the input-output map unchanged (tanh is odd).
For irreducible networks these transforms generate the whole functional
equivalence class, so distances "modulo equivalence" reduce to a search over
them. That search factorizes: once nodes are matched, each pair picks its
sign independently, leaving a linear assignment problem.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ContractViolation
from .network import NetworkParams

DEFAULT_IRREDUCIBLE_TOL = 1e-8


@dataclass(frozen=True)
class EquivTransform:
    """Hidden-node permutation plus per-node sign flips.

    Node ``i`` of the transformed network is node ``perm[i]`` of the original,
    multiplied by ``signs[i]``.
    """

    perm: tuple[int, ...]
    signs: tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(p) for p in self.perm)
        signs = tuple(int(s) for s in self.signs)
        if sorted(perm) != list(range(len(perm))):
            raise ContractViolation(f"{perm} is not a permutation of 0..{len(perm) - 1}")
        if len(signs) != len(perm) or any(s not in (-1, 1) for s in signs):
            raise ContractViolation("signs must be +1/-1, one per hidden node")
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "signs", signs)

    @classmethod
    def identity(cls, n_hidden: int) -> EquivTransform:
        return cls(tuple(range(n_hidden)), (1,) * n_hidden)

    @classmethod
    def random(cls, n_hidden: int, rng: np.random.Generator) -> EquivTransform:
        return cls(tuple(rng.permutation(n_hidden)), tuple(rng.choice([-1, 1], size=n_hidden)))

    def inverse(self) -> EquivTransform:
        inv = [0] * len(self.perm)
        for i, p in enumerate(self.perm):
            inv[p] = i
        # node p of the original came from node i with sign signs[i]
        return EquivTransform(tuple(inv), tuple(self.signs[inv[j]] for j in range(len(inv))))


def apply_transform(params: NetworkParams, t: EquivTransform) -> NetworkParams:
    if len(t.perm) != params.n_hidden:
        raise ContractViolation("transform size does not match the hidden width")
    perm = np.asarray(t.perm)
    signs = np.asarray(t.signs, dtype=np.float64)
    return NetworkParams(
        signs[:, None] * params.first_layer[perm],
        signs * params.bias1[perm],
        signs * params.output_weights[perm],
        params.bias2,
    )


def all_transforms(n_hidden: int):
    """Every permutation/sign combination; ``n_hidden! * 2**n_hidden`` of them."""
    for perm in itertools.permutations(range(n_hidden)):
        for signs in itertools.product((1, -1), repeat=n_hidden):
            yield EquivTransform(perm, signs)


@dataclass
class IrreducibilityReport:
    irreducible: bool
    violations: list[tuple[str, tuple[int, ...], str]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.irreducible

    def conditions(self) -> set[str]:
        return {v[0] for v in self.violations}


def is_irreducible(params: NetworkParams, tol: float = DEFAULT_IRREDUCIBLE_TOL) -> IrreducibilityReport:
    """Check the two irreducibility conditions.

    (i) every hidden node has a nonzero first-layer row and a nonzero output
    weight; (ii) no two nodes have equal or negated ``(row, bias1)`` pairs.
    "Zero" and "equal" mean within ``tol`` in max-abs. Node indices in the
    report are 0-based.
    """
    if tol < 0:
        raise ContractViolation("tol must be >= 0")
    violations = []
    rows = params.first_layer
    row_norms = np.linalg.norm(rows, axis=1)
    for i in range(params.n_hidden):
        if row_norms[i] <= tol:
            violations.append(("i", (i,), "first-layer row is zero"))
        if abs(params.output_weights[i]) <= tol:
            violations.append(("i", (i,), "output weight is zero"))
    nodes = np.column_stack([rows, params.bias1])
    for i, j in itertools.combinations(range(params.n_hidden), 2):
        if np.max(np.abs(nodes[i] - nodes[j])) <= tol:
            violations.append(("ii", (i, j), "nodes are equal"))
        elif np.max(np.abs(nodes[i] + nodes[j])) <= tol:
            violations.append(("ii", (i, j), "nodes are negatives of each other"))
    return IrreducibilityReport(not violations, violations)


def _node_matrix(params: NetworkParams) -> np.ndarray:
    return np.column_stack([params.first_layer, params.bias1, params.output_weights])


def _check_same_arch(a: NetworkParams, b: NetworkParams) -> None:
    if (a.n_hidden, a.n_inputs) != (b.n_hidden, b.n_inputs):
        raise ContractViolation(
            f"architectures differ: {(a.n_hidden, a.n_inputs)} vs {(b.n_hidden, b.n_inputs)}"
        )


def optimal_transform(a: NetworkParams, b: NetworkParams) -> tuple[EquivTransform, float]:
    """Transform ``t`` minimizing ``||apply_transform(b, t) - a||`` and that minimum.

    The returned distance includes the (transform-invariant) ``bias2`` term.
    """
    _check_same_arch(a, b)
    na, nb = _node_matrix(a), _node_matrix(b)
    plain = ((na[:, None, :] - nb[None, :, :]) ** 2).sum(axis=2)
    flipped = ((na[:, None, :] + nb[None, :, :]) ** 2).sum(axis=2)
    cost = np.minimum(plain, flipped)
    rows, cols = linear_sum_assignment(cost)
    perm = [0] * a.n_hidden
    signs = [1] * a.n_hidden
    for i, j in zip(rows, cols):
        perm[i] = int(j)
        signs[i] = -1 if flipped[i, j] < plain[i, j] else 1
    total = cost[rows, cols].sum() + (a.bias2 - b.bias2) ** 2
    return EquivTransform(tuple(perm), tuple(signs)), float(np.sqrt(total))


def equiv_distance(a: NetworkParams, b: NetworkParams) -> float:
    """Euclidean distance from ``a`` to the closest member of ``b``'s symmetry class."""
    return optimal_transform(a, b)[1]


def support_mask(params: NetworkParams) -> np.ndarray:
    """Features whose first-layer column is not identically zero."""
    return np.any(params.first_layer != 0.0, axis=0)


def support_mask_true(model, tol: float = DEFAULT_IRREDUCIBLE_TOL) -> np.ndarray:
    """Reference support of a generating model (anything with a ``params`` attribute).

    Every network functionally equivalent to an irreducible one shares its
    zero/nonzero column pattern, so the mask is well defined only when the
    model is irreducible.
    """
    report = is_irreducible(model.params, tol)
    if not report:
        raise ContractViolation(f"generating model is reducible: {report.violations}")
    return support_mask(model.params)
