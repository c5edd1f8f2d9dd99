"""Hybrid logic networks: hard logical constraints plus soft weighted formulas.

A hybrid network over a list of formulas ``f_0 .. f_{p-1}`` is described by
a hard set ``A`` with target truth values ``y_A`` and weights ``theta`` (zero
on ``A``).  Its distribution is proportional to the indicator that every hard
formula takes its target value times ``exp(sum theta_l f_l(x))``.

Each formula contributes a basis encoding onto its head variable
``<name>_cV`` (core ``<name>_cC``) and an activation vector on that head
(core ``<name>_aC``): a one-hot for hard formulas, ``[1, exp(theta)]`` for
soft ones.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .core import Tensor, TensorNetwork, Variable, contract, nonzero_indicator, ones
from .errors import DegenerateActivationError, InputError, NonRepresentableMomentError
from .logic import Expression, KnowledgeBase, atoms_of, check_expression, entails, formula_tensor
from .probability import markov_distribution


@dataclass(frozen=True)
class FormulaStatistic:
    """Ordered, named formulas over a fixed list of atoms."""

    formulas: tuple[tuple[str, Expression], ...]
    atoms: tuple[str, ...] = ()

    def __init__(self, formulas: Mapping[str, Expression] | Iterable[tuple[str, Expression]], atoms: Sequence[str] = ()) -> None:
        items = tuple(formulas.items()) if isinstance(formulas, Mapping) else tuple((str(n), e) for n, e in formulas)
        names = [n for n, _ in items]
        if len(set(names)) != len(names):
            raise InputError(f"formula names must be unique, got {names}")
        for _, e in items:
            check_expression(e)
        used = [a for _, e in items for a in atoms_of(e)]
        declared = tuple(dict.fromkeys(list(atoms) + used))
        object.__setattr__(self, "formulas", items)
        object.__setattr__(self, "atoms", declared)

    def __len__(self) -> int:
        return len(self.formulas)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.formulas)

    @property
    def expressions(self) -> tuple[Expression, ...]:
        return tuple(e for _, e in self.formulas)

    def head(self, index: int) -> Variable:
        return Variable(f"{self.formulas[index][0]}_cV", 2)

    def encoding(self, index: int) -> Tensor:
        """Basis encoding ``B[head, atoms]``: one where the head equals the formula's value."""
        _, e = self.formulas[index]
        f = formula_tensor(e)
        return Tensor((self.head(index),) + f.variables, np.stack([1.0 - f.values, f.values]))


@dataclass(frozen=True)
class HybridParams:
    """Hard set, hard targets (aligned with the sorted hard set) and soft weights."""

    hard_set: tuple[int, ...]
    hard_targets: tuple[int, ...]
    theta: np.ndarray

    def __post_init__(self) -> None:
        hard = tuple(int(i) for i in self.hard_set)
        targets = tuple(int(y) for y in self.hard_targets)
        theta = np.array(self.theta, dtype=np.float64).reshape(-1)
        if list(hard) != sorted(set(hard)):
            raise InputError("hard set must be sorted without repeats")
        if len(targets) != len(hard):
            raise InputError("one target per hard formula is required")
        if any(y not in (0, 1) for y in targets):
            raise InputError("hard targets must be 0 or 1")
        if any(not 0 <= i < len(theta) for i in hard):
            raise InputError("hard set indexes a formula that does not exist")
        if not np.all(np.isfinite(theta)):
            raise InputError("weights must be finite")
        if np.any(theta[list(hard)] != 0.0):
            raise InputError("hard formulas must carry zero weight")
        theta.flags.writeable = False
        object.__setattr__(self, "hard_set", hard)
        object.__setattr__(self, "hard_targets", targets)
        object.__setattr__(self, "theta", theta)

    @property
    def targets(self) -> dict[int, int]:
        return dict(zip(self.hard_set, self.hard_targets))

    def activation(self, index: int) -> np.ndarray:
        if index in self.targets:
            return np.eye(2)[self.targets[index]]
        return np.array([1.0, math.exp(self.theta[index])])


def hln_network(stat: FormulaStatistic, params: HybridParams, skip_activation: int | None = None) -> TensorNetwork:
    """Network of formula encodings and head activations.

    ``skip_activation`` leaves out the activation of one formula, leaving
    its head free.
    """
    if len(params.theta) != len(stat):
        raise InputError(f"{len(params.theta)} weights for {len(stat)} formulas")
    cores: list[tuple[str, Tensor]] = []
    for k, name in enumerate(stat.names):
        cores.append((f"{name}_cC", stat.encoding(k)))
        if k != skip_activation:
            cores.append((f"{name}_aC", Tensor([stat.head(k)], params.activation(k))))
    used = {a for e in stat.expressions for a in atoms_of(e)}
    for a in stat.atoms:
        if a not in used:
            cores.append((f"{a}_domain", ones([Variable(a, 2)])))
    return TensorNetwork(cores)


def hln_distribution(stat: FormulaStatistic, params: HybridParams) -> Tensor:
    """Normalized distribution over the atoms, legs in ``stat.atoms`` order."""
    return markov_distribution(hln_network(stat, params), list(stat.atoms))


def canonicalize_activation(vectors: Sequence[Sequence[float]]) -> HybridParams:
    """Parameters of a list of non-negative head activation vectors.

    A vector with a zero coordinate makes its formula hard (target is the
    nonzero position); otherwise the weight is the log ratio of its entries.
    """
    hard, targets, theta = [], [], []
    for k, vec in enumerate(vectors):
        v = np.asarray(vec, dtype=np.float64)
        if v.shape != (2,) or np.any(v < 0):
            raise InputError(f"activation {k} must be a non-negative vector of length 2")
        support = nonzero_indicator(Tensor([Variable("head", 2)], v)).values
        if not support.any():
            raise DegenerateActivationError(f"activation {k} is identically zero")
        if support.all():
            theta.append(math.log(v[1] / v[0]))
        else:
            hard.append(k)
            targets.append(int(support[1]))
            theta.append(0.0)
    return HybridParams(tuple(hard), tuple(targets), np.array(theta))


@dataclass(frozen=True)
class Dataset:
    """Boolean observations: one row per sample, one column per atom."""

    atoms: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self) -> None:
        rows = np.array(self.rows, dtype=np.int64)
        atoms = tuple(self.atoms)
        if rows.ndim != 2 or rows.shape[1] != len(atoms):
            raise InputError(f"rows must have shape (N, {len(atoms)})")
        if len(set(atoms)) != len(atoms):
            raise InputError("duplicate atom columns")
        if rows.size and not np.isin(rows, (0, 1)).all():
            raise InputError("observations must be 0 or 1")
        rows.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "rows", rows)

    def __len__(self) -> int:
        return len(self.rows)


def empirical_means(stat: FormulaStatistic, data: Dataset) -> np.ndarray:
    """Fraction of samples satisfying each formula."""
    if len(data) == 0:
        raise InputError("dataset is empty")
    col = {a: i for i, a in enumerate(data.atoms)}
    missing = [a for a in stat.atoms if a not in col]
    if missing:
        raise InputError(f"dataset has no column for atoms {missing}")
    mu = []
    for e in stat.expressions:
        t = formula_tensor(e)
        values = t.values[tuple(data.rows[:, col[v.name]] for v in t.variables)]
        mu.append(float(values.mean()))
    return np.array(mu)


def _hard_tol(n_samples: int | None) -> float:
    return 1.0 / (2 * n_samples) if n_samples else 1e-12


def nll(stat: FormulaStatistic, params: HybridParams, mu: Sequence[float], n_samples: int | None = None) -> float:
    """Average negative log-likelihood of data with formula means ``mu``.

    Equal to ``ln Z(theta) - <mu, theta>`` when every hard formula holds its
    target on all samples, and infinite otherwise.
    """
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != (len(stat),):
        raise InputError(f"need {len(stat)} means")
    tol = _hard_tol(n_samples)
    for k, y in params.targets.items():
        if abs(mu[k] - y) > tol:
            return math.inf
    z = float(contract(hln_network(stat, params), ()).values)
    if z <= 0:
        return math.inf
    return math.log(z) - float(mu @ params.theta)


@dataclass(frozen=True)
class TrainingResult:
    """Outcome of alternating moment matching.

    ``sweeps`` counts the sweeps that changed the weights before a full sweep
    left them unchanged; ``passes`` counts all sweeps, including that final
    check.  ``held_out`` keeps, per soft formula, the last head contraction
    computed with its own activation removed.
    """

    params: HybridParams
    converged: bool
    sweeps: int
    passes: int
    held_out: dict[int, np.ndarray] = field(default_factory=dict)


def amm_train(
    stat: FormulaStatistic,
    mu: Sequence[float],
    n_samples: int | None = None,
    max_iters: int = 100,
    tol: float = 1e-9,
) -> TrainingResult:
    """Fit a hybrid network to formula means by coordinate-wise moment matching.

    Means at 0 or 1 (within ``1/(2N)``, or ``1e-12`` without a sample count)
    become hard formulas.  Each soft weight is then set in turn so that its
    formula's expected value equals its mean, given all other activations.
    """
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != (len(stat),):
        raise InputError(f"need {len(stat)} means")
    if np.any((mu < 0) | (mu > 1)):
        raise InputError("means must lie in [0, 1]")
    htol = _hard_tol(n_samples)
    hard = [k for k in range(len(stat)) if mu[k] <= htol or mu[k] >= 1 - htol]
    targets = [int(mu[k] >= 1 - htol) for k in hard]
    soft = [k for k in range(len(stat)) if k not in hard]
    theta = np.zeros(len(stat))
    held_out: dict[int, np.ndarray] = {}
    converged = False
    passes = 0
    for passes in range(1, max_iters + 1):
        biggest = 0.0
        for k in soft:
            params = HybridParams(tuple(hard), tuple(targets), theta)
            d = contract(hln_network(stat, params, skip_activation=k), [stat.head(k)]).values
            held_out[k] = d
            if d[0] <= 0 or d[1] <= 0:
                raise NonRepresentableMomentError(
                    f"formula {stat.names[k]!r} is {'always' if d[0] <= 0 else 'never'} true under the hard constraints"
                )
            new = math.log(mu[k] / (1 - mu[k]) * d[0] / d[1])
            biggest = max(biggest, abs(new - theta[k]))
            theta[k] = new
        if biggest < tol:
            converged = True
            break
    sweeps = passes - 1 if converged else passes
    return TrainingResult(HybridParams(tuple(hard), tuple(targets), theta), converged, sweeps, passes, held_out)


def hard_knowledge_base(stat: FormulaStatistic, params: HybridParams) -> KnowledgeBase:
    """The hard formulas, each negated when its target is false."""
    formulas = {}
    for k, y in params.targets.items():
        name, e = stat.formulas[k]
        formulas[name] = e if y == 1 else ["not", e]
    return KnowledgeBase(formulas, atoms=stat.atoms)


def probabilistic_entails(stat: FormulaStatistic, params: HybridParams, query: Expression) -> bool:
    """Whether ``query`` holds with probability one.

    Soft weights never remove support, so this reduces to logical
    entailment by the hard formulas.
    """
    return entails(hard_knowledge_base(stat, params), query)


def query_probability(stat: FormulaStatistic, params: HybridParams, query: Expression) -> float:
    """Probability that ``query`` holds under the hybrid distribution."""
    p = hln_distribution(stat, params)
    atoms = list(stat.atoms) + [a for a in atoms_of(query) if a not in stat.atoms]
    q = formula_tensor(query, atoms)
    extra = [Variable(a, 2) for a in atoms if a not in stat.atoms]
    if extra:
        # atoms outside the statistic are uniform and independent
        p = Tensor(p.variables + tuple(extra), np.multiply.outer(p.values, np.full([2] * len(extra), 0.5**len(extra))))
    return float(np.sum(p.values * q.values))
