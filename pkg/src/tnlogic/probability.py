"""Distributions as normalized networks: marginals, conditionals, independence.

A distribution is a non-negative :class:`Tensor` whose coordinates sum to
one.  Markov networks are normalized contractions of non-negative cores, and
exponential families are built from basis-encoded statistics with
exponential activation vectors on their heads.
"""

from __future__ import annotations

import math
from collections import deque
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .core import ATOL, Tensor, TensorNetwork, Variable, contract, normalize, ones
from .encoding import FunctionTable, basis_encode
from .errors import DegenerateNetworkError, DimensionError, InputError
from .logic import Expression, formula_tensor

INDEPENDENCE_TOL = 1e-7


def check_distribution(p: Tensor, tol: float = ATOL) -> Tensor:
    """Return ``p`` as a dense tensor after checking it is a probability tensor."""
    p = p.to_dense()
    if np.any(p.values < -tol):
        raise InputError("distribution has negative coordinates")
    total = float(p.values.sum())
    if abs(total - 1.0) > tol:
        raise InputError(f"distribution sums to {total!r}, not 1")
    return p


def markov_distribution(net: TensorNetwork, variables: Sequence[str | Variable] | None = None) -> Tensor:
    """Normalized contraction of a non-negative network onto ``variables``.

    ``variables`` defaults to every variable of the network.
    """
    for name, core in net.items():
        if np.any(core.to_dense().values < 0):
            raise InputError(f"core {name!r} has negative coordinates")
    legs = list(variables) if variables is not None else list(net.variables.values())
    t = contract(net, legs)
    z = float(t.values.sum())
    if z <= 0.0:
        raise DegenerateNetworkError("partition function is zero; the network has no support")
    return Tensor(t.variables, t.values / z)


def marginal(p: Tensor, keep: Sequence[str | Variable]) -> Tensor:
    return contract([check_distribution(p)], keep)


def conditional(p: Tensor, target: Sequence[str | Variable], given: Sequence[str | Variable]) -> Tensor:
    """Conditional probability tensor with legs ``target + given``.

    Conditions of probability zero get the uniform distribution.
    """
    return normalize([check_distribution(p)], target, given)


def _names(vs: Iterable[str | Variable]) -> list[str]:
    return [v.name if isinstance(v, Variable) else v for v in vs]


def _disjoint(*groups: Sequence[str]) -> None:
    seen: set[str] = set()
    for g in groups:
        if seen & set(g):
            raise InputError(f"variable sets overlap on {sorted(seen & set(g))}")
        seen |= set(g)


def is_independent(p: Tensor, a: Sequence[str | Variable], b: Sequence[str | Variable], tol: float = INDEPENDENCE_TOL) -> bool:
    """Whether ``P(A, B) = P(A) P(B)`` up to ``tol`` in every coordinate."""
    a, b = _names(a), _names(b)
    _disjoint(a, b)
    joint = marginal(p, a + b)
    pa = marginal(p, a).values
    pb = marginal(p, b).values
    return bool(np.max(np.abs(joint.values - np.multiply.outer(pa, pb)), initial=0.0) <= tol)


def is_cond_independent(
    p: Tensor,
    a: Sequence[str | Variable],
    b: Sequence[str | Variable],
    c: Sequence[str | Variable],
    tol: float = INDEPENDENCE_TOL,
) -> bool:
    """Whether ``P(A, B | C) = P(A | C) P(B | C)`` for every state of ``C``."""
    a, b, c = _names(a), _names(b), _names(c)
    _disjoint(a, b, c)
    joint = conditional(p, a + b, c).values
    pa = conditional(p, a, c).values
    pb = conditional(p, b, c).values
    ra, rb, rc = len(a), len(b), len(c)
    # bring the condition legs to the front so each slice is an outer product
    pa = np.moveaxis(pa, list(range(ra, ra + rc)), list(range(rc)))
    pb = np.moveaxis(pb, list(range(rb, rb + rc)), list(range(rc)))
    cshape = pa.shape[:rc]
    pa = pa.reshape((math.prod(cshape),) + pa.shape[rc:])
    pb = pb.reshape((math.prod(cshape),) + pb.shape[rc:])
    product = np.stack([np.multiply.outer(x, y) for x, y in zip(pa, pb)])
    product = np.moveaxis(product.reshape(cshape + product.shape[1:]), list(range(rc)), list(range(ra + rb, ra + rb + rc)))
    return bool(np.max(np.abs(joint - product), initial=0.0) <= tol)


def separates(
    hypergraph: TensorNetwork | Iterable[Iterable[str]],
    a: Sequence[str | Variable],
    b: Sequence[str | Variable],
    c: Sequence[str | Variable],
) -> bool:
    """True when every path from ``A`` to ``B`` passes through ``C``.

    Two variables are adjacent when some hyperedge (core) holds both.
    """
    if isinstance(hypergraph, Mapping):
        edges = [set(t.names) for t in hypergraph.values()]
    else:
        edges = [set(e) for e in hypergraph]
    a, b, c = set(_names(a)), set(_names(b)), set(_names(c))
    start = a - c
    if start & b:
        return False
    seen = set(start)
    queue = deque(start)
    while queue:
        v = queue.popleft()
        for e in edges:
            if v not in e:
                continue
            for w in e - seen - c:
                if w in b:
                    return False
                seen.add(w)
                queue.append(w)
    return True


@dataclass(frozen=True)
class Statistic:
    """Real-valued function of some variables, tabulated over their states."""

    name: str
    variables: tuple[Variable, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        vs = tuple(self.variables)
        arr = np.array(self.values, dtype=np.float64)
        if arr.shape != tuple(v.dim for v in vs):
            raise DimensionError(f"statistic {self.name!r}: table shape {arr.shape} does not match its variables")
        arr.flags.writeable = False
        object.__setattr__(self, "variables", vs)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_function(cls, name: str, variables: Sequence[Variable], fn: Callable[..., float]) -> Statistic:
        vs = tuple(variables)
        arr = np.zeros(tuple(v.dim for v in vs))
        for x in np.ndindex(*arr.shape):
            arr[x] = fn(*x)
        return cls(name, vs, arr)

    @classmethod
    def from_expression(cls, name: str, e: Expression, atoms: Sequence[str] | None = None) -> Statistic:
        t = formula_tensor(e, atoms)
        return cls(name, t.variables, t.values)

    @property
    def image(self) -> np.ndarray:
        """Distinct values in ascending order; position ``k`` is head state ``k``."""
        return np.unique(self.values)

    @property
    def head(self) -> Variable:
        return Variable(f"{self.name}_cV", len(self.image))

    def encoding(self) -> Tensor:
        """Basis encoding with legs ``(head, *variables)``."""
        image = self.image
        rows = np.searchsorted(image, self.values.reshape(-1)).reshape(-1, 1)
        table = FunctionTable(tuple(v.dim for v in self.variables), (len(image),), rows)
        return basis_encode(table, self.variables, [self.head])

    def activation(self, theta: float) -> Tensor:
        return Tensor([self.head], np.exp(theta * self.image))


def head_count(variables: Sequence[Variable], name: str = "heads") -> Statistic:
    """Number of variables in state 1."""
    return Statistic.from_function(name, variables, lambda *x: sum(1 for xi in x if xi == 1))


def exponential_family_member(
    statistics: Sequence[Statistic],
    theta: Sequence[float],
    variables: Sequence[Variable] = (),
    base_measure: Tensor | None = None,
) -> TensorNetwork:
    """Network whose normalized contraction is ``exp(<theta, t(x)>) nu(x) / Z``.

    Each statistic contributes its encoding (``<name>_cC``) and an activation
    on its head (``<name>_aC``).  ``variables`` adds ones vectors for states
    no statistic touches; ``base_measure`` defaults to all ones.
    """
    theta = [float(t) for t in theta]
    if len(theta) != len(statistics):
        raise InputError(f"{len(theta)} parameters for {len(statistics)} statistics")
    cores: list[tuple[str, Tensor]] = []
    for stat, th in zip(statistics, theta):
        cores.append((f"{stat.name}_cC", stat.encoding()))
        cores.append((f"{stat.name}_aC", stat.activation(th)))
    covered = {v.name for s in statistics for v in s.variables}
    if base_measure is not None:
        if np.any(base_measure.to_dense().values < 0):
            raise InputError("base measure must be non-negative")
        cores.append(("base_measure", base_measure))
        covered |= set(base_measure.names)
    for v in variables:
        if v.name not in covered:
            cores.append((f"{v.name}_domain", ones([v])))
    return TensorNetwork(cores)


def log_partition(net: TensorNetwork) -> float:
    z = float(contract(net, ()).values)
    return math.log(z) if z > 0 else -math.inf
