"""Basis encodings of function tables and their composition along hypergraphs.

A function ``f`` from input states to output states is encoded as the
boolean tensor ``B[Y, X]`` that is one exactly when ``Y = f(X)``.  Legs are
ordered outputs first, then inputs.  A directed acyclic hypergraph of such
functions compiles to one encoding per hyperedge, and contracting that
network gives the encoding of the composed function.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .core import Tensor, TensorNetwork, Variable, make_one_hot
from .errors import DimensionError, InputError, StructureError


@dataclass(frozen=True)
class FunctionTable:
    """Total function between finite index sets, stored row by row.

    ``rows[r]`` holds the output indices for the input tuple whose row-major
    position is ``r``.
    """

    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]
    rows: np.ndarray

    def __post_init__(self) -> None:
        in_dims = tuple(int(d) for d in self.in_dims)
        out_dims = tuple(int(d) for d in self.out_dims)
        if any(d < 1 for d in in_dims + out_dims):
            raise InputError("all dimensions must be positive")
        if not out_dims:
            raise InputError("a function table needs at least one output")
        rows = np.array(self.rows, dtype=np.int64).reshape(math.prod(in_dims), len(out_dims))
        for k, d in enumerate(out_dims):
            if rows.size and (rows[:, k].min() < 0 or rows[:, k].max() >= d):
                raise DimensionError(f"output {k} leaves its range 0..{d - 1}")
        rows.flags.writeable = False
        object.__setattr__(self, "in_dims", in_dims)
        object.__setattr__(self, "out_dims", out_dims)
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_callable(cls, fn: Callable[..., int | Sequence[int]], in_dims: Sequence[int], out_dims: Sequence[int]) -> FunctionTable:
        rows = []
        for x in np.ndindex(*in_dims):
            y = fn(*x)
            rows.append([int(y)] if np.isscalar(y) else [int(v) for v in y])
        return cls(tuple(in_dims), tuple(out_dims), np.array(rows, dtype=np.int64).reshape(-1, len(out_dims)))

    def __call__(self, *inputs: int) -> tuple[int, ...]:
        if len(inputs) != len(self.in_dims):
            raise InputError(f"expected {len(self.in_dims)} inputs, got {len(inputs)}")
        for i, d in zip(inputs, self.in_dims):
            if not 0 <= i < d:
                raise DimensionError(f"input {i} outside 0..{d - 1}")
        r = np.ravel_multi_index(tuple(inputs), self.in_dims) if self.in_dims else 0
        return tuple(int(v) for v in self.rows[r])


@dataclass(frozen=True)
class EnumerationMap:
    """Bijection between a set of labels and the joint states of some variables."""

    variables: tuple[Variable, ...]
    elements: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "elements", tuple(self.elements))
        size = math.prod(v.dim for v in self.variables)
        if len(self.elements) != size:
            raise DimensionError(f"{len(self.elements)} labels for {size} joint states")
        if len(set(self.elements)) != size:
            raise InputError("enumeration labels must be distinct")

    def lookup(self, index: Sequence[int]) -> object:
        return self.elements[int(np.ravel_multi_index(tuple(index), tuple(v.dim for v in self.variables)))]

    def index(self, label) -> tuple[int, ...]:
        try:
            flat = self.elements.index(label)
        except ValueError:
            raise InputError(f"label {label!r} is not enumerated") from None
        return tuple(int(i) for i in np.unravel_index(flat, tuple(v.dim for v in self.variables)))


def basis_encode(table: FunctionTable, in_vars: Sequence[Variable], out_vars: Sequence[Variable]) -> Tensor:
    """One-hot encoding of ``table`` with legs ``out_vars + in_vars``."""
    in_vars, out_vars = tuple(in_vars), tuple(out_vars)
    if tuple(v.dim for v in in_vars) != table.in_dims:
        raise DimensionError(f"input legs {[v.dim for v in in_vars]} do not match table {table.in_dims}")
    if tuple(v.dim for v in out_vars) != table.out_dims:
        raise DimensionError(f"output legs {[v.dim for v in out_vars]} do not match table {table.out_dims}")
    arr = np.zeros(table.out_dims + table.in_dims)
    for r, x in enumerate(np.ndindex(*table.in_dims)):
        arr[tuple(table.rows[r]) + x] = 1.0
    return Tensor(out_vars + in_vars, arr)


_CONNECTIVES: dict[str, tuple[int, Callable[..., bool]]] = {
    "not": (1, lambda a: not a),
    "and": (2, lambda *a: all(a)),
    "or": (2, lambda *a: any(a)),
    "xor": (2, lambda *a: sum(a) % 2 == 1),
    "implies": (2, lambda a, b: (not a) or b),
    "exactly-one": (1, lambda *a: sum(a) == 1),
}
_FIXED_ARITY = {"not": 1, "implies": 2}


def connective_names() -> tuple[str, ...]:
    return tuple(_CONNECTIVES)


def connective_function(name: str, arity: int) -> Callable[..., bool]:
    """Boolean function for ``name`` applied to ``arity`` arguments, after arity checks."""
    if name not in _CONNECTIVES:
        raise InputError(f"unknown connective {name!r}; expected one of {sorted(_CONNECTIVES)}")
    low, fn = _CONNECTIVES[name]
    if name in _FIXED_ARITY and arity != _FIXED_ARITY[name]:
        raise InputError(f"{name} takes exactly {_FIXED_ARITY[name]} argument(s), got {arity}")
    if arity < low:
        raise InputError(f"{name} needs at least {low} arguments, got {arity}")
    return fn


def connective_table(name: str, arity: int) -> FunctionTable:
    fn = connective_function(name, arity)
    return FunctionTable.from_callable(lambda *x: int(bool(fn(*x))), (2,) * arity, (2,))


def connective_encoding(name: str, arity: int | None = None, head: str = "Y", args: Sequence[str] | None = None) -> Tensor:
    """Basis encoding of a boolean connective with legs ``(head, *args)``."""
    if arity is None:
        arity = len(args) if args is not None else _FIXED_ARITY.get(name, 2)
    if args is None:
        args = ["X"] if arity == 1 else [f"X{i}" for i in range(arity)]
    if len(args) != arity:
        raise InputError(f"{len(args)} argument names for arity {arity}")
    table = connective_table(name, arity)
    return basis_encode(table, [Variable(a, 2) for a in args], [Variable(head, 2)])


@dataclass(frozen=True)
class Hyperedge:
    """Directed hyperedge decorated with the function computing its outputs."""

    name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    table: FunctionTable

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))


@dataclass(frozen=True)
class DecompositionGraph:
    """Directed acyclic hypergraph whose nodes are categorical variables.

    Every node is produced by at most one hyperedge.  Nodes produced by no
    hyperedge are the inputs; nodes consumed by no hyperedge are the outputs
    (an unused input passes straight through and is also an output).
    """

    variables: tuple[Variable, ...]
    edges: tuple[Hyperedge, ...]
    enumerations: Mapping[str, EnumerationMap] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "edges", tuple(self.edges))
        nodes = {}
        for v in self.variables:
            if v.name in nodes:
                raise InputError(f"node {v.name!r} declared twice")
            nodes[v.name] = v
        producer: dict[str, str] = {}
        names = set()
        for e in self.edges:
            if e.name in names:
                raise InputError(f"hyperedge name {e.name!r} used twice")
            names.add(e.name)
            if not e.outputs:
                raise StructureError(f"hyperedge {e.name!r} has no outputs")
            for n in e.inputs + e.outputs:
                if n not in nodes:
                    raise InputError(f"hyperedge {e.name!r} uses undeclared node {n!r}")
            if len(set(e.inputs + e.outputs)) != len(e.inputs) + len(e.outputs):
                raise StructureError(f"hyperedge {e.name!r} repeats a node")
            if tuple(nodes[n].dim for n in e.inputs) != e.table.in_dims:
                raise DimensionError(f"hyperedge {e.name!r}: input dims disagree with its table")
            if tuple(nodes[n].dim for n in e.outputs) != e.table.out_dims:
                raise DimensionError(f"hyperedge {e.name!r}: output dims disagree with its table")
            for n in e.outputs:
                if n in producer:
                    raise StructureError(f"node {n!r} is an output of both {producer[n]!r} and {e.name!r}")
                producer[n] = e.name
        object.__setattr__(self, "_order", self._toposort(producer))

    def _toposort(self, producer: Mapping[str, str]) -> tuple[Hyperedge, ...]:
        by_name = {e.name: e for e in self.edges}
        state: dict[str, int] = {}
        order: list[Hyperedge] = []

        for root in self.edges:
            if root.name in state:
                continue
            stack = [(root.name, iter(by_name[root.name].inputs))]
            state[root.name] = 1
            while stack:
                name, it = stack[-1]
                advanced = False
                for n in it:
                    dep = producer.get(n)
                    if dep is None:
                        continue
                    if state.get(dep) == 1:
                        raise StructureError(f"hyperedges form a cycle through {dep!r}")
                    if dep not in state:
                        state[dep] = 1
                        stack.append((dep, iter(by_name[dep].inputs)))
                        advanced = True
                        break
                if not advanced:
                    stack.pop()
                    state[name] = 2
                    order.append(by_name[name])
        return tuple(order)

    @property
    def nodes(self) -> dict[str, Variable]:
        return {v.name: v for v in self.variables}

    @property
    def topological_edges(self) -> tuple[Hyperedge, ...]:
        return self._order

    @property
    def input_nodes(self) -> tuple[str, ...]:
        produced = {n for e in self.edges for n in e.outputs}
        return tuple(v.name for v in self.variables if v.name not in produced)

    @property
    def output_nodes(self) -> tuple[str, ...]:
        consumed = {n for e in self.edges for n in e.inputs}
        return tuple(v.name for v in self.variables if v.name not in consumed)

    def directions(self) -> dict[str, tuple[tuple[str, ...], tuple[str, ...]]]:
        return {e.name: (e.inputs, e.outputs) for e in self.edges}


def compile_decomposition(graph: DecompositionGraph) -> TensorNetwork:
    """One basis-encoding core per hyperedge, named after the hyperedge."""
    nodes = graph.nodes
    return TensorNetwork(
        (e.name, basis_encode(e.table, [nodes[n] for n in e.inputs], [nodes[n] for n in e.outputs]))
        for e in graph.topological_edges
    )


def _bind_inputs(graph: DecompositionGraph, inputs) -> dict[str, int]:
    names = graph.input_nodes
    if isinstance(inputs, Mapping):
        if set(inputs) != set(names):
            raise InputError(f"inputs must assign exactly {list(names)}")
        values = {n: int(inputs[n]) for n in names}
    else:
        inputs = tuple(inputs)
        if len(inputs) != len(names):
            raise InputError(f"expected {len(names)} inputs, got {len(inputs)}")
        values = {n: int(x) for n, x in zip(names, inputs)}
    nodes = graph.nodes
    for n, x in values.items():
        if not 0 <= x < nodes[n].dim:
            raise DimensionError(f"input {n!r}={x} outside 0..{nodes[n].dim - 1}")
    return values


def evaluate_nodes(graph: DecompositionGraph, inputs) -> dict[str, int]:
    """State of every node when the inputs are fixed, by direct evaluation."""
    values = _bind_inputs(graph, inputs)
    for e in graph.topological_edges:
        for n, y in zip(e.outputs, e.table(*(values[n] for n in e.inputs))):
            values[n] = y
    return values


def evaluate_composition(graph: DecompositionGraph, inputs) -> tuple[int, ...]:
    """Output states, in :attr:`DecompositionGraph.output_nodes` order."""
    values = evaluate_nodes(graph, inputs)
    return tuple(values[n] for n in graph.output_nodes)


def evidence_network(graph: DecompositionGraph, inputs) -> tuple[TensorNetwork, dict]:
    """Compiled graph plus one-hot evidence cores on every input node.

    Returns the network together with the in/out direction of every core,
    ready for directed propagation.
    """
    values = _bind_inputs(graph, inputs)
    nodes = graph.nodes
    evidence = [(f"{n}_evidence", make_one_hot(nodes[n], values[n])) for n in graph.input_nodes]
    net = TensorNetwork(evidence) | compile_decomposition(graph)
    directions = {f"{n}_evidence": ((), (n,)) for n in graph.input_nodes}
    directions.update(graph.directions())
    return net, directions


def build_madic_adder(m: int, d: int) -> DecompositionGraph:
    """Ripple-carry adder of two ``d``-digit numbers in base ``m``.

    Input digits are ``X0..X{d-1}`` and ``Xt0..Xt{d-1}`` (least significant
    first), result digits are ``Y0..Y{d}`` and carries ``Z0..Z{d-2}``.
    """
    if m < 2 or d < 1:
        raise InputError(f"need base m >= 2 and d >= 1 digits, got m={m}, d={d}")
    xs = [Variable(f"X{k}", m) for k in range(d)]
    xts = [Variable(f"Xt{k}", m) for k in range(d)]
    ys = [Variable(f"Y{k}", m) for k in range(d + 1)]
    zs = [Variable(f"Z{k}", 2) for k in range(d - 1)]

    def digit(*summands):
        s = sum(summands)
        return s % m, s // m

    edges = []
    for k in range(d):
        ins = ([f"Z{k - 1}"] if k > 0 else []) + [f"X{k}", f"Xt{k}"]
        outs = [f"Y{k}", f"Z{k}" if k < d - 1 else f"Y{d}"]
        in_dims = ([2] if k > 0 else []) + [m, m]
        out_dims = [m, 2 if k < d - 1 else m]
        edges.append(Hyperedge(f"add{k}", tuple(ins), tuple(outs), FunctionTable.from_callable(digit, in_dims, out_dims)))
    return DecompositionGraph(tuple(xs + xts + ys + zs), tuple(edges))


def adder_inputs(m: int, d: int, a: int, b: int) -> dict[str, int]:
    """Digit assignment for adding ``a`` and ``b``."""
    if not (0 <= a < m**d and 0 <= b < m**d):
        raise InputError(f"summands must lie in 0..{m**d - 1}")
    out = {}
    for k in range(d):
        out[f"X{k}"] = (a // m**k) % m
        out[f"Xt{k}"] = (b // m**k) % m
    return out


def _binary(variables: Sequence[Variable]) -> tuple[Variable, ...]:
    vs = tuple(variables)
    if not vs:
        raise InputError("exactly-one needs at least one variable")
    for v in vs:
        if v.dim != 2:
            raise DimensionError(f"exactly-one expects binary variables, {v.name!r} has dim {v.dim}")
    return vs


def exactly_one_cp(variables: Sequence[Variable], name: str = "exactly_one") -> TensorNetwork:
    """Exactly-one constraint as a sum of ``d`` rank-one terms.

    A hidden selector of dimension ``d`` (named ``<name>_dV``) picks the
    variable that is true; core ``k`` is ``1`` at ``X_k = 1, I = k`` and at
    ``X_k = 0, I != k``.
    """
    vs = _binary(variables)
    hidden = Variable(f"{name}_dV", len(vs))
    cores = []
    for k, v in enumerate(vs):
        arr = np.zeros((2, len(vs)))
        arr[0, :] = 1.0
        arr[0, k] = 0.0
        arr[1, k] = 1.0
        cores.append((f"{name}[{v.name}]", Tensor([v, hidden], arr)))
    return TensorNetwork(cores)


def exactly_one_tt(variables: Sequence[Variable], name: str = "exactly_one") -> TensorNetwork:
    """Exactly-one constraint as a chain with binary bonds.

    Bond ``k`` (named ``<name>_<k>_dV``) records whether any of the first
    ``k + 1`` variables is true.
    """
    vs = _binary(variables)
    d = len(vs)
    if d == 1:
        raise StructureError("a chain needs two variables; a single variable is just the one-hot e1")
    bonds = [Variable(f"{name}_{k}_dV", 2) for k in range(d - 1)]
    cores = [(f"{name}[{vs[0].name}]", Tensor([vs[0], bonds[0]], np.eye(2)))]
    for k in range(1, d - 1):
        arr = np.zeros((2, 2, 2))
        arr[0, 0, 0] = arr[1, 0, 1] = 1.0  # nothing new set: bond passes through
        arr[0, 1, 1] = 1.0  # first true variable flips the bond
        cores.append((f"{name}[{vs[k].name}]", Tensor([bonds[k - 1], vs[k], bonds[k]], arr)))
    last = np.array([[0.0, 1.0], [1.0, 0.0]])
    cores.append((f"{name}[{vs[-1].name}]", Tensor([bonds[-1], vs[-1]], last)))
    return TensorNetwork(cores)


def exactly_one_tensor(variables: Sequence[Variable]) -> Tensor:
    """Dense indicator of exactly one true variable (feasible for small ``d``)."""
    vs = _binary(variables)
    if len(vs) > 20:
        raise InputError("the dense exactly-one tensor is limited to 20 variables")
    grid = np.indices((2,) * len(vs)).sum(axis=0)
    return Tensor(vs, (grid == 1).astype(np.float64))
