"""Propositional formulas as tensors, knowledge bases, and model counting.

An expression is either an atom name or a list ``[connective, arg, ...]``
with connectives ``not``, ``and``, ``or``, ``xor``, ``implies`` and
``exactly-one``.  Its syntax tree is a decomposition graph whose hyperedges
are connective encodings; contracting with a one-hot ``1`` on the head gives
the formula tensor, the indicator of the models over its atoms.
"""

from __future__ import annotations

import itertools
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .core import Tensor, TensorNetwork, Variable, contract, make_one_hot, ones, partition_function
from .encoding import (
    DecompositionGraph,
    FunctionTable,
    Hyperedge,
    compile_decomposition,
    connective_function,
    exactly_one_cp,
)
from .errors import DimensionError, InconsistencyError, InputError, ParseError

Expression = Union[str, list, tuple]

ENTAILMENT_TOL = 0.5
COUNT_TOL = 1e-6


def check_expression(e: Expression) -> None:
    """Raise :class:`ParseError` unless ``e`` is a well-formed expression."""
    if isinstance(e, str):
        if not e:
            raise ParseError("empty atom name")
        return
    if not isinstance(e, (list, tuple)) or not e or not isinstance(e[0], str):
        raise ParseError(f"expected an atom name or [connective, args...], got {e!r}")
    try:
        connective_function(e[0], len(e) - 1)
    except InputError as err:
        raise ParseError(str(err)) from None
    for arg in e[1:]:
        check_expression(arg)


def expression_key(e: Expression) -> str:
    """Canonical text of an expression, e.g. ``or(X0,not(X1))``."""
    if isinstance(e, str):
        return e
    return f"{e[0]}({','.join(expression_key(a) for a in e[1:])})"


def atoms_of(e: Expression) -> tuple[str, ...]:
    """Atom names in order of first appearance."""
    if isinstance(e, str):
        return (e,)
    return tuple(dict.fromkeys(a for arg in e[1:] for a in atoms_of(arg)))


def evaluate_expression(e: Expression, assignment: Mapping[str, int | bool]) -> bool:
    if isinstance(e, str):
        return bool(assignment[e])
    fn = connective_function(e[0], len(e) - 1)
    return bool(fn(*(evaluate_expression(a, assignment) for a in e[1:])))


def formula_head(e: Expression) -> str:
    """Name of the variable carrying the truth value of ``e``."""
    return f"{expression_key(e)}_cV"


def syntactic_decomposition(e: Expression, prefix: str = "") -> DecompositionGraph:
    """Decomposition graph with one hyperedge per distinct subexpression.

    Hyperedges are named ``<prefix><subexpression>_cC``.  Repeated
    subexpressions share a node.  A bare atom yields a single identity edge.
    """
    check_expression(e)
    nodes: dict[str, Variable] = {a: Variable(a, 2) for a in atoms_of(e)}
    edges: list[Hyperedge] = []
    done: set[str] = set()

    def visit(sub: Expression) -> str:
        if isinstance(sub, str):
            return sub
        key = expression_key(sub)
        head = f"{key}_cV"
        if key in done:
            return head
        children = [visit(a) for a in sub[1:]]
        unique = list(dict.fromkeys(children))
        pos = [unique.index(c) for c in children]
        fn = connective_function(sub[0], len(children))
        table = FunctionTable.from_callable(lambda *x: int(bool(fn(*(x[p] for p in pos)))), (2,) * len(unique), (2,))
        nodes[head] = Variable(head, 2)
        edges.append(Hyperedge(f"{prefix}{key}_cC", tuple(unique), (head,), table))
        done.add(key)
        return head

    if isinstance(e, str):
        head = formula_head(e)
        nodes[head] = Variable(head, 2)
        edges.append(Hyperedge(f"{prefix}{e}_cC", (e,), (head,), FunctionTable((2,), (2,), np.array([[0], [1]]))))
    else:
        visit(e)
    return DecompositionGraph(tuple(nodes.values()), tuple(edges))


def _atom_vars(atoms: Sequence[str | Variable]) -> list[Variable]:
    out = []
    for a in atoms:
        v = a if isinstance(a, Variable) else Variable(a, 2)
        if v.dim != 2:
            raise DimensionError(f"atom {v.name!r} must be binary")
        out.append(v)
    return out


def formula_tensor(e: Expression, atoms: Sequence[str | Variable] | None = None) -> Tensor:
    """Boolean tensor over ``atoms`` that is one on the models of ``e``.

    ``atoms`` defaults to the atoms of ``e`` in order of appearance and may
    include atoms the formula does not mention.
    """
    graph = syntactic_decomposition(e)
    legs = _atom_vars(atoms if atoms is not None else atoms_of(e))
    missing = set(atoms_of(e)) - {v.name for v in legs}
    if missing:
        raise InputError(f"atoms {sorted(missing)} of the formula are not among the requested legs")
    head = Variable(formula_head(e), 2)
    net = compile_decomposition(graph) | {"head_aC": make_one_hot(head, 1)}
    return contract(net, legs)


@dataclass(frozen=True)
class KnowledgeBase:
    """Named formulas that must all hold, plus atom-level evidence.

    ``atoms`` declares extra atoms so that model counts range over them too.
    """

    formulas: Mapping[str, Expression] = field(default_factory=dict)
    evidence: Mapping[str, bool] = field(default_factory=dict)
    atoms: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        formulas = dict(self.formulas)
        for e in formulas.values():
            check_expression(e)
        object.__setattr__(self, "formulas", formulas)
        object.__setattr__(self, "evidence", {str(k): bool(v) for k, v in dict(self.evidence).items()})
        object.__setattr__(self, "atoms", tuple(self.atoms))

    @property
    def all_atoms(self) -> tuple[str, ...]:
        seen = [a for e in self.formulas.values() for a in atoms_of(e)]
        return tuple(dict.fromkeys(seen + list(self.evidence) + list(self.atoms)))


def kb_network(kb: KnowledgeBase, decomposed: bool = False) -> TensorNetwork:
    """Tensor network whose contraction is the indicator of the models of ``kb``.

    With ``decomposed`` each formula contributes its connective cores and a
    one-hot activation on its head; otherwise one formula tensor per formula.
    Atoms touched by no formula or evidence get a ones vector.
    """
    cores: list[tuple[str, Tensor]] = []
    for name, e in kb.formulas.items():
        if decomposed:
            cores.extend(compile_decomposition(syntactic_decomposition(e, prefix=f"{name}/")).items())
            cores.append((f"{name}_aC", make_one_hot(Variable(formula_head(e), 2), 1)))
        else:
            cores.append((name, formula_tensor(e)))
    for atom, truth in kb.evidence.items():
        cores.append((f"{atom}_evidence", make_one_hot(Variable(atom, 2), int(truth))))
    covered = {a for e in kb.formulas.values() for a in atoms_of(e)} | set(kb.evidence)
    for atom in kb.atoms:
        if atom not in covered:
            cores.append((f"{atom}_domain", ones([Variable(atom, 2)])))
    return TensorNetwork(cores)


def count_models(kb: KnowledgeBase | TensorNetwork) -> int:
    """Number of satisfying assignments of all atoms."""
    net = kb_network(kb) if isinstance(kb, KnowledgeBase) else kb
    z = partition_function(net)
    n = round(z)
    if abs(z - n) > COUNT_TOL:
        raise InconsistencyError(f"contraction {z!r} is not an integer count; the network is not boolean")
    return int(n)


def entails(kb: KnowledgeBase | TensorNetwork, query: Expression) -> bool:
    """True when every model of ``kb`` satisfies ``query``.

    Contracts the knowledge base with the negated query; the result counts
    countermodels, so anything below one half is zero.
    """
    net = kb_network(kb) if isinstance(kb, KnowledgeBase) else kb
    q = formula_tensor(query)
    negated = ones(q.variables) - q
    return partition_function(net | {"negated_query": negated}) < ENTAILMENT_TOL


def sudoku_atom(r0: int, r1: int, c0: int, c1: int, i: int) -> str:
    """Atom stating that number ``i`` (0-based) sits at row ``r0*n+r1``, column ``c0*n+c1``."""
    return f"X_{r0}_{r1}_{c0}_{c1}_{i}"


def build_sudoku_kb(n: int, start: Sequence[tuple[int, int, int, int, int]] = ()) -> TensorNetwork:
    """Sudoku of order ``n`` (an ``n^2 x n^2`` grid) as a tensor network.

    Every cell, row, column and square contributes exactly-one constraints in
    rank-one form, each with its own hidden selector.  Each atom also gets a
    vector core: a one-hot ``1`` when it is in ``start`` and ones otherwise.
    """
    if n < 1:
        raise InputError("sudoku order must be positive")
    cells: dict[tuple[int, int, int, int], int] = {}
    for entry in start:
        entry = tuple(int(x) for x in entry)
        if len(entry) != 5 or not all(0 <= x < (n if k < 4 else n * n) for k, x in enumerate(entry)):
            raise InputError(f"start entry {entry} out of range for order {n}")
        cell, i = entry[:4], entry[4]
        if cells.get(cell, i) != i:
            raise InputError(f"cell {cell} given two numbers {cells[cell] + 1} and {i + 1}")
        cells[cell] = i
    r = range(n)
    k = range(n * n)
    cores: list[tuple[str, Tensor]] = []
    for r0, r1, c0, c1, i in itertools.product(r, r, r, r, k):
        v = Variable(sudoku_atom(r0, r1, c0, c1, i), 2)
        core = make_one_hot(v, 1) if cells.get((r0, r1, c0, c1)) == i else ones([v])
        cores.append((f"{v.name}_ev", core))

    def constraint(name, members):
        vs = [Variable(sudoku_atom(*m), 2) for m in members]
        cores.extend(exactly_one_cp(vs, name).items())

    for r0, r1, c0, c1 in itertools.product(r, r, r, r):
        constraint(f"cell_{r0}_{r1}_{c0}_{c1}", [(r0, r1, c0, c1, i) for i in k])
    for r0, r1, i in itertools.product(r, r, k):
        constraint(f"row_{r0}_{r1}_{i}", [(r0, r1, c0, c1, i) for c0 in r for c1 in r])
    for c0, c1, i in itertools.product(r, r, k):
        constraint(f"col_{c0}_{c1}_{i}", [(r0, r1, c0, c1, i) for r0 in r for r1 in r])
    for r0, c0, i in itertools.product(r, r, k):
        constraint(f"square_{r0}_{c0}_{i}", [(r0, r1, c0, c1, i) for r1 in r for c1 in r])
    return TensorNetwork(cores)


def board_to_start(grid: Sequence[Sequence[int]], n: int) -> list[tuple[int, int, int, int, int]]:
    """Start entries from a grid of 1-based numbers, with 0 marking empty cells."""
    size = n * n
    if len(grid) != size or any(len(row) != size for row in grid):
        raise InputError(f"board must be {size} x {size}")
    start = []
    for row, col in itertools.product(range(size), range(size)):
        val = int(grid[row][col])
        if val == 0:
            continue
        if not 1 <= val <= size:
            raise InputError(f"cell ({row}, {col}) holds {val}, expected 1..{size}")
        start.append((row // n, row % n, col // n, col % n, val - 1))
    return start


def start_to_board(start: Sequence[tuple[int, int, int, int, int]], n: int) -> list[list[int]]:
    grid = [[0] * (n * n) for _ in range(n * n)]
    for r0, r1, c0, c1, i in start:
        grid[r0 * n + r1][c0 * n + c1] = i + 1
    return grid


def deductions_to_board(decided: Mapping[str, bool | None], n: int) -> list[list[int]]:
    """Grid of the numbers whose atom is decided true, with 0 where undetermined."""
    grid = [[0] * (n * n) for _ in range(n * n)]
    for r0, r1, c0, c1, i in itertools.product(range(n), range(n), range(n), range(n), range(n * n)):
        if decided.get(sudoku_atom(r0, r1, c0, c1, i)) is True:
            grid[r0 * n + r1][c0 * n + c1] = i + 1
    return grid
