"""Named categorical variables, tensors over them, and network contraction.

A tensor is a real array whose axes are labelled by :class:`Variable` objects.
Coordinates are stored as float64 in row-major order over the declared leg
order.  Two tensors share an axis when they carry a variable of the same name.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InputError

NONZERO_TOL = 1e-12
ATOL = 1e-9


@dataclass(frozen=True, order=True)
class Variable:
    """A categorical variable with ``dim`` states ``0 .. dim-1``."""

    name: str
    dim: int = 2

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not self.name:
            raise InputError(f"variable name must be a non-empty string, got {self.name!r}")
        if isinstance(self.dim, bool) or int(self.dim) != self.dim or self.dim < 1:
            raise InputError(f"variable {self.name!r} needs a positive integer dimension, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))


def _check_legs(variables: Iterable[Variable]) -> tuple[Variable, ...]:
    legs = tuple(variables)
    for v in legs:
        if not isinstance(v, Variable):
            raise InputError(f"expected a Variable, got {v!r}")
    names = [v.name for v in legs]
    if len(set(names)) != len(names):
        raise InputError(f"duplicate leg names in {names}")
    return legs


class Tensor:
    """Dense tensor with named legs.

    ``values`` may be given either with the full shape or as a flat sequence
    in row-major order.  The stored array is read-only.
    """

    kind = "dense"
    __slots__ = ("variables", "values")

    def __init__(self, variables: Iterable[Variable], values) -> None:
        legs = _check_legs(variables)
        arr = np.array(values, dtype=np.float64)
        shape = tuple(v.dim for v in legs)
        if arr.shape != shape:
            if arr.size == math.prod(shape) and arr.ndim <= 1:
                arr = arr.reshape(shape)
            else:
                raise DimensionError(f"values of shape {arr.shape} do not match legs {shape}")
        arr.flags.writeable = False
        self.variables = legs
        self.values = arr

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def order(self) -> int:
        return len(self.variables)

    def __repr__(self) -> str:
        legs = ", ".join(f"{v.name}:{v.dim}" for v in self.variables)
        return f"Tensor([{legs}])"

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise InputError(f"tensor has no leg {name!r}")

    def to_dense(self) -> Tensor:
        return self

    def to_sparse(self, tol: float = 0.0) -> SparseTensor:
        terms = []
        for idx in zip(*np.nonzero(np.abs(self.values) > tol)):
            pos = {v.name: int(i) for v, i in zip(self.variables, idx)}
            terms.append((float(self.values[idx]), pos))
        if not self.variables and abs(float(self.values)) > tol:
            terms.append((float(self.values), {}))
        return SparseTensor(self.variables, terms)

    def transpose(self, order: Sequence[str | Variable]) -> Tensor:
        """Return the same tensor with legs permuted into ``order``."""
        names = [o.name if isinstance(o, Variable) else o for o in order]
        if sorted(names) != sorted(self.names):
            raise InputError(f"cannot reorder legs {self.names} into {names}")
        perm = [self.names.index(n) for n in names]
        return Tensor([self.variables[i] for i in perm], np.transpose(self.values, perm))

    def __getitem__(self, assignment: Mapping[str, int]) -> float:
        return coordinate(self, assignment)

    def _aligned(self, other: Tensor) -> np.ndarray:
        other = other.to_dense()
        if sorted(other.names) != sorted(self.names):
            raise InputError(f"legs {other.names} do not match {self.names}")
        for v in other.variables:
            if self.variable(v.name).dim != v.dim:
                raise DimensionError(f"leg {v.name!r} has dims {self.variable(v.name).dim} and {v.dim}")
        return other.transpose(self.names).values

    def __add__(self, other: Tensor) -> Tensor:
        return Tensor(self.variables, self.values + self._aligned(other))

    def __sub__(self, other: Tensor) -> Tensor:
        return Tensor(self.variables, self.values - self._aligned(other))

    def __mul__(self, scalar: float) -> Tensor:
        return Tensor(self.variables, self.values * float(scalar))

    __rmul__ = __mul__

    def allclose(self, other: Tensor, atol: float = ATOL) -> bool:
        try:
            return bool(np.allclose(self.values, self._aligned(other), rtol=0.0, atol=atol))
        except InputError:
            return False

    def is_boolean(self, tol: float = NONZERO_TOL) -> bool:
        v = self.values
        return bool(np.all((np.abs(v) <= tol) | (np.abs(v - 1.0) <= tol)))


class SparseTensor:
    """Tensor stored as a sum of elementary terms.

    Each term is ``(value, positions)`` where ``positions`` fixes the state of
    some legs.  Legs missing from ``positions`` are unconstrained, so the term
    is a one-hot on the fixed legs times a ones vector on the others.
    """

    kind = "sparse"
    __slots__ = ("variables", "terms")

    def __init__(self, variables: Iterable[Variable], terms: Iterable[tuple[float, Mapping[str, int]]]) -> None:
        legs = _check_legs(variables)
        dims = {v.name: v.dim for v in legs}
        checked = []
        for value, pos in terms:
            pos = {str(k): int(i) for k, i in dict(pos).items()}
            for name, i in pos.items():
                if name not in dims:
                    raise InputError(f"sparse term fixes unknown leg {name!r}")
                if not 0 <= i < dims[name]:
                    raise DimensionError(f"index {i} out of range for leg {name!r} of dim {dims[name]}")
            checked.append((float(value), pos))
        self.variables = legs
        self.terms = tuple(checked)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(v.dim for v in self.variables)

    def __repr__(self) -> str:
        return f"SparseTensor({list(self.names)}, {len(self.terms)} terms)"

    def to_dense(self) -> Tensor:
        arr = np.zeros(self.shape)
        for value, pos in self.terms:
            idx = tuple(pos.get(v.name, slice(None)) for v in self.variables)
            arr[idx] += value
        return Tensor(self.variables, arr)

    def to_sparse(self, tol: float = 0.0) -> SparseTensor:
        return self


AnyTensor = Tensor | SparseTensor


def ones(variables: Iterable[Variable]) -> Tensor:
    legs = tuple(variables)
    return Tensor(legs, np.ones(tuple(v.dim for v in legs)))


def make_delta(variables: Sequence[Variable]) -> Tensor:
    """Tensor that is 1 exactly where all legs take the same state."""
    legs = tuple(variables)
    if not legs:
        raise InputError("a delta tensor needs at least one leg")
    dims = {v.dim for v in legs}
    if len(dims) != 1:
        raise DimensionError(f"delta legs must share one dimension, got {sorted(dims)}")
    (d,) = dims
    arr = np.zeros((d,) * len(legs))
    for i in range(d):
        arr[(i,) * len(legs)] = 1.0
    return Tensor(legs, arr)


def make_one_hot(variable: Variable, index: int) -> Tensor:
    if not 0 <= index < variable.dim:
        raise DimensionError(f"index {index} out of range for {variable.name!r} of dim {variable.dim}")
    arr = np.zeros(variable.dim)
    arr[index] = 1.0
    return Tensor([variable], arr)


class TensorNetwork(Mapping):
    """Immutable mapping from core names to tensors.

    Legs with the same name in different cores are the same variable and
    must agree on dimension.
    """

    def __init__(self, cores: Mapping[str, AnyTensor] | Iterable[tuple[str, AnyTensor]] = ()) -> None:
        items = list(cores.items()) if isinstance(cores, Mapping) else list(cores)
        self._cores: dict[str, AnyTensor] = {}
        self._variables: dict[str, Variable] = {}
        for name, t in items:
            if not isinstance(name, str) or not name:
                raise InputError(f"core names must be non-empty strings, got {name!r}")
            if name in self._cores:
                raise InputError(f"duplicate core name {name!r}")
            if not isinstance(t, (Tensor, SparseTensor)):
                raise InputError(f"core {name!r} is not a tensor")
            for v in t.variables:
                seen = self._variables.setdefault(v.name, v)
                if seen.dim != v.dim:
                    raise DimensionError(f"variable {v.name!r} has dims {seen.dim} and {v.dim}")
            self._cores[name] = t

    def __getitem__(self, name: str) -> AnyTensor:
        return self._cores[name]

    def __iter__(self):
        return iter(self._cores)

    def __len__(self) -> int:
        return len(self._cores)

    def __repr__(self) -> str:
        return f"TensorNetwork({len(self)} cores, {len(self._variables)} variables)"

    @property
    def variables(self) -> dict[str, Variable]:
        return dict(self._variables)

    def variable(self, name: str) -> Variable:
        try:
            return self._variables[name]
        except KeyError:
            raise InputError(f"network has no variable {name!r}") from None

    def legs(self, core: str) -> frozenset[str]:
        return frozenset(self._cores[core].names)

    def __or__(self, other: Mapping[str, AnyTensor]) -> TensorNetwork:
        clash = set(self) & set(other)
        if clash:
            raise InputError(f"core names used twice: {sorted(clash)}")
        return TensorNetwork(list(self.items()) + list(other.items()))

    def without(self, names: Iterable[str]) -> TensorNetwork:
        drop = set(names)
        return TensorNetwork([(k, t) for k, t in self.items() if k not in drop])


def _as_tensors(net) -> list[AnyTensor]:
    if isinstance(net, (Tensor, SparseTensor)):
        return [net]
    if isinstance(net, Mapping):
        return list(net.values())
    return list(net)


def _resolve_open(tensors: list[AnyTensor], open_vars) -> tuple[Variable, ...]:
    known: dict[str, Variable] = {}
    for t in tensors:
        for v in t.variables:
            seen = known.setdefault(v.name, v)
            if seen.dim != v.dim:
                raise DimensionError(f"variable {v.name!r} has dims {seen.dim} and {v.dim}")
    resolved = []
    for o in open_vars:
        if isinstance(o, Variable):
            if o.name in known and known[o.name].dim != o.dim:
                raise DimensionError(f"open variable {o.name!r} has dim {o.dim}, network uses {known[o.name].dim}")
            resolved.append(o)
        elif isinstance(o, str):
            if o not in known:
                raise DimensionError(f"open variable {o!r} is not in the network; pass a Variable to fix its dimension")
            resolved.append(known[o])
        else:
            raise InputError(f"open variables must be names or Variables, got {o!r}")
    return _check_legs(resolved)


DENSE_LIMIT = 1 << 24


def _dense_pair(a, b, needed):
    na, xa = a
    nb, xb = b
    union = list(dict.fromkeys(na + nb))
    ids = {v: i for i, v in enumerate(union)}
    out = tuple(v for v in union if v in needed)
    arr = np.einsum(xa, [ids[v] for v in na], xb, [ids[v] for v in nb], [ids[v] for v in out])
    return out, arr


def _dense_reduce(item, needed):
    names, arr = item
    drop = tuple(i for i, v in enumerate(names) if v not in needed)
    if not drop:
        return item
    return tuple(v for v in names if v in needed), arr.sum(axis=drop)


def _coo(t: AnyTensor):
    arr = t.to_dense().values
    if arr.ndim == 0:
        vals = arr.reshape(1)[arr.reshape(1) != 0]
        return (), np.zeros((len(vals), 0), np.int64), vals
    idx = np.argwhere(arr != 0).astype(np.int64)
    return t.names, idx, arr[tuple(idx.T)]


def _row_keys(idx: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    """Integer key per row, equal exactly for equal rows."""
    key = np.zeros(len(idx), dtype=np.int64)
    span = 1
    for c, d in enumerate(dims):
        if span * d >= 1 << 62:
            key = np.unique(key, return_inverse=True)[1].ravel().astype(np.int64)
            span = int(key.max()) + 1 if len(key) else 1
        key = key * d + idx[:, c]
        span *= d
    return key


def _sum_duplicates(names, idx, vals, dims):
    if len(vals) == 0:
        return names, idx, vals
    if idx.shape[1] == 0:
        return names, np.zeros((1, 0), np.int64), np.array([vals.sum()])
    _, first, inv = np.unique(_row_keys(idx, [dims[v] for v in names]), return_index=True, return_inverse=True)
    sums = np.bincount(inv.ravel(), vals, minlength=len(first))
    keep = sums != 0
    return names, idx[first[keep]], sums[keep]


def _sparse_pair(a, b, needed, dims):
    na, ia, va = a
    nb, ib, vb = b
    shared = [v for v in na if v in nb]
    sd = [dims[v] for v in shared]
    keys = _row_keys(np.concatenate([ia[:, [na.index(v) for v in shared]], ib[:, [nb.index(v) for v in shared]]]), sd)
    ka, kb = keys[: len(ia)], keys[len(ia) :]
    order = np.argsort(kb, kind="stable")
    sorted_kb = kb[order]
    lo = np.searchsorted(sorted_kb, ka, "left")
    cnt = np.searchsorted(sorted_kb, ka, "right") - lo
    ra = np.repeat(np.arange(len(ka)), cnt)
    offset = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    rb = order[np.repeat(lo, cnt) + offset]
    out = tuple(v for v in dict.fromkeys(na + nb) if v in needed)
    cols = [ia[ra, na.index(v)] if v in na else ib[rb, nb.index(v)] for v in out]
    idx = np.stack(cols, axis=1) if cols else np.zeros((len(ra), 0), np.int64)
    return _sum_duplicates(out, idx, va[ra] * vb[rb], dims)


def _sparse_reduce(item, needed, dims):
    names, idx, vals = item
    cols = [i for i, v in enumerate(names) if v in needed]
    if len(cols) == len(names):
        return item
    return _sum_duplicates(tuple(names[i] for i in cols), idx[:, cols], vals, dims)


def _greedy(items, keep, cost, merge, reduce, size):
    """Contract ``items`` pairwise, always merging the cheapest pair that shares a leg.

    ``cost(a, b, needed)`` scores a candidate pair, ``merge`` contracts it and
    ``reduce`` sums out legs needed nowhere else.  Tensors sharing no legs are
    combined last, smallest ``size`` first.
    """
    if not items:
        return None
    # legs are unique within a tensor, so count[v] is the number of holders of v
    count = Counter(v for it in items for v in it[0])
    alive: dict[int, tuple] = {}
    holders: dict[str, set[int]] = {}
    for i, it in enumerate(items):
        alive[i] = reduce(it, keep | {v for v in it[0] if count[v] > 1})
        for v in it[0]:
            if v in alive[i][0]:
                holders.setdefault(v, set()).add(i)
            else:
                count[v] -= 1

    def needed_for(i, j):
        a, b = set(alive[i][0]), set(alive[j][0])
        return keep | {v for v in a | b if count[v] > (v in a) + (v in b)}

    def score(i, j):
        return (cost(alive[i], alive[j], needed_for(i, j)), i, j)

    heap: list = []

    def push_pairs(var):
        for i, j in itertools.combinations(sorted(holders.get(var, ())), 2):
            heapq.heappush(heap, score(i, j))

    for v in holders:
        push_pairs(v)
    next_id = len(items)
    while len(alive) > 1:
        while heap and (heap[0][1] not in alive or heap[0][2] not in alive):
            heapq.heappop(heap)
        if heap:
            _, i, j = heapq.heappop(heap)
            fresh = score(i, j)
            if heap and fresh > heap[0]:
                heapq.heappush(heap, fresh)
                continue
        else:
            i, j = sorted(alive, key=lambda k: (size(alive[k]), k))[:2]
        needed = needed_for(i, j)
        a, b = alive.pop(i), alive.pop(j)
        merged = merge(a, b, needed)
        for v in set(a[0]) | set(b[0]):
            holders[v].discard(i)
            holders[v].discard(j)
            count[v] -= (v in a[0]) + (v in b[0])
        alive[next_id] = merged
        for v in merged[0]:
            holders[v].add(next_id)
            count[v] += 1
        for v in set(a[0]) | set(b[0]):
            push_pairs(v)
        next_id += 1
    (result,) = alive.values()
    return reduce(result, keep)


def _dense_plan_peak(items, keep, dims) -> int:
    """Largest intermediate size the dense greedy contraction would create."""
    peak = max([math.prod(dims[v] for v in names) for names, _ in items] or [1])

    def size(names):
        return math.prod(dims[v] for v in names)

    def cost(a, b, needed):
        return size([v for v in dict.fromkeys(a[0] + b[0]) if v in needed])

    def item_size(it):
        return size(it[0])

    def merge(a, b, needed):
        nonlocal peak
        out = tuple(v for v in dict.fromkeys(a[0] + b[0]) if v in needed)
        peak = max(peak, size(out))
        return out, None

    def reduce(it, needed):
        return tuple(v for v in it[0] if v in needed), None

    _greedy([(names, None) for names, _ in items], keep, cost, merge, reduce, item_size)
    return peak


def contract(
    net,
    open_vars: Sequence[str | Variable] = (),
    order: Sequence[str] | None = None,
    backend: str = "auto",
) -> Tensor:
    """Sum the product of all cores over every variable not in ``open_vars``.

    The result has legs in the order given by ``open_vars``.  An open
    variable that no core carries contributes a ones factor, so it must be
    passed as a :class:`Variable`.

    The pairwise order is greedy: the pair with the smallest intermediate
    (dense backend) or the fewest candidate nonzeros (sparse backend) goes
    first.  ``order`` instead folds the cores of a mapping left to right.
    ``backend="auto"`` plans the dense contraction and switches to sparse
    coordinate storage when some intermediate would exceed ``DENSE_LIMIT``
    entries.
    """
    if backend not in ("auto", "dense", "sparse"):
        raise InputError(f"unknown backend {backend!r}")
    tensors = _as_tensors(net)
    legs = _resolve_open(tensors, open_vars)
    keep = {v.name for v in legs}
    dims = {v.name: v.dim for t in tensors for v in t.variables}
    dims.update({v.name: v.dim for v in legs})

    if order is not None:
        if not isinstance(net, Mapping):
            raise InputError("an explicit order needs a named collection of cores")
        names = list(order)
        if sorted(names) != sorted(net):
            raise InputError("explicit order must list every core exactly once")
        seq = [(net[n].names, net[n].to_dense().values) for n in names]
        left = Counter(v for nm, _ in seq for v in nm)
        names_out, arr = (), np.array(1.0)
        for item in seq:
            left.subtract(item[0])
            names_out, arr = _dense_pair((names_out, arr), item, keep | {v for v, c in left.items() if c > 0})
    else:
        dense_items = [(t.names, None) for t in tensors]
        if backend == "auto":
            backend = "dense" if _dense_plan_peak(dense_items, keep, dims) <= DENSE_LIMIT else "sparse"
        if backend == "dense":
            items = [(t.names, t.to_dense().values) for t in tensors]

            def cost(a, b, needed):
                return math.prod(dims[v] for v in dict.fromkeys(a[0] + b[0]) if v in needed)

            result = _greedy(items, keep, cost, _dense_pair, _dense_reduce, lambda it: it[1].size)
            names_out, arr = result if result is not None else ((), np.array(1.0))
        else:

            def cost(a, b, needed):
                return len(a[2]) * len(b[2])

            result = _greedy(
                [_coo(t) for t in tensors],
                keep,
                cost,
                lambda a, b, needed: _sparse_pair(a, b, needed, dims),
                lambda it, needed: _sparse_reduce(it, needed, dims),
                lambda it: len(it[2]),
            )
            if result is None:
                names_out, arr = (), np.array(1.0)
            else:
                names_out, idx, vals = result
                if names_out:
                    arr = np.zeros(tuple(dims[v] for v in names_out))
                    np.add.at(arr, tuple(idx.T), vals)
                else:
                    arr = np.array(vals.sum())

    missing = [v for v in legs if v.name not in names_out]
    if missing:
        arr = np.multiply.outer(arr, np.ones(tuple(v.dim for v in missing)))
        names_out = tuple(names_out) + tuple(v.name for v in missing)
    perm = [names_out.index(v.name) for v in legs]
    return Tensor(legs, np.transpose(arr, perm))


def normalize(net, out_vars: Sequence[str | Variable], in_vars: Sequence[str | Variable] = ()) -> Tensor:
    """Contract onto ``out_vars + in_vars`` and make every in-slice sum to one.

    A slice with zero mass is replaced by the uniform distribution over the
    outgoing states.
    """
    t = contract(net, list(out_vars) + list(in_vars))
    n_out = len(out_vars)
    out_size = math.prod(v.dim for v in t.variables[:n_out])
    flat = t.values.reshape(out_size, -1)
    mass = flat.sum(axis=0)
    zero = np.abs(mass) <= NONZERO_TOL
    safe = np.where(zero, 1.0, mass)
    normed = np.where(zero[None, :], 1.0 / out_size, flat / safe[None, :])
    return Tensor(t.variables, normed.reshape(t.shape))


def partition_function(net, backend: str = "auto") -> float:
    return float(contract(net, (), backend=backend).values)


def nonzero_indicator(t: AnyTensor, tol: float = NONZERO_TOL) -> Tensor:
    """Boolean tensor marking the coordinates with absolute value above ``tol``."""
    t = t.to_dense()
    return Tensor(t.variables, (np.abs(t.values) > tol).astype(np.float64))


def coordinate(net, assignment: Mapping[str, int]) -> float:
    """Value of the contracted network at a full or partial assignment.

    Variables not named in ``assignment`` are summed over.
    """
    tensors = _as_tensors(net)
    known = {v.name: v for t in tensors for v in t.variables}
    evidence = []
    for name, idx in assignment.items():
        if name not in known:
            raise InputError(f"unknown variable {name!r}")
        evidence.append(make_one_hot(known[name], int(idx)))
    return partition_function(tensors + evidence)
