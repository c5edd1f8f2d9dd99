"""Message passing between cores: exact tree propagation, directed evaluation,
and sound support propagation for boolean networks.

Messages live on ordered pairs of cores ``(sender, receiver)`` and have the
legs the two cores share.  A message is computed by contracting the sender
with every message it has received, except the one from the receiver.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .core import NONZERO_TOL, Tensor, TensorNetwork, contract, nonzero_indicator, ones
from .errors import ConvergenceError, InconsistencyError, InputError, StateError, StructureError

Direction = tuple[str, str]


@dataclass
class PropagationResult:
    """Messages keyed by ``(sender, receiver)`` plus bookkeeping.

    ``messages_sent`` counts message computations, ``epochs`` the number of
    scheduling waves, and ``updates`` how often a support actually shrank
    (constraint mode only).  ``inconsistent`` is set when some message lost
    its whole support.
    """

    mode: str
    messages: dict[Direction, Tensor] = field(default_factory=dict)
    messages_sent: int = 0
    epochs: int = 0
    updates: int = 0
    inconsistent: bool = False


def core_neighbors(net: TensorNetwork) -> dict[str, list[str]]:
    """Cores sharing at least one leg, in network order."""
    holders: dict[str, list[str]] = {}
    for name, core in net.items():
        for v in core.names:
            holders.setdefault(v, []).append(name)
    out: dict[str, list[str]] = {}
    for name, core in net.items():
        seen = dict.fromkeys(other for v in core.names for other in holders[v] if other != name)
        out[name] = [c for c in net if c in seen]
    return out


def _shared(net: TensorNetwork, a: str, b: str) -> list[str]:
    other = set(net[b].names)
    return [v for v in net[a].names if v in other]


def _components(neighbors: Mapping[str, list[str]]) -> list[list[str]]:
    seen: set[str] = set()
    comps = []
    for start in neighbors:
        if start in seen:
            continue
        comp, queue = [], deque([start])
        seen.add(start)
        while queue:
            c = queue.popleft()
            comp.append(c)
            for n in neighbors[c]:
                if n not in seen:
                    seen.add(n)
                    queue.append(n)
        comps.append(comp)
    return comps


def _message(net, sender, receiver, inbox, legs, backend="dense") -> Tensor:
    parts = [net[sender]] + [m for s, m in inbox[sender].items() if s != receiver]
    return contract(parts, legs, backend=backend)


def tree_bp(net: TensorNetwork) -> PropagationResult:
    """Exact propagation on a network whose core adjacency graph is a forest.

    Leaves send first; a core answers a neighbour once it has heard from all
    its other neighbours.  Every direction carries exactly one message.
    """
    nb = core_neighbors(net)
    n_edges = sum(len(v) for v in nb.values()) // 2
    comps = _components(nb)
    if n_edges != len(net) - len(comps):
        raise StructureError("core adjacency graph has a cycle; tree propagation does not apply")

    result = PropagationResult(mode="tree")
    inbox: dict[str, dict[str, Tensor]] = {c: {} for c in net}
    queue: deque[tuple[Direction, int]] = deque(((c, nb[c][0]), 0) for c in net if len(nb[c]) == 1)
    queued = {d for d, _ in queue}
    while queue:
        (s, r), epoch = queue.popleft()
        msg = _message(net, s, r, inbox, _shared(net, s, r))
        inbox[r][s] = msg
        result.messages[(s, r)] = msg
        result.messages_sent += 1
        result.epochs = max(result.epochs, epoch + 1)
        for e3 in nb[r]:
            if (r, e3) in queued:
                continue
            if all(e2 in inbox[r] for e2 in nb[r] if e2 != e3):
                queued.add((r, e3))
                queue.append(((r, e3), epoch + 1))
    return result


def _inbox(result: PropagationResult, core: str) -> dict[str, Tensor]:
    return {s: m for (s, r), m in result.messages.items() if r == core}


def local_marginal(net: TensorNetwork, core: str, result: PropagationResult) -> Tensor:
    """Contraction of the whole network onto the legs of ``core``, read off messages.

    After tree propagation this equals ``contract(net, legs(core))``; other
    connected components enter through their partition functions.
    """
    if core not in net:
        raise InputError(f"unknown core {core!r}")
    legs = list(net[core].names)
    inbox = _inbox(result, core)
    if result.mode != "tree":
        return contract([net[core]] + list(inbox.values()), legs)
    nb = core_neighbors(net)
    missing = [n for n in nb[core] if n not in inbox]
    if missing:
        raise StateError(f"messages into {core!r} from {missing} have not been computed")
    local = contract([net[core]] + list(inbox.values()), legs)
    factor = 1.0
    for comp in _components(nb):
        if core in comp:
            continue
        rep = comp[0]
        factor *= float(contract([net[rep]] + list(_inbox(result, rep).values()), ()).values)
    return local * factor


def directed_edges(directions: Mapping[str, tuple[Sequence[str], Sequence[str]]]) -> list[Direction]:
    """Directions along which a directed core feeds another.

    ``(a, b)`` qualifies when some output of ``a`` is an input of ``b`` and
    neither core touches the other's variables in any other role.
    """
    out = []
    items = [(k, set(i), set(o)) for k, (i, o) in directions.items()]
    for a, ina, outa in items:
        for b, inb, outb in items:
            if a == b:
                continue
            if ina & (inb | outb) or outb & (ina | outa) or not outa & inb:
                continue
            out.append((a, b))
    return out


def _check_directions(net: TensorNetwork, directions) -> dict[str, tuple[tuple[str, ...], tuple[str, ...]]]:
    checked = {}
    if set(directions) != set(net):
        raise InputError("directions must be given for exactly the cores of the network")
    for name, (ins, outs) in directions.items():
        ins, outs = tuple(ins), tuple(outs)
        if set(ins) & set(outs) or set(ins) | set(outs) != set(net[name].names) or len(ins) + len(outs) != len(net[name].names):
            raise InputError(f"core {name!r}: inputs and outputs must partition its legs")
        checked[name] = (ins, outs)
    return checked


def directed_bp(net: TensorNetwork, directions: Mapping[str, tuple[Sequence[str], Sequence[str]]]) -> PropagationResult:
    """Forward evaluation of a compiled decomposition with evidence on its inputs.

    Evidence cores (no inputs) send first; a core forwards once it has
    received every message addressed to it.
    """
    dirs = _check_directions(net, directions)
    produced = {v for _, outs in dirs.values() for v in outs}
    unbound = sorted({v for ins, _ in dirs.values() for v in ins} - produced)
    if unbound:
        raise StateError(f"input variables {unbound} carry no evidence")
    edges = directed_edges(dirs)
    into: dict[str, list[str]] = {c: [] for c in net}
    out_of: dict[str, list[str]] = {c: [] for c in net}
    for a, b in edges:
        into[b].append(a)
        out_of[a].append(b)

    result = PropagationResult(mode="directed")
    inbox: dict[str, dict[str, Tensor]] = {c: {} for c in net}
    queue = deque(((a, b), 0) for a, b in edges if not dirs[a][0])
    queued = {d for d, _ in queue}
    while queue:
        (s, r), epoch = queue.popleft()
        legs = [v for v in dirs[s][1] if v in dirs[r][0]]
        msg = _message(net, s, r, inbox, legs)
        inbox[r][s] = msg
        result.messages[(s, r)] = msg
        result.messages_sent += 1
        result.epochs = max(result.epochs, epoch + 1)
        if all(e2 in inbox[r] for e2 in into[r]):
            for e3 in out_of[r]:
                if (r, e3) not in queued:
                    queued.add((r, e3))
                    queue.append(((r, e3), epoch + 1))
    return result


def read_states(
    net: TensorNetwork,
    directions: Mapping[str, tuple[Sequence[str], Sequence[str]]],
    result: PropagationResult,
    variables: Sequence[str],
) -> dict[str, int]:
    """States of output variables after directed propagation.

    Each variable is read from the core producing it, contracted with its
    incoming messages; the result must be a one-hot vector.
    """
    dirs = _check_directions(net, directions)
    producer = {v: k for k, (_, outs) in dirs.items() for v in outs}
    states = {}
    for v in variables:
        if v not in producer:
            raise InputError(f"no core produces {v!r}")
        core = producer[v]
        vec = contract([net[core]] + list(_inbox(result, core).values()), [v]).values
        hits = np.flatnonzero(np.abs(vec) > 1e-12)
        if len(hits) != 1 or abs(vec[hits[0]] - 1.0) > 1e-9:
            raise StateError(f"{v!r} is not determined: {vec}")
        states[v] = int(hits[0])
    return states


def constraint_propagation(net: TensorNetwork, max_steps: int | None = None) -> PropagationResult:
    """Shrink message supports until nothing changes.

    Messages start as ones.  Each step replaces a message by the support of
    the local contraction; when a support shrinks, every message leaving the
    receiver is scheduled again.  Supports only ever shrink, so the loop
    terminates, and each message always contains the support of the true
    marginal on its legs.  Propagation stops early once a message is empty;
    at the fixed point every core is checked for an empty local support.
    """
    nb = core_neighbors(net)
    edges = [(s, r) for s in net for r in nb[s]]
    legs = {(s, r): _shared(net, s, r) for s, r in edges}
    inbox: dict[str, dict[str, Tensor]] = {c: {} for c in net}
    result = PropagationResult(mode="constraint")
    for s, r in edges:
        msg = ones([net.variable(v) for v in legs[(s, r)]])
        inbox[r][s] = msg
        result.messages[(s, r)] = msg
    if max_steps is None:
        capacity = sum(m.values.size for m in result.messages.values())
        max_steps = len(edges) + capacity * max((len(v) for v in nb.values()), default=0) + 1
    queue: deque[tuple[Direction, int]] = deque((d, 0) for d in edges)
    queued = set(edges)
    while queue:
        if result.messages_sent >= max_steps:
            raise ConvergenceError(f"no fixed point after {max_steps} steps")
        (s, r), epoch = queue.popleft()
        queued.discard((s, r))
        new = nonzero_indicator(_message(net, s, r, inbox, legs[(s, r)]))
        result.messages_sent += 1
        result.epochs = max(result.epochs, epoch + 1)
        if np.array_equal(new.values, inbox[r][s].values):
            continue
        inbox[r][s] = new
        result.messages[(s, r)] = new
        result.updates += 1
        if not new.values.any():
            result.inconsistent = True
            return result
        for e2 in nb[r]:
            if (r, e2) not in queued:
                queued.add((r, e2))
                queue.append(((r, e2), epoch + 1))
    # two neighbours can agree to disagree: each message is non-empty, yet no
    # state of the shared legs survives both sides
    for core in net:
        if nb[core] and abs(float(contract([net[core]] + list(inbox[core].values()), ()).values)) <= NONZERO_TOL:
            result.inconsistent = True
            break
    return result


def deduce_atoms(
    net: TensorNetwork,
    result: PropagationResult,
    atoms: Sequence[str] | None = None,
) -> dict[str, bool | None]:
    """Truth values forced by the propagated supports.

    An atom is True (False) when every core holding it, together with its
    incoming messages, only allows state 1 (0), and None when both remain.
    ``atoms`` defaults to all binary variables not ending in ``_dV``.
    """
    if atoms is None:
        atoms = [n for n, v in net.variables.items() if v.dim == 2 and not n.endswith("_dV")]
    if result.inconsistent:
        raise InconsistencyError("propagation emptied a message support; the constraints have no model")
    holders: dict[str, list[str]] = {}
    for name, core in net.items():
        for v in core.names:
            holders.setdefault(v, []).append(name)
    out: dict[str, bool | None] = {}
    for atom in atoms:
        if atom not in holders:
            raise InputError(f"unknown atom {atom!r}")
        support = np.ones(2, dtype=bool)
        for core in holders[atom]:
            local = contract([net[core]] + list(_inbox(result, core).values()), [atom])
            support &= nonzero_indicator(local).values.astype(bool)
        if not support.any():
            raise InconsistencyError(f"atom {atom!r} has no admissible value")
        out[atom] = None if support.all() else bool(support[1])
    return out
