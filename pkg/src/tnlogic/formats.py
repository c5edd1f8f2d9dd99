"""File formats: JSON network specs and tensors, CSV datasets, Sudoku boards, DOT.

A network spec is a JSON object::

    {
      "variables": {"X0": 2, "X1": 2},
      "cores": {
        "f": {"expression": ["or", "X0", "X1"]},
        "d": {"dense": {"colors": ["X0", "X1"], "shape": [2, 2], "values": [1, 0, 0, 1]}},
        "s": {"sparse": {"colors": ["X0"], "shape": [2], "entries": [[1.0, {"X0": 1}]]}},
        "e": {"evidence": {"atom": "X0", "truth": true}}
      }
    }

Any core may also carry ``"direction": {"in": [...], "out": [...]}`` for
directed propagation; evidence cores are directed towards their atom.
"""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import AnyTensor, SparseTensor, Tensor, TensorNetwork, Variable, make_one_hot
from .errors import InputError, ParseError
from .hln import Dataset
from .logic import atoms_of, check_expression, formula_tensor


@dataclass(frozen=True)
class NetworkSpec:
    """A loaded spec: the network plus any declared core directions."""

    network: TensorNetwork
    directions: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = field(default_factory=dict)


def _read_json(path: str | Path):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"{path}: line {err.lineno}, column {err.colno}: {err.msg}") from None


def _expect(cond: bool, where: str, msg: str) -> None:
    if not cond:
        raise ParseError(f"{where}: {msg}")


def _str_list(value, where: str) -> list[str]:
    _expect(isinstance(value, list) and all(isinstance(x, str) for x in value), where, "expected a list of names")
    return list(value)


def _legs(doc: Mapping, where: str, dims: dict[str, int]) -> list[Variable]:
    colors = _str_list(doc.get("colors"), f"{where}.colors")
    shape = doc.get("shape")
    _expect(
        isinstance(shape, list) and len(shape) == len(colors) and all(isinstance(d, int) and not isinstance(d, bool) and d >= 1 for d in shape),
        f"{where}.shape",
        "expected one positive integer per color",
    )
    _expect(len(set(colors)) == len(colors), f"{where}.colors", "repeated color")
    legs = []
    for c, d in zip(colors, shape):
        declared = dims.setdefault(c, d)
        _expect(declared == d, f"{where}.shape", f"{c!r} has dimension {d} but is declared with {declared}")
        legs.append(Variable(c, d))
    return legs


def tensor_from_doc(doc: Mapping, where: str = "tensor", dims: dict[str, int] | None = None) -> AnyTensor:
    """Build a tensor from ``{"dense": ...}`` or ``{"sparse": ...}``."""
    dims = {} if dims is None else dims
    _expect(isinstance(doc, Mapping), where, "expected an object")
    if "dense" in doc:
        body = doc["dense"]
        _expect(isinstance(body, Mapping), f"{where}.dense", "expected an object")
        legs = _legs(body, f"{where}.dense", dims)
        values = body.get("values")
        size = math.prod(v.dim for v in legs)
        _expect(
            isinstance(values, list) and len(values) == size and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in values),
            f"{where}.dense.values",
            f"expected {size} numbers",
        )
        return Tensor(legs, np.array(values, dtype=np.float64))
    if "sparse" in doc:
        body = doc["sparse"]
        _expect(isinstance(body, Mapping), f"{where}.sparse", "expected an object")
        legs = _legs(body, f"{where}.sparse", dims)
        entries = body.get("entries")
        _expect(isinstance(entries, list), f"{where}.sparse.entries", "expected a list of [value, positions]")
        terms = []
        for k, entry in enumerate(entries):
            loc = f"{where}.sparse.entries[{k}]"
            _expect(
                isinstance(entry, list) and len(entry) == 2 and isinstance(entry[0], (int, float)) and isinstance(entry[1], Mapping),
                loc,
                "expected [value, {color: index}]",
            )
            terms.append((entry[0], entry[1]))
        try:
            return SparseTensor(legs, terms)
        except InputError as err:
            raise ParseError(f"{where}.sparse.entries: {err}") from None
    raise ParseError(f"{where}: expected a 'dense' or 'sparse' entry")


def tensor_to_doc(t: AnyTensor) -> dict:
    legs = {"colors": list(t.names), "shape": [v.dim for v in t.variables]}
    if isinstance(t, SparseTensor):
        return {"sparse": legs | {"entries": [[value, dict(pos)] for value, pos in t.terms]}}
    return {"dense": legs | {"values": [float(x) for x in t.values.reshape(-1)]}}


def _dump(doc, path: str | Path | None = None) -> str:
    # json writes floats with repr, the shortest text that reads back to the same double
    text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def save_tensor(t: AnyTensor, path: str | Path) -> None:
    _dump(tensor_to_doc(t), path)


def load_tensor(path: str | Path) -> AnyTensor:
    return tensor_from_doc(_read_json(path), str(path))


def parse_spec(doc, source: str = "spec") -> NetworkSpec:
    _expect(isinstance(doc, Mapping), source, "expected a JSON object")
    variables = doc.get("variables", {})
    _expect(isinstance(variables, Mapping), f"{source}.variables", "expected an object of name: dim")
    dims: dict[str, int] = {}
    for name, d in variables.items():
        _expect(isinstance(d, int) and not isinstance(d, bool) and d >= 1, f"{source}.variables.{name}", "expected a positive integer")
        dims[name] = d
    cores_doc = doc.get("cores")
    _expect(isinstance(cores_doc, Mapping), f"{source}.cores", "expected an object of named cores")
    cores: list[tuple[str, AnyTensor]] = []
    directions: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {}
    for name, entry in cores_doc.items():
        where = f"{source}.cores.{name}"
        _expect(isinstance(entry, Mapping), where, "expected an object")
        if "expression" in entry:
            try:
                check_expression(entry["expression"])
            except ParseError as err:
                raise ParseError(f"{where}.expression: {err}") from None
            for a in atoms_of(entry["expression"]):
                _expect(dims.setdefault(a, 2) == 2, f"{where}.expression", f"atom {a!r} is declared with dimension {dims[a]}")
            core: AnyTensor = formula_tensor(entry["expression"])
        elif "evidence" in entry:
            ev = entry["evidence"]
            _expect(
                isinstance(ev, Mapping) and isinstance(ev.get("atom"), str) and isinstance(ev.get("truth"), bool),
                f"{where}.evidence",
                'expected {"atom": name, "truth": true|false}',
            )
            _expect(dims.setdefault(ev["atom"], 2) == 2, f"{where}.evidence", f"atom {ev['atom']!r} must be binary")
            core = make_one_hot(Variable(ev["atom"], 2), int(ev["truth"]))
            directions[name] = ((), (ev["atom"],))
        else:
            core = tensor_from_doc(entry, where, dims)
        if "direction" in entry:
            d = entry["direction"]
            _expect(isinstance(d, Mapping), f"{where}.direction", 'expected {"in": [...], "out": [...]}')
            directions[name] = (
                tuple(_str_list(d.get("in", []), f"{where}.direction.in")),
                tuple(_str_list(d.get("out", []), f"{where}.direction.out")),
            )
        cores.append((name, core))
    used = {v for _, c in cores for v in c.names}
    for name, d in dims.items():
        if name not in used:
            # declared but untouched variables still range over their states
            cores.append((f"{name}_domain", Tensor([Variable(name, d)], np.ones(d))))
    try:
        return NetworkSpec(TensorNetwork(cores), directions)
    except InputError as err:
        raise ParseError(f"{source}: {err}") from None


def read_spec(path: str | Path) -> NetworkSpec:
    return parse_spec(_read_json(path), str(path))


def load_spec(path: str | Path) -> TensorNetwork:
    return read_spec(path).network


def spec_to_doc(net: TensorNetwork, directions: Mapping[str, tuple[Sequence[str], Sequence[str]]] | None = None) -> dict:
    cores = {}
    for name, t in net.items():
        entry = tensor_to_doc(t)
        if directions and name in directions:
            ins, outs = directions[name]
            entry["direction"] = {"in": list(ins), "out": list(outs)}
        cores[name] = entry
    return {"variables": {n: v.dim for n, v in net.variables.items()}, "cores": cores}


def save_spec(net: TensorNetwork, path: str | Path, directions=None) -> None:
    """Write every core as an explicit dense or sparse tensor."""
    _dump(spec_to_doc(net, directions), path)


def load_dataset_csv(path: str | Path, atoms: Sequence[str] | None = None) -> Dataset:
    """Read 0/1 observations; columns are matched to ``atoms`` by header name."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: file is empty") from None
        if len(set(header)) != len(header) or not all(header):
            raise ParseError(f"{path}: line 1: header names must be non-empty and distinct")
        order = list(atoms) if atoms is not None else header
        unknown = [h for h in header if h not in order]
        if unknown:
            raise InputError(f"{path}: unknown columns {unknown}")
        absent = [a for a in order if a not in header]
        if absent:
            raise InputError(f"{path}: no column for atoms {absent}")
        cols = [header.index(a) for a in order]
        rows = []
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: line {line}: expected {len(header)} cells, got {len(row)}")
            cells = [c.strip() for c in row]
            for c in cells:
                if c not in ("0", "1"):
                    raise ParseError(f"{path}: line {line}: cell {c!r} is not 0 or 1")
            rows.append([int(cells[i]) for i in cols])
    if not rows:
        raise InputError(f"{path}: no observations")
    return Dataset(tuple(order), np.array(rows))


def parse_board(text: str, n: int) -> list[list[int]]:
    """Grid of 1-based numbers (0 for blank) from a board text.

    Rows are lines; blank lines and lines starting with ``#`` are skipped.
    Cells are separated by whitespace, or written back to back when every
    number is a single digit.  Blanks are ``.``.
    """
    size = n * n
    grid = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split() if len(line.split()) > 1 or size == 1 else list(line)
        if len(tokens) != size:
            raise ParseError(f"line {line_no}: expected {size} cells, got {len(tokens)}")
        row = []
        for tok in tokens:
            if tok == ".":
                row.append(0)
            elif tok.isdigit() and 1 <= int(tok) <= size:
                row.append(int(tok))
            else:
                raise ParseError(f"line {line_no}: bad cell {tok!r}, expected 1..{size} or '.'")
        grid.append(row)
    if len(grid) != size:
        raise ParseError(f"expected {size} rows, got {len(grid)}")
    return grid


def format_board(grid: Sequence[Sequence[int]]) -> str:
    wide = len(grid) > 9
    lines = []
    for row in grid:
        cells = ["." if x == 0 else str(x) for x in row]
        lines.append(" ".join(cells) if wide else "".join(cells))
    return "\n".join(lines) + "\n"


_CORE_ROLES = {"computation": "_cC", "activation": "_aC"}


def emit_dot(
    net: TensorNetwork,
    roles: Mapping[str, str] | None = None,
    computed: Sequence[str] = (),
) -> str:
    """Bipartite factor graph of ``net`` in DOT syntax.

    Cores are boxes and variables ellipses.  A core name gains ``_cC`` or
    ``_aC`` when ``roles`` marks it as computation or activation; variable
    names gain ``_cV`` when listed in ``computed`` and ``_dV`` otherwise,
    unless they already end in one of these suffixes.
    """
    roles = dict(roles or {})
    computed = set(computed)

    def core_id(name: str) -> str:
        if name.endswith(("_cC", "_aC")) or name not in roles:
            return name
        if roles[name] not in _CORE_ROLES:
            raise InputError(f"unknown core role {roles[name]!r}")
        return name + _CORE_ROLES[roles[name]]

    def var_id(name: str) -> str:
        if name.endswith(("_cV", "_dV")):
            return name
        return name + ("_cV" if name in computed else "_dV")

    lines = ["graph factor_graph {"]
    for name in net:
        lines.append(f"  {json.dumps(core_id(name))} [shape=box];")
    for name in net.variables:
        lines.append(f"  {json.dumps(var_id(name))} [shape=ellipse];")
    for name, t in net.items():
        for v in t.names:
            lines.append(f"  {json.dumps(core_id(name))} -- {json.dumps(var_id(v))};")
    lines.append("}")
    return "\n".join(lines) + "\n"
