"""Command-line entry point.

Exit status: 0 on success (and "yes" answers), 1 for "no" answers or an
undetermined board, 2 when the input is inconsistent, 64 for usage errors,
65 for malformed input data, 66 for unreadable files.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Sequence

import numpy as np

from . import formats
from .core import contract
from .errors import InconsistencyError, InputError, ParseError, TnLogicError
from .hln import FormulaStatistic, HybridParams, amm_train, empirical_means, probabilistic_entails
from .logic import board_to_start, build_sudoku_kb, check_expression, count_models, deductions_to_board, entails
from .propagation import constraint_propagation, deduce_atoms, directed_bp, local_marginal, read_states, tree_bp

EX_USAGE = 64
EX_DATAERR = 65
EX_NOINPUT = 66
EX_INCONSISTENT = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _emit(doc) -> None:
    sys.stdout.write(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def _expression(text: str):
    try:
        e = json.loads(text)
    except json.JSONDecodeError:
        # a bare atom name may be given without quotes
        e = text.strip()
    check_expression(e)
    return e


def _names(text: str | None) -> list[str]:
    return [s for s in (text or "").split(",") if s]


def _load_formulas(path: str) -> FormulaStatistic:
    doc = formats._read_json(path)
    atoms = []
    if isinstance(doc, dict) and "formulas" in doc:
        atoms = doc.get("atoms", [])
        doc = doc["formulas"]
    if isinstance(doc, dict):
        items = list(doc.items())
    elif isinstance(doc, list) and all(isinstance(x, list) and len(x) == 2 and isinstance(x[0], str) for x in doc):
        items = [(x[0], x[1]) for x in doc]
    else:
        raise ParseError(f"{path}: expected formulas as an object or a list of [name, expression]")
    try:
        return FormulaStatistic(items, atoms)
    except ParseError as err:
        raise ParseError(f"{path}: {err}") from None


def cmd_contract(args) -> int:
    net = formats.load_spec(args.spec)
    result = contract(net, _names(args.open))
    if args.out:
        formats.save_tensor(result, args.out)
    else:
        _emit(formats.tensor_to_doc(result))
    return 0


def cmd_count_models(args) -> int:
    print(count_models(formats.load_spec(args.spec)))
    return 0


def cmd_entail(args) -> int:
    yes = entails(formats.load_spec(args.spec), _expression(args.query))
    print("yes" if yes else "no")
    return 0 if yes else 1


def cmd_propagate(args) -> int:
    spec = formats.read_spec(args.spec)
    net = spec.network
    doc: dict = {}
    if args.mode == "tree":
        result = tree_bp(net)
    elif args.mode == "directed":
        missing = [c for c in net if c not in spec.directions]
        if missing:
            raise ParseError(f"{args.spec}: cores {missing} have no direction")
        result = directed_bp(net, spec.directions)
        consumed = {v for ins, _ in spec.directions.values() for v in ins}
        produced = [v for _, outs in spec.directions.values() for v in outs if v not in consumed]
        doc["states"] = read_states(net, spec.directions, result, produced)
    else:
        result = constraint_propagation(net)
        doc["inconsistent"] = result.inconsistent
        if not result.inconsistent:
            doc["decided"] = {a: v for a, v in deduce_atoms(net, result).items() if v is not None}
    doc["mode"] = result.mode
    doc["messages_sent"] = result.messages_sent
    doc["messages"] = {f"{s}->{r}": formats.tensor_to_doc(m) for (s, r), m in result.messages.items()}
    if args.marginals:
        doc["marginals"] = {c: formats.tensor_to_doc(local_marginal(net, c, result)) for c in _names(args.marginals)}
    _emit(doc)
    return EX_INCONSISTENT if result.inconsistent else 0


def cmd_solve_sudoku(args) -> int:
    with open(args.board, encoding="utf-8") as fh:
        grid = formats.parse_board(fh.read(), args.n)
    net = build_sudoku_kb(args.n, board_to_start(grid, args.n))
    result = constraint_propagation(net)
    decided = deduce_atoms(net, result)
    solved = deductions_to_board(decided, args.n)
    sys.stdout.write(formats.format_board(solved))
    return 0 if all(v is not None for v in decided.values()) else 1


def cmd_train_hln(args) -> int:
    stat = _load_formulas(args.formulas)
    data = formats.load_dataset_csv(args.data, stat.atoms)
    mu = empirical_means(stat, data)
    out = amm_train(stat, mu, n_samples=len(data), max_iters=args.max_iters, tol=args.tol)
    _emit(
        {
            "formulas": list(stat.names),
            "means": [float(x) for x in mu],
            "hard_set": list(out.params.hard_set),
            "hard_targets": list(out.params.hard_targets),
            "theta": [float(x) for x in out.params.theta],
            "converged": out.converged,
            "sweeps": out.sweeps,
        }
    )
    return 0


def cmd_prob_entail(args) -> int:
    stat = _load_formulas(args.formulas)
    doc = formats._read_json(args.params)
    try:
        params = HybridParams(tuple(doc["hard_set"]), tuple(doc["hard_targets"]), np.array(doc["theta"], dtype=float))
    except (KeyError, TypeError, ValueError) as err:
        raise ParseError(f"{args.params}: expected hard_set, hard_targets and theta ({err})") from None
    if len(params.theta) != len(stat):
        raise ParseError(f"{args.params}: {len(params.theta)} weights for {len(stat)} formulas")
    yes = probabilistic_entails(stat, params, _expression(args.query))
    print("yes" if yes else "no")
    return 0 if yes else 1


def cmd_draw(args) -> int:
    text = formats.emit_dot(formats.load_spec(args.spec))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tnlogic", description="Tensor-network reasoning on logical and probabilistic models.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("contract", help="contract a network onto open variables")
    p.add_argument("--spec", required=True)
    p.add_argument("--open", default="", help="comma-separated variable names")
    p.add_argument("--out")
    p.set_defaults(run=cmd_contract)

    p = sub.add_parser("count-models", help="number of models of a boolean network")
    p.add_argument("--spec", required=True)
    p.set_defaults(run=cmd_count_models)

    p = sub.add_parser("entail", help="does the network entail a formula")
    p.add_argument("--spec", required=True)
    p.add_argument("--query", required=True, help="JSON expression, e.g. '[\"or\", \"X0\", \"X1\"]'")
    p.set_defaults(run=cmd_entail)

    p = sub.add_parser("propagate", help="run message passing")
    p.add_argument("--spec", required=True)
    p.add_argument("--mode", choices=("tree", "directed", "constraint"), required=True)
    p.add_argument("--marginals", help="comma-separated core names")
    p.set_defaults(run=cmd_propagate)

    p = sub.add_parser("solve-sudoku", help="deduce a Sudoku board by constraint propagation")
    p.add_argument("--n", type=int, required=True, help="order; the grid is n^2 x n^2")
    p.add_argument("--board", required=True)
    p.set_defaults(run=cmd_solve_sudoku)

    p = sub.add_parser("train-hln", help="fit a hybrid logic network to data")
    p.add_argument("--formulas", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iters", type=int, default=100)
    p.set_defaults(run=cmd_train_hln)

    p = sub.add_parser("prob-entail", help="does a hybrid network entail a formula with probability one")
    p.add_argument("--formulas", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--query", required=True)
    p.set_defaults(run=cmd_prob_entail)

    p = sub.add_parser("draw", help="write the factor graph in DOT syntax")
    p.add_argument("--spec", required=True)
    p.add_argument("--out")
    p.set_defaults(run=cmd_draw)
    return parser


def cli_dispatch(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as err:
        print(err, file=sys.stderr)
        return EX_USAGE
    try:
        return args.run(args)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EX_NOINPUT
    except InconsistencyError as err:
        print(f"inconsistent: {err}", file=sys.stderr)
        return EX_INCONSISTENT
    except (ParseError, InputError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EX_DATAERR
    except TnLogicError as err:
        print(f"error: {err}", file=sys.stderr)
        return EX_DATAERR


def main() -> None:
    sys.exit(cli_dispatch())
