import json
import math
import re
from pathlib import Path

import numpy as np
import pytest

from tnlogic.cli import EX_DATAERR, EX_INCONSISTENT, EX_NOINPUT, EX_USAGE, cli_dispatch
from tnlogic.core import SparseTensor, Tensor, TensorNetwork, Variable, contract, make_delta
from tnlogic.errors import InputError, ParseError
from tnlogic.formats import (
    emit_dot,
    format_board,
    load_dataset_csv,
    load_spec,
    load_tensor,
    parse_board,
    parse_spec,
    read_spec,
    save_spec,
    save_tensor,
)
from tnlogic.logic import count_models

DATA = Path(__file__).parent / "data"
F0_SPEC = DATA / "formula_f0.json"
SOLVED = "1432\n3214\n2143\n4321\n"
SPEC_FIXTURES = [DATA / "formula_f0.json", DATA / "adder_1digit.json"]


def write(tmp_path, name, content):
    p = tmp_path / name
    p.write_text(content if isinstance(content, str) else json.dumps(content), encoding="utf-8")
    return str(p)


class TestSpecs:
    def test_f0_spec_counts_three(self):
        net = load_spec(F0_SPEC)
        assert set(net.variables) == {"X_0", "X_1", "X_2"}
        assert count_models(net) == 3

    def test_dense_identity_is_delta(self):
        net = parse_spec({"cores": {"d": {"dense": {"colors": ["a", "b"], "shape": [2, 2], "values": [1, 0, 0, 1]}}}}).network
        assert net["d"].allclose(make_delta([Variable("a", 2), Variable("b", 2)]), atol=0)

    def test_sparse_terms_equal_dense_sum(self):
        # the three models of (X0 or X1) and not X2 as elementary terms
        models = [(1, 0, 0), (0, 1, 0), (1, 1, 0)]
        entries = [[1, {"X_0": a, "X_1": b, "X_2": c}] for a, b, c in models]
        net = parse_spec({"cores": {"s": {"sparse": {"colors": ["X_0", "X_1", "X_2"], "shape": [2, 2, 2], "entries": entries}}}}).network
        assert isinstance(net["s"], SparseTensor)
        np.testing.assert_array_equal(net["s"].to_dense().values, load_spec(F0_SPEC)["f0"].values)

    def test_evidence_core_is_directed(self):
        spec = read_spec(DATA / "adder_1digit.json")
        assert spec.directions["x"] == ((), ("X0",))
        assert spec.directions["add0"] == (("X0", "Xt0"), ("Y0", "Y1"))

    def test_declared_unused_variable_gets_domain_core(self):
        net = parse_spec({"variables": {"a": 3}, "cores": {}}).network
        assert contract(net, ()).values == 3.0

    @pytest.mark.parametrize("path", SPEC_FIXTURES, ids=lambda p: p.name)
    def test_roundtrip(self, path, tmp_path):
        spec = read_spec(path)
        out = tmp_path / "again.json"
        save_spec(spec.network, out, spec.directions)
        again = read_spec(out)
        assert set(again.network) == set(spec.network)
        assert again.directions == spec.directions
        for name, t in spec.network.items():
            np.testing.assert_array_equal(again.network[name].values, t.values)
        save_spec(again.network, tmp_path / "third.json", again.directions)
        assert (tmp_path / "third.json").read_bytes() == out.read_bytes()

    def test_tensor_roundtrip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        t = Tensor([Variable("a", 3), Variable("b", 2)], rng.random((3, 2)) * 1e-7 + np.pi)
        save_tensor(t, tmp_path / "t.json")
        assert np.array_equal(load_tensor(tmp_path / "t.json").values, t.values)

    def test_sparse_tensor_roundtrip(self, tmp_path):
        s = SparseTensor([Variable("a", 2), Variable("b", 3)], [(0.1, {"a": 1}), (2.5, {"a": 0, "b": 2})])
        save_tensor(s, tmp_path / "s.json")
        back = load_tensor(tmp_path / "s.json")
        assert isinstance(back, SparseTensor)
        np.testing.assert_array_equal(back.to_dense().values, s.to_dense().values)

    @pytest.mark.parametrize(
        "doc, field",
        [
            ({"cores": []}, "spec.cores"),
            ({"variables": {"a": 0}, "cores": {}}, "spec.variables.a"),
            ({"cores": {"f": {"expression": ["nand", "a"]}}}, "spec.cores.f.expression"),
            ({"cores": {"d": {"dense": {"colors": ["a"], "shape": [2], "values": [1]}}}}, "spec.cores.d.dense.values"),
            ({"cores": {"s": {"sparse": {"colors": ["a"], "shape": [2], "entries": [[1, {"a": 5}]]}}}}, "spec.cores.s.sparse.entries"),
            ({"cores": {"e": {"evidence": {"atom": "a"}}}}, "spec.cores.e.evidence"),
            ({"cores": {"x": {}}}, "spec.cores.x"),
            ({"variables": {"a": 3}, "cores": {"f": {"expression": "a"}}}, "spec.cores.f.expression"),
        ],
    )
    def test_schema_errors_name_the_field(self, doc, field):
        with pytest.raises(ParseError, match=re.escape(field)):
            parse_spec(doc)

    def test_bad_json_reports_line(self, tmp_path):
        path = write(tmp_path, "bad.json", '{\n  "cores": {,}\n}')
        with pytest.raises(ParseError, match="line 2"):
            load_spec(path)


class TestDatasets:
    def test_accounting(self):
        data = load_dataset_csv(DATA / "accounting.csv", ["A1", "A2", "F"])
        assert data.rows.shape == (20, 3)

    def test_shuffled_columns(self, tmp_path):
        original = load_dataset_csv(DATA / "accounting.csv", ["A1", "A2", "F"])
        lines = (DATA / "accounting.csv").read_text().splitlines()
        shuffled = ["F,A1,A2"] + [",".join([r.split(",")[2], *r.split(",")[:2]]) for r in lines[1:]]
        again = load_dataset_csv(write(tmp_path, "s.csv", "\n".join(shuffled) + "\n"), ["A1", "A2", "F"])
        np.testing.assert_array_equal(again.rows, original.rows)

    def test_non_binary_cell(self, tmp_path):
        with pytest.raises(ParseError, match="line 3"):
            load_dataset_csv(write(tmp_path, "d.csv", "a,b\n0,1\n0,2\n"))

    def test_unknown_header(self, tmp_path):
        with pytest.raises(InputError):
            load_dataset_csv(write(tmp_path, "d.csv", "a,zz\n0,1\n"), ["a"])

    def test_empty_body(self, tmp_path):
        with pytest.raises(InputError):
            load_dataset_csv(write(tmp_path, "d.csv", "a,b\n"))


class TestBoards:
    def test_fixture(self):
        grid = parse_board((DATA / "sudoku_start.txt").read_text(), 2)
        assert grid == [[1, 0, 3, 2], [0, 2, 0, 0], [0, 0, 4, 0], [4, 3, 0, 0]]

    def test_format_roundtrip(self):
        grid = [[1, 0, 3, 2], [0, 2, 0, 0], [0, 0, 4, 0], [4, 3, 0, 0]]
        assert parse_board(format_board(grid), 2) == grid

    @pytest.mark.parametrize("text", ["1234\n", "12345\n" * 4, "1230\n" * 4, "1..5\n" * 4])
    def test_bad_boards(self, text):
        with pytest.raises(ParseError):
            parse_board(text, 2)


def dot_counts(text):
    nodes = re.findall(r"^\s+(\"[^\"]+\") \[shape=(\w+)\];$", text, re.M)
    edges = re.findall(r"^\s+\"[^\"]+\" -- \"[^\"]+\";$", text, re.M)
    return nodes, edges


class TestDot:
    def test_single_core(self):
        t = Tensor([Variable("a", 2), Variable("b", 2)], np.ones((2, 2)))
        nodes, edges = dot_counts(emit_dot(TensorNetwork({"t": t})))
        assert len(nodes) == 3 and len(edges) == 2

    def test_student_graph(self):
        dims = {"D": 2, "I": 2, "G": 3, "S": 2, "L": 2}
        legs = {"e0": "GDI", "e1": "IS", "e2": "LG"}
        net = TensorNetwork({k: Tensor([Variable(v, dims[v]) for v in vs], np.ones([dims[v] for v in vs])) for k, vs in legs.items()})
        nodes, edges = dot_counts(emit_dot(net))
        assert sum(s == "box" for _, s in nodes) == 3
        assert sum(s == "ellipse" for _, s in nodes) == 5
        assert len(edges) == 7

    def test_empty_network(self):
        assert emit_dot(TensorNetwork()) == "graph factor_graph {\n}\n"

    def test_role_suffixes(self):
        t = Tensor([Variable("h", 2), Variable("x", 2)], np.ones((2, 2)))
        text = emit_dot(TensorNetwork({"f": t}), roles={"f": "computation"}, computed=["h"])
        assert '"f_cC" -- "h_cV"' in text and '"f_cC" -- "x_dV"' in text


def run(argv, capsys):
    code = cli_dispatch([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestCli:
    def test_count_models(self, capsys):
        assert run(["count-models", "--spec", F0_SPEC], capsys)[:2] == (0, "3\n")

    def test_entail(self, capsys):
        assert run(["entail", "--spec", F0_SPEC, "--query", '["not", "X_2"]'], capsys)[:2] == (0, "yes\n")
        assert run(["entail", "--spec", F0_SPEC, "--query", "X_0"], capsys)[:2] == (1, "no\n")

    def test_contract(self, capsys, tmp_path):
        code, out, _ = run(["contract", "--spec", F0_SPEC, "--open", "X_2"], capsys)
        assert code == 0
        assert json.loads(out)["dense"] == {"colors": ["X_2"], "shape": [2], "values": [3.0, 0.0]}
        target = tmp_path / "t.json"
        assert run(["contract", "--spec", F0_SPEC, "--open", "X_0,X_2", "--out", target], capsys)[0] == 0
        np.testing.assert_array_equal(load_tensor(target).values, [[1, 0], [2, 0]])

    def test_propagate_directed(self, capsys):
        code, out, _ = run(["propagate", "--spec", DATA / "adder_1digit.json", "--mode", "directed"], capsys)
        assert code == 0
        assert json.loads(out)["states"] == {"Y0": 0, "Y1": 1}

    def test_propagate_tree_with_marginals(self, capsys):
        code, out, _ = run(["propagate", "--spec", F0_SPEC, "--mode", "tree", "--marginals", "f0"], capsys)
        doc = json.loads(out)
        assert code == 0 and doc["messages_sent"] == 0
        assert sum(doc["marginals"]["f0"]["dense"]["values"]) == 3.0

    def test_propagate_constraint(self, capsys, tmp_path):
        spec = {"cores": {"f": {"expression": ["implies", "a", "b"]}, "e": {"evidence": {"atom": "a", "truth": True}}}}
        code, out, _ = run(["propagate", "--spec", write(tmp_path, "s.json", spec), "--mode", "constraint"], capsys)
        doc = json.loads(out)
        assert code == 0 and doc["decided"] == {"a": True, "b": True} and doc["inconsistent"] is False

    def test_propagate_constraint_inconsistent(self, capsys, tmp_path):
        spec = {"cores": {"f": {"expression": ["and", "a", "b"]}, "e": {"evidence": {"atom": "a", "truth": False}}}}
        code, out, _ = run(["propagate", "--spec", write(tmp_path, "s.json", spec), "--mode", "constraint"], capsys)
        assert code == EX_INCONSISTENT and json.loads(out)["inconsistent"] is True

    def test_solve_sudoku(self, capsys):
        assert run(["solve-sudoku", "--n", 2, "--board", DATA / "sudoku_start.txt"], capsys)[:2] == (0, SOLVED)

    def test_solve_sudoku_undetermined(self, capsys, tmp_path):
        code, out, _ = run(["solve-sudoku", "--n", 2, "--board", write(tmp_path, "b.txt", "....\n" * 4)], capsys)
        assert code == 1 and out == "....\n" * 4

    def test_solve_sudoku_inconsistent(self, capsys, tmp_path):
        board = write(tmp_path, "b.txt", "11..\n....\n....\n....\n")
        assert run(["solve-sudoku", "--n", 2, "--board", board], capsys)[0] == EX_INCONSISTENT

    def test_train_hln(self, capsys):
        code, out, _ = run(["train-hln", "--formulas", DATA / "accounting_formulas.json", "--data", DATA / "accounting.csv"], capsys)
        doc = json.loads(out)
        assert code == 0
        assert doc["hard_set"] == [0] and doc["hard_targets"] == [1]
        assert math.isclose(doc["theta"][1], math.log(3), abs_tol=1e-9)
        assert doc["converged"] and doc["sweeps"] == 1 and doc["means"] == [1.0, 0.9]

    def test_prob_entail(self, capsys, tmp_path):
        params = write(tmp_path, "p.json", {"hard_set": [0], "hard_targets": [1], "theta": [0.0, math.log(3)]})
        base = ["prob-entail", "--formulas", DATA / "accounting_formulas.json", "--params", params, "--query"]
        assert run(base + ['["or", ["not", "A1"], ["not", "A2"], ["not", "F"]]'], capsys)[:2] == (0, "yes\n")
        assert run(base + ["A1"], capsys)[:2] == (1, "no\n")

    def test_prob_entail_bad_params(self, capsys, tmp_path):
        params = write(tmp_path, "p.json", {"hard_set": [0], "theta": [0.0, 1.0]})
        argv = ["prob-entail", "--formulas", DATA / "accounting_formulas.json", "--params", params, "--query", "A1"]
        assert run(argv, capsys)[0] == EX_DATAERR

    def test_draw(self, capsys, tmp_path):
        target = tmp_path / "g.dot"
        assert run(["draw", "--spec", F0_SPEC, "--out", target], capsys)[0] == 0
        nodes, edges = dot_counts(target.read_text())
        assert len(nodes) == 4 and len(edges) == 3

    def test_usage_errors(self, capsys):
        assert run(["frobnicate"], capsys)[0] == EX_USAGE
        assert run(["count-models"], capsys)[0] == EX_USAGE
        assert run(["propagate", "--spec", F0_SPEC, "--mode", "loopy"], capsys)[0] == EX_USAGE

    def test_missing_file(self, capsys, tmp_path):
        assert run(["count-models", "--spec", tmp_path / "nope.json"], capsys)[0] == EX_NOINPUT

    def test_parse_error(self, capsys, tmp_path):
        code, _, err = run(["count-models", "--spec", write(tmp_path, "x.json", {"cores": 1})], capsys)
        assert code == EX_DATAERR and "x.json.cores" in err

    def test_bad_query(self, capsys):
        assert run(["entail", "--spec", F0_SPEC, "--query", '["nand", "X_0"]'], capsys)[0] == EX_DATAERR

    def test_output_is_deterministic(self, capsys):
        argv = ["propagate", "--spec", DATA / "adder_1digit.json", "--mode", "constraint"]
        first = run(argv, capsys)[1]
        assert all(run(argv, capsys)[1] == first for _ in range(3))
