"""Acceptance criteria, runnable under pytest or as a script.

``python tests/test_acceptance.py`` prints one PASS/FAIL line per criterion.
"""

import itertools
import math
import sys
import time
from pathlib import Path

import numpy as np

from oracles import brute_contract
from tnlogic.core import Tensor, TensorNetwork, Variable, coordinate, partition_function
from tnlogic.encoding import adder_inputs, build_madic_adder, evidence_network
from tnlogic.formats import load_dataset_csv, load_spec, parse_board
from tnlogic.hln import FormulaStatistic, HybridParams, amm_train, empirical_means, hln_distribution, probabilistic_entails, query_probability
from tnlogic.logic import board_to_start, build_sudoku_kb, count_models, deductions_to_board
from tnlogic.probability import head_count, exponential_family_member, markov_distribution
from tnlogic.propagation import constraint_propagation, deduce_atoms, directed_bp, local_marginal, read_states, tree_bp

DATA = Path(__file__).parent / "data"


def best_time(fn, repeat=5):
    best = math.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def criterion_1():
    """Model counting of (X0 or X1) and not X2."""
    net = load_spec(DATA / "formula_f0.json")
    assert count_models(net) == 3
    found = {s for s in itertools.product((0, 1), repeat=3) if coordinate(net, dict(zip(("X_0", "X_1", "X_2"), s))) == 1.0}
    assert found == {(1, 0, 0), (0, 1, 0), (1, 1, 0)}
    elapsed = best_time(lambda: count_models(net))
    assert elapsed < 1e-3, f"{elapsed * 1e3:.3f} ms"
    return f"3 models in {elapsed * 1e3:.3f} ms"


def criterion_2():
    """Exact tree propagation on the student network."""
    dims = {"D": 2, "I": 2, "G": 3, "S": 2, "L": 2}
    legs = {"e0": "GDI", "e1": "IS", "e2": "LG"}
    rng = np.random.default_rng(2024)
    worst, slowest = 0.0, 0.0
    for _ in range(20):
        net = TensorNetwork({k: Tensor([Variable(v, dims[v]) for v in vs], rng.uniform(0.05, 1.0, [dims[v] for v in vs])) for k, vs in legs.items()})
        start = time.perf_counter()
        result = tree_bp(net)
        marginals = {c: local_marginal(net, c, result) for c in net}
        slowest = max(slowest, time.perf_counter() - start)
        assert result.messages_sent == 4
        for c, m in marginals.items():
            worst = max(worst, float(np.max(np.abs(m.values - brute_contract(net.values(), list(m.names))))))
    assert worst <= 1e-9, worst
    assert slowest < 10e-3, f"{slowest * 1e3:.2f} ms"
    return f"max error {worst:.1e}, slowest draw {slowest * 1e3:.2f} ms"


def criterion_3():
    """Binary adder with four digits against integer addition."""
    m, d = 2, 4
    graph = build_madic_adder(m, d)
    start = time.perf_counter()
    for a, b in itertools.product(range(m**d), repeat=2):
        net, dirs = evidence_network(graph, adder_inputs(m, d, a, b))
        result = directed_bp(net, dirs)
        for msg in result.messages.values():
            assert msg.is_boolean() and msg.values.sum() == 1.0
        states = read_states(net, dirs, result, graph.output_nodes)
        assert sum(states[f"Y{k}"] * m**k for k in range(d + 1)) == a + b, (a, b)
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"{elapsed:.2f} s"
    return f"256 pairs in {elapsed:.2f} s"


def criterion_4():
    """Sudoku solved by constraint propagation."""
    grid = parse_board((DATA / "sudoku_start.txt").read_text(), 2)
    start = time.perf_counter()
    net = build_sudoku_kb(2, board_to_start(grid, 2))
    decided = deduce_atoms(net, constraint_propagation(net))
    elapsed = time.perf_counter() - start
    assert all(v is not None for v in decided.values())
    assert deductions_to_board(decided, 2) == [[1, 4, 3, 2], [3, 2, 1, 4], [2, 1, 4, 3], [4, 3, 2, 1]]
    assert elapsed < 5.0, f"{elapsed:.2f} s"
    return f"{len(decided)} atoms decided in {elapsed:.2f} s"


ACCOUNTING = FormulaStatistic({"f0": ["xor", "A1", "A2"], "f1": ["implies", "F", "A1"]}, ("A1", "A2", "F"))


def criterion_5():
    """Moment matching on the accounting data."""
    data = load_dataset_csv(DATA / "accounting.csv", ACCOUNTING.atoms)

    def train():
        return amm_train(ACCOUNTING, empirical_means(ACCOUNTING, data), n_samples=len(data))

    result = train()
    assert result.params.hard_set == (0,) and result.params.hard_targets == (1,)
    assert abs(result.params.theta[1] - math.log(3)) <= 1e-9
    np.testing.assert_allclose(result.held_out[1], [1.0, 3.0], rtol=0, atol=1e-12)
    assert result.converged and result.sweeps == 1
    elapsed = best_time(train)
    assert elapsed < 0.1, f"{elapsed * 1e3:.1f} ms"
    return f"theta_1 = {result.params.theta[1]:.9f} in {elapsed * 1e3:.1f} ms"


def criterion_6():
    """Accounting hybrid network coordinates."""
    theta = math.log(3)
    e = math.exp(theta)
    expected = np.zeros((2, 2, 2))
    expected[:, :, 0] = [[0, e], [e, 0]]
    expected[:, :, 1] = [[0, 1], [e, 0]]
    expected /= 1 + 3 * e
    p = hln_distribution(ACCOUNTING, HybridParams((0,), (1,), np.array([0.0, theta])))
    err = float(np.max(np.abs(p.values - expected)))
    assert err <= 1e-12, err
    return f"max error {err:.1e}"


def criterion_7():
    """Probabilistic entailment of not A1 or not A2 or not F."""
    params = HybridParams((0,), (1,), np.array([0.0, math.log(3)]))
    query = ["or", ["not", "A1"], ["not", "A2"], ["not", "F"]]
    assert probabilistic_entails(ACCOUNTING, params, query)
    prob = query_probability(ACCOUNTING, params, query)
    assert abs(prob - 1.0) <= 1e-9, prob
    return f"entailed, direct probability {prob:.12f}"


def criterion_8():
    """Coin-toss family against the closed form."""
    vs = [Variable("X0", 2), Variable("X1", 2)]
    worst = 0.0
    for z in (0.2, 0.5, 0.9):
        net = exponential_family_member([head_count(vs)], [math.log(z / (1 - z))])
        p = markov_distribution(net, vs).values
        expected = np.array([[(1 - z) ** 2, z * (1 - z)], [z * (1 - z), z**2]])
        worst = max(worst, float(np.max(np.abs(p - expected))))
        assert math.isclose(partition_function(net), 1 / (1 - z) ** 2, rel_tol=1e-12)
    assert worst <= 1e-12, worst
    return f"max error {worst:.1e}"


def criterion_9():
    """Randomized property suites."""
    import test_probability
    import test_properties

    start = time.perf_counter()
    test_properties.test_compiled_network_encodes_the_composition()
    test_properties.test_constraint_propagation_is_sound()
    for edges, dims in [(test_probability.STUDENT, test_probability.STUDENT_DIMS), (test_probability.ELEMENTARY, {}), (test_probability.CHAIN, {})]:
        test_probability.test_separation_implies_conditional_independence(edges, dims)
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"{elapsed:.1f} s"
    return f"200 DAGs, 100 networks, 3 hypergraphs in {elapsed:.1f} s"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9]


def report(k, fn):
    try:
        detail = fn()
    except AssertionError as err:
        print(f"FAIL criterion {k}: {fn.__doc__.strip()} ({err})")
        raise
    print(f"PASS criterion {k}: {fn.__doc__.strip()} ({detail})")


def test_criterion_1():
    report(1, criterion_1)


def test_criterion_2():
    report(2, criterion_2)


def test_criterion_3():
    report(3, criterion_3)


def test_criterion_4():
    report(4, criterion_4)


def test_criterion_5():
    report(5, criterion_5)


def test_criterion_6():
    report(6, criterion_6)


def test_criterion_7():
    report(7, criterion_7)


def test_criterion_8():
    report(8, criterion_8)


def test_criterion_9():
    report(9, criterion_9)


if __name__ == "__main__":
    failed = 0
    for k, fn in enumerate(CRITERIA, start=1):
        try:
            report(k, fn)
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
