"""A 4x4 Sudoku solved without search.

Every cell, row, column and square carries an exactly-one constraint over
boolean atoms.  Constraint propagation shrinks the supports of the messages
between constraints until every atom is forced.
"""

import time

from tnlogic import board_to_start, build_sudoku_kb, constraint_propagation, deduce_atoms, deductions_to_board
from tnlogic.formats import format_board, parse_board

board = parse_board(
    """
    1.32
    .2..
    ..4.
    43..
    """,
    2,
)
print(format_board(board))

start = time.perf_counter()
net = build_sudoku_kb(2, board_to_start(board, 2))
result = constraint_propagation(net)
decided = deduce_atoms(net, result)
elapsed = time.perf_counter() - start

print(f"{len(net)} cores, {result.messages_sent} messages, {result.updates} support changes, {elapsed:.2f} s")
print(f"undecided atoms: {sum(v is None for v in decided.values())}")
print(format_board(deductions_to_board(decided, 2)))
