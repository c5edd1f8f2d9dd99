"""Adding numbers by message passing through a digit-wise adder circuit.

Each digit position is a small function (two digits and a carry in, a digit
and a carry out).  Compiled to tensors and fed one-hot evidence on the input
digits, directed propagation carries exact one-hot messages to the outputs.
"""

from tnlogic import adder_inputs, build_madic_adder, directed_bp, evidence_network, read_states

m, d = 3, 3  # base 3, three digits
graph = build_madic_adder(m, d)
print("hyperedges:", [e.name for e in graph.topological_edges])

for a, b in [(5, 7), (26, 26), (0, 13)]:
    net, directions = evidence_network(graph, adder_inputs(m, d, a, b))
    result = directed_bp(net, directions)
    states = read_states(net, directions, result, graph.output_nodes)
    digits = [states[f"Y{k}"] for k in range(d + 1)]
    total = sum(y * m**k for k, y in enumerate(digits))
    print(f"{a} + {b}: digits (low first) {digits} -> {total}, {result.messages_sent} messages")
