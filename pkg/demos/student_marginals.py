"""Exact marginals on a tree-shaped network by belief propagation.

Three factors over Difficulty, Intelligence, Grade, SAT score and Letter form
a tree.  Four messages suffice; each core's local marginal then equals the
full contraction onto its legs.
"""

import numpy as np

from tnlogic import Tensor, TensorNetwork, Variable, contract, local_marginal, tree_bp

D, I, G, S, L = Variable("D", 2), Variable("I", 2), Variable("G", 3), Variable("S", 2), Variable("L", 2)
rng = np.random.default_rng(7)
net = TensorNetwork(
    {
        "grade": Tensor([G, D, I], rng.uniform(0.1, 1.0, (3, 2, 2))),
        "sat": Tensor([I, S], rng.uniform(0.1, 1.0, (2, 2))),
        "letter": Tensor([L, G], rng.uniform(0.1, 1.0, (2, 3))),
    }
)

result = tree_bp(net)
print("messages:", sorted(result.messages))
for core in net:
    via_messages = local_marginal(net, core, result)
    direct = contract(net, list(net[core].names))
    print(f"{core}: max difference {np.max(np.abs(via_messages.values - direct.values)):.1e}")

p_letter = contract(net, [L]).values
print("P(L) =", p_letter / p_letter.sum())
