"""Counting and listing the models of a propositional formula.

The formula (X0 or X1) and not X2 becomes a boolean tensor over its three
atoms.  Contracting the tensor with nothing left open counts its models;
reading single coordinates lists them.
"""

import itertools

from tnlogic import KnowledgeBase, count_models, entails, formula_tensor

formula = ["and", ["or", "X0", "X1"], ["not", "X2"]]
t = formula_tensor(formula)
print("legs:", t.names)
print("models:", count_models(KnowledgeBase({"f0": formula})))

for state in itertools.product((0, 1), repeat=3):
    if t.values[state]:
        print("  satisfied by", dict(zip(t.names, state)))

# a knowledge base entails a query when no model satisfies the negated query
kb = KnowledgeBase({"f0": formula})
for query in (["not", "X2"], "X0", ["or", "X0", "X1"]):
    print(f"entails {query}: {entails(kb, query)}")
