"""Learning a hybrid logic network from twenty audit records.

Two formulas describe the records: exactly one of the accounts A1, A2 is
flagged, and a fraud flag F implies A1.  The first always holds in the data
and becomes a hard constraint; the second holds 18 times out of 20 and gets a
weight by moment matching.
"""

import math
from pathlib import Path

from tnlogic import FormulaStatistic, amm_train, empirical_means, hln_distribution, probabilistic_entails, query_probability
from tnlogic.formats import load_dataset_csv

here = Path(__file__).resolve().parent
stat = FormulaStatistic({"f0": ["xor", "A1", "A2"], "f1": ["implies", "F", "A1"]}, ("A1", "A2", "F"))
data = load_dataset_csv(here.parent / "tests" / "data" / "accounting.csv", stat.atoms)

mu = empirical_means(stat, data)
print("formula means:", mu)

result = amm_train(stat, mu, n_samples=len(data))
params = result.params
print("hard formulas:", params.hard_set, "targets:", params.hard_targets)
print(f"weight of f1: {params.theta[1]:.6f} (ln 3 = {math.log(3):.6f}), sweeps: {result.sweeps}")

p = hln_distribution(stat, params)
for f in (0, 1):
    print(f"P(A1, A2, F={f}):\n{p.values[:, :, f]}")

query = ["or", ["not", "A1"], ["not", "A2"], ["not", "F"]]
print("entailed with probability one:", probabilistic_entails(stat, params, query))
print("P(F) =", query_probability(stat, params, "F"))
