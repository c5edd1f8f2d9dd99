"""Independent coin tosses as an exponential family.

The statistic counting heads, with a single weight theta, gives the product
of independent Bernoulli(z) coins when theta = ln(z / (1 - z)).
"""

import math

from tnlogic import Variable, exponential_family_member, head_count, markov_distribution, partition_function

coins = [Variable(f"X{i}", 2) for i in range(2)]
for z in (0.2, 0.5, 0.9):
    net = exponential_family_member([head_count(coins)], [math.log(z / (1 - z))])
    p = markov_distribution(net, coins)
    print(f"z = {z}: P =\n{p.values}\n  Z = {partition_function(net):.6f}, 1/(1-z)^2 = {1 / (1 - z) ** 2:.6f}")
