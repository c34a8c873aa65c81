# %% [markdown]
# # Iterating the recombination operator versus weighting trees
#
# Applying the operator n times to a measure over sequences can be done the
# slow way, by summing products of marginals generation after generation.
# It can also be done in one shot: enumerate the ways the site set can be
# broken up over n generations, weight each one, and mix the products of
# marginals over the final blocks. Both routes are exact, so they must agree
# to the last digit.

# %%
import random

import numpy as np

from recombchain.instances import random_measure, three_site_example
from recombchain.measures import Alphabet, product_over_partition, xi_iterate
from recombchain.rho import coefficient_table
from recombchain.subsets import format_partition
from recombchain.trees import decompose_and_check, enumerate_trees

rho = three_site_example()
mu = random_measure(random.Random(0), Alphabet([2, 2, 2]))
print("starting measure:", [str(p) for p in mu.flat()])

# %% [markdown]
# Two generations produce three distinct trees.

# %%
for tree, weight in enumerate_trees(rho, 2):
    print(f"{str(weight):>4}  {tree}")

# %%
for n in range(5):
    report = decompose_and_check(rho, mu, n)
    q = ", ".join(f"{format_partition(p)}: {w}" for p, w in report.data["q"].items())
    print(f"n={n}: equal={report.passed}   q = {q}")

# %% [markdown]
# The mass on the finest partition grows towards one, so the iterates
# approach the product of the atom marginals. Here the atoms are single
# sites, and the distance shrinks geometrically.

# %%
limit = product_over_partition(mu, coefficient_table(rho).atom_partition)
for n in (1, 5, 10, 20):
    gap = np.abs(np.array(xi_iterate(rho, mu, n).flat() - limit.table.ravel(), dtype=float)).max()
    print(f"n={n:>2}  max |difference| = {gap:.3e}")
