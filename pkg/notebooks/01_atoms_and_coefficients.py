# %% [markdown]
# # Which sites always travel together?
#
# A recombination distribution assigns a probability to every subset J of
# sites: the offspring copies J from one parent and the rest from the other.
# Some groups of sites are never separated by any J. Those groups are the
# atoms, and they are what the population eventually decorrelates down to.

# %%
from fractions import Fraction

from recombchain.rho import check_coefficients, coefficient_table, dyadic_kernel, validate
from recombchain.subsets import SiteSet, format_partition, format_subset

sites = SiteSet(5)
rho = validate(
    {
        sites.subset([1, 2]): Fraction(1, 6),
        sites.subset([3, 4, 5]): Fraction(1, 6),
        sites.subset([1, 2, 3]): Fraction(1, 4),
        sites.subset([4, 5]): Fraction(1, 4),
        sites.full: Fraction(1, 6),
    },
    sites,
)
table = coefficient_table(rho)
print("atoms:", format_partition(table.atom_partition))

# %% [markdown]
# Sites 4 and 5 are cut from the rest by both crossovers but never from each
# other, so they form one atom. The same goes for sites 1 and 2.
#
# Every set that can show up as a block while the sequence is being broken
# apart is an intersection of support sets. For each such block we tabulate
# how the next generation treats it: kept whole, or cut in two.

# %%
for k in sorted(table.closure_sets, key=lambda k: (k.bit_count(), k)):
    law = ", ".join(f"{format_partition(c)}: {w}" for c, w in dyadic_kernel(table, k).items())
    print(f"{format_subset(k):>14}  stay {str(table.stay(k)):>5}   {law}")

# %% [markdown]
# Blocks deeper in the tree are harder to cut, and atoms are never cut at
# all. The identity checker runs these comparisons exhaustively.

# %%
report = check_coefficients(table)
print(report.name, "passed" if report.passed else report.failures, f"({report.checked} checks)")
