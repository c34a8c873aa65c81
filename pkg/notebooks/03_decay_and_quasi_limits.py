# %% [markdown]
# # How long does linkage survive?
#
# The breakup of the site set is a Markov chain on partitions that ends in
# the atom partition. We look at its survival curve, the exponential rate
# at which it decays, and where the chain sits when it has not yet been
# absorbed.

# %%
from fractions import Fraction

from recombchain.chain import build_chain, survival_profile
from recombchain.instances import single_crossover
from recombchain.qsd import analyze, geometric_limit_check, q_process
from recombchain.subsets import format_partition, format_subset

rho = single_crossover(4, cut_weights=[1, 2, 1], rho_full=Fraction(1, 5))
model = build_chain(rho)
print(f"{model.n_states} partitions reachable")
for i, state in enumerate(model.states):
    row = ", ".join(f"{format_partition(model.states[j])}: {w}" for j, w in model.transitions[i].items())
    print(f"  {format_partition(state):<22} -> {row}")

# %%
analysis = analyze(model)
print("decay rate:", analysis.eta, "  slowest competing self-loop:", analysis.beta0)
print("slowest blocks:", [format_subset(k) for k in analysis.e_sets])
print("limit constant:", analysis.limit_constant)

# %% [markdown]
# The scaled survival probability settles on the limit constant. The
# approach is geometric with ratio beta0/eta, which here is 4/5, so it takes
# a while.

# %%
geo = geometric_limit_check(model, analysis, n=60)
for k in (1, 5, 10, 20, 40, 60):
    print(f"n={k:>2}  scaled survival {float(geo.scaled_survival[k]):.10f}   gap {geo.deviation[k]:.2e}")

# %% [markdown]
# Conditioned on survival, the chain concentrates on partitions whose only
# non-atom block is one of the slowest blocks.

# %%
for state, weight in analysis.quasi_limit.items():
    print(f"{format_partition(state):<22} {weight}")
n = 40
alive = survival_profile(model, n).state_occupancy[n]
total = sum(w for s, w in alive.items() if s != model.absorbing)
print("at n=40:", {format_partition(s): round(float(w / total), 6) for s, w in alive.items() if s != model.absorbing})

# %% [markdown]
# The chain conditioned never to be absorbed is again a Markov chain.

# %%
for state, row in q_process(model, analysis).q_matrix.items():
    print(f"{format_partition(state):<22}", {format_partition(t): str(w) for t, w in row.items()})
