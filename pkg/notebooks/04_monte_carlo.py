# %% [markdown]
# # Simulating the breakup directly
#
# Every block flips its own keep-or-cut coin each generation. Simulating that
# gives an independent check on the exact chain, and it keeps working when
# there are far too many partitions to enumerate.

# %%
import numpy as np

from recombchain.chain import build_chain, survival_profile
from recombchain.instances import single_crossover, three_site_example
from recombchain.mc import SimConfig, compare_with_exact, simulate

rho = three_site_example()
model = build_chain(rho)
exact = survival_profile(model, 10).survival

for mode in ("chain", "kernel"):
    sim = simulate(rho, SimConfig(seed=1, n_trajectories=100_000, horizon=10, mode=mode), model)
    emp = np.array(sim.survival) / 100_000
    print(mode, np.round(emp[:6], 4), " exact:", [str(p) for p in exact[:6]])
    band = compare_with_exact(sim, model)
    print(f"   {band.checked} cells, {len(band.failures)} outside 4 sigma")

# %% [markdown]
# The draws depend only on (seed, trajectory, step, block), so a trajectory
# does not change when the batch around it changes.

# %%
small = simulate(rho, SimConfig(3, 10, 6, "kernel", record_paths=True))
large = simulate(rho, SimConfig(3, 1000, 6, "kernel", record_paths=True))
print("first ten paths identical:", small.paths == large.paths[:10])

# %% [markdown]
# Forty sites with a single crossover: exact enumeration is out of reach,
# but per-block draws are cheap.

# %%
big = single_crossover(40)
sim = simulate(big, SimConfig(7, 2_000, 40, "kernel"))
blocks = [sum(len(s) * c for s, c in occ.items()) / 2_000 for occ in sim.occupancy]
print("mean number of blocks at n = 0, 10, 20, 40:", [round(blocks[k], 2) for k in (0, 10, 20, 40)])
print("still linked somewhere at n=40:", sim.survival[40] / 2_000)
