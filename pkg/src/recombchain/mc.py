"""Monte Carlo trajectories of the partition chain.

Two samplers share one random stream. ``"chain"`` mode draws the successor
state from the enumerated transition rows. ``"kernel"`` mode lets every
block draw its own keep-or-split choice from its dyadic kernel, so it never
enumerates states and works up to 64 sites. Every uniform is a pure
function of ``(seed, trajectory, step, block)``, so results do not depend
on batching or on the order trajectories are processed in. The block key
is 0 in chain mode (one draw per step) and the block's lowest site in
kernel mode.

Probabilities become 63-bit thresholds: the cumulative law is scaled by
2^63 and rounded half-to-even, and a draw ``u`` in ``[0, 2^63)`` selects the
first option whose threshold exceeds ``u``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .chain import ChainModel, build_chain, survival_profile
from .errors import CheckReport, InvalidInputError, ResourceLimitError
from .rho import RecombDistribution, kernel_for
from .subsets import MAX_ENUMERATION_SITES, Partition, canonical

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
SCALE = 1 << 63

MAX_TRAJECTORIES = 10**7


def _mix(x: int) -> int:
    x = (x ^ (x >> 30)) * _M1 & _MASK
    x = (x ^ (x >> 27)) * _M2 & _MASK
    return x ^ (x >> 31)


def counter_draw(seed: int, trajectory: int, step: int, block: int) -> int:
    """63-bit uniform integer for one ``(trajectory, step, block)`` cell."""
    h = _mix((seed + _GAMMA) & _MASK)
    for word in (trajectory, step, block):
        h = _mix(((h ^ word) + _GAMMA) & _MASK)
    return h >> 1


def _mix_np(x: np.ndarray) -> np.ndarray:
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_M1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_M2)
    return x ^ (x >> np.uint64(31))


def counter_draws(seed: int, trajectories: np.ndarray, step: int, block: int) -> np.ndarray:
    """Vectorised :func:`counter_draw` over an array of trajectory ids."""
    gamma = np.uint64(_GAMMA)
    with np.errstate(over="ignore"):
        h = np.uint64(_mix((seed + _GAMMA) & _MASK))
        h = _mix_np((h ^ trajectories.astype(np.uint64)) + gamma)
        h = _mix_np((h ^ np.uint64(step & _MASK)) + gamma)
        h = _mix_np((h ^ np.uint64(block & _MASK)) + gamma)
    return h >> np.uint64(1)


def thresholds(probabilities: Sequence[Fraction]) -> np.ndarray:
    """Cumulative 63-bit thresholds; the last one is exactly 2^63."""
    out = []
    acc = Fraction(0)
    for p in probabilities:
        acc += p
        out.append(round(acc * SCALE))
    if out[-1] != SCALE:
        raise InvalidInputError("probabilities do not sum to 1", "not-normalized")
    return np.array(out, dtype=np.uint64)


def pick(thr: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.searchsorted(thr, u, side="right")


@dataclass
class SimConfig:
    seed: int
    n_trajectories: int
    horizon: int
    mode: str = "chain"
    record_paths: bool = False

    def __post_init__(self):
        if self.n_trajectories < 1 or self.horizon < 1:
            raise InvalidInputError("need at least one trajectory and a horizon of at least 1",
                                    "bad-sim-config")
        if self.mode not in ("chain", "kernel"):
            raise InvalidInputError(f"unknown simulation mode {self.mode!r}", "bad-sim-config")
        if not 0 <= self.seed <= _MASK:
            raise InvalidInputError("seed must be a 64-bit unsigned integer", "bad-sim-config")
        if self.n_trajectories > MAX_TRAJECTORIES:
            raise ResourceLimitError(f"more than {MAX_TRAJECTORIES} trajectories requested")


@dataclass
class SimulationReport:
    config: SimConfig
    occupancy: list[dict[Partition, int]]
    survival: list[int]
    absorption_times: dict[int, int]
    censored: int
    paths: list[list[Partition]] | None = field(default=None, repr=False)

    def frequencies(self, n: int) -> dict[Partition, float]:
        total = self.config.n_trajectories
        return {s: c / total for s, c in self.occupancy[n].items()}


def _tally(ids: np.ndarray, states: list[Partition]) -> dict[Partition, int]:
    values, counts = np.unique(ids, return_counts=True)
    return dict(sorted((states[v], int(c)) for v, c in zip(values, counts)))


def _simulate_chain(model: ChainModel, cfg: SimConfig):
    rows = []
    for row in model.transitions:
        targets = np.array(list(row), dtype=np.int64)
        rows.append((targets, thresholds(list(row.values()))))
    ids = np.full(cfg.n_trajectories, model.initial_index, dtype=np.int64)
    history = [ids.copy()]
    for n in range(1, cfg.horizon + 1):
        nxt = ids.copy()
        for s in np.unique(ids):
            if s == model.absorbing_index:
                continue
            idx = np.flatnonzero(ids == s)
            targets, thr = rows[s]
            nxt[idx] = targets[pick(thr, counter_draws(cfg.seed, idx, n, 0))]
        ids = nxt
        history.append(ids.copy())
    absorbed = [s == model.absorbing_index for s in range(model.n_states)]
    return list(model.states), history, absorbed


def _lowest_site(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def _simulate_kernel(rho: RecombDistribution, cfg: SimConfig):
    """Per-block draws, vectorised over every (trajectory, block) pair holding the same block.

    A block's draw is keyed by its lowest site, which is intrinsic to the
    block, so batching never changes a trajectory.
    """
    masks: list[int] = []
    block_ids: dict[int, int] = {}
    outcomes: list[list[tuple[int, ...]]] = []
    cuts: list[np.ndarray] = []

    def block_id(mask: int) -> int:
        if mask not in block_ids:
            law = kernel_for(rho, mask)
            block_ids[mask] = len(masks)
            masks.append(mask)
            outcomes.append(list(law))
            cuts.append(thresholds(list(law.values())))
        return block_ids[mask]

    states: list[Partition] = []
    state_ids: dict[Partition, int] = {}
    absorbed: list[bool] = []

    def state_id(state: Partition) -> int:
        if state not in state_ids:
            state_ids[state] = len(states)
            states.append(state)
            absorbed.append(all(outcomes[block_id(b)] == [(b,)] for b in state))
        return state_ids[state]

    n = cfg.n_trajectories
    everyone = np.arange(n, dtype=np.int64)

    def partitions_of(traj: np.ndarray, blk: np.ndarray) -> np.ndarray:
        values = np.array(masks, dtype=np.uint64)[blk]
        order = np.lexsort((values, traj))
        traj, values = traj[order], values[order]
        rank = np.arange(traj.size) - np.searchsorted(traj, traj)
        table = np.zeros((n, int(rank.max()) + 1), dtype=np.uint64)
        table[traj, rank] = values
        rows, inverse = np.unique(table, axis=0, return_inverse=True)
        ids = np.array([state_id(canonical(int(m) for m in row if m)) for row in rows], dtype=np.int64)
        return ids[inverse.reshape(-1)]

    traj = everyone.copy()
    blk = np.full(n, block_id(rho.full), dtype=np.int64)
    history = [partitions_of(traj, blk)]
    for step in range(1, cfg.horizon + 1):
        order = np.argsort(blk, kind="stable")
        groups, starts = np.unique(blk[order], return_index=True)
        bounds = list(starts[1:]) + [order.size]
        new_traj, new_blk = [], []
        for u, lo, hi in zip(groups, starts, bounds):
            members = traj[order[lo:hi]]
            options = outcomes[u]
            if len(options) == 1 and len(options[0]) == 1:
                new_traj.append(members)
                new_blk.append(np.full(members.size, u, dtype=np.int64))
                continue
            u_draw = counter_draws(cfg.seed, members, step, _lowest_site(masks[u]))
            choice = pick(cuts[u], u_draw)
            for c, outcome in enumerate(options):
                chosen = members[choice == c]
                if not chosen.size:
                    continue
                for child in outcome:
                    new_traj.append(chosen)
                    new_blk.append(np.full(chosen.size, block_id(child), dtype=np.int64))
        traj, blk = np.concatenate(new_traj), np.concatenate(new_blk)
        history.append(partitions_of(traj, blk))
    return states, history, absorbed


def simulate(rho: RecombDistribution, cfg: SimConfig, model: ChainModel | None = None) -> SimulationReport:
    if cfg.mode == "chain":
        if rho.site_set.n_sites > MAX_ENUMERATION_SITES:
            raise ResourceLimitError("chain mode enumerates states; use kernel mode beyond 16 sites")
        model = build_chain(rho) if model is None else model
        states, history, absorbed = _simulate_chain(model, cfg)
    else:
        states, history, absorbed = _simulate_kernel(rho, cfg)
    occupancy = [_tally(ids, states) for ids in history]
    dead = np.array(absorbed, dtype=bool)
    survival = [int(np.count_nonzero(~dead[ids])) for ids in history]
    times: Counter = Counter()
    alive = np.ones(cfg.n_trajectories, dtype=bool)
    for n, ids in enumerate(history):
        hit = alive & dead[ids]
        if hit.any():
            times[n] += int(np.count_nonzero(hit))
        alive &= ~dead[ids]
    paths = None
    if cfg.record_paths:
        stacked = np.stack(history, axis=1)
        paths = [[states[i] for i in row] for row in stacked]
    return SimulationReport(cfg, occupancy, survival, dict(sorted(times.items())),
                            int(np.count_nonzero(alive)), paths)


def compare_with_exact(sim: SimulationReport, model: ChainModel, n_sigma: float = 4.0,
                       horizon: int | None = None) -> CheckReport:
    """Every empirical occupancy and survival frequency within ``n_sigma`` binomial sd.

    Cells with exact probability 0 or 1 must match exactly.
    """
    horizon = sim.config.horizon if horizon is None else horizon
    total = sim.config.n_trajectories
    exact = survival_profile(model, horizon)
    report = CheckReport(f"Monte Carlo within {n_sigma:g} sigma")

    def within(p: Fraction, count: int, label: str):
        emp = count / total
        sd = math.sqrt(float(p * (1 - p)) / total)
        report.expect(abs(emp - float(p)) <= n_sigma * sd,
                      f"{label}: empirical {emp:.5f} vs exact {float(p):.5f} (sd {sd:.2e})")

    for n in range(horizon + 1):
        q = exact.state_occupancy[n]
        seen = sim.occupancy[n]
        for s in set(q) | set(seen):
            within(q.get(s, Fraction(0)), seen.get(s, 0), f"P(Y_{n} = {s})")
        within(exact.survival[n], sim.survival[n], f"P(zeta > {n})")
    return report
