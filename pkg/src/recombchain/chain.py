"""The absorbing Markov chain on partitions and its exact absorption laws.

From a partition, every block independently draws from its dyadic kernel,
either staying whole or splitting in two; the product of the drawn weights
is the transition probability. States are discovered breadth-first from the
one-block partition and the atom partition is absorbing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Mapping

from .errors import CheckReport, InvalidInputError, NotApplicableError, ResourceLimitError
from .rho import CoefficientTable, RecombDistribution, coefficient_table, dyadic_kernel
from .subsets import Partition, canonical, format_partition, is_finer, partition_key

MAX_STATES = 10**6

Vector = dict  # state index -> Fraction, zero entries absent


@dataclass
class ChainModel:
    table: CoefficientTable
    states: tuple[Partition, ...]
    transitions: tuple[dict[int, Fraction], ...]
    absorbing_index: int
    initial_index: int = 0
    index: dict[Partition, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {s: i for i, s in enumerate(self.states)}

    @property
    def rho(self) -> RecombDistribution:
        return self.table.rho

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def absorbing(self) -> Partition:
        return self.states[self.absorbing_index]

    def p(self, a: Partition, b: Partition) -> Fraction:
        return self.transitions[self.index[a]].get(self.index[b], Fraction(0))

    def self_loop(self, i: int) -> Fraction:
        return self.transitions[i].get(i, Fraction(0))

    def transient(self) -> list[int]:
        return [i for i in range(self.n_states) if i != self.absorbing_index]

    def lookup(self, state: Partition) -> int:
        try:
            return self.index[canonical(state)]
        except KeyError:
            raise InvalidInputError(f"{format_partition(state)} is not a state of the chain",
                                    "unknown-state") from None

    def topological_order(self) -> list[int]:
        """States ordered so that every state comes after all its successors.

        Self-loops are ignored; a cycle through distinct states raises
        :class:`graphlib.CycleError`.
        """
        graph = {i: [j for j in row if j != i] for i, row in enumerate(self.transitions)}
        return list(TopologicalSorter(graph).static_order())

    def depth(self) -> int:
        """Longest self-loop-free path from the initial state."""
        longest: dict[int, int] = {}
        for i in self.topological_order():
            succ = [longest[j] + 1 for j in self.transitions[i] if j != i]
            longest[i] = max(succ, default=0)
        return longest[self.initial_index]


def successors(table: CoefficientTable, state: Partition) -> dict[Partition, Fraction]:
    """One-step law from ``state``: per-block kernel draws multiplied out."""
    kernels = [dyadic_kernel(table, block).items() for block in state]
    out: dict[Partition, Fraction] = {}
    for combo in itertools.product(*kernels):
        w = Fraction(1)
        blocks: list[int] = []
        for choice, cw in combo:
            w *= cw
            blocks.extend(choice)
        nxt = canonical(blocks)
        out[nxt] = out.get(nxt, Fraction(0)) + w
    return out


def build_chain(rho: RecombDistribution, max_states: int = MAX_STATES,
                table: CoefficientTable | None = None) -> ChainModel:
    rho.site_set.require_enumerable()
    table = coefficient_table(rho) if table is None else table
    start: Partition = (rho.full,)
    states: list[Partition] = [start]
    index = {start: 0}
    rows: list[dict[int, Fraction]] = []
    pos = 0
    while pos < len(states):
        law = successors(table, states[pos])
        fresh = sorted((s for s in law if s not in index), key=partition_key)
        for s in fresh:
            index[s] = len(states)
            states.append(s)
            if len(states) > max_states:
                raise ResourceLimitError(f"state space exceeds {max_states} partitions")
        rows.append({index[s]: w for s, w in sorted(law.items(), key=lambda kv: index[kv[0]])})
        pos += 1
    absorbing = index.get(table.atom_partition)
    if absorbing is None:
        raise InvalidInputError("atom partition not reachable", "unreachable-atoms")
    return ChainModel(table, tuple(states), tuple(rows), absorbing)


def check_chain(model: ChainModel) -> CheckReport:
    """Row sums, absorption, acyclicity, refinement and positive exit rates."""
    report = CheckReport("chain structure")
    for i, row in enumerate(model.transitions):
        label = format_partition(model.states[i])
        report.expect(sum(row.values(), Fraction(0)) == 1, f"row {label} does not sum to 1")
        report.expect(all(w > 0 for w in row.values()), f"row {label} stores a non-positive entry")
        for j in row:
            report.expect(is_finer(model.states[j], model.states[i]),
                          f"successor of {label} does not refine it")
        if i != model.absorbing_index:
            report.expect(model.self_loop(i) < 1, f"transient state {label} never leaves")
    report.expect(model.self_loop(model.absorbing_index) == 1, "atom partition is not absorbing")
    try:
        model.topological_order()
    except CycleError:
        report.failures.append("transition graph has a cycle through distinct states")
    return report


def step(model: ChainModel, v: Mapping[int, Fraction]) -> Vector:
    """Row vector times P."""
    out: Vector = {}
    for i, mass in v.items():
        for j, w in model.transitions[i].items():
            out[j] = out.get(j, Fraction(0)) + mass * w
    return out


def distributions(model: ChainModel, n: int, start: int | None = None) -> list[Vector]:
    """Laws of Y_0..Y_n as sparse vectors."""
    v: Vector = {model.initial_index if start is None else start: Fraction(1)}
    out = [v]
    for _ in range(n):
        v = step(model, v)
        out.append(v)
    return out


def q_by_chain(model: ChainModel, n: int) -> dict[Partition, Fraction]:
    v = distributions(model, n)[-1]
    return dict(sorted((model.states[i], w) for i, w in v.items() if w))


@dataclass
class AbsorptionProfile:
    survival: list[Fraction]
    state_occupancy: list[dict[Partition, Fraction]]


def survival_from(model: ChainModel, start: int, n: int) -> list[Fraction]:
    """P_start(zeta > k) for k = 0..n."""
    a = model.absorbing_index
    return [sum((w for i, w in v.items() if i != a), Fraction(0)) for v in distributions(model, n, start)]


def survival_profile(model: ChainModel, n: int) -> AbsorptionProfile:
    if n < 0:
        raise InvalidInputError("horizon must be non-negative", "bad-horizon")
    laws = distributions(model, n)
    a = model.absorbing_index
    survival = [sum((w for i, w in v.items() if i != a), Fraction(0)) for v in laws]
    occupancy = [dict(sorted((model.states[i], w) for i, w in v.items() if w)) for v in laws]
    return AbsorptionProfile(survival, occupancy)


def hitting_transform(model: ChainModel, targets: Iterable[int], rate: Fraction = Fraction(1),
                      ) -> dict[int, Fraction]:
    """``E_s(rate^-zeta_B ; zeta_B < inf)`` for every state s.

    Solved exactly on the transition DAG, successors first: 1 on the
    targets and ``sum_{s' != s} P[s,s'] h[s'] / (rate - P[s,s])`` elsewhere.
    With ``rate = 1`` this is the hitting probability of the target set.
    States that cannot reach a target get 0 without any division.
    """
    targets = set(targets)
    h: dict[int, Fraction] = {}
    for i in model.topological_order():
        if i in targets:
            h[i] = Fraction(1)
            continue
        s = sum((w * h[j] for j, w in model.transitions[i].items() if j != i), Fraction(0))
        if not s:
            h[i] = Fraction(0)
            continue
        loop = model.self_loop(i)
        if loop >= rate:
            raise NotApplicableError(
                f"state {format_partition(model.states[i])} holds with probability {loop} >= {rate}; "
                "the transform diverges"
            )
        h[i] = s / (rate - loop)
    return h


@dataclass
class HittingDistribution:
    """Law of zeta_B up to a horizon.

    ``by_time[n] = P(zeta_B = n)``; ``never = P(zeta_B = inf)``, solved
    exactly; ``pending = P(horizon < zeta_B < inf)``, so the three parts
    sum to one.
    """

    by_time: list[Fraction]
    never: Fraction
    pending: Fraction


def hitting_distribution(model: ChainModel, targets: Iterable[Partition], n: int,
                         start: Partition | None = None) -> HittingDistribution:
    idx = {model.lookup(t) for t in targets}
    first = model.initial_index if start is None else model.lookup(start)
    v: Vector = {first: Fraction(1)}
    by_time = []
    for k in range(n + 1):
        hit = sum((w for i, w in v.items() if i in idx), Fraction(0))
        by_time.append(hit)
        v = {i: w for i, w in v.items() if i not in idx and i != model.absorbing_index}
        if k < n:
            v = step(model, v)
    reach = hitting_transform(model, idx)
    pending = sum((w * reach[i] for i, w in v.items()), Fraction(0))
    return HittingDistribution(by_time, 1 - reach[first], pending)
