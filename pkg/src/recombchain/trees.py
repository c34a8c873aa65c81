"""Dyadic trees rooted at the full site set, and q^n by direct enumeration.

A tree of length n is recorded by its levels: the leaf-set after each of the
n steps. Each leaf of a level either stays whole or is cut by some support
set into two nonempty parts. The weight of a tree multiplies, over every
leaf of every level, the total coefficient of the children that leaf
produced: ``rho^K_K`` for a kept leaf and ``rho^K_M + rho^K_{K-M}`` for a
split. Per-leaf weights are recomputed here from the raw support by brute
force, so this module shares no code path with the chain.

This is an oracle: the number of trees grows quickly with n and |I|.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .errors import CheckReport, InvalidInputError, ResourceLimitError
from .measures import DenseMeasure, marginal, mixture, product, product_over_partition, unit, xi_iterate
from .rho import RecombDistribution
from .subsets import Partition, canonical, format_partition

MAX_TREE_LENGTH = 6
MAX_TREE_SITES = 5


@dataclass(frozen=True)
class DyadicTree:
    levels: tuple[Partition, ...]

    @property
    def length(self) -> int:
        return len(self.levels) - 1

    @property
    def leaves(self) -> Partition:
        return self.levels[-1]

    def __str__(self):
        return " -> ".join(format_partition(p) for p in self.levels)


def _leaf_options(rho: RecombDistribution, leaf: int) -> list[tuple[tuple[int, ...], Fraction]]:
    """One-step subtrees of ``leaf`` with their weight, zero weights pruned."""
    def coeff(child: int) -> Fraction:
        if child == leaf:
            return sum((w for j, w in rho.weights.items() if j & leaf in (0, leaf)), Fraction(0))
        return sum((w for j, w in rho.weights.items() if j & leaf == child), Fraction(0))

    options = []
    stay = coeff(leaf)
    if stay:
        options.append(((leaf,), stay))
    splits = set()
    for j in rho.weights:
        m = j & leaf
        if m not in (0, leaf):
            splits.add(canonical((m, leaf ^ m)))
    for pair in sorted(splits):
        options.append((pair, coeff(pair[0]) + coeff(pair[1])))
    return options


def enumerate_trees(
    rho: RecombDistribution,
    n: int,
    max_length: int = MAX_TREE_LENGTH,
    max_sites: int = MAX_TREE_SITES,
) -> Iterator[tuple[DyadicTree, Fraction]]:
    """Yield every positive-weight tree of length ``n`` with its weight."""
    if n < 0:
        raise InvalidInputError("tree length must be non-negative", "bad-horizon")
    if n > max_length or rho.site_set.n_sites > max_sites:
        raise ResourceLimitError(
            f"tree enumeration is capped at length {max_length} on {max_sites} sites"
        )
    memo: dict[int, list] = {}

    def options(leaf):
        if leaf not in memo:
            memo[leaf] = _leaf_options(rho, leaf)
        return memo[leaf]

    def grow(levels: list[Partition], weight: Fraction):
        if len(levels) == n + 1:
            yield DyadicTree(tuple(levels)), weight
            return
        current = levels[-1]
        for combo in itertools.product(*(options(leaf) for leaf in current)):
            w = weight
            blocks: list[int] = []
            for children, cw in combo:
                w *= cw
                blocks.extend(children)
            levels.append(canonical(blocks))
            yield from grow(levels, w)
            levels.pop()

    yield from grow([(rho.full,)], Fraction(1))


def q_by_trees(rho: RecombDistribution, n: int, **limits) -> dict[Partition, Fraction]:
    """Total tree weight per leaf-set; a probability vector over partitions."""
    q: dict[Partition, Fraction] = {}
    for tree, w in enumerate_trees(rho, n, **limits):
        q[tree.leaves] = q.get(tree.leaves, Fraction(0)) + w
    return dict(sorted(q.items()))


def decomposition(mu: DenseMeasure, q: dict[Partition, Fraction]) -> DenseMeasure:
    """Mixture of products of marginals, one term per partition."""
    return mixture((w, product_over_partition(mu, delta)) for delta, w in q.items())


def decompose_and_check(rho: RecombDistribution, mu: DenseMeasure, n: int) -> CheckReport:
    """Compare Xi^n[mu] by iteration with the tree decomposition, exactly."""
    report = CheckReport(f"tree decomposition, n={n}")
    q = q_by_trees(rho, n)
    report.expect(sum(q.values(), Fraction(0)) == 1, "tree weights do not sum to 1")
    iterated = xi_iterate(rho, mu, n)
    decomposed = decomposition(mu, q)
    report.expect(iterated == decomposed, "Xi^n[mu] differs from the tree decomposition")
    report.data.update(q=q, iterated=iterated, decomposed=decomposed)
    return report


def mid_expansion(rho: RecombDistribution, mu: DenseMeasure, n: int, j: int) -> DenseMeasure:
    """Expand j tree levels, then apply Xi^(n-j) to the leaf marginals."""
    if not 0 <= j <= n:
        raise InvalidInputError("need 0 <= j <= n", "bad-horizon")
    inner = xi_iterate(rho, mu, n - j)
    parts = []
    for tree, w in enumerate_trees(rho, j):
        term = unit(mu.alphabet)
        for leaf in tree.leaves:
            term = product(term, marginal(inner, leaf))
        parts.append((w, term))
    return mixture(parts)
