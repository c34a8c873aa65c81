"""Ready-made recombination distributions and random test instances."""

from __future__ import annotations

import random
from fractions import Fraction

from .measures import Alphabet, DenseMeasure, dense_measure
from .rho import RecombDistribution, validate
from .subsets import SiteSet


def three_site_example() -> RecombDistribution:
    """Cuts after site 1 and after site 2, each side weighted 1/4."""
    s = SiteSet(3)
    q = Fraction(1, 4)
    return validate({s.subset([1]): q, s.subset([2, 3]): q, s.subset([1, 2]): q, s.subset([3]): q}, s)


def two_site_lazy() -> RecombDistribution:
    """Two sites, no recombination half of the time."""
    s = SiteSet(2)
    return validate({s.full: Fraction(1, 2), s.subset([1]): Fraction(1, 4), s.subset([2]): Fraction(1, 4)}, s)


def single_crossover(n_sites: int, cut_weights=None, rho_full=Fraction(0)) -> RecombDistribution:
    """One crossover between consecutive sites, split evenly over both orientations.

    ``cut_weights[j]`` weights the cut after site ``j + 1``; uniform by default.
    """
    s = SiteSet(n_sites)
    cuts = n_sites - 1
    raw = [Fraction(1)] * cuts if cut_weights is None else [Fraction(w) for w in cut_weights]
    total = sum(raw)
    scale = (1 - Fraction(rho_full)) / total
    weights = {}
    for j, w in enumerate(raw, start=1):
        left = s.subset(range(1, j + 1))
        weights[left] = w * scale / 2
        weights[s.full ^ left] = w * scale / 2
    if rho_full:
        weights[s.full] = Fraction(rho_full)
    return validate(weights, s)


def random_symmetric_rho(rng: random.Random, n_sites: int, max_support: int = 6,
                         max_weight: int = 5) -> RecombDistribution:
    """Random symmetric distribution with at most ``max_support`` support sets.

    Draws one to three complementary pairs with integer weights in
    ``1..max_weight``, and puts weight on the full set a quarter of the time
    when the support size allows.
    """
    s = SiteSet(n_sites)
    full = s.full
    pairs = [j for j in range(1, full) if j & 1]  # one representative per pair: contains site 1
    k = rng.randint(1, min(max_support // 2, len(pairs)))
    weights = {}
    for j in rng.sample(pairs, k):
        w = Fraction(rng.randint(1, max_weight))
        weights[j] = w
        weights[full ^ j] = w
    if 2 * k + 1 <= max_support and rng.random() < 0.25:
        weights[full] = Fraction(rng.randint(1, 3))
    total = sum(weights.values())
    return validate({j: w / total for j, w in weights.items()}, s)


def random_measure(rng: random.Random, alphabet: Alphabet, max_weight: int = 9) -> DenseMeasure:
    n = 1
    for size in alphabet.sizes:
        n *= size
    raw = [rng.randint(1, max_weight) for _ in range(n)]
    total = sum(raw)
    return dense_measure(alphabet, [Fraction(r, total) for r in raw])


def random_instances(count: int, seed: int, sites=(2, 3, 4, 5)):
    """``count`` pairs ``(rho, mu)`` on binary alphabets."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        n = rng.choice(sites)
        rho = random_symmetric_rho(rng, n)
        mu = random_measure(rng, Alphabet([2] * n))
        out.append((rho, mu))
    return out
