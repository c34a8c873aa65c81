"""Exact probability tables on products of finite alphabets, and Xi itself.

A :class:`DenseMeasure` on a set J of sites stores an object-dtype numpy
array of :class:`~fractions.Fraction` with one axis per site of J, sites in
ascending order, so ``table.ravel()`` is the row-major configuration list.
The measure on the empty set is the 0-d array holding 1.

Xi is evaluated here straight from its definition, term by term over the
support of rho; nothing in this module uses trees or the chain.
"""

from __future__ import annotations

from fractions import Fraction
from math import prod
from typing import Iterable, Sequence

import numpy as np

from .errors import CheckReport, InvalidInputError, ResourceLimitError
from .rho import CoefficientTable, RecombDistribution, as_rational
from .subsets import Partition, format_subset, is_finer, sites_of, submasks

MAX_DENSE = 2**20


class Alphabet:
    """Per-site alphabet sizes ``|A_i|``; every size is at least 2."""

    def __init__(self, sizes: Sequence[int], max_dense: int = MAX_DENSE):
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) < 2:
            raise InvalidInputError("need at least two sites", "bad-alphabet")
        if any(s < 2 for s in sizes):
            raise InvalidInputError(f"alphabet sizes must be >= 2, got {list(sizes)}", "bad-alphabet")
        if prod(sizes) > max_dense:
            raise ResourceLimitError(
                f"dense table of {prod(sizes)} configurations exceeds the limit {max_dense}"
            )
        self.sizes = sizes

    @property
    def n_sites(self) -> int:
        return len(self.sizes)

    @property
    def full(self) -> int:
        return (1 << len(self.sizes)) - 1

    def shape(self, support: int) -> tuple[int, ...]:
        return tuple(self.sizes[i - 1] for i in sites_of(support))

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self.sizes == other.sizes

    def __repr__(self):
        return f"Alphabet({list(self.sizes)})"


class DenseMeasure:
    __slots__ = ("alphabet", "support", "table")

    def __init__(self, alphabet: Alphabet, support: int, table: np.ndarray):
        self.alphabet = alphabet
        self.support = support
        self.table = table

    @property
    def n_configurations(self) -> int:
        return self.table.size

    def flat(self) -> list[Fraction]:
        return list(self.table.ravel())

    def total(self) -> Fraction:
        return sum(self.table.ravel(), Fraction(0))

    def __eq__(self, other):
        if not isinstance(other, DenseMeasure):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and self.support == other.support
            and self.table.shape == other.table.shape
            and bool(np.all(self.table == other.table))
        )

    def __repr__(self):
        return f"DenseMeasure(support={format_subset(self.support)}, n={self.table.size})"


def _fractions(values: Iterable) -> np.ndarray:
    return np.array([as_rational(v) for v in values], dtype=object)


def unit(alphabet: Alphabet) -> DenseMeasure:
    """The measure on the empty set, identity element of the product."""
    return DenseMeasure(alphabet, 0, np.array(Fraction(1), dtype=object))


def dense_measure(alphabet: Alphabet, values: Sequence, support: int | None = None) -> DenseMeasure:
    """Measure from a row-major list of probabilities (ints, Fractions or ``"p/q"``)."""
    support = alphabet.full if support is None else support
    shape = alphabet.shape(support)
    table = _fractions(values)
    if table.size != prod(shape):
        raise InvalidInputError(
            f"expected {prod(shape)} probabilities for {format_subset(support)}, got {table.size}",
            "bad-measure-size",
        )
    if any(v < 0 for v in table):
        raise InvalidInputError("measure has a negative entry", "negative-probability")
    if sum(table, Fraction(0)) != 1:
        raise InvalidInputError("measure does not sum to 1", "not-normalized")
    return DenseMeasure(alphabet, support, table.reshape(shape))


def product_spec(alphabet: Alphabet, marginals: Sequence[Sequence]) -> DenseMeasure:
    """Product of one-site marginal vectors, expanded to a dense table."""
    if len(marginals) != alphabet.n_sites:
        raise InvalidInputError("need one marginal per site", "bad-measure-size")
    out = unit(alphabet)
    for i, vec in enumerate(marginals):
        out = product(out, dense_measure(alphabet, vec, support=1 << i))
    return out


def marginal(mu: DenseMeasure, k: int) -> DenseMeasure:
    """Sum out every coordinate of ``mu`` outside ``k``."""
    if k & ~mu.support:
        raise InvalidInputError(
            f"{format_subset(k)} is not inside the support {format_subset(mu.support)}",
            "bad-marginal",
        )
    if k == mu.support:
        return mu
    sites = sites_of(mu.support)
    axes = tuple(pos for pos, i in enumerate(sites) if not (k >> (i - 1)) & 1)
    table = np.asarray(mu.table.sum(axis=axes), dtype=object)
    if k == 0:
        table = np.array(Fraction(table.item()), dtype=object)
    return DenseMeasure(mu.alphabet, k, table)


def product(a: DenseMeasure, b: DenseMeasure) -> DenseMeasure:
    """Independent combination of measures on disjoint site sets."""
    if a.support & b.support:
        raise InvalidInputError("product of measures with overlapping supports", "overlapping-supports")
    if b.support == 0:
        return a
    if a.support == 0:
        return b
    outer = np.multiply.outer(a.table, b.table)
    order = sites_of(a.support) + sites_of(b.support)
    perm = sorted(range(len(order)), key=order.__getitem__)
    return DenseMeasure(a.alphabet, a.support | b.support, np.ascontiguousarray(outer.transpose(perm)))


def product_over_partition(mu: DenseMeasure, delta: Partition) -> DenseMeasure:
    out = unit(mu.alphabet)
    for block in delta:
        out = product(out, marginal(mu, block))
    return out


def _require_full(rho: RecombDistribution, mu: DenseMeasure) -> None:
    if mu.support != mu.alphabet.full:
        raise InvalidInputError("Xi acts on measures over all sites", "bad-support")
    if rho.site_set.n_sites != mu.alphabet.n_sites:
        raise InvalidInputError("rho and mu disagree on the number of sites", "site-mismatch")


def xi_apply(rho: RecombDistribution, mu: DenseMeasure) -> DenseMeasure:
    _require_full(rho, mu)
    full = mu.support
    acc = None
    for j, w in rho.weights.items():
        term = product(marginal(mu, j), marginal(mu, full ^ j)).table * w
        acc = term if acc is None else acc + term
    return DenseMeasure(mu.alphabet, full, acc)


def xi_iterate(rho: RecombDistribution, mu: DenseMeasure, n: int) -> DenseMeasure:
    if n < 0:
        raise InvalidInputError("number of iterations must be non-negative", "bad-horizon")
    for _ in range(n):
        mu = xi_apply(rho, mu)
    return mu


def mixture(weights: Iterable[tuple[Fraction, DenseMeasure]]) -> DenseMeasure:
    acc = None
    for w, m in weights:
        term = m.table * w
        acc = term if acc is None else acc + term
        last = m
    if acc is None:
        raise InvalidInputError("empty mixture", "empty-mixture")
    return DenseMeasure(last.alphabet, last.support, acc)


def check_marginal_preservation(
    table: CoefficientTable, mu: DenseMeasure, refinements: Iterable[Partition] = ()
) -> CheckReport:
    """Marginals inside an atom survive Xi; products over finer partitions are fixed.

    Every nonempty subset of every atom is tested. The fixed-point half runs
    on the atom partition, the singletons and any extra ``refinements``.
    """
    rho = table.rho
    report = CheckReport("marginal preservation")
    image = xi_apply(rho, mu)
    for atom in table.atom_partition:
        for m in submasks(atom):
            report.expect(marginal(image, m) == marginal(mu, m),
                          f"marginal on {format_subset(m)} changed under Xi")
    singletons = rho.site_set.singletons()
    candidates = [table.atom_partition, singletons, *refinements]
    for delta in candidates:
        if not is_finer(delta, table.atom_partition):
            report.notes.append(f"skipped partition not finer than the atoms: {delta}")
            continue
        fixed = product_over_partition(mu, delta)
        report.expect(xi_apply(rho, fixed) == fixed, f"product over {delta} is not fixed by Xi")
    return report


def check_closure_marginals(table: CoefficientTable, mu: DenseMeasure) -> CheckReport:
    """Marginal of Xi[mu] on each closure set K from the coefficients of K."""
    rho = table.rho
    report = CheckReport("closure-set marginals")
    image = xi_apply(rho, mu)
    for k in sorted(table.closure_sets):
        parts = []
        for m, w in table.row(k).items():
            if m == k:
                parts.append((w, marginal(mu, k)))
            else:
                parts.append((w, product(marginal(mu, m), marginal(mu, k ^ m))))
        report.expect(mixture(parts) == marginal(image, k),
                      f"marginal of Xi[mu] on {format_subset(k)} disagrees with the coefficients")
    return report
