"""The recombination distribution and its coefficient calculus.

``rho`` maps each nonempty subset J of the sites to the probability that an
offspring inherits J from one parent and the complement from the other.
For a set K of the closure, the coefficient ``rho^K_M`` aggregates the weight
of every support set whose trace on K is M, with traces K and the empty set
both counted as "K stays whole".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from numbers import Rational
from typing import Mapping

from .errors import CheckReport, InvalidInputError
from .subsets import Partition, SiteSet, atoms, canonical, closure, format_subset

DyadicChoice = tuple  # (K,) to keep K whole, or (M, K - M) in canonical order


def as_rational(value) -> Fraction:
    """Exact rational from an int, a Fraction or a ``"p/q"`` string.

    Floats and decimal strings are refused: they are never exact inputs.
    """
    if isinstance(value, bool):
        raise InvalidInputError(f"not a rational: {value!r}", "bad-rational")
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if any(c in text for c in ".eE") or not text:
            raise InvalidInputError(
                f"rational strings must look like 'p/q', got {value!r}", "bad-rational"
            )
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInputError(f"cannot parse rational {value!r}", "bad-rational") from exc
    raise InvalidInputError(f"not an exact rational: {value!r}", "bad-rational")


@dataclass(frozen=True)
class RecombDistribution:
    site_set: SiteSet
    weights: Mapping[int, Fraction]

    @property
    def full(self) -> int:
        return self.site_set.full

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self.weights))

    @property
    def rho_full(self) -> Fraction:
        return self.weights.get(self.full, Fraction(0))

    @property
    def is_identity(self) -> bool:
        """True when all the mass sits on the full set, so Xi does nothing."""
        return self.rho_full == 1

    @property
    def is_symmetric(self) -> bool:
        full = self.full
        return all(
            self.weights.get(full ^ j, Fraction(0)) == w for j, w in self.weights.items() if j != full
        )

    def __getitem__(self, subset: int) -> Fraction:
        return self.weights.get(subset, Fraction(0))


def validate(raw: Mapping[int, object], site_set: SiteSet) -> RecombDistribution:
    """Check a raw ``{mask: weight}`` map and return it as a distribution.

    Zero weights are dropped. Raises :class:`InvalidInputError` with code
    ``nonzero-empty-set``, ``negative-weight`` or ``not-normalized``.
    """
    full = site_set.full
    weights: dict[int, Fraction] = {}
    for subset, value in raw.items():
        w = as_rational(value)
        if subset & ~full or subset < 0:
            raise InvalidInputError(f"subset mask {subset:#x} has sites outside 1..{site_set.n_sites}",
                                    "bad-site-index")
        if w < 0:
            raise InvalidInputError(f"negative weight {w} on {format_subset(subset)}", "negative-weight")
        if subset == 0:
            if w != 0:
                raise InvalidInputError("the empty set must carry zero weight", "nonzero-empty-set")
            continue
        if w:
            weights[subset] = weights.get(subset, Fraction(0)) + w
    total = sum(weights.values(), Fraction(0))
    if total != 1:
        raise InvalidInputError(f"weights sum to {total}, not 1", "not-normalized")
    return RecombDistribution(site_set, dict(sorted(weights.items())))


def symmetrize(rho: RecombDistribution) -> RecombDistribution:
    """Split each weight evenly between a set and its complement.

    Xi is unchanged because the two product terms coincide.
    """
    full = rho.full
    out: dict[int, Fraction] = {}
    for j, w in rho.weights.items():
        if j == full:
            out[j] = out.get(j, Fraction(0)) + w
            continue
        half = w / 2
        out[j] = out.get(j, Fraction(0)) + half
        out[full ^ j] = out.get(full ^ j, Fraction(0)) + half
    return RecombDistribution(rho.site_set, dict(sorted(out.items())))


def generating_family(rho: RecombDistribution) -> frozenset[int]:
    """Support plus complements plus the full set.

    Complements make the atoms well defined for asymmetric input; adding the
    full set puts the tree root in the closure without changing any atom.
    """
    full = rho.full
    fam = set(rho.weights)
    fam.update(full ^ j for j in rho.weights if j != full)
    fam.add(full)
    return frozenset(fam)


@dataclass
class CoefficientTable:
    rho: RecombDistribution
    entries: dict[tuple[int, int], Fraction]
    closure_sets: frozenset[int]
    atom_partition: Partition
    _kernels: dict[int, dict[DyadicChoice, Fraction]] = field(default_factory=dict, repr=False)

    def coefficient(self, k: int, m: int) -> Fraction:
        return self.entries.get((k, m), Fraction(0))

    def stay(self, k: int) -> Fraction:
        return self.entries.get((k, k), Fraction(0))

    def row(self, k: int) -> dict[int, Fraction]:
        return {m: w for (kk, m), w in self.entries.items() if kk == k}

    def is_atom(self, k: int) -> bool:
        return k in self._atom_set

    @cached_property
    def _atom_set(self) -> frozenset[int]:
        return frozenset(self.atom_partition)

    def non_atoms(self) -> list[int]:
        atom_set = self._atom_set
        return sorted(k for k in self.closure_sets if k not in atom_set)


def coefficient_table(rho: RecombDistribution) -> CoefficientTable:
    family = generating_family(rho)
    sets = closure(family)
    entries: dict[tuple[int, int], Fraction] = {}
    for k in sets:
        for j, w in rho.weights.items():
            m = j & k
            key = (k, k) if m in (0, k) else (k, m)
            entries[key] = entries.get(key, Fraction(0)) + w
    return CoefficientTable(rho, entries, sets, atoms(family))


def _choice_order(item):
    return (len(item[0]), item[0])


def kernel_for(rho: RecombDistribution, k: int) -> dict[DyadicChoice, Fraction]:
    """Dyadic kernel of block ``k`` computed straight from the support.

    Needs no closure, so it serves Monte Carlo runs on large site sets.
    """
    out: dict[DyadicChoice, Fraction] = {}
    for j, w in rho.weights.items():
        m = j & k
        if m in (0, k):
            choice: DyadicChoice = (k,)
        else:
            choice = canonical((m, k ^ m))
        out[choice] = out.get(choice, Fraction(0)) + w
    return dict(sorted(out.items(), key=_choice_order))


def dyadic_kernel(table: CoefficientTable, k: int) -> dict[DyadicChoice, Fraction]:
    """Law of "keep ``k``" versus each achievable split ``{M, k - M}``.

    Zero-weight choices are omitted; weights sum to one.
    """
    if k not in table.closure_sets:
        raise InvalidInputError(f"{format_subset(k)} is not in the closure", "not-in-closure")
    cached = table._kernels.get(k)
    if cached is None:
        cached = {}
        stay = table.stay(k)
        if stay:
            cached[(k,)] = stay
        for (kk, m), w in sorted(table.entries.items()):
            if kk != k or m == k:
                continue
            pair = canonical((m, k ^ m))
            cached[pair] = cached.get(pair, Fraction(0)) + w
        cached = dict(sorted(cached.items(), key=_choice_order))
        table._kernels[k] = cached
    return dict(cached)


def check_coefficients(table: CoefficientTable) -> CheckReport:
    """Normalisation, strict monotonicity, complement symmetry and atom test.

    Symmetry is only checked when the distribution is symmetric.
    """
    rho = table.rho
    report = CheckReport("coefficient identities")
    full = rho.full
    symmetric = rho.is_symmetric
    if not symmetric:
        report.notes.append("distribution not symmetric: complement symmetry skipped")
    for k in sorted(table.closure_sets):
        row = table.row(k)
        report.expect(sum(row.values(), Fraction(0)) == 1, f"row {format_subset(k)} does not sum to 1")
        stay = table.stay(k)
        if k != full or rho.rho_full:
            report.expect(stay > 0, f"stay weight of {format_subset(k)} is not positive")
        report.expect((stay == 1) == table.is_atom(k),
                      f"{format_subset(k)}: stay weight {stay} disagrees with atom status")
        for j in rho.weights:
            for m in (j & k, k & ~j):
                if m in (0, k):
                    continue
                report.expect(stay < table.stay(m),
                              f"stay of {format_subset(k)} ({stay}) not below stay of "
                              f"{format_subset(m)} ({table.stay(m)})")
        if symmetric:
            for m, w in row.items():
                if m != k:
                    report.expect(w == table.coefficient(k, k ^ m),
                                  f"coefficients of {format_subset(m)} and its complement in "
                                  f"{format_subset(k)} differ")
    return report
