"""Subsets of the site set as bitmasks, canonical partitions, closure and atoms.

Site ``i`` (1-based, as users see it) is bit ``i - 1`` of a subset mask. A
partition is a tuple of disjoint nonzero masks sorted by their lowest set
bit, so two partitions are equal exactly when their tuples are equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

from .errors import InvalidInputError, ResourceLimitError

Partition = Tuple[int, ...]

MAX_ENUMERATION_SITES = 16
MAX_SITES = 64


@dataclass(frozen=True)
class SiteSet:
    """The finite index set of sites, with optional display labels."""

    n_sites: int
    site_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if not 2 <= self.n_sites <= MAX_SITES:
            raise InvalidInputError(
                f"n_sites must lie in [2, {MAX_SITES}], got {self.n_sites}", "bad-site-count"
            )
        if self.site_labels is not None and len(self.site_labels) != self.n_sites:
            raise InvalidInputError("site_labels must name every site", "bad-site-labels")

    @property
    def full(self) -> int:
        return (1 << self.n_sites) - 1

    def subset(self, sites: Iterable[int]) -> int:
        """Mask of a collection of 1-based site indices."""
        mask = 0
        for i in sites:
            if not 1 <= i <= self.n_sites:
                raise InvalidInputError(f"site {i} outside 1..{self.n_sites}", "bad-site-index")
            mask |= 1 << (i - 1)
        return mask

    def singletons(self) -> Partition:
        return tuple(1 << i for i in range(self.n_sites))

    def require_enumerable(self, limit: int = MAX_ENUMERATION_SITES) -> None:
        if self.n_sites > limit:
            raise ResourceLimitError(
                f"{self.n_sites} sites exceeds the enumeration cap of {limit}; "
                "use Monte Carlo kernel draws instead"
            )


def sites_of(mask: int) -> list[int]:
    """Sorted 1-based site indices of ``mask``."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def lowest_bit(mask: int) -> int:
    return mask & -mask


def canonical(blocks: Iterable[int]) -> Partition:
    return tuple(sorted(blocks, key=lowest_bit))


def is_partition(blocks: Sequence[int], full: int) -> bool:
    seen = 0
    for b in blocks:
        if b == 0 or b & seen:
            return False
        seen |= b
    return seen == full


def partition_key(p: Partition) -> tuple:
    """Lexicographic sort key on the site-list form of a partition."""
    return tuple(tuple(sites_of(b)) for b in p)


def format_subset(mask: int) -> str:
    return "{" + ",".join(map(str, sites_of(mask))) + "}"


def format_partition(p: Partition) -> str:
    return "".join(format_subset(b) for b in p)


def _check_family(family: Iterable[int]) -> list[int]:
    members = sorted(set(family))
    if not members:
        raise InvalidInputError("family of sets is empty", "empty-family")
    if 0 in members:
        raise InvalidInputError("family contains the empty set", "empty-member")
    return members


def closure(family: Iterable[int]) -> frozenset[int]:
    """All nonempty intersections of members of ``family``.

    The caller is responsible for the family being closed under complement
    (apart from the full set) when the result feeds :func:`atoms`.
    """
    members = _check_family(family)
    result = set(members)
    work = list(members)
    while work:
        k = work.pop()
        for j in members:
            x = k & j
            if x and x not in result:
                result.add(x)
                work.append(x)
    return frozenset(result)


def atoms(family: Iterable[int]) -> Partition:
    """Closure elements that no member of ``family`` cuts."""
    members = _check_family(family)
    return canonical(
        ell for ell in closure(members) if all(j & ell in (0, ell) for j in members)
    )


def is_finer(a: Partition, b: Partition) -> bool:
    """True iff every block of ``a`` sits inside some block of ``b``."""
    return all(any(x & ~y == 0 for y in b) for x in a)


def union_check(subset: int, partition: Partition) -> bool:
    """True iff ``subset`` is the union of the blocks it contains."""
    covered = 0
    for b in partition:
        if b & ~subset == 0:
            covered |= b
    return covered == subset


def subset_to_list(mask: int) -> list[int]:
    return sites_of(mask)


def partition_to_lists(p: Partition) -> list[list[int]]:
    return [sites_of(b) for b in p]


def submasks(mask: int):
    """Nonempty submasks of ``mask`` (descending order)."""
    sub = mask
    while sub:
        yield sub
        sub = (sub - 1) & mask
