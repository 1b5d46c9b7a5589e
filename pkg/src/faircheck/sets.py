"""Finite state spaces, bit-vector state sets, and relations between spaces.

Everything else in the kit is built on these three values. Sets are dense
bitmasks over 0..size-1 and immutable; relations precompute successor and
predecessor masks so images are single passes over machine ints.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator


class SpaceMismatchError(Exception):
    """Raised when two values over different state spaces are combined."""

    def __init__(self, left: "StateSpace", right: "StateSpace", what: str = "operate on"):
        super().__init__(
            f"cannot {what} sets over distinct spaces "
            f"{left.id!r} (size {left.size}) and {right.id!r} (size {right.size})"
        )
        self.left = left
        self.right = right


@dataclass(frozen=True)
class StateSpace:
    """A finite universe of states indexed 0..size-1.

    Identity is nominal: two spaces are the same iff their ids match. This
    keeps abstract and concrete universes from being mixed by accident even
    when they happen to have equal cardinality.
    """

    id: str
    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError(f"state space {self.id!r} must have size >= 1, got {self.size}")
        if self.labels is not None and len(self.labels) != self.size:
            raise ValueError(
                f"state space {self.id!r}: {len(self.labels)} labels for {self.size} states"
            )

    def same_as(self, other: "StateSpace") -> bool:
        return self.id == other.id and self.size == other.size

    def label_of(self, index: int) -> str:
        if self.labels is not None:
            return self.labels[index]
        return str(index)

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def empty(self) -> "StateSet":
        return StateSet(self, 0)

    def universe(self) -> "StateSet":
        return StateSet(self, self.full_mask)

    def subset(self, members: Iterable[int]) -> "StateSet":
        mask = 0
        for m in members:
            if not 0 <= m < self.size:
                raise ValueError(f"state index {m} out of range for space {self.id!r}")
            mask |= 1 << m
        return StateSet(self, mask)

    def singleton(self, member: int) -> "StateSet":
        return self.subset((member,))

    def all_subsets(self) -> Iterator["StateSet"]:
        """Every subset of the space, in mask order. Only sane for small spaces."""
        for mask in range(1 << self.size):
            yield StateSet(self, mask)


def _require_same_space(a: "StateSet", b: "StateSet") -> None:
    if not a.space.same_as(b.space):
        raise SpaceMismatchError(a.space, b.space)


@dataclass(frozen=True)
class StateSet:
    """An immutable subset of a state space, stored as a bitmask."""

    space: StateSpace
    mask: int

    def __post_init__(self) -> None:
        if self.mask & ~self.space.full_mask:
            raise ValueError(f"set contains indices outside space {self.space.id!r}")

    # -- algebra ------------------------------------------------------------

    def union(self, other: "StateSet") -> "StateSet":
        _require_same_space(self, other)
        return StateSet(self.space, self.mask | other.mask)

    def intersect(self, other: "StateSet") -> "StateSet":
        _require_same_space(self, other)
        return StateSet(self.space, self.mask & other.mask)

    def difference(self, other: "StateSet") -> "StateSet":
        _require_same_space(self, other)
        return StateSet(self.space, self.mask & ~other.mask)

    def complement(self) -> "StateSet":
        return StateSet(self.space, self.space.full_mask & ~self.mask)

    def is_subset(self, other: "StateSet") -> bool:
        _require_same_space(self, other)
        return self.mask & ~other.mask == 0

    __or__ = union
    __and__ = intersect
    __sub__ = difference
    __invert__ = complement
    __le__ = is_subset

    # -- queries ------------------------------------------------------------

    def is_empty(self) -> bool:
        return self.mask == 0

    def is_universe(self) -> bool:
        return self.mask == self.space.full_mask

    def __contains__(self, index: int) -> bool:
        return bool(self.mask >> index & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def members(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.space.size) if self.mask >> i & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(self.members())

    def pretty(self) -> str:
        return "{" + ", ".join(self.space.label_of(i) for i in self) + "}"

    def __repr__(self) -> str:
        return f"StateSet({self.space.id}:{{{', '.join(map(str, self.members()))}}})"


class StateRelation:
    """A relation between two spaces, possibly partial and non-functional."""

    def __init__(self, source: StateSpace, target: StateSpace, pairs: Iterable[tuple[int, int]]):
        self.source = source
        self.target = target
        self.pairs = frozenset(pairs)
        succ = [0] * source.size
        pred = [0] * target.size
        for s, t in self.pairs:
            if not 0 <= s < source.size:
                raise ValueError(f"relation source index {s} out of range for {source.id!r}")
            if not 0 <= t < target.size:
                raise ValueError(f"relation target index {t} out of range for {target.id!r}")
            succ[s] |= 1 << t
            pred[t] |= 1 << s
        self._succ = tuple(succ)
        self._pred = tuple(pred)

    @classmethod
    def identity(cls, space: StateSpace) -> "StateRelation":
        return cls(space, space, ((i, i) for i in range(space.size)))

    def successors_mask(self, index: int) -> int:
        return self._succ[index]

    def successors(self, index: int) -> StateSet:
        return StateSet(self.target, self._succ[index])

    def image(self, a: StateSet) -> StateSet:
        """All targets of pairs whose source lies in a."""
        if not a.space.same_as(self.source):
            raise SpaceMismatchError(a.space, self.source, "take the image of")
        mask = 0
        rest = a.mask
        while rest:
            low = rest & -rest
            mask |= self._succ[low.bit_length() - 1]
            rest ^= low
        return StateSet(self.target, mask)

    def inverse_image(self, s: StateSet) -> StateSet:
        """All sources of pairs whose target lies in s."""
        if not s.space.same_as(self.target):
            raise SpaceMismatchError(s.space, self.target, "take the inverse image of")
        mask = 0
        rest = s.mask
        while rest:
            low = rest & -rest
            mask |= self._pred[low.bit_length() - 1]
            rest ^= low
        return StateSet(self.source, mask)

    def is_total(self) -> bool:
        """True iff every source state is related to at least one target."""
        return all(self._succ[i] != 0 for i in range(self.source.size))

    def converse_pairs(self) -> frozenset[tuple[int, int]]:
        return frozenset((t, s) for s, t in self.pairs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateRelation):
            return NotImplemented
        return (
            self.source.same_as(other.source)
            and self.target.same_as(other.target)
            and self.pairs == other.pairs
        )

    def __hash__(self) -> int:
        return hash((self.source.id, self.target.id, self.pairs))

    def __repr__(self) -> str:
        return f"StateRelation({self.source.id}->{self.target.id}, {sorted(self.pairs)})"
