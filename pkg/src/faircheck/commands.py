"""Command AST and its three set-transformer semantics.

A command denotes three things over one finite space:

  liberal_apply(c, r)  largest start set from which c must end in r or loop
  pre_of(c)            start set from which c certainly terminates
  str_apply(c, r)      largest start set from which c must terminate in r

str is defined from the other two by the pairing identity
str(c)(r) = liberal(c)(r) & pre(c); for every constructor except the fair
choice this provably coincides with the usual structural weakest
precondition, and the test suite checks that coincidence against an
independent recursion.

Primitive commands are transition relations read demonically: from x the
command may move to any successor, and a state without successors is a
miracle (it establishes every postcondition). Fair choice runs both
operands fairly and accepts any proper outcome of either; it shares the
liberal semantics of plain choice but has a weaker termination demand.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

from .sets import SpaceMismatchError, StateRelation, StateSet, StateSpace


class Command:
    """Base class; concrete commands are frozen dataclasses below."""

    @property
    def space(self) -> StateSpace:
        raise NotImplementedError


@dataclass(frozen=True)
class Skip(Command):
    at: StateSpace

    @property
    def space(self) -> StateSpace:
        return self.at


@dataclass(frozen=True)
class Prim(Command):
    """A primitive event given by a transition relation on one space."""

    rel: StateRelation

    def __post_init__(self) -> None:
        if not self.rel.source.same_as(self.rel.target):
            raise ValueError("primitive command needs a relation on a single space")

    @property
    def space(self) -> StateSpace:
        return self.rel.source


def _check_sub(space: StateSpace, body: Command) -> None:
    if not space.same_as(body.space):
        raise SpaceMismatchError(space, body.space, "build a command over")


@dataclass(frozen=True)
class Guard(Command):
    guard: StateSet
    body: Command

    def __post_init__(self) -> None:
        _check_sub(self.guard.space, self.body)

    @property
    def space(self) -> StateSpace:
        return self.guard.space


@dataclass(frozen=True)
class Precond(Command):
    require: StateSet
    body: Command

    def __post_init__(self) -> None:
        _check_sub(self.require.space, self.body)

    @property
    def space(self) -> StateSpace:
        return self.require.space


@dataclass(frozen=True)
class Choice(Command):
    left: Command
    right: Command

    def __post_init__(self) -> None:
        _check_sub(self.left.space, self.right)

    @property
    def space(self) -> StateSpace:
        return self.left.space


@dataclass(frozen=True)
class Seq(Command):
    first: Command
    second: Command

    def __post_init__(self) -> None:
        _check_sub(self.first.space, self.second)

    @property
    def space(self) -> StateSpace:
        return self.first.space


@dataclass(frozen=True)
class Dovetail(Command):
    """Fair choice: both operands run fairly, any proper outcome is accepted."""

    left: Command
    right: Command

    def __post_init__(self) -> None:
        _check_sub(self.left.space, self.right)

    @property
    def space(self) -> StateSpace:
        return self.left.space


def magic(space: StateSpace) -> Command:
    """The empty choice: miraculous everywhere (guard false on all states)."""
    return Guard(space.empty(), Skip(space))


def choice_of(commands: list[Command], space: StateSpace) -> Command:
    """Fold a family of commands into nested binary choice; empty family is magic."""
    if not commands:
        return magic(space)
    acc = commands[0]
    for c in commands[1:]:
        acc = Choice(acc, c)
    return acc


# ---------------------------------------------------------------------------
# Semantics
# ---------------------------------------------------------------------------


def liberal_apply(c: Command, r: StateSet) -> StateSet:
    """The liberal transformer: end in r or fail to terminate."""
    if not c.space.same_as(r.space):
        raise SpaceMismatchError(c.space, r.space, "apply a command to")
    space = c.space
    if isinstance(c, Skip):
        return r
    if isinstance(c, Prim):
        mask = 0
        not_r = space.full_mask & ~r.mask
        for x in range(space.size):
            if c.rel.successors_mask(x) & not_r == 0:
                mask |= 1 << x
        return StateSet(space, mask)
    if isinstance(c, Guard):
        return c.guard.complement() | liberal_apply(c.body, r)
    if isinstance(c, Precond):
        # The precondition contributes u when r is the whole space, nothing
        # otherwise, so the liberal reading of "require p" stays top-strict.
        top = space.universe() if r.is_universe() else space.empty()
        return (c.require | top) & liberal_apply(c.body, r)
    if isinstance(c, Choice):
        return liberal_apply(c.left, r) & liberal_apply(c.right, r)
    if isinstance(c, Seq):
        return liberal_apply(c.first, liberal_apply(c.second, r))
    if isinstance(c, Dovetail):
        return liberal_apply(c.left, r) & liberal_apply(c.right, r)
    raise TypeError(f"unknown command {c!r}")


@lru_cache(maxsize=None)
def pre_of(c: Command) -> StateSet:
    """The termination set: states from which c certainly terminates."""
    space = c.space
    if isinstance(c, (Skip, Prim)):
        return space.universe()
    if isinstance(c, Guard):
        return c.guard.complement() | pre_of(c.body)
    if isinstance(c, Precond):
        return c.require & pre_of(c.body)
    if isinstance(c, Choice):
        return pre_of(c.left) & pre_of(c.right)
    if isinstance(c, Seq):
        return str_apply(c.first, pre_of(c.second))
    if isinstance(c, Dovetail):
        # Fair execution halts if both operands terminate, or one can act
        # and terminates (the other operand's looping is then irrelevant).
        pf, pg = pre_of(c.left), pre_of(c.right)
        return (pf & pg) | (grd_of(c.left) & pf) | (grd_of(c.right) & pg)
    raise TypeError(f"unknown command {c!r}")


def str_apply(c: Command, r: StateSet) -> StateSet:
    """The total-correctness transformer, via the pairing identity."""
    return liberal_apply(c, r) & pre_of(c)


@lru_cache(maxsize=None)
def grd_of(c: Command) -> StateSet:
    """The guard: states where execution of c is possible (not miraculous)."""
    return str_apply(c, c.space.empty()).complement()


def pairing_check(c: Command, r: StateSet) -> bool:
    """str, liberal and pre are linked by str(c)(r) = liberal(c)(r) & pre(c)."""
    return str_apply(c, r) == liberal_apply(c, r) & pre_of(c)


def transition_relation(c: Command) -> StateRelation:
    """Extract the transition relation a conjunctive, always-terminating
    command denotes: t is a successor of x iff x cannot force avoidance of t.

    States outside grd_of(c) get no successors. Only meaningful for commands
    with pre_of(c) = u; used to run events operationally.
    """
    space = c.space
    columns = [str_apply(c, space.singleton(t).complement()).mask for t in range(space.size)]
    pairs = []
    for x in range(space.size):
        bit = 1 << x
        for t in range(space.size):
            if columns[t] & bit == 0:
                pairs.append((x, t))
    return StateRelation(space, space, pairs)


# ---------------------------------------------------------------------------
# Semantic health checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    witness: tuple[StateSet, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def _table(apply: Callable[[StateSet], StateSet], space: StateSpace) -> list[int]:
    return [apply(StateSet(space, m)).mask for m in range(1 << space.size)]


def conjunctivity_check(
    c: Command, samples: int = 64, rng: random.Random | None = None
) -> CheckResult:
    """Does str(c) distribute over binary intersection?

    Exhaustive for spaces of size <= 6 via a full table of the transformer;
    for sizes 7..12 it checks the equivalent meet decomposition
    str(c)(r) = str(c)(u) & AND of str(c)(u - {t}) for t outside r, peeling a
    concrete failing pair out on violation; larger spaces are sampled.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = rng or random.Random(0)
    space = c.space
    n = space.size
    apply = lambda s: str_apply(c, s)
    if n <= 6:
        tab = _table(apply, space)
        full = 1 << n
        for a in range(full):
            for b in range(a, full):
                if tab[a & b] != tab[a] & tab[b]:
                    return CheckResult(False, (StateSet(space, a), StateSet(space, b)))
        return CheckResult(True)
    if n <= 12:
        cols = [apply(space.singleton(t).complement()).mask for t in range(n)]
        top = apply(space.universe()).mask
        for m in range(1 << n):
            expect = top
            for t in range(n):
                if m >> t & 1 == 0:
                    expect &= cols[t]
            if apply(StateSet(space, m)).mask != expect:
                return CheckResult(*_peel_pair(apply, space, m))
        return CheckResult(True)
    for _ in range(samples):
        a = StateSet(space, rng.getrandbits(n))
        b = StateSet(space, rng.getrandbits(n))
        if apply(a & b) != apply(a) & apply(b):
            return CheckResult(False, (a, b))
    return CheckResult(True)


def _peel_pair(
    apply: Callable[[StateSet], StateSet], space: StateSpace, m: int
) -> tuple[bool, tuple[StateSet, ...]]:
    # m fails the meet decomposition; walk the chain of singleton-complement
    # meets until one binary intersection stops distributing.
    acc = space.universe()
    for t in range(space.size):
        if m >> t & 1 == 0:
            nxt = space.singleton(t).complement()
            if apply(acc & nxt) != apply(acc) & apply(nxt):
                return False, (acc, nxt)
            acc = acc & nxt
    return False, (acc, acc)  # unreachable for genuinely failing inputs
