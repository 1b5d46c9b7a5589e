"""The fair iteration of a system split into a helpful command and the rest.

The loop repeatedly runs the rest command but is guaranteed, by fair choice,
to eventually run the helpful command; it stops as soon as the exit set is
reached. Its liberal transformer is a greatest fixpoint, its guard comes
from a least fixpoint, and its termination set is the termination set of
the plain while-loop that iterates the rest until the exit set or the
helpful guard holds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from .commands import Command, grd_of, pre_of, str_apply
from .fixpoint import SetFunction, gfp, lfp
from .sets import SpaceMismatchError, StateSet, StateSpace


class LoopTotalityError(Exception):
    """A lemma check was invoked on a loop whose operands may not terminate."""


@dataclass(frozen=True)
class FairLoop:
    """Iteration until exit_set, running rest with helpful fairly scheduled."""

    exit_set: StateSet
    helpful: Command
    rest: Command

    def __post_init__(self) -> None:
        if not self.exit_set.space.same_as(self.helpful.space):
            raise SpaceMismatchError(self.exit_set.space, self.helpful.space)
        if not self.exit_set.space.same_as(self.rest.space):
            raise SpaceMismatchError(self.exit_set.space, self.rest.space)

    @property
    def space(self) -> StateSpace:
        return self.exit_set.space

    def operands_total(self) -> bool:
        u = self.space.universe()
        return pre_of(self.helpful) == u and pre_of(self.rest) == u


def loop_functional(loop: FairLoop, r: StateSet) -> SetFunction:
    """The one-step functional of the loop body for postcondition r:
    x maps to q | (G(r) & F(x)) with q the exit set, G helpful, F rest."""
    if not r.space.same_as(loop.space):
        raise SpaceMismatchError(r.space, loop.space)
    q = loop.exit_set
    helpful_r = str_apply(loop.helpful, r)
    rest = loop.rest
    return SetFunction(loop.space, lambda x: q | (helpful_r & str_apply(rest, x)))


def loop_liberal(loop: FairLoop, r: StateSet) -> StateSet:
    """Liberal transformer of the loop: greatest fixpoint of the functional."""
    return gfp(loop_functional(loop, r))


def loop_pre(loop: FairLoop) -> StateSet:
    """Termination set of the loop: least fixpoint of the while-iteration of
    rest until the exit set or the helpful guard is reached."""
    stop = loop.exit_set | grd_of(loop.helpful)
    go = stop.complement()
    rest = loop.rest
    fn = SetFunction(loop.space, lambda x: stop | (go & str_apply(rest, x)))
    return lfp(fn)


def loop_str(loop: FairLoop, r: StateSet) -> StateSet:
    """Total-correctness transformer of the loop, by the pairing identity."""
    return loop_liberal(loop, r) & loop_pre(loop)


def loop_guard(loop: FairLoop) -> StateSet:
    """Guard of the loop: complement of the least fixpoint of the functional
    at the empty postcondition."""
    return lfp(loop_functional(loop, loop.space.empty())).complement()


Verdict = Literal["pass", "fail", "hypothesis-failed"]


@dataclass(frozen=True)
class LoopCheck:
    verdict: Verdict
    witnesses: tuple[int, ...] = ()
    failed_hypothesis: str | None = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def check_termination_lemma(loop: FairLoop) -> LoopCheck:
    """grd(helpful) | exit_set is always inside the loop's termination set.

    This is a proved fact for loops whose operands always terminate, so a
    fail verdict indicates an engine defect, not a property of the model.
    """
    if not loop.operands_total():
        raise LoopTotalityError("termination lemma needs pre(helpful) = pre(rest) = u")
    target = grd_of(loop.helpful) | loop.exit_set
    pre = loop_pre(loop)
    if target.is_subset(pre):
        return LoopCheck("pass")
    return LoopCheck("fail", (target - pre).members())


def check_total_correctness(loop: FairLoop, p: StateSet) -> LoopCheck:
    """If p & ~q is preserved-or-finished by rest, lies under the helpful
    guard, and helpful moves it into q, then the loop started anywhere in
    p | q terminates in q. Hypothesis violations are reported as
    hypothesis-failed, distinct from a fail of the conclusion."""
    q = loop.exit_set
    if not loop.operands_total():
        return LoopCheck("hypothesis-failed", (), "pre(helpful) = pre(rest) = u")
    active = p & q.complement()
    hypotheses = (
        ("rest preserves p or reaches q", str_apply(loop.rest, p | q)),
        ("helpful enabled on p & ~q", grd_of(loop.helpful)),
        ("helpful establishes q", str_apply(loop.helpful, q)),
    )
    for name, holds_on in hypotheses:
        if not active.is_subset(holds_on):
            return LoopCheck("hypothesis-failed", (active - holds_on).members(), name)
    reached = loop_str(loop, q)
    if (p | q).is_subset(reached):
        return LoopCheck("pass")
    return LoopCheck("fail", ((p | q) - reached).members())
