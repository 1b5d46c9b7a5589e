"""Refinement pairs and preservation of ensures properties.

A refinement pair glues a concrete system to an abstract one through a
total relation from the concrete space to the abstract space. Every
concrete event either refines a named abstract event or refines skip (a
new event). Preservation of an abstract ensures property needs the
per-event simulation conditions, one safety obligation (the other events
keep the refined helpful guard) and one liveness obligation (the system
reaches the refined helpful guard), the latter discharged by a proof
script or by the semantic oracle.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Literal, Mapping

from .commands import Command, Skip, choice_of, grd_of, str_apply
from .obligations import (
    EnsuresProperty,
    EventSystem,
    ModelError,
    ObligationReport,
    check_ensures,
)
from .sets import StateRelation, StateSet
from .unity import LeadsTo, semantic_leadsto


class RefinementPair:
    """Abstract and concrete systems linked by a gluing relation."""

    def __init__(
        self,
        abstract: EventSystem,
        concrete: EventSystem,
        gluing: StateRelation,
        refines: Mapping[str, str | None],
    ):
        if not gluing.source.same_as(concrete.space):
            raise ModelError("gluing must go from the concrete space")
        if not gluing.target.same_as(abstract.space):
            raise ModelError("gluing must go to the abstract space")
        if not gluing.is_total():
            orphans = [
                y for y in range(concrete.space.size) if gluing.successors_mask(y) == 0
            ]
            label = concrete.space.label_of(orphans[0])
            raise ModelError(f"gluing not total: concrete state {label} glues to nothing")
        missing = set(concrete.labels) - set(refines)
        if missing:
            raise ModelError(f"refines map misses concrete events: {sorted(missing)}")
        extra = set(refines) - set(concrete.labels)
        if extra:
            raise ModelError(f"refines map names unknown concrete events: {sorted(extra)}")
        targets = {t for t in refines.values() if t is not None}
        unknown = targets - set(abstract.labels)
        if unknown:
            raise ModelError(f"refines map targets unknown abstract events: {sorted(unknown)}")
        unrefined = set(abstract.labels) - targets
        if unrefined:
            raise ModelError(f"abstract events are never refined: {sorted(unrefined)}")
        self.abstract = abstract
        self.concrete = concrete
        self.gluing = gluing
        self.refines = dict(refines)

    def new_labels(self) -> tuple[str, ...]:
        return tuple(l for l in self.concrete.labels if self.refines[l] is None)

    def refining_labels(self, abstract_labels: frozenset[str]) -> tuple[str, ...]:
        return tuple(
            l for l in self.concrete.labels if self.refines[l] in abstract_labels
        )

    def concrete_of(self, s: StateSet) -> StateSet:
        """The concrete counterpart of an abstract set (inverse gluing image)."""
        return self.gluing.inverse_image(s)

    def groups(self, prop: EnsuresProperty) -> tuple[Command, Command, Command]:
        """Concrete (helpful, refining-rest, new) choices for one property."""
        unknown = prop.helpful - set(self.abstract.labels)
        if unknown:
            raise ModelError(f"property helpful events not in abstract system: {sorted(unknown)}")
        v = self.concrete.space
        helpful = self.refining_labels(prop.helpful)
        rest = tuple(
            l
            for l in self.concrete.labels
            if self.refines[l] is not None and self.refines[l] not in prop.helpful
        )
        new = self.new_labels()
        pick = lambda names: choice_of([self.concrete.events[l] for l in names], v)
        return pick(helpful), pick(rest), pick(new)


def _simulation_gap(
    rp: RefinementPair, abstract_cmd: Command, concrete_cmd: Command, s: StateSet
) -> StateSet:
    """Abstract states violating the simulation condition at concrete set s."""
    lhs = str_apply(abstract_cmd, rp.gluing.image(s.complement()).complement())
    rhs = rp.gluing.image(str_apply(concrete_cmd, s).complement()).complement()
    return lhs - rhs


Mode = Literal["auto", "exhaustive", "sampled"]


def check_event_refinement(
    rp: RefinementPair,
    concrete_label: str,
    mode: Mode = "auto",
    samples: int = 200,
    rng: random.Random | None = None,
) -> ObligationReport:
    """One concrete event simulates its abstract counterpart (skip for new
    events), universally over subsets of the concrete space.

    Exhaustive below 13 concrete states; up to 18 the quantifier is covered
    by singletons, their pairwise unions, the trivial sets and random
    samples; beyond that an explicit sampled mode is required.
    """
    if concrete_label not in rp.concrete.labels:
        raise ModelError(f"unknown concrete event {concrete_label!r}")
    target = rp.refines[concrete_label]
    abstract_cmd: Command = (
        Skip(rp.abstract.space) if target is None else rp.abstract.events[target]
    )
    concrete_cmd = rp.concrete.events[concrete_label]
    v = rp.concrete.space
    rid = f"REF:{concrete_label}"
    refs = (concrete_label,) if target is None else (concrete_label, target)

    n = v.size
    if mode == "auto" and n > 18:
        raise ModelError(
            f"concrete space has {n} states; pass mode='sampled' beyond the 18-state gate"
        )
    exhaustive = mode == "exhaustive" or (mode == "auto" and n <= 12)
    if exhaustive and n > 20:
        raise ModelError(f"exhaustive subset check is infeasible for {n} states")

    def subsets():
        if exhaustive:
            for mask in range(1 << n):
                yield StateSet(v, mask)
            return
        yield v.empty()
        yield v.universe()
        singles = [v.singleton(i) for i in range(n)]
        yield from singles
        for i in range(n):
            for j in range(i + 1, n):
                yield singles[i] | singles[j]
        r = rng or random.Random(0)
        for _ in range(samples):
            yield StateSet(v, r.getrandbits(n))

    witnesses: list[tuple[tuple[int, ...], int]] = []
    for s in subsets():
        gap = _simulation_gap(rp, abstract_cmd, concrete_cmd, s)
        if not gap.is_empty():
            witnesses.append((s.members(), gap.members()[0]))
            if len(witnesses) >= 5:
                break
    if not witnesses:
        return ObligationReport(rid, "pass", refs=refs)
    return ObligationReport(
        rid,
        "fail",
        witnesses=tuple(witnesses),
        narrative="abstract event is not simulated at the witness subsets",
        refs=refs,
    )


def check_all_event_refinements(
    rp: RefinementPair,
    mode: Mode = "auto",
    samples: int = 200,
    rng: random.Random | None = None,
) -> list[ObligationReport]:
    return [
        check_event_refinement(rp, label, mode, samples, rng) for label in rp.concrete.labels
    ]


def derived_inclusions(rp: RefinementPair, prop: EnsuresProperty) -> list[ObligationReport]:
    """Consequences of the simulation conditions plus the abstract property:
    the three concrete groups stay total and act correctly on the glued
    active set. These are theorems once the gates hold, so a fail flags an
    engine defect rather than a model defect."""
    helpful, rest, new = rp.groups(prop)
    v = rp.concrete.space.universe()
    p2, q2 = rp.concrete_of(prop.p), rp.concrete_of(prop.q)
    glued_active = rp.concrete_of(prop.p & prop.q.complement())
    checks = [
        ("rest-total", str_apply(rest, v), v),
        ("helpful-total", str_apply(helpful, v), v),
        ("new-total", str_apply(new, v), v),
        ("rest-keeps", str_apply(rest, p2 | q2), glued_active),
        ("helpful-establishes", str_apply(helpful, q2), glued_active),
        ("new-keeps", str_apply(new, p2 | q2), glued_active),
    ]
    reports = []
    for tag, big, small in checks:
        rid = f"DRV:{prop.name}:{tag}"
        if small.is_subset(big):
            reports.append(ObligationReport(rid, "pass", refs=(prop.name,)))
        else:
            reports.append(
                ObligationReport(
                    rid,
                    "fail",
                    witnesses=(small - big).members(),
                    narrative="derived inclusion does not hold (engine defect?)",
                    refs=(prop.name,),
                )
            )
    return reports


def check_sap(rp: RefinementPair, prop: EnsuresProperty) -> ObligationReport:
    """Safety preservation: from glued active states where the refined
    helpful guard holds, every other concrete event keeps that guard."""
    helpful, rest, new = rp.groups(prop)
    others = choice_of([rest, new], rp.concrete.space)
    guard = grd_of(helpful)
    active = rp.concrete_of(prop.p & prop.q.complement()) & guard
    kept = str_apply(others, guard)
    rid = f"SAP:{prop.name}"
    if active.is_subset(kept):
        return ObligationReport(rid, "pass", refs=(prop.name,))
    return ObligationReport(
        rid,
        "fail",
        witnesses=(active - kept).members(),
        narrative="a non-helpful concrete event can leave the refined helpful guard",
        refs=(prop.name,),
    )


def lip_goal(rp: RefinementPair, prop: EnsuresProperty) -> LeadsTo:
    """Liveness preservation goal: from glued active states outside the
    refined helpful guard, the concrete system reaches that guard."""
    helpful, _, _ = rp.groups(prop)
    guard = grd_of(helpful)
    lhs = rp.concrete_of(prop.p & prop.q.complement()) & guard.complement()
    return LeadsTo(lhs, guard, f"LIP:{prop.name}")


@dataclass(frozen=True)
class LipEvidence:
    """A discharged liveness-preservation goal: oracle verdict or a checked
    proof script, together with the goal it certifies."""

    goal: LeadsTo
    holds: bool
    source: str  # "oracle" | "script:<name>"


def discharge_lip_with_oracle(rp: RefinementPair, prop: EnsuresProperty) -> LipEvidence:
    goal = lip_goal(rp, prop)
    verdict = semantic_leadsto(rp.concrete, goal.lhs, goal.rhs)
    return LipEvidence(goal, verdict.holds, "oracle")


def concrete_property(rp: RefinementPair, prop: EnsuresProperty) -> EnsuresProperty:
    """The ensures property certified on the concrete system: from the glued
    p inside the refined helpful guard, the refining events establish the
    glued q."""
    helpful, _, _ = rp.groups(prop)
    p2 = rp.concrete_of(prop.p) & grd_of(helpful)
    q2 = rp.concrete_of(prop.q)
    labels = frozenset(rp.refining_labels(prop.helpful))
    return EnsuresProperty(f"{prop.name}'", labels, p2, q2)


def check_refined_ensures(
    rp: RefinementPair,
    prop: EnsuresProperty,
    lip: LipEvidence | None,
    mode: Mode = "auto",
    samples: int = 200,
    rng: random.Random | None = None,
) -> ObligationReport:
    """Certify preservation of an abstract ensures property.

    Gates: the abstract property passed, every event simulation passed, the
    safety obligation passed, and the liveness goal is discharged. A missing
    gate yields hypothesis-failed. On success the concrete ensures property
    and the concrete leads-to are both re-verified semantically.
    """
    rid = f"RENS:{prop.name}"
    refs = (prop.name,)

    def blocked(reason: str, witnesses: tuple = ()) -> ObligationReport:
        return ObligationReport(rid, "hypothesis-failed", witnesses, reason, refs)

    abstract_report = check_ensures(rp.abstract, prop)
    if not abstract_report.passed:
        return blocked(f"abstract property failed: {abstract_report.narrative}")
    for report in check_all_event_refinements(rp, mode, samples, rng):
        if not report.passed:
            return blocked(f"event refinement failed: {report.id}", report.witnesses)
    sap = check_sap(rp, prop)
    if not sap.passed:
        return blocked("safety preservation failed", sap.witnesses)
    goal = lip_goal(rp, prop)
    if lip is None:
        return blocked("liveness preservation goal has no evidence")
    if not lip.goal.same_sets(goal):
        return blocked("liveness evidence certifies a different goal")
    if not lip.holds:
        return blocked(f"liveness preservation goal failed ({lip.source})")

    cprop = concrete_property(rp, prop)
    concrete_report = check_ensures(rp.concrete, cprop)
    p2, q2 = rp.concrete_of(prop.p), rp.concrete_of(prop.q)
    leads = semantic_leadsto(rp.concrete, p2, q2)
    if concrete_report.passed and leads.holds:
        return ObligationReport(
            rid,
            "pass",
            narrative=f"concrete ensures {cprop.name} and glued leads-to re-verified",
            refs=refs,
        )
    witnesses = concrete_report.witnesses or (p2 & q2.complement()).members()
    return ObligationReport(
        rid,
        "fail",
        witnesses=witnesses,
        narrative="gates passed but semantic re-verification failed (engine defect?)",
        refs=refs,
    )
