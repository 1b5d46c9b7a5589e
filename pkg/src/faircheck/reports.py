"""Report rendering: obligation outcomes as deterministic text or JSON.

The JSON document shape is:

    {
      "version": str,
      "model": str,
      "obligations": [
        {
          "id": str,
          "verdict": "pass" | "fail" | "hypothesis-failed",
          "witnesses": [{"state": str, "bindings": {var: int}}],
          "refs": [str],
          "narrative": str,            # optional
          "lasso": {...}               # optional, counterexample executions
        }
      ]
    }

Identical input models produce byte-identical reports apart from the
version header.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .elaborator import ElaboratedSystem
from .obligations import ObligationReport
from .unity import FairLasso

REPORT_VERSION = "1"

VERDICTS = ("pass", "fail", "hypothesis-failed")


def witness_item(system: ElaboratedSystem, index: int) -> dict[str, Any]:
    return {"state": system.space.label_of(index), "bindings": system.binding(index)}


def state_witnesses(system: ElaboratedSystem, report: ObligationReport) -> list[dict[str, Any]]:
    """Normalize a report's witnesses to state items over the given system.

    Witnesses that are (subset, state) pairs from the simulation checks are
    rendered through their offending state; the subset detail stays on the
    programmatic report.
    """
    items = []
    for w in report.witnesses:
        if isinstance(w, int):
            items.append(witness_item(system, w))
        elif isinstance(w, tuple) and len(w) == 2 and isinstance(w[1], int):
            items.append(witness_item(system, w[1]))
    return items


def lasso_json(system: ElaboratedSystem, lasso: FairLasso) -> dict[str, Any]:
    def name(i: int) -> str:
        return system.space.label_of(i)

    justifications = []
    for label, kind, witness in lasso.justifications:
        if kind == "disabled":
            justifications.append({"event": label, "kind": kind, "state": name(witness)})
        else:
            s, t = witness
            justifications.append(
                {"event": label, "kind": kind, "transition": [name(s), name(t)]}
            )
    return {
        "stem": [name(i) for i in lasso.stem],
        "cycle": [name(i) for i in lasso.cycle],
        "justifications": justifications,
    }


@dataclass
class ReportEntry:
    id: str
    verdict: str
    witnesses: list[dict[str, Any]] = field(default_factory=list)
    refs: list[str] = field(default_factory=list)
    narrative: str = ""
    lasso: dict[str, Any] | None = None


@dataclass
class ReportDocument:
    model: str
    entries: list[ReportEntry] = field(default_factory=list)

    def add(
        self,
        report: ObligationReport,
        system: ElaboratedSystem | None = None,
        witness_system: ElaboratedSystem | None = None,
        lasso: dict[str, Any] | None = None,
    ) -> None:
        target = witness_system or system
        witnesses = state_witnesses(target, report) if target is not None else []
        self.entries.append(
            ReportEntry(
                report.id,
                report.verdict,
                witnesses,
                list(report.refs),
                report.narrative,
                lasso,
            )
        )

    @property
    def all_passed(self) -> bool:
        return all(e.verdict == "pass" for e in self.entries)

    def to_json(self) -> dict[str, Any]:
        obligations = []
        for e in self.entries:
            item: dict[str, Any] = {
                "id": e.id,
                "verdict": e.verdict,
                "witnesses": e.witnesses,
                "refs": e.refs,
            }
            if e.narrative:
                item["narrative"] = e.narrative
            if e.lasso is not None:
                item["lasso"] = e.lasso
            obligations.append(item)
        return {"version": REPORT_VERSION, "model": self.model, "obligations": obligations}

    def to_json_text(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=False) + "\n"

    def to_text(self) -> str:
        lines = [f"faircheck report v{REPORT_VERSION}", f"model: {self.model}"]
        for e in self.entries:
            line = f"{e.id:<28} {e.verdict}"
            if e.witnesses:
                shown = ", ".join(w["state"] for w in e.witnesses[:4])
                line += f"  [{shown}]"
            lines.append(line)
            if e.narrative and e.verdict != "pass":
                lines.append(f"    {e.narrative}")
        passed = sum(1 for e in self.entries if e.verdict == "pass")
        lines.append(f"summary: {passed}/{len(self.entries)} obligations passed")
        return "\n".join(lines) + "\n"


def validate_report(data: Any) -> list[str]:
    """Structural validation of a JSON report; returns a list of problems."""
    problems: list[str] = []
    if not isinstance(data, dict):
        return ["report must be an object"]
    for key in ("version", "model", "obligations"):
        if key not in data:
            problems.append(f"missing key {key!r}")
    if not isinstance(data.get("version"), str):
        problems.append("version must be a string")
    if not isinstance(data.get("model"), str):
        problems.append("model must be a string")
    obligations = data.get("obligations")
    if not isinstance(obligations, list):
        return problems + ["obligations must be a list"]
    for i, item in enumerate(obligations):
        where = f"obligations[{i}]"
        if not isinstance(item, dict):
            problems.append(f"{where} must be an object")
            continue
        if not isinstance(item.get("id"), str):
            problems.append(f"{where}.id must be a string")
        if item.get("verdict") not in VERDICTS:
            problems.append(f"{where}.verdict must be one of {VERDICTS}")
        witnesses = item.get("witnesses")
        if not isinstance(witnesses, list):
            problems.append(f"{where}.witnesses must be a list")
        else:
            for j, w in enumerate(witnesses):
                if (
                    not isinstance(w, dict)
                    or not isinstance(w.get("state"), str)
                    or not isinstance(w.get("bindings"), dict)
                ):
                    problems.append(f"{where}.witnesses[{j}] must be {{state, bindings}}")
        refs = item.get("refs")
        if not isinstance(refs, list) or not all(isinstance(r, str) for r in refs):
            problems.append(f"{where}.refs must be a list of strings")
    return problems
