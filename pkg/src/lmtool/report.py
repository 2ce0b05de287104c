"""Check records, report bundles, and their serialized forms.

A bundle collects one record per executed check unit.  The JSON report
is byte-stable for a fixed configuration: timings live in a separate
file so that reruns diff clean.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field


PASSING = ("pass", "skipped")


@dataclass
class CheckRecord:
    """Outcome of one check unit."""

    check: str
    status: str
    claim: str
    case: str = None
    m: int = None
    witnesses: list = field(default_factory=list)
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status in PASSING

    def stable_dict(self) -> dict:
        return {
            "check": self.check,
            "case": self.case,
            "m": self.m,
            "status": self.status,
            "claim": self.claim,
            "witnesses": list(self.witnesses),
            "detail": self.detail,
        }

    def sort_key(self):
        return (self.check, self.case or "", self.m or 0, self.claim)


class ReportBundle:
    """All records of a run plus the configuration that produced them."""

    def __init__(self, config):
        self.config = config
        self.records = []

    def add(self, record: CheckRecord) -> CheckRecord:
        self.records.append(record)
        return record

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.records)

    def counts(self) -> dict:
        out = {}
        for r in self.records:
            out[r.status] = out.get(r.status, 0) + 1
        return out

    def stable_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "ok": self.ok,
            "records": [r.stable_dict() for r in sorted(self.records,
                                                        key=CheckRecord.sort_key)],
        }

    def to_json(self) -> str:
        return json.dumps(self.stable_dict(), sort_keys=True, indent=2) + "\n"

    def timings_dict(self) -> dict:
        return {
            "records": [
                {"check": r.check, "case": r.case, "m": r.m,
                 "seconds": round(r.seconds, 3)}
                for r in sorted(self.records, key=CheckRecord.sort_key)
            ],
            "total_seconds": round(sum(r.seconds for r in self.records), 3),
        }

    def summary_markdown(self) -> str:
        lines = [
            "# verification summary",
            "",
            "| check | case | m | status | claim |",
            "| --- | --- | --- | --- | --- |",
        ]
        for r in sorted(self.records, key=CheckRecord.sort_key):
            case = r.case if r.case is not None else "-"
            m = r.m if r.m is not None else "-"
            lines.append(f"| {r.check} | {case} | {m} | {r.status} | {r.claim} |")
        counts = ", ".join(f"{k}: {v}" for k, v in sorted(self.counts().items()))
        lines += ["", f"result: {'all checks pass' if self.ok else 'FAILURES'}"
                      f" ({counts})", ""]
        return "\n".join(lines)

    def write(self, outdir: str) -> dict:
        """Write report.json, timings.json, and summary.md under outdir."""
        os.makedirs(outdir, exist_ok=True)
        paths = {
            "report": os.path.join(outdir, "report.json"),
            "timings": os.path.join(outdir, "timings.json"),
            "summary": os.path.join(outdir, "summary.md"),
        }
        with open(paths["report"], "w") as fh:
            fh.write(self.to_json())
        with open(paths["timings"], "w") as fh:
            fh.write(json.dumps(self.timings_dict(), sort_keys=True, indent=2) + "\n")
        with open(paths["summary"], "w") as fh:
            fh.write(self.summary_markdown())
        return paths
