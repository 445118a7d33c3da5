"""Findings and reports shared by the validators and checkers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True, order=True)
class Finding:
    element: str
    rule: str
    severity: str = ERROR
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "element": self.element,
            "rule": self.rule,
            "severity": self.severity,
            "message": self.message,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Finding:
        return cls(d["element"], d["rule"], d["severity"], d.get("message", ""))


@dataclass
class ValidationReport:
    """Ordered collection of findings. Empty means the subject is well formed."""

    findings: list[Finding] = field(default_factory=list)
    subject: str = ""

    def add(self, element: str, rule: str, severity: str = ERROR, message: str = "") -> None:
        self.findings.append(Finding(element, rule, severity, message))

    def extend(self, findings: Iterable[Finding]) -> None:
        self.findings.extend(findings)

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == ERROR]

    @property
    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == WARNING]

    @property
    def ok(self) -> bool:
        return not self.errors

    def __len__(self) -> int:
        return len(self.findings)

    def __iter__(self):
        return iter(self.findings)

    def sorted(self) -> ValidationReport:
        return ValidationReport(sorted(set(self.findings)), self.subject)

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "ok": self.ok,
            "findings": [f.to_dict() for f in self.findings],
        }


@dataclass
class ConsistencyReport(ValidationReport):
    """Findings for one consistency aspect plus a per-element verdict table.

    ``results`` maps each checked element (link, claim, milestone constraint)
    to ``"pass"`` or the name of the violated clause.
    """

    aspect: str = ""
    results: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["aspect"] = self.aspect
        d["results"] = dict(sorted(self.results.items()))
        return d
