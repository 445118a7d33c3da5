from __future__ import annotations

import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
FIX = HERE / "fixtures"
sys.path.insert(0, str(HERE))

from bra.io import documents as docs  # noqa: E402
from bra.io.tabular import parse_schedule_csv  # noqa: E402


def fixture_text(name: str) -> str:
    return (FIX / name).read_text(encoding="utf-8")


def load(name: str):
    text = fixture_text(name)
    if name.endswith(".csv"):
        return parse_schedule_csv(text)
    kind = name.rsplit(".", 1)[0]
    for key, parser in (
        ("constraints", docs.parse_behavior_constraints_json),
        ("tasks", docs.parse_task_suite_json),
        ("milestones", docs.parse_milestones_json),
    ):
        if kind.endswith(key):
            return parser(text)
    return docs.parse_document(text)[1]


@pytest.fixture(scope="session")
def fig6():
    """The basal-ganglia actor-critic fixture, every piece parsed."""
    stubs, overrides = load("fig6_stubs.json")
    rules = load("fig6_rules.json")
    return {
        "bif": load("fig6_bif.json"),
        "hcd": load("fig6_hcd.json"),
        "mapping": load("fig6_mapping.json"),
        "template": load("fig6_template.json"),
        "rules": rules,
        "stubs": stubs,
        "overrides": overrides,
        "schedule": load("fig6_schedule.csv"),
        "milestones": load("fig6_milestones.json"),
        "constraints": load("fig6_constraints.json"),
        "tasks": load("fig6_tasks.json"),
        "roi": ("basal_ganglia",),
    }


@pytest.fixture(scope="session")
def fig10():
    return {
        "bif": load("fig10_bif.json"),
        "hcd_a": load("fig10_task1.json"),
        "hcd_b": load("fig10_task2.json"),
        "map_a": load("fig10_task1_mapping.json"),
        "map_b": load("fig10_task2_mapping.json"),
    }


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS):
            terminalreporter.write_line(line)
