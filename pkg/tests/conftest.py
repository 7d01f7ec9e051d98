"""Shared fixtures: the acceptance report and a disk cache for designed pulses.

Pulse design is deterministic but slow (minutes per multi-start search), so
acceptance tests cache designed pulses under ``tests/_cache`` keyed by a hash
of every input that influences the search.  Deleting the directory forces a
full re-design; cached entries are plain JSON and safe to inspect.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path

import pytest

from fockpulse import (
    CompositePulse,
    PsoConfig,
    RefineConfig,
    SystemConfig,
    design_pulse,
)

CACHE_DIR = Path(__file__).parent / "_cache"

# criterion number -> (status, detail); populated by tests/test_acceptance.py
_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def record_acceptance(criterion: int, passed: bool, detail: str) -> None:
    _ACCEPTANCE[criterion] = ("PASS" if passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_ACCEPTANCE):
        status, detail = _ACCEPTANCE[criterion]
        terminalreporter.write_line(f"criterion {criterion}: {status} ({detail})")


def _design_key(
    cfg: SystemConfig,
    target_label: str,
    pulse_count: int,
    omega: float,
    layout_kind: str,
    pcfg: PsoConfig,
    rcfg: RefineConfig,
    starts: int,
    refine_top: int,
) -> str:
    payload = json.dumps(
        {
            "system": dataclasses.asdict(cfg),
            "target": target_label,
            "pulse_count": pulse_count,
            "omega": omega,
            "layout": layout_kind,
            "pso": dataclasses.asdict(pcfg),
            "refine": dataclasses.asdict(rcfg),
            "starts": starts,
            "refine_top": refine_top,
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def cached_design(
    cfg: SystemConfig,
    template: CompositePulse,
    layout,
    target,
    target_label: str,
    pcfg: PsoConfig,
    rcfg: RefineConfig,
    *,
    starts: int,
    refine_top: int,
    layout_kind: str,
) -> tuple[CompositePulse, float]:
    """Run (or reload) a deterministic design; returns (pulse, loss)."""
    omega = template[0].omega
    key = _design_key(
        cfg, target_label, len(template), omega, layout_kind, pcfg, rcfg, starts, refine_top
    )
    path = CACHE_DIR / f"{key}.json"
    if path.exists():
        doc = json.loads(path.read_text())
        return CompositePulse.from_dicts(doc["pulses"]), float(doc["loss"])

    result = design_pulse(
        cfg, template, layout, target, pcfg, rcfg, starts=starts, refine_top=refine_top
    )
    CACHE_DIR.mkdir(exist_ok=True)
    path.write_text(
        json.dumps(
            {"pulses": result.pulse.to_dicts(), "loss": result.loss},
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    return result.pulse, result.loss


@pytest.fixture(scope="session")
def design_cache():
    return cached_design


@pytest.fixture(scope="session")
def acceptance():
    return record_acceptance
