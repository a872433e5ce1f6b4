"""Bundled scenario configurations for the twelve reference cases."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .config import ScenarioConfig, config_from_dict


@dataclass(frozen=True)
class ReferenceCase:
    case_id: str
    config: ScenarioConfig
    reference_required_symbols: int


def _read(name: str) -> dict:
    return json.loads(resources.files("scerlab").joinpath("reference", name).read_text())


def reference_cases() -> list[ReferenceCase]:
    return [
        ReferenceCase(c["case_id"], config_from_dict(_read(c["config"])), c["reference_required_symbols"])
        for c in _read("cases.json")["cases"]
    ]


def reference_case(case_id: str) -> ReferenceCase:
    for case in reference_cases():
        if case.case_id == case_id:
            return case
    raise KeyError(case_id)
