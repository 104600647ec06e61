"""Scenario file format: schema validation and typed loading.

Scenarios are versioned JSON documents.  Unknown fields are rejected
everywhere so a typo cannot silently change a run, and the canonical
bytes of the document are digested into every trace for provenance.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import jsonschema

from .errors import ScenarioError
from .matching import MatchPreferences
from .trips import CircleCoverage, GeoPoint, Grid, PolygonCoverage

_POINT = {
    "type": "object",
    "additionalProperties": False,
    "required": ["lat", "lon"],
    "properties": {"lat": {"type": "number"}, "lon": {"type": "number"}},
}

_PREFS = {
    "type": "object",
    "additionalProperties": False,
    "required": ["delta_m", "tau_s"],
    "properties": {
        "delta_m": {"type": "number", "minimum": 0},
        "tau_s": {"type": "number", "minimum": 0},
        "w_walk": {"type": "number", "minimum": 0},
        "w_wait": {"type": "number", "minimum": 0},
        "w_bid": {"type": "number", "minimum": 0},
        "w_rep": {"type": "number", "minimum": 0},
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "grid", "riders", "drivers", "location_provers"],
    "properties": {
        "version": {"const": 1},
        "seed": {"type": "integer", "minimum": 0},
        "curve_profile": {"enum": ["default", "small"]},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["min_lat", "max_lat", "min_lon", "max_lon", "rows", "cols"],
            "properties": {
                "min_lat": {"type": "number"},
                "max_lat": {"type": "number"},
                "min_lon": {"type": "number"},
                "max_lon": {"type": "number"},
                "rows": {"type": "integer", "minimum": 1},
                "cols": {"type": "integer", "minimum": 1},
            },
        },
        "time_interval_s": {"type": "integer", "minimum": 1},
        "set_size": {"type": "integer", "minimum": 2},
        "location_precision": {"type": "integer", "minimum": 3, "maximum": 6},
        "reputation_threshold": {"type": ["number", "string"]},
        "new_driver_bond": {"type": "integer", "minimum": 0},
        "reputation_grace_s": {"type": "integer", "minimum": 0},
        "driver_deposit": {"type": "integer", "minimum": 1},
        "distance_unit_m": {"type": "number", "exclusiveMinimum": 0},
        "segment_interval_s": {"type": "integer", "minimum": 1},
        "accept_window_s": {"type": "integer", "minimum": 1},
        "payment_grace_s": {"type": "integer", "minimum": 0},
        "system_balance": {"type": "integer", "minimum": 0},
        "start_time": {"type": "integer", "minimum": 0},
        "riders": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "balance", "request_time", "pickup", "pickup_time", "dropoff"],
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "balance": {"type": "integer", "minimum": 0},
                    "budget": {"type": "integer", "minimum": 0},
                    "request_time": {"type": "integer", "minimum": 0},
                    "pickup": _POINT,
                    "pickup_time": {"type": "integer", "minimum": 0},
                    "dropoff": _POINT,
                    "expected_duration_s": {"type": "integer", "minimum": 0},
                    "deposit": {"type": "integer", "minimum": 1},
                    "offer_window_s": {"type": "integer", "minimum": 1},
                    "max_offers": {"type": ["integer", "null"], "minimum": 1},
                    "preferences": _PREFS,
                    "profile": {
                        "enum": [
                            "honest",
                            "rigged_setup",
                            "ghost_request",
                            "stop_signing",
                            "impersonated",
                        ]
                    },
                },
            },
        },
        "drivers": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "balance", "waypoints", "bid"],
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "balance": {"type": "integer", "minimum": 0},
                    "waypoints": {
                        "type": "array",
                        "minItems": 2,
                        "items": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["lat", "lon", "t"],
                            "properties": {
                                "lat": {"type": "number"},
                                "lon": {"type": "number"},
                                "t": {"type": "integer", "minimum": 0},
                            },
                        },
                    },
                    "bid": {"type": "integer", "minimum": 0},
                    "profile": {
                        "enum": [
                            "honest",
                            "no_show",
                            "claim_and_abandon",
                            "distance_cheat",
                            "ghost_offer",
                        ]
                    },
                    "response_delay_s": {"type": "integer", "minimum": 1},
                },
            },
        },
        "location_provers": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "coverage"],
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "coverage": {
                        "oneOf": [
                            {
                                "type": "object",
                                "additionalProperties": False,
                                "required": ["type", "center", "radius_m"],
                                "properties": {
                                    "type": {"const": "circle"},
                                    "center": _POINT,
                                    "radius_m": {"type": "number", "exclusiveMinimum": 0},
                                },
                            },
                            {
                                "type": "object",
                                "additionalProperties": False,
                                "required": ["type", "vertices"],
                                "properties": {
                                    "type": {"const": "polygon"},
                                    "vertices": {"type": "array", "minItems": 3, "items": _POINT},
                                },
                            },
                        ]
                    },
                },
            },
        },
    },
}


@dataclass(frozen=True)
class RiderSpec:
    id: str
    balance: int
    budget: int
    request_time: int
    pickup: tuple[float, float]
    pickup_time: int
    dropoff: tuple[float, float]
    expected_duration_s: int
    deposit: int
    offer_window_s: int
    max_offers: Optional[int]
    preferences: MatchPreferences
    profile: str


@dataclass(frozen=True)
class DriverSpec:
    id: str
    balance: int
    waypoints: tuple[tuple[float, float, int], ...]
    bid: int
    profile: str
    response_delay_s: int


@dataclass(frozen=True)
class ProverSpec:
    id: str
    coverage: Union[CircleCoverage, PolygonCoverage]


@dataclass(frozen=True)
class Scenario:
    grid: Grid
    riders: tuple[RiderSpec, ...]
    drivers: tuple[DriverSpec, ...]
    location_provers: tuple[ProverSpec, ...]
    seed: int = 0
    curve_profile: str = "default"
    time_interval_s: int = 900
    set_size: int = 16
    location_precision: int = 5
    reputation_threshold: str = "1/2"
    new_driver_bond: int = 0
    reputation_grace_s: int = 3600
    driver_deposit: int = 1
    distance_unit_m: float = 100.0
    segment_interval_s: int = 60
    accept_window_s: int = 120
    payment_grace_s: int = 1800
    system_balance: int = 0
    start_time: int = 0
    digest: str = ""
    raw: dict = field(default_factory=dict, repr=False)


def _coverage_from(raw: dict):
    if raw["type"] == "circle":
        return CircleCoverage(GeoPoint(raw["center"]["lat"], raw["center"]["lon"]), raw["radius_m"])
    return PolygonCoverage(tuple(GeoPoint(v["lat"], v["lon"]) for v in raw["vertices"]))


def parse_scenario(document: dict) -> Scenario:
    """Validate a scenario document and build the typed form."""
    try:
        jsonschema.validate(document, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ScenarioError(f"scenario schema violation: {exc.message}") from None

    ids = [r["id"] for r in document["riders"]] + [d["id"] for d in document["drivers"]] + [
        p["id"] for p in document["location_provers"]
    ]
    if len(set(ids)) != len(ids):
        raise ScenarioError("agent ids must be unique")

    try:
        grid = Grid(**document["grid"])
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None

    riders = []
    for raw in document["riders"]:
        prefs_raw = raw.get("preferences", {"delta_m": 500.0, "tau_s": 900.0})
        try:
            prefs = MatchPreferences(**prefs_raw)
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None
        deposit = raw.get("deposit", 10)
        riders.append(
            RiderSpec(
                id=raw["id"],
                balance=raw["balance"],
                budget=raw.get("budget", raw["balance"]),
                request_time=raw["request_time"],
                pickup=(raw["pickup"]["lat"], raw["pickup"]["lon"]),
                pickup_time=raw["pickup_time"],
                dropoff=(raw["dropoff"]["lat"], raw["dropoff"]["lon"]),
                expected_duration_s=raw.get("expected_duration_s", 0),
                deposit=deposit,
                offer_window_s=raw.get("offer_window_s", 300),
                max_offers=raw.get("max_offers"),
                preferences=prefs,
                profile=raw.get("profile", "honest"),
            )
        )
    drivers = tuple(
        DriverSpec(
            id=raw["id"],
            balance=raw["balance"],
            waypoints=tuple((w["lat"], w["lon"], w["t"]) for w in raw["waypoints"]),
            bid=raw["bid"],
            profile=raw.get("profile", "honest"),
            response_delay_s=raw.get("response_delay_s", 10),
        )
        for raw in document["drivers"]
    )
    provers = tuple(
        ProverSpec(id=raw["id"], coverage=_coverage_from(raw["coverage"]))
        for raw in document["location_provers"]
    )

    canonical = json.dumps(document, sort_keys=True, separators=(",", ":")).encode()
    return Scenario(
        grid=grid,
        riders=tuple(riders),
        drivers=drivers,
        location_provers=provers,
        seed=document.get("seed", 0),
        curve_profile=document.get("curve_profile", "default"),
        time_interval_s=document.get("time_interval_s", 900),
        set_size=document.get("set_size", 16),
        location_precision=document.get("location_precision", 5),
        reputation_threshold=str(document.get("reputation_threshold", "1/2")),
        new_driver_bond=document.get("new_driver_bond", 0),
        reputation_grace_s=document.get("reputation_grace_s", 3600),
        driver_deposit=document.get("driver_deposit", 1),
        distance_unit_m=document.get("distance_unit_m", 100.0),
        segment_interval_s=document.get("segment_interval_s", 60),
        accept_window_s=document.get("accept_window_s", 120),
        payment_grace_s=document.get("payment_grace_s", 1800),
        system_balance=document.get("system_balance", 0),
        start_time=document.get("start_time", 0),
        digest=hashlib.sha256(canonical).hexdigest(),
        raw=document,
    )


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Read and validate a scenario JSON file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from None
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise ScenarioError("scenario must be a JSON object")
    return parse_scenario(document)
