"""JSON scenario files: schema, validation and conversion to model objects."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import jsonschema

from .market import MarketConfig, PriceVector
from .optimize import OptimizerSettings
from .outsourcing import OutsourcingScenario

_NUMBER = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}

SCENARIO_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "towermarket scenario",
    "type": "object",
    "additionalProperties": False,
    "required": ["market"],
    "properties": {
        "market": {
            "type": "object",
            "additionalProperties": False,
            "required": [
                "num_operators",
                "num_quality_levels",
                "quality_fractions",
                "popularity_index",
                "reputation_weight",
                "price_exponent_bound",
            ],
            "properties": {
                "num_operators": _POS_INT,
                "num_quality_levels": _POS_INT,
                "quality_fractions": {"type": "array", "items": _NUMBER, "minItems": 1},
                "popularity_index": _NUMBER,
                "reputation_weight": _NUMBER,
                "price_exponent_bound": _NUMBER,
                "price_scale": _NUMBER,
                "user_count": _POS_INT,
            },
        },
        "prices": {
            "oneOf": [
                {"type": "array", "items": _NUMBER, "minItems": 1},
                {"type": "string", "pattern": "^solve:(sum|bargaining|ordered)$"},
            ]
        },
        "optimizer": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "coarse_grid_points": {"type": "integer", "minimum": 2},
                "refine_rounds": {"type": "integer", "minimum": 0},
                "boundary_offset": _NUMBER,
            },
        },
        "outsourcing": {
            "type": "object",
            "additionalProperties": False,
            "required": ["tower_cost", "towerco_cost", "fee_fraction"],
            "properties": {
                "tower_cost": _NUMBER,
                "towerco_cost": _NUMBER,
                "fee_fraction": _NUMBER,
                "fees": {"type": "array", "items": _NUMBER},
                "reputation_feedback": _NUMBER,
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["operators", "budget", "eta"],
            "properties": {
                "operators": {"type": "array", "items": _POS_INT, "minItems": 1},
                "budget": _NUMBER,
                "eta": _NUMBER,
                "step": _NUMBER,
                "refine": {"type": "boolean"},
            },
        },
        "coordination": {
            "type": "object",
            "additionalProperties": False,
            "required": ["deltas", "eta"],
            "properties": {
                "deltas": {"type": "array", "items": _NUMBER, "minItems": 1},
                "eta": _NUMBER,
                "regime": {"enum": ["towerco_operated", "smart_operator_operated"]},
                "gain_weights": {"type": "array", "items": _NUMBER},
            },
        },
        "game": {
            "type": "object",
            "additionalProperties": False,
            "required": ["points_per_player"],
            "properties": {
                "points_per_player": _POS_INT,
                "bound": _NUMBER,
                "verify": {"type": "array", "items": _POS_INT},
            },
        },
    },
}


class ScenarioParseError(Exception):
    """The file is empty or not JSON."""


class ScenarioValidationError(Exception):
    """The JSON does not describe a valid scenario for the requested command."""


@dataclass(frozen=True)
class Scenario:
    raw: dict

    @property
    def digest(self) -> str:
        """SHA-256 of the canonical JSON encoding."""
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def section(self, name: str) -> dict | list | str:
        if name not in self.raw:
            raise ScenarioValidationError(f"scenario has no '{name}' section")
        return self.raw[name]

    def market(self) -> MarketConfig:
        m = self.raw["market"]
        try:
            return MarketConfig(
                num_operators=m["num_operators"],
                num_quality_levels=m["num_quality_levels"],
                quality_fractions=tuple(m["quality_fractions"]),
                popularity_index=m["popularity_index"],
                reputation_weight=m["reputation_weight"],
                price_exponent_bound=m["price_exponent_bound"],
                price_scale=m.get("price_scale", 1.0),
                user_count=m.get("user_count", 1),
            )
        except ValueError as exc:
            raise ScenarioValidationError(f"market: {exc}") from exc

    def optimizer_settings(self, grid_points: Optional[int] = None) -> OptimizerSettings:
        opts = dict(self.raw.get("optimizer", {}))
        if grid_points is not None:
            opts["coarse_grid_points"] = grid_points
        try:
            return OptimizerSettings(**opts)
        except ValueError as exc:
            raise ScenarioValidationError(f"optimizer: {exc}") from exc

    def price_spec(self) -> list[float] | str:
        return self.section("prices")

    def explicit_prices(self, config: MarketConfig) -> Optional[PriceVector]:
        spec = self.price_spec()
        if isinstance(spec, str):
            return None
        prices = PriceVector(tuple(spec))
        try:
            prices.validate(config)
        except ValueError as exc:
            raise ScenarioValidationError(f"prices: {exc}") from exc
        return prices

    def outsourcing(self) -> OutsourcingScenario:
        o = self.section("outsourcing")
        try:
            return OutsourcingScenario(
                tower_cost=o["tower_cost"],
                towerco_cost=o["towerco_cost"],
                fee_fraction=o["fee_fraction"],
                fees=None if "fees" not in o else tuple(o["fees"]),
                reputation_feedback=o.get("reputation_feedback", 0.0),
            )
        except ValueError as exc:
            raise ScenarioValidationError(f"outsourcing: {exc}") from exc


def parse_scenario_text(text: str) -> Scenario:
    """Parse and schema-check scenario JSON.

    Raises:
        ScenarioParseError: empty input or malformed JSON.
        ScenarioValidationError: schema violation, including unknown keys.
    """
    if not text.strip():
        raise ScenarioParseError("scenario file is empty")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"invalid JSON: {exc}") from exc
    try:
        jsonschema.validate(data, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioValidationError(f"{where}: {exc.message}") from exc
    return Scenario(data)


def load_scenario(path: str | Path) -> Scenario:
    """Read a scenario file; I/O failures propagate as ``OSError``."""
    return parse_scenario_text(Path(path).read_text(encoding="utf-8"))
