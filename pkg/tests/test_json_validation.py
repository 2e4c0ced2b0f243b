#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Tests for schema loading and validation messages."""

import pytest
import jsonschema

from bandwidth_market.json_validation import (
    ConfigError,
    format_validation_error,
    iter_error_messages,
    load_and_validate_schema,
    validate_document,
)
from bandwidth_market.constants import SIMULATION_CONFIG_SCHEMA, SWEEP_SCHEMA


def test_load_returns_validator():
    validator = load_and_validate_schema(SWEEP_SCHEMA, return_validator=True)
    assert isinstance(validator, jsonschema.Draft7Validator)


def test_load_relative_root():
    with pytest.raises(AssertionError, match="absolute path"):
        load_and_validate_schema(SWEEP_SCHEMA, schema_root="schemas")


def test_format_validation_error_names_field():
    validator = load_and_validate_schema(SIMULATION_CONFIG_SCHEMA, return_validator=True)
    error = next(validator.iter_errors({"L": 0}))
    assert format_validation_error(error).startswith(
        "error on L (number of time steps)=0:"
    )


def test_format_required_and_additional():
    validator = load_and_validate_schema(SWEEP_SCHEMA, return_validator=True)
    messages = [
        format_validation_error(e)
        for e in validator.iter_errors({"lambda": [1.0], "C_max": [1.0], "sede": 1})
    ]
    assert any("missing required property 'seeds'" in m for m in messages)
    assert any("Additional properties are not allowed" in m for m in messages)


def test_list_item_error_path():
    """Errors inside a list name the field and the offending index"""
    messages = list(
        iter_error_messages({"lambda": [1.0, -2.0], "C_max": [1.0], "seeds": [1]}, SWEEP_SCHEMA)
    )
    assert len(messages) == 1
    assert messages[0].startswith("error on lambda (market liquidity)[1]=-2.0")


def test_validate_document():
    doc = {"L": 10, "seed": 3}
    assert validate_document(doc, SIMULATION_CONFIG_SCHEMA) is doc

    # every failure is reported at once
    with pytest.raises(ConfigError) as e:
        validate_document({"L": 0, "dt": -1.0, "cash_pricing": "free"}, SIMULATION_CONFIG_SCHEMA)
    lines = str(e.value).split("\n")
    assert len(lines) == 3
    assert lines[0].startswith("error on L")
    assert lines[1].startswith("error on cash_pricing")
    assert lines[2].startswith("error on dt")

    with pytest.raises(ConfigError, match="expected a mapping"):
        validate_document([1, 2], SIMULATION_CONFIG_SCHEMA)


@pytest.mark.parametrize(
    "doc,field",
    [
        ({"lambda": 0}, "lambda"),
        ({"lambda": [10.0, -1.0]}, "lambda"),
        ({"S0": -3}, "S0"),
        ({"C_max": -0.5}, "C_max"),
        ({"N": 1}, "N"),
        ({"seed": -1}, "seed"),
        ({"close_out": "yes"}, "close_out"),
        ({"topology": ""}, "topology"),
    ],
)
def test_invalid_fields(doc, field):
    with pytest.raises(ConfigError, match=f"error on {field}"):
        validate_document(doc, SIMULATION_CONFIG_SCHEMA)
