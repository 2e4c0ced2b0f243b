# -*- encoding: utf-8 -*-

"""Tools for validating config documents against the shipped json schemas"""

import os
import json
import functools
import logging
from typing import List

import jsonschema
from jsonschema.exceptions import ValidationError

from .constants import SCHEMA_DIR, FIELD_DESCRIPTIONS

logger = logging.getLogger("bandwidth_market.json_validation")


class ConfigError(ValueError):
    pass


@functools.lru_cache(maxsize=32)
def load_and_validate_schema(
    schema_path: str, schema_root: str = SCHEMA_DIR, return_validator: bool = False
):
    """
    Load the schema at `schema_path` (relative to `schema_root`, or absolute) and
    check that it is itself a valid draft 7 schema.

    Returns the schema dict, or a ready `Draft7Validator` if `return_validator` is set.
    """
    assert os.path.isabs(schema_root), "schema_root must be an absolute path"

    schema_path = os.path.join(schema_root, schema_path)
    with open(schema_path) as schema_file:
        try:
            schema = json.load(schema_file)
        except Exception as e:
            raise Exception(f"Failed loading json {schema_path}") from e

    jsonschema.Draft7Validator.check_schema(schema)

    if not return_validator:
        return schema
    return jsonschema.Draft7Validator(schema)


REQUIRED_PROPERTY_MSG = " is a required property"
ADDITIONAL_PROPERTY_MSG = "Additional properties are not allowed"


def _describe(field) -> str:
    description = FIELD_DESCRIPTIONS.get(field)
    return f"{field} ({description})" if description else str(field)


def format_validation_error(e: ValidationError) -> str:
    """Produce a short(er), human-friendly(er) jsonschema.ValidationError message."""

    def build_message(field: str):
        message = e.message
        if REQUIRED_PROPERTY_MSG in e.message:
            prop_name = e.message.split(REQUIRED_PROPERTY_MSG)[0]
            message = f"missing required property {prop_name}"
        elif ADDITIONAL_PROPERTY_MSG in e.message:
            # the instance is the whole document here
            return f"error on {field}: {message}"

        return f"error on {field}={e.instance}: {message}"

    depth = len(e.absolute_path)

    if depth == 0:
        return build_message("[root]")
    if depth == 1:
        return build_message(_describe(e.absolute_path[0]))

    # Handle list-valued fields, going up in depth until a named property is found
    field = ""
    for path_part in list(e.absolute_path)[::-1]:
        if isinstance(path_part, int):
            field = f"[{path_part}]{field}"
        else:
            field = f"{_describe(path_part)}{field}"
            break

    return build_message(field)


def iter_error_messages(doc: dict, schema_name: str):
    validator = load_and_validate_schema(schema_name, return_validator=True)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    for error in errors:
        yield format_validation_error(error)


def validate_document(doc: dict, schema_name: str) -> dict:
    """
    Validate `doc` against the schema named `schema_name` in the schemas directory.

    Raises:
        ConfigError listing every validation failure, one per line
    """
    if not isinstance(doc, dict):
        raise ConfigError(
            f"error on [root]: expected a mapping of fields, got {type(doc).__name__}"
        )

    messages: List[str] = list(iter_error_messages(doc, schema_name))
    if messages:
        for message in messages:
            logger.debug(f"{schema_name}: {message}")
        raise ConfigError("\n".join(messages))

    return doc
