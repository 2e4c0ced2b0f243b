# -*- coding: utf-8 -*-

"""Loading simulation configs from YAML and describing finished runs."""

import os
import logging
from typing import Any, Dict, NamedTuple, Optional, Tuple

import yaml

from . import __version__
from .constants import DEFAULT_PARAMETERS, FIELD_DESCRIPTIONS, SIMULATION_CONFIG_SCHEMA
from .json_validation import ConfigError, validate_document
from .topology import Topology, default_topology, load_topology_file

logger = logging.getLogger("bandwidth_market.config")

__all__ = [
    "ConfigError",
    "SimulationConfig",
    "RunManifest",
    "build_config",
    "load_config",
    "load_yaml",
    "load_manifest",
    "config_from_manifest",
]


class SimulationConfig(NamedTuple):
    N: int
    M: int
    L: int
    dt: float
    m: int
    D: int
    K: float
    C_unit: float
    C_max: float
    liquidity: Tuple[float, ...]
    initial_prices: Tuple[float, ...]
    topology: Topology
    seed: int
    cash_pricing: str = "impact"
    close_out: bool = True

    def with_liquidity(self, liquidity: float) -> "SimulationConfig":
        """A copy of this config with every market at the same liquidity."""
        return self._replace(liquidity=(float(liquidity),) * self.N)

    def to_document(self, topology_ref: str = "default") -> Dict[str, Any]:
        """
        Render the config as a plain document that `build_config` accepts.
        `topology_ref` is written as the topology field.
        """
        return {
            "N": self.N,
            "M": self.M,
            "L": self.L,
            "dt": self.dt,
            "m": self.m,
            "D": self.D,
            "K": self.K,
            "C_unit": self.C_unit,
            "C_max": self.C_max,
            "lambda": _collapse(self.liquidity),
            "S0": _collapse(self.initial_prices),
            "topology": topology_ref,
            "seed": self.seed,
            "cash_pricing": self.cash_pricing,
            "close_out": self.close_out,
        }


def _collapse(values: Tuple[float, ...]):
    return values[0] if len(set(values)) == 1 else list(values)


def _field_error(field: str, value, message: str) -> ConfigError:
    return ConfigError(
        f"error on {field} ({FIELD_DESCRIPTIONS[field]})={value}: {message}"
    )


def _per_market(field: str, value, n_nodes: int) -> Tuple[float, ...]:
    if isinstance(value, list):
        if len(value) != n_nodes:
            raise _field_error(
                field, value, f"expected {n_nodes} values, one per router, got {len(value)}"
            )
        return tuple(float(v) for v in value)
    return (float(value),) * n_nodes


def _resolve_topology(ref: str, base_dir: Optional[str]) -> Topology:
    if ref == "default":
        return default_topology()

    path = ref if os.path.isabs(ref) else os.path.join(base_dir or os.getcwd(), ref)
    try:
        return load_topology_file(path)
    except OSError as e:
        raise _field_error("topology", ref, f"cannot read {path}: {e}") from e


def build_config(
    doc: Optional[Dict[str, Any]] = None, base_dir: Optional[str] = None, **overrides
) -> SimulationConfig:
    """
    Validate a config document and build a `SimulationConfig` from it.

    Missing fields take the standard values from `DEFAULT_PARAMETERS`, except N,
    which defaults to the topology's node count. Keyword `overrides` replace
    document fields before validation. Relative topology paths resolve against
    `base_dir` (the current directory if unset).

    Raises:
        ConfigError naming the offending field
        TopologyError if the topology file is malformed
    """
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(
            f"error on [root]: expected a mapping of fields, got {type(doc).__name__}"
        )
    doc = dict(doc)
    doc.update({k: v for k, v in overrides.items() if v is not None})
    validate_document(doc, SIMULATION_CONFIG_SCHEMA)

    merged = {**DEFAULT_PARAMETERS, **doc}
    topology = _resolve_topology(merged["topology"], base_dir)

    n_nodes = int(doc.get("N", topology.n_nodes))
    if n_nodes < 2:
        raise _field_error("N", n_nodes, "demands need at least 2 routers")
    if n_nodes != topology.n_nodes:
        raise _field_error(
            "N",
            n_nodes,
            f"topology {merged['topology']!r} has {topology.n_nodes} routers",
        )

    config = SimulationConfig(
        N=n_nodes,
        M=int(merged["M"]),
        L=int(merged["L"]),
        dt=float(merged["dt"]),
        m=int(merged["m"]),
        D=int(merged["D"]),
        K=float(merged["K"]),
        C_unit=float(merged["C_unit"]),
        C_max=float(merged["C_max"]),
        liquidity=_per_market("lambda", merged["lambda"], n_nodes),
        initial_prices=_per_market("S0", merged["S0"], n_nodes),
        topology=topology,
        seed=int(merged["seed"]),
        cash_pricing=merged["cash_pricing"],
        close_out=bool(merged["close_out"]),
    )
    logger.debug(f"Built {config}")
    return config


def load_yaml(path: str) -> Dict[str, Any]:
    try:
        with open(path) as f:
            doc = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"{path} is not valid YAML: {e}") from e

    return {} if doc is None else doc


def load_config(path: Optional[str] = None, **overrides) -> SimulationConfig:
    """
    Load a YAML simulation config. With no `path`, the standard parameters are
    used. `overrides` (e.g. seed=7) take precedence over the file.
    """
    if path is None:
        return build_config(None, None, **overrides)

    doc = load_yaml(path)
    logger.info(f"Loaded config from {path}")
    return build_config(doc, os.path.dirname(os.path.abspath(path)), **overrides)


class RunManifest(NamedTuple):
    """Everything needed to regenerate a run: its config, seed and output files."""

    config: Dict[str, Any]
    seed: int
    artifacts: Dict[str, str]
    version: str = __version__

    def to_document(self) -> Dict[str, Any]:
        return {
            "version": self.version,
            "seed": self.seed,
            "config": self.config,
            "artifacts": self.artifacts,
        }


def load_manifest(path: str) -> RunManifest:
    doc = load_yaml(path)
    try:
        return RunManifest(
            config=doc["config"],
            seed=doc["seed"],
            artifacts=doc.get("artifacts", {}),
            version=doc.get("version", __version__),
        )
    except (KeyError, TypeError) as e:
        raise ConfigError(f"{path} is not a run manifest: missing {e}") from e


def config_from_manifest(path: str) -> SimulationConfig:
    manifest = load_manifest(path)
    return build_config(
        manifest.config, os.path.dirname(os.path.abspath(path)), seed=manifest.seed
    )
