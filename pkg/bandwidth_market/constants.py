__all__ = [
    "SCHEMA_DIR",
    "TOPOLOGY_DIR",
    "DEFAULT_TOPOLOGY_PATH",
    "SIMULATION_CONFIG_SCHEMA",
    "SWEEP_SCHEMA",
    "DEFAULT_PARAMETERS",
]

import os

PACKAGE_DIR = os.path.dirname(os.path.abspath(__file__))
SCHEMA_DIR = os.path.join(PACKAGE_DIR, "schemas")
TOPOLOGY_DIR = os.path.join(PACKAGE_DIR, "topologies")
DEFAULT_TOPOLOGY_PATH = os.path.join(TOPOLOGY_DIR, "default.txt")

SIMULATION_CONFIG_SCHEMA = "simulation_config.json"
SWEEP_SCHEMA = "sweep.json"

# Standard simulation parameters; config fields left out fall back to these
DEFAULT_PARAMETERS = {
    "N": 10,
    "M": 10,
    "L": 1000,
    "dt": 0.01,
    "m": 10,
    "D": 10,
    "K": 2.0,
    "C_unit": 100.0,
    "C_max": 1.0,
    "lambda": 10.0,
    "S0": 10.0,
    "topology": "default",
    "seed": 1,
    "cash_pricing": "impact",
    "close_out": True,
}

# Human-readable meaning of config fields, used in validation messages
FIELD_DESCRIPTIONS = {
    "N": "number of routers",
    "M": "number of users",
    "L": "number of time steps",
    "dt": "time step length",
    "m": "new demands per step",
    "D": "maximum demand duration",
    "K": "capacity exponent",
    "C_unit": "reward per capacity unit",
    "C_max": "budget multiplier",
    "lambda": "market liquidity",
    "S0": "initial price",
    "topology": "router topology",
    "seed": "random seed",
    "cash_pricing": "cash pricing rule",
    "close_out": "forced close-out at final step",
    "seeds": "random seeds",
    "config": "base config path",
}

DEFAULT_HISTOGRAM_BINS = 15
DEFAULT_DECAY_GUARD = 0.05
DEFAULT_MAX_DECAY_FIT_LAG = 20
