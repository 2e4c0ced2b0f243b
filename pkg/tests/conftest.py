# -*- coding: utf-8 -*-

"""Global test configuration and shared fixtures"""

import sys
import logging

import pytest

from bandwidth_market.config import build_config
from bandwidth_market.topology import Topology

# Set logger config to hide DEBUG statements for now
logging.basicConfig(stream=sys.stdout, level=logging.INFO)


@pytest.fixture
def line_topology():
    """0 - 1 - 2"""
    return Topology(3, [(0, 1), (1, 2)])


@pytest.fixture
def diamond_topology():
    """Two equal-length routes from 0 to 3: via 1 and via 2."""
    return Topology(4, [(0, 1), (0, 2), (1, 3), (2, 3)])


@pytest.fixture
def small_config():
    """A short run on the default network that still trades every step."""
    return build_config({"L": 50, "M": 4, "m": 5, "D": 5, "seed": 3})


@pytest.fixture
def tiny_config(line_topology, tmp_path):
    """Three routers in a line, one user, deterministic enough to trace by hand."""
    path = tmp_path / "line.txt"
    path.write_text(line_topology.to_text())
    return build_config(
        {"topology": str(path), "M": 1, "m": 1, "L": 5, "D": 2, "seed": 0}
    )
