"""Top-level package for bandwidth_market."""

__author__ = """bandwidth_market developers"""
__email__ = "bandwidth-market@users.noreply.github.com"
__version__ = "0.1.0"
