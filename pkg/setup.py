#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""The setup script."""

from setuptools import setup, find_packages

with open("README.md") as readme_file:
    readme = readme_file.read()

with open("requirements.txt") as f:
    requirements = f.read().splitlines()

from bandwidth_market import __author__, __email__, __version__

setup(
    author=__author__,
    author_email=__email__,
    classifiers=[
        "Development Status :: 2 - Pre-Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Natural Language :: English",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
    ],
    description="A simulated market for network bandwidth and tools for fitting mean-reverting price models to it.",
    python_requires=">=3.8",
    install_requires=requirements,
    license="MIT license",
    long_description=readme,
    long_description_content_type="text/markdown",
    include_package_data=True,
    package_data={"bandwidth_market": ["schemas/*.json", "topologies/*.txt"]},
    keywords="bandwidth_market",
    name="bandwidth_market",
    packages=find_packages(include=["bandwidth_market"]),
    test_suite="tests",
    version=__version__,
    zip_safe=False,
    entry_points={"console_scripts": ["bandwidth_market=bandwidth_market.cli:main"]},
)
