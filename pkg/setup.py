# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Setup configuration for vdatherm.

This makes the package pip-installable.
"""
from pathlib import Path

from setuptools import find_packages, setup

this_directory = Path(__file__).parent
long_description = (this_directory / "README.md").read_text(encoding="utf-8")

install_requires = [
    "pydantic>=2.5.3",
    "pydantic-settings>=2.1.0",
    "structlog>=24.1.0",
    "numpy>=1.26",
    "scipy>=1.12",
    "pandas>=2.1",
]

dev_requires = [
    "pytest>=7.4.4",
    "pytest-cov>=4.1.0",
    "hypothesis>=6.92.2",
    "ruff>=0.1.11",
    "mypy>=1.8.0",
]

setup(
    name="vdatherm",
    version="0.1.0",
    author="vdatherm contributors",
    author_email="",
    description="Part-scale transient thermal simulation of powder-bed fusion builds",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*"]),
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Intended Audience :: Manufacturing",
        "Topic :: Scientific/Engineering :: Physics",
        "License :: OSI Approved :: GNU Affero General Public License v3",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
    ],
    python_requires=">=3.10",
    install_requires=install_requires,
    extras_require={
        "dev": dev_requires,
    },
    entry_points={
        "console_scripts": [
            "vdatherm=vdatherm.main:cli",
        ],
    },
    include_package_data=True,
    zip_safe=False,
)
