#!/usr/bin/env python3
"""
Setup script for nilflow - certified numerics for nilpotent group actions
"""

from pathlib import Path

from setuptools import find_packages, setup

HERE = Path(__file__).parent
TEST_ONLY = ("pytest", "hypothesis")


def read_requirements():
    lines = (HERE / "requirements.txt").read_text(encoding="utf-8").splitlines()
    return [line.strip() for line in lines if line.strip() and not line.startswith("#")]


requirements = read_requirements()

setup(
    name="nilflow",
    version="0.3.1",
    author="nilflow Contributors",
    description="Certified numerics for C1 nilpotent group actions on one-manifolds",
    long_description=(HERE / "README.md").read_text(encoding="utf-8"),
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    package_data={"nilflow.data": ["*.json"]},
    include_package_data=True,
    python_requires=">=3.9",
    install_requires=[r for r in requirements if not r.startswith(TEST_ONLY)],
    extras_require={"test": [r for r in requirements if r.startswith(TEST_ONLY)]},
    entry_points={
        "console_scripts": [
            "nilflow=nilflow.cli.cli:main",
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    zip_safe=False,
)
