"""
nilflow - certified numerics for nilpotent group actions

Exact-rational interval arithmetic for C1 actions of unipotent integer
matrix groups on the interval and the circle, a C-infinity nilpotent
staircase action on the line, PL homeomorphisms of [0, 1] and translation
numbers with respect to atomic invariant measures.
"""

__version__ = "0.3.1"
__author__ = "nilflow Contributors"

from nilflow.core.certified_reals import Enclosure
from nilflow.core.lattice_series import SeriesContext, total_mass
from nilflow.core.nilaction import ActionContext, calibrate_K, g_apply, g_deriv
from nilflow.core.staircase import parse_staircase_word, stair_apply
from nilflow.core.unipotent import GroupWord, LatticePoint, UnipotentMatrix

__all__ = [
    "Enclosure",
    "SeriesContext",
    "total_mass",
    "ActionContext",
    "calibrate_K",
    "g_apply",
    "g_deriv",
    "parse_staircase_word",
    "stair_apply",
    "GroupWord",
    "LatticePoint",
    "UnipotentMatrix",
]
