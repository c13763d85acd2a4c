"""Numeric and algebraic engines."""

from nilflow.core.certified_reals import Enclosure, certify, settle
from nilflow.core.dynamics import AtomicMeasure, EvaluableMap, tau_report, translation_number
from nilflow.core.lattice_series import SeriesContext, downset_mass, prefix_mass, total_mass
from nilflow.core.nilaction import ActionContext, calibrate_K, g_apply, g_deriv, unit_action
from nilflow.core.plmaps import PLHomeo, endpoint_character, pl_commutator, pl_compose, pl_inverse
from nilflow.core.staircase import StaircaseElement, nilpotency_witness, stair_apply
from nilflow.core.tiling import Tile, locate, tile_interval
from nilflow.core.unipotent import GroupWord, LatticePoint, UnipotentMatrix, word_eval
from nilflow.core.yoccoz import PhiParams, phi_apply, phi_deriv

__all__ = [
    "Enclosure",
    "certify",
    "settle",
    "AtomicMeasure",
    "EvaluableMap",
    "tau_report",
    "translation_number",
    "SeriesContext",
    "downset_mass",
    "prefix_mass",
    "total_mass",
    "ActionContext",
    "calibrate_K",
    "g_apply",
    "g_deriv",
    "unit_action",
    "PLHomeo",
    "endpoint_character",
    "pl_commutator",
    "pl_compose",
    "pl_inverse",
    "StaircaseElement",
    "nilpotency_witness",
    "stair_apply",
    "Tile",
    "locate",
    "tile_interval",
    "GroupWord",
    "LatticePoint",
    "UnipotentMatrix",
    "word_eval",
    "PhiParams",
    "phi_apply",
    "phi_deriv",
]
