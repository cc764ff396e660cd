"""Numerical laboratory for Prüfer dynamics of the Stark operator with periodic delta couplings."""

from .coarse import classify_energy, coarse_run, convergence_diagnostic, extract_coarse, predict_l_step
from .expsum import ExpSumSpec, GaussSumSpec, cubic_gauss_sum, double_sum, precise_asymptotic, raw_expsum
from .oscillatory import PhaseProblem, nonstationary_expansion, quadrature_oracle, stationary_expansion
from .propagation import CellState, TransferSU11, propagate_cell, run_transfer
from .prufer import PruferState, ResonanceGrid, build_resonance_grid, run_prufer
from .random import CouplingSampler, mc_radius_exponent, detect_subordinate, transition_scan
from .special import ModelParams, ReferenceSolution, airy, gamma_asymptotic, gamma_phase, zeta

__all__ = [
    "CellState",
    "CouplingSampler",
    "ExpSumSpec",
    "GaussSumSpec",
    "ModelParams",
    "PhaseProblem",
    "PruferState",
    "ReferenceSolution",
    "ResonanceGrid",
    "TransferSU11",
    "airy",
    "build_resonance_grid",
    "classify_energy",
    "coarse_run",
    "convergence_diagnostic",
    "cubic_gauss_sum",
    "detect_subordinate",
    "double_sum",
    "extract_coarse",
    "gamma_asymptotic",
    "gamma_phase",
    "mc_radius_exponent",
    "nonstationary_expansion",
    "precise_asymptotic",
    "predict_l_step",
    "propagate_cell",
    "quadrature_oracle",
    "raw_expsum",
    "run_prufer",
    "run_transfer",
    "stationary_expansion",
    "transition_scan",
    "zeta",
]
__version__ = "0.1.0"
