"""Lossy quantum-walk chain toolkit.

Builds the dissipative two-sublattice walk Hamiltonian and its related chain
models, integrates the dynamics, resolves where the walker's probability is
lost, solves the evolution order by order in closed form, and decomposes it
into biorthogonal eigenmodes.
"""

from .dynamics import (DecayProfile, Trajectory, decay_profile, evolve,
                       evolve_spectral, initial_state, loss_rate)
from .errors import (CoefficientOverflowError, EdgeBurstError,
                     ExceptionalPointError, NonConvergenceError)
from .lattice import (LatticeParams, Site, SymmetryReport, bloch_factor,
                      bloch_magnitude, build_h0, build_hprime, build_model,
                      build_transform, build_walk_hamiltonian, check_symmetry,
                      flat_index, in_neighbors, site_of)
from .perturbation import (ExpPoly, OrderedAmplitudes, amplitude,
                           convergence_window, exppoly_integrate0,
                           final_step_amplitude, iterate_order,
                           main_path_edge, solve_perturbation)
from .presets import PRESETS, preset_params
from .spectral import (ModeExpansion, ModeSet, SpectrumDiagnostics, eig,
                       expand, propagate, select_by_im, spectrum_diagnostics)

__version__ = "0.1.0"

__all__ = [
    "CoefficientOverflowError", "DecayProfile", "EdgeBurstError", "ExpPoly",
    "ExceptionalPointError", "LatticeParams", "ModeExpansion", "ModeSet",
    "NonConvergenceError", "OrderedAmplitudes", "PRESETS", "Site",
    "SpectrumDiagnostics", "SymmetryReport", "Trajectory", "amplitude",
    "bloch_factor", "bloch_magnitude", "build_h0", "build_hprime",
    "build_model", "build_transform", "build_walk_hamiltonian",
    "check_symmetry", "convergence_window", "decay_profile", "eig",
    "evolve", "evolve_spectral", "expand", "exppoly_integrate0",
    "final_step_amplitude", "flat_index", "in_neighbors", "initial_state",
    "iterate_order", "loss_rate", "main_path_edge", "preset_params",
    "propagate", "select_by_im", "site_of", "solve_perturbation",
    "spectrum_diagnostics",
]
