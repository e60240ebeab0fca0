"""Qutrit vs qubit counterdiabatic optimisation: encodings, gauge-potential driving, dynamics and sweeps."""

from __future__ import annotations

from .algebra import HamiltonianTerms, Label, SiteOperator, Term, commutator, frobenius_norm_sq
from .bench import PreparedProblem, SweepConfig, SweepRecord, prepare, run_sweep, simulate, summarize
from .driving import CounterdiabaticDriver, Schedule, TimeDependentHamiltonian, agp_coefficients
from .dynamics import EvolutionConfig, EvolutionResult, energy_error, enhancement, evolve, spectrum_trace
from .dynamics import success_probability
from .encodings import GroundTruth, brute_force, classical_cost, encode, initial_hamiltonian
from .instances import GraphInstance, PartitionInstance, PortfolioInstance, random_instance, reference_instance

__version__ = "0.1.0"
