"""Disorder-averaged transport of two-particle entangled states on chiral edges."""
__version__ = "0.1.0"

from .disorder import DisorderSpec, PotentialRealization, correlation, sample_potential, spectral_density
from .continuum import (ContinuumParams, CoherenceSlice, MomentumDistribution, evolve_slice, fbar,
                        fbar_scalar, influence, influence_quadrature, influence_single,
                        momentum_distribution)
from .states import StateKind, TwoParticleGaussianState, amplitude, paper_case
from .modular import (CriterionReport, ModularPartition, criterion_noon, criterion_rel,
                      modular_reduce_momentum, modular_reduce_position, visibility)
from .oracle import OracleConfig, averaged_coherence, phase_along_path
from .haldane import (HaldaneParams, LatticeHamiltonian, LatticeStateSpec, TwoParticleLatticeState,
                      bloch_bands, build_hamiltonian, edge_dispersion, ensemble_average, evolve,
                      initial_two_particle_state, noon_lattice_run)
