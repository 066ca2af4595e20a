"""Explicit approximate k-designs on n qubits via derandomized squaring."""

from .design import DesignSpec, Seed, build_design, enumerate_design_moment, lift_to_full_group, sample_circuit
from .gates import BaseSet, Circuit, Gate, base_set, embed_gate, gate_matrix
from .linalg import haar_sample, make_rng, matrix_norm, partial_trace, tensor
from .moments import MomentSpec, design_error, moment_operator, rho_kk, spectral_gap
from .schur_weyl import Matching, enumerate_matchings, haar_projector, matching_gram, phi_state
from .walks import CascadeParams, Symbol, cascade_params, eval_monomial, walk_symbol

__version__ = "0.1.0"
