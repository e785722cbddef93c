"""Complexity bounds for noisy quantum circuit classes.

Channels are handled as Pauli transfer matrices; class complexities are
empirical Rademacher complexities of function tables; robustness quantities
are small linear programs.
"""

from .bounds import BoundsReport, Estimator
from .channels import (
    MixedUnitaryChannel,
    QuasiChannel,
    dephasing,
    depolarizing,
    recovery_dephasing,
    recovery_depolarizing,
)
from .circuits import CircuitStructure, enumerate_class, gate_set
from .errors import NoisyRadError
from .lp import free_robustness, gamma_class, l1_recovery_norm, lp_solve
from .norms import group_norm, one_inf_norm
from .pauli import PauliString, RepVector, TransferMatrix, rep_vector, transfer_matrix
from .rademacher import rademacher_exact, rademacher_mc

__version__ = "0.1.0"
