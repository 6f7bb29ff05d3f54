"""Depth-2 circuits for Kronecker powers."""
from .core import (DFT, CapExceeded, Circuit, Disjointness, Hadamard, Identity, Literal, OrCirculant, SparseMatrix,
                   SparseVector, apply, circuit_kron, circuit_power, generate, kron, materialize, measure, verify)
from .partitions import (MERGED_A, MERGED_WORD, W1, W2, W3, RectangleFamily, as_circuit, merged_alpha_volume,
                         merged_partition, simple_alpha_volume, simple_partition, validate_partition)
from .semiring import OR, PAR, RATIONAL, Cyc, Semiring, cyclotomic, modp
from .spectrum import AlphaProfile, Envelope, build_schedule, expand_schedule, f_exact
from .solvers import PointSet, ov_count, ov_count_mod, ov_decide

__version__ = "0.1.0"
