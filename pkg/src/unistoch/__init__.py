"""Unistochastic matrices, the Birkhoff polytope and complex Hadamard matrices."""

from .birkhoff import (
    PermutationMatrix,
    birkhoff_decompose,
    corner_census,
    is_extremal_edge,
    sample_uniform,
    van_der_waerden,
)
from .entangle import build_basis, cyclic_latin, verify_basis
from .hadamard import (
    circulant_hadamard,
    fourier,
    gauss_sequence,
    hadamard_family_n4,
    is_complex_hadamard,
    sylvester,
)
from .matcore import (
    BistochasticMatrix,
    DephasedUnitary,
    UnitaryMatrix,
    dephase,
    squared_moduli,
    unitarity_triangle_areas,
    validate_bistochastic,
)
from .unicheck import (
    Status,
    check,
    check_exact_n2,
    check_exact_n3,
    check_numerical,
    reconstruct_n3,
)

__version__ = "0.1.0"
