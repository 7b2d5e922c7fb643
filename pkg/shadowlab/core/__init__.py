"""Linear symplectic algebra: forms, projectors and the linear shadow formula."""

from shadowlab.core.symplectic import (
    SymplecticProjector,
    SymplecticSubspace,
    complex_structure,
    gram_volume,
    j_invariance_defect,
    linear_shadow_volume,
    omega_eval,
    omega_gram,
    omega_matrix,
    omega_power,
    orthonormal_basis,
    pfaffian,
    primitive_form,
    symplectic_complement,
    symplectic_defect,
    symplectic_projector,
    validate_symplectic,
    wirtinger_ratio,
)
from shadowlab.core.sampling import (
    j_invariant_pair,
    make_rng,
    random_symplectic,
    random_symplectic_subspace,
    random_unitary,
)

__all__ = [
    "SymplecticProjector",
    "SymplecticSubspace",
    "complex_structure",
    "gram_volume",
    "j_invariance_defect",
    "j_invariant_pair",
    "linear_shadow_volume",
    "make_rng",
    "omega_eval",
    "omega_gram",
    "omega_matrix",
    "omega_power",
    "orthonormal_basis",
    "pfaffian",
    "primitive_form",
    "random_symplectic",
    "random_symplectic_subspace",
    "random_unitary",
    "symplectic_complement",
    "symplectic_defect",
    "symplectic_projector",
    "validate_symplectic",
    "wirtinger_ratio",
]
