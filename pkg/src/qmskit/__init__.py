"""qmskit: numerical toolkit for GNS-symmetric quantum Markov semigroups on
finite-dimensional von Neumann algebras.

The pieces fit together as follows: ``algebra`` builds matrix *-algebras
with their Wedderburn blocks and conditional expectations; ``modular``
provides states and the modular apparatus in the Hilbert-Schmidt model;
``superop`` is the superoperator calculus (Choi, CND, GNS adjoints,
semigroups); ``bimodule`` realizes the GNS bimodule of a detailed-balance
generator with its modular unitaries, conjugation and the invariant
implementing vector; ``ceform`` produces the symmetric Christensen-Evans
form and the Alicki jump decomposition; ``extension`` lifts generators
from subalgebras; ``groupalg`` and ``fock`` cover group multiplier
semigroups and the depth-2 Fock verification; ``cli`` is the batch front
end (entry point ``qms``).
"""

from .algebra import (
    CondExpectation,
    MatAlgebra,
    algebra_from_generators,
    conditional_expectation,
    diagonal_algebra,
    full_matrix_algebra,
)
from .bimodule import (
    BimoduleRep,
    XiVector,
    build_gns_bimodule,
    haar_inner_vector,
    j_symmetrize,
    mvalued_inner,
    solve_inner_vector,
    vt_project,
)
from .ceform import (
    AlickiForm,
    alicki_decompose,
    ce_identity_check,
    generator_from_phi,
    phi_from_xi,
    rebuild_generator,
    run_xi_pipeline,
)
from .extension import ChainSpec, chain_to_generator, extend_generator, restrict_check
from .fock import CorrespondenceRep, FockRep, build_fock, gamma_identity_check, rel_tensor
from .groupalg import (
    GroupSpec,
    cocycle_from_length,
    cyclic_group,
    dihedral_d4,
    group_generator,
    group_xi_check,
    left_regular_algebra,
    symmetric_group_s3,
)
from .modular import (
    StateData,
    analytic_continuation,
    centralizer_check,
    delta_superop,
    gns_inner,
    kms_inner,
    modular_group,
)
from .superop import (
    QMSGenerator,
    SuperOp,
    carre_du_champ,
    choi,
    cnd_check,
    cnd_sampling_oracle,
    gns_adjoint,
    gns_matrix,
    gns_symmetric_check,
    kms_matrix,
    markov_check,
    modular_commutation_check,
    semigroup,
)

__version__ = "0.1.0"
