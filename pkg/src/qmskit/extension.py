"""Extension of GNS-symmetric generators from a subalgebra to the ambient
matrix algebra, plus classical reversible-chain import.

Given a generator L on a modular-invariant subalgebra N and an ambient
faithful state whose restriction to N is the reference state of L, the
extension is

    L_hat(x) = k x + x k - Phi(E(x)),

where Phi comes from the symmetric Christensen-Evans form of L computed
inside N, k = Phi(1)/2 = (xi | xi) is positive and lies in the centralizer
of the ambient state, and E is the state-preserving conditional
expectation onto N.  The extension restricts back to L on N, satisfies the
ambient detailed balance condition, and is conditionally negative
definite.

Reversible Markov chains enter through ``ChainSpec``: the chain Laplacian
L f(x) = sum_y Q(x, y) (f(x) - f(y)) on the diagonal subalgebra is
GNS-symmetric for sigma = diag(m) exactly when Q(x,y) m(x) = Q(y,x) m(y).
For the diagonal chain the generic extension reproduces

    L_hat(A) = sum_{j,k} Q(j,k) ( (E_jj A + A E_jj)/2 - A_kk E_jj ).
"""

from dataclasses import dataclass, field

import numpy as np

from ._linalg import dag, frob, left_mult_superop, right_mult_superop, vec, unvec
from .algebra import (
    CondExpectation,
    MatAlgebra,
    conditional_expectation,
    diagonal_algebra,
    full_matrix_algebra,
    restricted_state_density,
)
from .bimodule import build_gns_bimodule, mvalued_inner
from .ceform import phi_apply, run_xi_pipeline
from .config import default_tol
from .errors import DimensionMismatch, NotSymmetric, QmsError, StateMismatch
from .modular import StateData, centralizer_check
from .superop import QMSGenerator, SuperOp, gns_symmetric_check, semigroup

__all__ = [
    "ChainSpec",
    "chain_to_generator",
    "ExtensionResult",
    "extend_generator",
    "restrict_check",
]


@dataclass
class ChainSpec:
    """A finite Markov chain: probability vector m and rate matrix Q."""

    m: np.ndarray
    q: np.ndarray
    symmetric: bool = True

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        n = self.m.size
        if self.q.shape != (n, n):
            raise DimensionMismatch("rate matrix shape does not match the state space")
        if np.any(self.m <= 0):
            raise QmsError("the probability vector must have full support")
        if abs(self.m.sum() - 1.0) > 1e-12:
            raise QmsError("the probability vector must sum to 1")
        if np.any(self.q < 0) or np.any(np.abs(np.diag(self.q)) > 0):
            raise QmsError("rates must be nonnegative with zero diagonal")
        if self.symmetric and self.reversibility_residual() > 1e-12:
            raise QmsError(
                f"chain is not reversible, residual {self.reversibility_residual():.2e}"
            )

    @property
    def size(self) -> int:
        return self.m.size

    def reversibility_residual(self) -> float:
        flux = self.q * self.m[:, None]
        return float(np.max(np.abs(flux - flux.T)))

    def laplacian(self) -> np.ndarray:
        """Classical generator matrix (Lf)(x) = sum_y Q(x,y)(f(x) - f(y))."""
        return np.diag(self.q.sum(axis=1)) - self.q


def chain_to_generator(chain: ChainSpec) -> QMSGenerator:
    """The chain Laplacian as a generator on the diagonal subalgebra of M_n.

    The superoperator acts as the Laplacian on diagonal matrices and as
    zero on the HS-orthogonal complement, which keeps it GNS-symmetric on
    the ambient algebra exactly when the chain is reversible.
    """
    n = chain.size
    lap = chain.laplacian()
    mat = np.zeros((n * n, n * n), dtype=complex)
    for j in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[j, j] = 1.0
        image = np.diag(lap @ np.eye(n)[:, j])
        mat[:, vec_index(j, j, n)] = vec(image)
    gen = QMSGenerator(
        op=SuperOp(mat, n),
        sigma=StateData.diagonal(chain.m),
        algebra=diagonal_algebra(n),
    )
    gen.validate()
    return gen


def vec_index(row: int, col: int, n: int) -> int:
    """Index of entry (row, col) in the column-stacking vectorization."""
    return col * n + row


@dataclass
class ExtensionResult:
    """Extension data: the ambient generator with its building blocks."""

    gen: QMSGenerator
    k: np.ndarray
    phi: SuperOp  # Phi o E on the ambient algebra
    expectation: CondExpectation
    residuals: dict = field(default_factory=dict)


def extend_generator(
    sub_gen: QMSGenerator,
    ambient: MatAlgebra,
    ambient_state: StateData,
    tol: float | None = None,
) -> ExtensionResult:
    """Extend a GNS-symmetric generator from its subalgebra to the ambient
    algebra, preserving the detailed balance condition.

    Preconditions (each checked): the subalgebra is modular invariant for
    the ambient state (Takesaki), the restriction of the ambient state
    agrees with the generator's reference state, and the generator is
    GNS-symmetric on the subalgebra.
    """
    tol = default_tol() if tol is None else tol
    sub = sub_gen.algebra
    if sub is None:
        raise QmsError("the generator must name its subalgebra")
    n = ambient.ambient_dim
    if sub.ambient_dim != n or ambient_state.dim != n:
        raise DimensionMismatch("subalgebra, ambient algebra and state dimensions differ")

    # conditional expectation first: raises ModularInvarianceViolated when
    # the Takesaki precondition fails
    expectation = conditional_expectation(ambient, sub, ambient_state, tol=tol)

    rho = restricted_state_density(sub, ambient_state)
    if sub_gen.sigma is not None:
        gap = frob(rho - sub_gen.sigma.sigma)
        if gap > 1e-10:
            raise StateMismatch(
                f"ambient state restriction differs from the reference state by {gap:.2e}"
            )
    restricted = StateData(rho / float(np.trace(rho).real))

    rep = build_gns_bimodule(sub, sub_gen, restricted, tol=tol)
    xi = run_xi_pipeline(rep)
    k = mvalued_inner(rep, xi.vec, xi.vec)  # = Phi(1) / 2

    resid = {
        "k_hermitian": frob(k - dag(k)),
        "k_positive": float(max(0.0, -np.linalg.eigvalsh((k + dag(k)) / 2).min())),
        "k_centralizer": centralizer_check(ambient_state, k),
        "xi_implementation": xi.residuals.get("implementation_i", np.nan),
    }

    # L_hat = k x + x k - Phi(E(x)) assembled column by column
    phi_mat = np.zeros((n * n, n * n), dtype=complex)
    for col in range(n * n):
        x = unvec(np.eye(n * n, dtype=complex)[:, col], n)
        phi_mat[:, col] = vec(phi_apply(rep, xi, expectation(x)))
    phi_comp = SuperOp(phi_mat, n)
    mat = left_mult_superop(k) + right_mult_superop(k) - phi_mat

    gen_hat = QMSGenerator.from_superop(SuperOp(mat, n), ambient_state, tol=tol)

    resid["restriction"] = restrict_check(gen_hat, sub_gen, expectation)["generator"]
    resid["gns_symmetric"] = gns_symmetric_check(gen_hat.op, ambient_state)
    resid["phi_one_minus_2k"] = frob(phi_comp(np.eye(n, dtype=complex)) - 2 * k)
    scale = max(1.0, gen_hat.op.norm())
    if resid["gns_symmetric"] > 100 * tol * scale:
        raise NotSymmetric(
            f"extension lost GNS symmetry, residual {resid['gns_symmetric']:.2e}"
        )
    return ExtensionResult(
        gen=gen_hat, k=k, phi=phi_comp, expectation=expectation, residuals=resid
    )


def restrict_check(
    ambient_gen: QMSGenerator,
    sub_gen: QMSGenerator,
    expectation: CondExpectation | None = None,
    t_grid=(0.1, 1.0),
) -> dict:
    """Residuals of L_hat|_N = L and of the semigroup-level restriction
    E o exp(-t L_hat) = exp(-t L) on subalgebra elements."""
    sub = sub_gen.algebra
    resid = {"generator": 0.0, "semigroup": 0.0}
    for b in sub.basis:
        resid["generator"] = max(resid["generator"], frob(ambient_gen(b) - sub_gen(b)))
    for t in t_grid:
        p_hat = semigroup(ambient_gen, t)
        p_sub = semigroup(sub_gen, t)
        for b in sub.basis:
            lifted = p_hat(b)
            if expectation is not None:
                lifted = expectation(lifted)
            resid["semigroup"] = max(resid["semigroup"], frob(lifted - p_sub(b)))
    return resid
