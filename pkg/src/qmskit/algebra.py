"""Complex matrix *-algebras: construction from generators, Wedderburn block
decomposition, and state-preserving conditional expectations.

An algebra is always kept in the embedded picture, as a unital *-subalgebra
M of the n x n matrices, with a Hilbert-Schmidt orthonormal basis.  The
block data records the isomorphism M = (+)_i  M_{n_i} kron 1_{m_i} through
explicit isometries W_i: C^{n_i} (x) C^{m_i} -> C^n, so that every x in M
satisfies x = sum_i W_i (x_i kron 1_{m_i}) W_i*.

Span closure uses repeated pairwise products with rank decisions by
singular values above 1e-12 times the largest (scale free).  Block
detection perturbs the center with a seeded random hermitian combination to
split degenerate eigenvalues.
"""

from dataclasses import dataclass

import numpy as np

from ._linalg import (
    dag,
    eigh_clustered,
    frob,
    haar_unitary,
    hs_inner,
    null_space,
    orthonormalize,
    vec,
    unvec,
)
from .config import RANK_TOL, default_tol
from .errors import (
    DimensionMismatch,
    ModularInvarianceViolated,
    QmsError,
    SpanClosureFailure,
)
from .modular import StateData, delta_superop

__all__ = [
    "Block",
    "MatAlgebra",
    "CondExpectation",
    "algebra_from_generators",
    "full_matrix_algebra",
    "diagonal_algebra",
    "conditional_expectation",
]


@dataclass
class Block:
    """One Wedderburn block M_{dim} kron 1_{mult} with its isometry."""

    dim: int
    mult: int
    isometry: np.ndarray  # n x (dim * mult), columns indexed (a, k) = a * mult + k

    @property
    def projection(self) -> np.ndarray:
        return self.isometry @ dag(self.isometry)


class MatAlgebra:
    """A unital *-subalgebra of the n x n matrices.

    ``basis`` is Hilbert-Schmidt orthonormal.  Immutable after
    construction; derived data (structure constants, adjoint matrix) is
    computed lazily and cached.
    """

    def __init__(self, ambient_dim: int, basis: list[np.ndarray], blocks: list[Block]):
        self.ambient_dim = ambient_dim
        self.basis = [np.asarray(b, dtype=complex) for b in basis]
        self.blocks = blocks
        self._cache: dict[str, np.ndarray] = {}

    @property
    def dim(self) -> int:
        return len(self.basis)

    def is_full(self) -> bool:
        return self.dim == self.ambient_dim**2

    # -- coordinates ---------------------------------------------------------

    def coeffs(self, x: np.ndarray) -> np.ndarray:
        """HS coordinates of x in the algebra basis (projection if x outside)."""
        return np.array([hs_inner(b, x) for b in self.basis])

    def to_matrix(self, coeffs: np.ndarray) -> np.ndarray:
        out = np.zeros((self.ambient_dim, self.ambient_dim), dtype=complex)
        for c, b in zip(coeffs, self.basis):
            out += c * b
        return out

    def project(self, x: np.ndarray) -> np.ndarray:
        """HS-orthogonal projection of x onto the algebra."""
        return self.to_matrix(self.coeffs(x))

    def contains(self, x: np.ndarray, tol: float | None = None) -> bool:
        tol = default_tol() if tol is None else tol
        return self.membership_residual(x) <= tol * max(1.0, frob(x))

    def membership_residual(self, x: np.ndarray) -> float:
        return frob(x - self.project(x))

    @property
    def unit_coeffs(self) -> np.ndarray:
        if "unit" not in self._cache:
            self._cache["unit"] = self.coeffs(np.eye(self.ambient_dim))
        return self._cache["unit"]

    @property
    def structure_constants(self) -> np.ndarray:
        """SC[a, b, m] with e_a e_b = sum_m SC[a, b, m] e_m."""
        if "sc" not in self._cache:
            d = self.dim
            sc = np.zeros((d, d, d), dtype=complex)
            for a in range(d):
                for b in range(d):
                    sc[a, b, :] = self.coeffs(self.basis[a] @ self.basis[b])
            self._cache["sc"] = sc
        return self._cache["sc"]

    @property
    def adjoint_matrix(self) -> np.ndarray:
        """AD[m, a] with e_a* = sum_m AD[m, a] e_m."""
        if "ad" not in self._cache:
            d = self.dim
            ad = np.zeros((d, d), dtype=complex)
            for a in range(d):
                ad[:, a] = self.coeffs(dag(self.basis[a]))
            self._cache["ad"] = ad
        return self._cache["ad"]

    def left_coeff_matrix(self, a: int) -> np.ndarray:
        """Matrix of left multiplication by e_a on basis coordinates."""
        return self.structure_constants[a, :, :].T

    def right_coeff_matrix(self, a: int) -> np.ndarray:
        """Matrix of right multiplication by e_a on basis coordinates."""
        return self.structure_constants[:, a, :].T

    # -- sampling ------------------------------------------------------------

    def haar_unitary(self, rng: np.random.Generator) -> np.ndarray:
        """Haar sample from the unitary group of the algebra, blockwise."""
        n = self.ambient_dim
        u = np.zeros((n, n), dtype=complex)
        for blk in self.blocks:
            ub = haar_unitary(blk.dim, rng)
            u += blk.isometry @ np.kron(ub, np.eye(blk.mult)) @ dag(blk.isometry)
        return u

    def random_element(self, rng: np.random.Generator, hermitian: bool = False) -> np.ndarray:
        c = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
        x = self.to_matrix(c)
        if hermitian:
            x = (x + dag(x)) / 2
        return x

    # -- validation ----------------------------------------------------------

    def validate(self, tol: float = 1e-10) -> dict:
        """Check the type invariants; returns the residual table."""
        resid = {}
        scale = max(1.0, max(frob(b) for b in self.basis))
        closure = 0.0
        for a in range(self.dim):
            for b in range(self.dim):
                prod = self.basis[a] @ self.basis[b]
                closure = max(closure, frob(prod - self.project(prod)))
            adj = dag(self.basis[a])
            closure = max(closure, frob(adj - self.project(adj)))
        resid["closure"] = closure
        resid["unit"] = frob(np.eye(self.ambient_dim) - self.project(np.eye(self.ambient_dim)))
        recon = 0.0
        for b in self.basis:
            recon = max(recon, frob(b - self._block_reconstruct(b)))
        resid["block_reconstruction"] = recon
        if max(resid.values()) > tol * scale:
            raise QmsError(f"algebra invariants violated: {resid}")
        return resid

    def _block_reconstruct(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(x)
        for blk in self.blocks:
            xi = self.block_component(x, blk)
            out += blk.isometry @ np.kron(xi, np.eye(blk.mult)) @ dag(blk.isometry)
        return out

    def block_component(self, x: np.ndarray, blk: Block) -> np.ndarray:
        """The n_i x n_i component of x in one block (partial trace over
        the multiplicity factor)."""
        compressed = dag(blk.isometry) @ x @ blk.isometry
        reshaped = compressed.reshape(blk.dim, blk.mult, blk.dim, blk.mult)
        return np.einsum("akbk->ab", reshaped) / blk.mult

    def block_signature(self) -> list[tuple[int, int]]:
        return sorted((b.dim, b.mult) for b in self.blocks)

    def __repr__(self) -> str:
        sig = ", ".join(f"M{d}x{m}" for d, m in self.block_signature())
        return f"MatAlgebra(n={self.ambient_dim}, dim={self.dim}, blocks=[{sig}])"


# ---------------------------------------------------------------------------
# Construction from generators
# ---------------------------------------------------------------------------

def _span_basis(mats: list[np.ndarray], n: int) -> np.ndarray:
    cols = np.column_stack([vec(m) for m in mats])
    return orthonormalize(cols)


def algebra_from_generators(
    gens: list[np.ndarray], seed: int = 0, rank_tol: float = RANK_TOL
) -> MatAlgebra:
    """Smallest unital *-subalgebra containing the generators.

    The basis is orthonormalized in the trace inner product; blocks are
    computed by diagonalizing a generic hermitian element of the center.
    """
    if not gens:
        raise DimensionMismatch("need at least one generator")
    gens = [np.asarray(g, dtype=complex) for g in gens]
    n = gens[0].shape[0]
    for g in gens:
        if g.shape != (n, n):
            raise DimensionMismatch("generators must all be square of equal dimension")

    seed_mats = [np.eye(n, dtype=complex)]
    for g in gens:
        seed_mats.append(g)
        seed_mats.append(dag(g))
    span = _span_basis(seed_mats, n)

    for _ in range(n * n):
        basis_mats = [unvec(span[:, i], n) for i in range(span.shape[1])]
        products = [a @ b for a in basis_mats for b in basis_mats]
        new_span = _span_basis(basis_mats + products, n)
        if new_span.shape[1] == span.shape[1]:
            span = new_span
            break
        span = new_span
    else:
        raise SpanClosureFailure("span closure did not stabilize within n^2 iterations")

    basis = [unvec(span[:, i], n) for i in range(span.shape[1])]
    blocks = _block_decompose(basis, n, seed=seed)
    alg = MatAlgebra(n, basis, blocks)
    alg.validate()
    return alg


def _center_basis(basis: list[np.ndarray], n: int) -> list[np.ndarray]:
    """Hermitian basis of the center of the algebra spanned by ``basis``."""
    d = len(basis)
    coeff_of = lambda x: np.array([hs_inner(b, x) for b in basis])
    # commutator map in coefficient space, stacked over all basis elements
    rows = []
    for b in basis:
        block = np.zeros((d, d), dtype=complex)
        for a in range(d):
            block[:, a] = coeff_of(basis[a] @ b - b @ basis[a])
        rows.append(block)
    # the basis is HS-orthonormal, so commutator coefficients live on an
    # O(1) scale; the absolute floor keeps commutative algebras full-kernel
    kern = null_space(np.vstack(rows), atol=1e-10)
    center = []
    for i in range(kern.shape[1]):
        z = sum(c * b for c, b in zip(kern[:, i], basis))
        center.append((z + dag(z)) / 2)
        center.append((z - dag(z)) / 2j)
    span = orthonormalize(np.column_stack([vec(z) for z in center])) if center else None
    if span is None or span.shape[1] == 0:
        raise SpanClosureFailure("center computation failed")
    return [unvec(span[:, i], n) for i in range(span.shape[1])]


def _block_decompose(basis: list[np.ndarray], n: int, seed: int = 0) -> list[Block]:
    rng = np.random.default_rng(seed)
    center = _center_basis(basis, n)
    # a generic hermitian central element separates the blocks
    for _ in range(16):
        coeffs = rng.standard_normal(len(center))
        h = sum(c * (z + dag(z)) / 2 for c, z in zip(coeffs, center))
        clusters = eigh_clustered(h, tol=1e-8 * max(1.0, frob(h)))
        if len(clusters) == len(center):
            break
    else:
        raise SpanClosureFailure("could not split the center into minimal projections")

    blocks = []
    for _, vecs in clusters:
        p = vecs @ dag(vecs)
        blocks.append(_analyze_block(basis, p, n, rng))
    return blocks


def _analyze_block(basis: list[np.ndarray], p: np.ndarray, n: int, rng) -> Block:
    # basis of the corner algebra M p (p is a minimal central projection)
    corner = orthonormalize(np.column_stack([vec(p @ b @ p) for b in basis]))
    corner_mats = [unvec(corner[:, i], n) for i in range(corner.shape[1])]
    d_corner = len(corner_mats)
    block_dim = round(np.sqrt(d_corner))
    rank_p = round(np.trace(p).real)
    if block_dim * block_dim != d_corner or rank_p % block_dim != 0:
        raise SpanClosureFailure(
            f"inconsistent block data: corner dim {d_corner}, projection rank {rank_p}"
        )
    mult = rank_p // block_dim

    # minimal projection q: an eigencluster of size mult of a generic
    # hermitian corner element (nonzero eigenvalue, so it does not mix
    # with the kernel of p)
    cluster = None
    for _ in range(32):
        coeffs = rng.standard_normal(d_corner)
        a = sum(c * (m + dag(m)) / 2 for c, m in zip(coeffs, corner_mats))
        scale = max(1.0, frob(a))
        nonzero = [
            cl
            for cl in eigh_clustered(a, tol=1e-8 * scale)
            if abs(cl[0]) > 1e-6 * scale and cl[1].shape[1] == mult
        ]
        if nonzero:
            cluster = max(nonzero, key=lambda cl: abs(cl[0]))
            break
    if cluster is None:
        raise SpanClosureFailure("could not isolate a minimal projection in a block")
    q_vecs = cluster[1]
    q = q_vecs @ dag(q_vecs)

    # orthonormal basis of the column space (corner) q; the resulting g_a
    # satisfy g_a* g_b = delta_ab q / mult, so f_a = sqrt(mult) g_a are
    # partial isometries with f_a* f_b = delta_ab q
    cols = [vec(q)] + [vec(m @ q) for m in corner_mats]
    gs = orthonormalize(np.column_stack(cols))
    if gs.shape[1] != block_dim:
        raise SpanClosureFailure(
            f"corner column space has dimension {gs.shape[1]}, expected {block_dim}"
        )
    f_mats = [np.sqrt(mult) * unvec(gs[:, i], n) for i in range(block_dim)]
    isometry = np.zeros((n, block_dim * mult), dtype=complex)
    for a_idx, f in enumerate(f_mats):
        isometry[:, a_idx * mult : (a_idx + 1) * mult] = f @ q_vecs
    # polar correction; the matrix is an isometry up to roundoff already
    uu, _, vvh = np.linalg.svd(isometry, full_matrices=False)
    return Block(dim=block_dim, mult=mult, isometry=uu @ vvh)


def full_matrix_algebra(n: int) -> MatAlgebra:
    """The full algebra M_n with matrix-unit basis."""
    basis = []
    for j in range(n):
        for k in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[j, k] = 1.0
            basis.append(e)
    blocks = [Block(dim=n, mult=1, isometry=np.eye(n, dtype=complex))]
    return MatAlgebra(n, basis, blocks)


def diagonal_algebra(n: int) -> MatAlgebra:
    """The diagonal subalgebra of M_n."""
    basis = []
    blocks = []
    for j in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[j, j] = 1.0
        basis.append(e)
        blocks.append(Block(dim=1, mult=1, isometry=e[:, j : j + 1]))
    return MatAlgebra(n, basis, blocks)


# ---------------------------------------------------------------------------
# Conditional expectations
# ---------------------------------------------------------------------------

@dataclass
class CondExpectation:
    """State-preserving conditional expectation onto a subalgebra."""

    source: MatAlgebra
    target: MatAlgebra
    map: object  # SuperOp
    state: StateData

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.map(x)

    def validate(self, tol: float | None = None, seed: int = 0) -> dict:
        """Check unitality, complete positivity, idempotence, the bimodule
        property and state preservation; returns the residual table."""
        from .superop import cp_residual

        tol = default_tol() if tol is None else tol
        n = self.source.ambient_dim
        eye = np.eye(n, dtype=complex)
        resid = {
            "unital": frob(self(eye) - eye),
            "cp": cp_residual(self.map),
            "idempotent": frob(self.map.mat @ self.map.mat - self.map.mat),
        }
        rng = np.random.default_rng(seed)
        bimod = 0.0
        for a in self.target.basis:
            for b in self.target.basis:
                x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
                bimod = max(bimod, frob(self(a @ x @ b) - a @ self(x) @ b))
        resid["bimodule"] = bimod
        sp = 0.0
        for _ in range(8):
            x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            sp = max(
                sp,
                abs(self.state.expectation(self(x)) - self.state.expectation(x)),
            )
        resid["state_preserving"] = sp
        worst = max(resid.values())
        if worst > 10 * tol:
            raise QmsError(f"conditional expectation invariants violated: {resid}")
        return resid


def conditional_expectation(
    source: MatAlgebra, target: MatAlgebra, state: StateData, tol: float | None = None
) -> CondExpectation:
    """The state-preserving conditional expectation onto ``target``.

    Realized as the orthogonal projection with respect to the GNS inner
    product tr(sigma x* y).  Exists iff the modular group leaves the
    subalgebra invariant (Takesaki); the precondition is checked through
    the commutator of the modular superoperator with the GNS projection
    and ModularInvarianceViolated is raised when it fails.
    """
    from .superop import SuperOp

    tol = default_tol() if tol is None else tol
    n = source.ambient_dim
    if target.ambient_dim != n or state.dim != n:
        raise DimensionMismatch("source, target and state dimensions must agree")

    d = target.dim
    gram = np.zeros((d, d), dtype=complex)
    for i, bi in enumerate(target.basis):
        for j, bj in enumerate(target.basis):
            gram[i, j] = np.trace(state.sigma @ dag(bi) @ bj)
    gram_inv = np.linalg.inv(gram)

    mat = np.zeros((n * n, n * n), dtype=complex)
    for col in range(n * n):
        x = unvec(np.eye(n * n, dtype=complex)[:, col], n)
        overlaps = np.array([np.trace(state.sigma @ dag(b) @ x) for b in target.basis])
        coeffs = gram_inv @ overlaps
        mat[:, col] = vec(target.to_matrix(coeffs))
    proj = SuperOp(mat, n)

    mod = delta_superop(state)
    comm = frob(proj.mat @ mod.mat - mod.mat @ proj.mat)
    scale = max(1.0, frob(mod.mat))
    if comm > tol * scale:
        raise ModularInvarianceViolated(
            f"modular superoperator does not commute with the GNS projection "
            f"(residual {comm:.2e}); no state-preserving conditional expectation exists"
        )

    exp = CondExpectation(source=source, target=target, map=proj, state=state)
    exp.validate(tol=tol)
    return exp


def restricted_state_density(algebra: MatAlgebra, state: StateData) -> np.ndarray:
    """Density matrix (inside the subalgebra) of the restricted state.

    The HS projection of sigma onto the algebra represents tr(sigma .) on
    the subalgebra and is positive definite there when sigma is faithful.
    """
    rho = algebra.project(state.sigma)
    return (rho + dag(rho)) / 2
