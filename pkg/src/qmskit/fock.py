"""Depth-2 truncated Fock realization: relative tensor products, creation
operators, and the carre-du-champ identity Gamma(x, y) = E([x,a]*[y,a]).

The truncated Fock space is L2(M) + H + (H (x)_phi H), where H is the GNS
bimodule Hilbert space and (x)_phi is the relative tensor product (Connes
fusion): the quotient-completion of the algebraic tensor product under

    B(xi_1 (x) eta_1, xi_2 (x) eta_2) = < eta_1, (xi_1 | xi_2) eta_2 >.

For the invariant vector xi the creation operator acts as

    a (Omega y)  =  xi y            (level 0 -> 1)
    a (eta)      =  xi (x)_phi eta  (level 1 -> 2, truncated above),

and the self-adjoint field is s = a + a*.  The conditional expectation
onto M is compression to the vacuum level, E(b) = L(Omega)* b L(Omega).
Together with the left representation pi of M these satisfy, exactly at
this truncation depth,

    alpha(delta(x)) = i [pi(x), s],      E(s) = 0,      s = s*,
    E(alpha(z1)* alpha(z2)) = (z1 | z2),
    Gamma(x, y) = E([pi(x), s]* [pi(y), s]),

where alpha(x xi y) = pi(x) s pi(y) is the bimodule map into the generated
algebra (realized through a minimal-norm decomposition in x (x) y).  The
commutant field t (built from the right action) is provided as a test
helper for the commutation [s, t] = 0 on depth <= 1 vectors.

Identities involving at most two field insertions against the vacuum are
exact at depth 2; the cyclicity and separating statements of the
infinite-dimensional construction are not certified here.
"""

from dataclasses import dataclass

import numpy as np

from ._linalg import dag, frob
from .algebra import MatAlgebra
from .bimodule import BimoduleRep, XiVector
from .config import QUOTIENT_CUTOFF, T_GRID, default_tol
from .errors import StageError
from .modular import StateData
from .superop import QMSGenerator, carre_du_champ

__all__ = [
    "CorrespondenceRep",
    "rel_tensor",
    "FockRep",
    "build_fock",
    "gamma_identity_check",
]


@dataclass
class CorrespondenceRep:
    """A correspondence over (M, sigma): commuting left action of M and
    right action of the opposite algebra, in some orthonormal coordinates."""

    dim: int
    left_mats: list[np.ndarray]
    right_mats: list[np.ndarray]  # correspondence (twisted) right action
    algebra: MatAlgebra
    state: StateData

    def left(self, x: np.ndarray) -> np.ndarray:
        return _combine(self.left_mats, self.algebra, x, self.dim)

    def right(self, y: np.ndarray) -> np.ndarray:
        return _combine(self.right_mats, self.algebra, y, self.dim)

    @classmethod
    def from_bimodule(cls, rep: BimoduleRep) -> "CorrespondenceRep":
        rights = [rep.right_corr(e) for e in rep.algebra.basis]
        return cls(rep.dim_h, list(rep.left_mats), rights, rep.algebra, rep.state)

    @classmethod
    def l2(cls, algebra: MatAlgebra, state: StateData) -> "CorrespondenceRep":
        """L2(M, phi) itself, coordinates = the HS-orthonormal basis of M."""
        lefts = [algebra.left_coeff_matrix(a) for a in range(algebra.dim)]
        rights = [algebra.right_coeff_matrix(a) for a in range(algebra.dim)]
        return cls(algebra.dim, lefts, rights, algebra, state)


def _combine(mats, algebra: MatAlgebra, x, dim: int) -> np.ndarray:
    coeffs = algebra.coeffs(np.asarray(x, dtype=complex))
    out = np.zeros((dim, dim), dtype=complex)
    for c, m in zip(coeffs, mats):
        out += c * m
    return out


def left_bounded_matrix(corr: CorrespondenceRep, xi: np.ndarray) -> np.ndarray:
    """Matrix of L(xi): L2(M) -> corr, Omega y -> xi y (right action)."""
    alg, st = corr.algebra, corr.state
    cols = np.zeros((corr.dim, alg.dim), dtype=complex)
    inv_sqrt = st.inv_sqrt
    for a, ea in enumerate(alg.basis):
        # e_a = Omega y with y = sigma^{-1/2} e_a; the correspondence right
        # action of y equals the bimodule action of e_a sigma^{-1/2}
        cols[:, a] = corr.right(inv_sqrt @ ea) @ xi
    return cols


def mvalued_inner_corr(corr: CorrespondenceRep, xi: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """(xi | zeta) = L(xi)* L(zeta), extracted as an element of M."""
    alg, st = corr.algebra, corr.state
    t_op = dag(left_bounded_matrix(corr, xi)) @ left_bounded_matrix(corr, zeta)
    m = alg.to_matrix(t_op @ alg.coeffs(st.sqrt)) @ st.inv_sqrt
    return alg.project(m)


def rel_tensor(
    corr1: CorrespondenceRep,
    corr2: CorrespondenceRep,
    cutoff: float = QUOTIENT_CUTOFF,
) -> tuple[CorrespondenceRep, np.ndarray, np.ndarray]:
    """Relative tensor product corr1 (x)_phi corr2.

    Returns (product rep, embed, section) where embed maps raw tensor
    coordinates (i, j) -> i * dim2 + j onto the quotient and section is a
    right inverse of embed.
    """
    d1, d2 = corr1.dim, corr2.dim
    gram = np.zeros((d1 * d2, d1 * d2), dtype=complex)
    for i in range(d1):
        xi_i = np.eye(d1, dtype=complex)[:, i]
        for k in range(d1):
            xi_k = np.eye(d1, dtype=complex)[:, k]
            m_ik = mvalued_inner_corr(corr1, xi_i, xi_k)
            block = corr2.left(m_ik)
            gram[i * d2 : (i + 1) * d2, k * d2 : (k + 1) * d2] = block
    gram = (gram + dag(gram)) / 2
    w, v = np.linalg.eigh(gram) if gram.size else (np.zeros(0), np.zeros((0, 0)))
    lam_max = float(w.max()) if w.size else 0.0
    keep = w > cutoff * max(lam_max, 1e-300)
    w_kept, v_kept = w[keep], v[:, keep]
    dim = int(keep.sum())
    embed = np.sqrt(w_kept)[:, None] * dag(v_kept)
    section = v_kept / np.sqrt(w_kept)[None, :] if dim else np.zeros((d1 * d2, 0))

    lefts, rights = [], []
    for a in range(corr1.algebra.dim):
        lefts.append(embed @ np.kron(corr1.left_mats[a], np.eye(d2)) @ section)
        rights.append(embed @ np.kron(np.eye(d1), corr2.right_mats[a]) @ section)
    product = CorrespondenceRep(dim, lefts, rights, corr1.algebra, corr1.state)
    return product, embed, section


# ---------------------------------------------------------------------------
# Truncated Fock space
# ---------------------------------------------------------------------------

class FockRep:
    """Depth-2 truncation of the Fock realization for an invariant vector."""

    def __init__(self, rep, xi, corr2, embed2, a_mat, level_dims):
        self.rep: BimoduleRep = rep
        self.xi = xi
        self.corr2 = corr2
        self.embed2 = embed2
        self.a_mat = a_mat
        self.s_mat = a_mat + dag(a_mat)
        self.level_dims = level_dims
        self.offsets = np.concatenate([[0], np.cumsum(level_dims)])
        self.dim = int(self.offsets[-1])
        self._alpha_cols = None

    # -- structure ----------------------------------------------------------

    def level_slice(self, k: int) -> slice:
        return slice(int(self.offsets[k]), int(self.offsets[k + 1]))

    def pi(self, x: np.ndarray) -> np.ndarray:
        """Left representation of M on the truncated Fock space."""
        rep = self.rep
        out = np.zeros((self.dim, self.dim), dtype=complex)
        out[self.level_slice(0), self.level_slice(0)] = _combine(
            [rep.algebra.left_coeff_matrix(a) for a in range(rep.algebra.dim)],
            rep.algebra,
            x,
            rep.algebra.dim,
        )
        out[self.level_slice(1), self.level_slice(1)] = rep.left(x)
        out[self.level_slice(2), self.level_slice(2)] = self.corr2.left(x)
        return out

    def vacuum(self) -> np.ndarray:
        """Omega as a truncated Fock vector (level 0)."""
        v = np.zeros(self.dim, dtype=complex)
        v[self.level_slice(0)] = self.rep.algebra.coeffs(self.rep.state.sqrt)
        return v

    def expectation(self, b: np.ndarray) -> np.ndarray:
        """E(b) = L(Omega)* b L(Omega), extracted as an element of M."""
        alg, st = self.rep.algebra, self.rep.state
        b00 = b[self.level_slice(0), self.level_slice(0)]
        return alg.project(alg.to_matrix(b00 @ alg.coeffs(st.sqrt)) @ st.inv_sqrt)

    # -- the bimodule map alpha ----------------------------------------------

    def _word_data(self):
        if self._alpha_cols is None:
            rep = self.rep
            d = rep.algebra.dim
            a_cols = np.zeros((rep.dim_h, d * d), dtype=complex)
            ops = []
            for i, x in enumerate(rep.algebra.basis):
                for j, y in enumerate(rep.algebra.basis):
                    a_cols[:, i * d + j] = rep.left(x) @ rep.right_f(y) @ self.xi.vec
                    ops.append(self.pi(x) @ self.s_mat @ self.pi(y))
            self._alpha_cols = (a_cols, ops, np.linalg.pinv(a_cols))
        return self._alpha_cols

    def alpha(self, zeta: np.ndarray) -> np.ndarray:
        """alpha on the span of {x xi y}: minimal-norm decomposition of the
        H-vector, mapped to the operator sum pi(x) s pi(y)."""
        a_cols, ops, a_pinv = self._word_data()
        coeffs = a_pinv @ zeta
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for c, op in zip(coeffs, ops):
            out += c * op
        return out

    # -- invariants -----------------------------------------------------------

    def modular_unitary(self, t: float) -> np.ndarray:
        """The truncated GNS-space unitary implementing the modular flow of
        the extended state (levelwise)."""
        rep = self.rep
        alg, st = rep.algebra, rep.state
        d = alg.dim
        u0 = np.zeros((d, d), dtype=complex)
        for a, ea in enumerate(alg.basis):
            u0[:, a] = alg.coeffs(st.mod_auto(t, ea))
        u1 = rep.u_t(t)
        raw2 = np.kron(u1, u1)
        u2 = self.embed2 @ raw2 @ self._section2()
        out = np.zeros((self.dim, self.dim), dtype=complex)
        out[self.level_slice(0), self.level_slice(0)] = u0
        out[self.level_slice(1), self.level_slice(1)] = u1
        out[self.level_slice(2), self.level_slice(2)] = u2
        return out

    def _section2(self) -> np.ndarray:
        return np.linalg.pinv(self.embed2)

    def commutant_field(self) -> np.ndarray:
        """The commutant partner t = b + b* with b(x Omega) = x xi and
        b(eta) = eta (x)_phi xi; test helper for depth <= 1 words."""
        rep = self.rep
        alg, st = rep.algebra, rep.state
        d, h = alg.dim, rep.dim_h
        b = np.zeros((self.dim, self.dim), dtype=complex)
        cols = np.zeros((h, d), dtype=complex)
        for a, ea in enumerate(alg.basis):
            cols[:, a] = rep.left(ea @ st.inv_sqrt) @ self.xi.vec
        b[self.level_slice(1), self.level_slice(0)] = cols
        if h:
            raw = np.kron(np.eye(h), self.xi.vec.reshape(h, 1))
            b[self.level_slice(2), self.level_slice(1)] = self.embed2 @ raw
        return b + dag(b)

    def invariant_residuals(self, t_grid=T_GRID, seed: int = 0) -> dict:
        """Residual table for the Fock-level identities."""
        rep = self.rep
        alg = rep.algebra
        rng = np.random.default_rng(seed)
        resid = {}

        resid["s_hermitian"] = frob(self.s_mat - dag(self.s_mat))
        resid["field_expectation"] = frob(self.expectation(self.s_mat))

        # alpha(delta(x)) = i [pi(x), s]
        alpha_delta = 0.0
        for ea in alg.basis:
            lhs = self.alpha(rep.delta(ea))
            pi_x = self.pi(ea)
            alpha_delta = max(
                alpha_delta, frob(lhs - 1j * (pi_x @ self.s_mat - self.s_mat @ pi_x))
            )
        resid["alpha_delta_commutator"] = alpha_delta

        # E(alpha(z1)* alpha(z2)) = (z1 | z2) on the word span
        from .bimodule import mvalued_inner

        pair_resid = 0.0
        for _ in range(6):
            x1, y1 = alg.random_element(rng), alg.random_element(rng)
            x2, y2 = alg.random_element(rng), alg.random_element(rng)
            z1 = rep.left(x1) @ rep.right_f(y1) @ self.xi.vec
            z2 = rep.left(x2) @ rep.right_f(y2) @ self.xi.vec
            lhs = self.expectation(dag(self.alpha(z1)) @ self.alpha(z2))
            rhs = mvalued_inner(rep, z1, z2)
            pair_resid = max(pair_resid, frob(lhs - rhs))
        resid["alpha_inner_product"] = pair_resid

        # centralizer words: <Omega, (s b - b s) Omega> = 0
        vac = self.vacuum()
        central = 0.0
        words = [self.pi(alg.random_element(rng)) for _ in range(3)]
        words += [
            self.pi(alg.random_element(rng)) @ self.s_mat @ self.pi(alg.random_element(rng))
            for _ in range(3)
        ]
        for b in words:
            val = np.vdot(vac, (self.s_mat @ b - b @ self.s_mat) @ vac)
            central = max(central, abs(val))
        resid["centralizer_words"] = central

        # modular covariance of the field (V_t xi = xi pushed to the Fock side)
        cov = 0.0
        for t in t_grid:
            u = self.modular_unitary(t)
            cov = max(cov, frob(u @ self.s_mat @ dag(u) - self.s_mat))
        resid["field_modular_covariance"] = cov

        # commutant field commutes with s on depth <= 1 vectors
        t_mat = self.commutant_field()
        p01 = np.zeros((self.dim, self.dim))
        p01[: self.offsets[2], : self.offsets[2]] = np.eye(int(self.offsets[2]))
        resid["commutant_commutes"] = frob(
            (self.s_mat @ t_mat - t_mat @ self.s_mat) @ p01
        )
        return resid


def build_fock(rep: BimoduleRep, xi: XiVector, depth: int = 2) -> FockRep:
    """Assemble the depth-2 truncated Fock realization for an invariant xi."""
    if xi.stage != "fully_invariant":
        raise StageError("the Fock construction needs the fully invariant vector")
    if depth != 2:
        raise ValueError("only the depth-2 truncation is implemented")
    corr1 = CorrespondenceRep.from_bimodule(rep)
    corr2, embed2, _ = rel_tensor(corr1, corr1)

    alg, st = rep.algebra, rep.state
    d, h, h2 = alg.dim, rep.dim_h, corr2.dim
    dims = [d, h, h2]
    total = d + h + h2
    a_mat = np.zeros((total, total), dtype=complex)

    # level 0 -> 1: a(Omega y) = xi y, i.e. column a -> right_f(e_a s^{-1/2}) xi
    cols = np.zeros((h, d), dtype=complex)
    for a, ea in enumerate(alg.basis):
        cols[:, a] = rep.right_f(ea @ st.inv_sqrt) @ xi.vec
    a_mat[d : d + h, :d] = cols

    # level 1 -> 2: a(eta) = xi (x)_phi eta
    if h:
        raw = np.kron(xi.vec.reshape(h, 1), np.eye(h))
        a_mat[d + h :, d : d + h] = embed2 @ raw

    return FockRep(rep, xi, corr2, embed2, a_mat, dims)


def gamma_identity_check(fock: FockRep, gen: QMSGenerator) -> float:
    """max over basis pairs of ||Gamma(x,y) - E([x,a]* [y,a])||_F with
    a = s the self-adjoint field."""
    rep = fock.rep
    resid = 0.0
    for x in rep.algebra.basis:
        cx = fock.pi(x) @ fock.s_mat - fock.s_mat @ fock.pi(x)
        for y in rep.algebra.basis:
            cy = fock.pi(y) @ fock.s_mat - fock.s_mat @ fock.pi(y)
            lhs = carre_du_champ(gen, x, y)
            rhs = fock.expectation(dag(cx) @ cy)
            resid = max(resid, frob(lhs - rhs))
    return resid
