"""The GNS bimodule of a GNS-symmetric generator, with its Tomita-type
structure, and the three-stage solution of the inner-implementing vector.

Construction
------------
For a generator L on an algebra M with faithful state sigma, the bilinear
form

    B(a (x) x, b (x) y) = -1/2 x* L(a* b) y

is positive semidefinite on the constraint subspace
F0 = { sum_j a_j (x) x_j : sum_j a_j x_j = 0 } exactly when L is
conditionally negative definite.  The Hilbert space H realized here is the
quotient of F0 (tensored against the cyclic vector Omega) by the kernel of
the scalar form phi o B; concretely H carries

    * left and right module actions of M (``left``/``right_f``),
    * the derivation delta(x) = x (x) 1 - 1 (x) x,
    * a one-parameter unitary group U_t = exp(i t A) implementing the
      modular flow, with U_t delta(x) = delta(sigma_t(x)),
    * an anti-unitary involution JJ with
      JJ(delta(x)) = delta(sigma_{i/2}(x)*).

Two right actions coexist and differ by a modular twist: ``right_f`` is
the bimodule action (used by derivations, xi + delta(x) y vectors and the
Haar average), while the correspondence action is
right_f(sigma_{-i/2}(y)), used when identifying left-bounded vectors.  The
M-valued inner product (xi | zeta) is the operator L(xi)* L(zeta), where
L(xi): Omega y -> xi y is assembled from the correspondence action; with
this convention (delta(x) | delta(y)) equals the carre du champ
Gamma(x, y).

The inner vector is produced in three stages: a minimal-norm least-squares
solution xi'' of delta_xi = delta, the spectral projection xi' of xi'' onto
the U_t-fixed space, and the conjugation-symmetrized xi = (xi' - JJ xi')/2i
which satisfies delta_{i xi} = delta, U_t xi = xi and JJ xi = xi.  The
appendix-style Haar average (1/N) sum_k u_k* delta(u_k) over blockwise Haar
unitaries of M gives an independent Monte-Carlo route to a raw-stage
vector.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ._linalg import dag, frob, null_space
from .algebra import MatAlgebra
from .config import QUOTIENT_CUTOFF, T_GRID, default_tol
from .errors import NotCND, NotSymmetric, ResidualTooLarge, StageError
from .modular import StateData
from .superop import QMSGenerator, carre_du_champ

__all__ = [
    "BimoduleRep",
    "XiVector",
    "build_gns_bimodule",
    "mvalued_inner",
    "solve_inner_vector",
    "vt_project",
    "j_symmetrize",
    "haar_inner_vector",
]


@dataclass
class XiVector:
    """An implementing vector for the derivation, with its pipeline stage.

    stage "raw":            x xi - xi x = delta(x)
    stage "vt_invariant":   additionally U_t xi = xi
    stage "fully_invariant": delta_{i xi} = delta, U_t xi = xi, JJ xi = xi
    """

    vec: np.ndarray
    stage: str
    residuals: dict = field(default_factory=dict)


class BimoduleRep:
    """Concrete realization of the GNS bimodule H of a generator."""

    def __init__(self, algebra, state, gen, dim_h, embed, section, left_mats,
                 right_mats, delta_mat, ut_gen, jj, gram_eigs):
        self.algebra: MatAlgebra = algebra
        self.state: StateData = state
        self.gen: QMSGenerator = gen
        self.dim_h: int = dim_h
        #: map from raw M (x) M coordinates to H coordinates
        self.embed = embed
        #: section H -> raw coordinates with embed o section = id
        self.section = section
        self.left_mats = left_mats
        self.right_mats = right_mats
        #: columns delta(e_alpha) in H coordinates, shape (dim_h, dim M)
        self.delta_mat = delta_mat
        #: hermitian generator A of U_t = exp(i t A)
        self.ut_gen = ut_gen
        #: matrix of the anti-unitary JJ: JJ(v) = jj @ conj(v)
        self.jj = jj
        #: kept eigenvalues of the quotient Gram matrix (diagnostics)
        self.gram_eigs = gram_eigs

    # -- module actions ------------------------------------------------------

    def left(self, x: np.ndarray) -> np.ndarray:
        """Matrix on H of the left action of x in M."""
        return self._combine(self.left_mats, x)

    def right_f(self, y: np.ndarray) -> np.ndarray:
        """Matrix on H of the bimodule right action of y."""
        return self._combine(self.right_mats, y)

    def right_corr(self, y: np.ndarray) -> np.ndarray:
        """Correspondence right action, right_f with the modular twist."""
        return self.right_f(self.state.mod_auto(-0.5j, y))

    def _combine(self, mats, x) -> np.ndarray:
        coeffs = self.algebra.coeffs(np.asarray(x, dtype=complex))
        out = np.zeros((self.dim_h, self.dim_h), dtype=complex)
        for c, m in zip(coeffs, mats):
            out += c * m
        return out

    def delta(self, x: np.ndarray) -> np.ndarray:
        """H-vector of the derivation delta(x) = x (x) 1 - 1 (x) x."""
        return self.delta_mat @ self.algebra.coeffs(np.asarray(x, dtype=complex))

    def u_t(self, t: float) -> np.ndarray:
        return scipy.linalg.expm(1j * t * self.ut_gen)

    def jconj(self, v: np.ndarray) -> np.ndarray:
        """The anti-unitary JJ applied to an H-vector."""
        return self.jj @ np.conj(v)

    # -- derivation residuals --------------------------------------------------

    def delta_norm(self) -> float:
        return frob(self.delta_mat)

    def implementation_residual(self, v: np.ndarray, factor: complex = 1.0) -> float:
        """Stacked residual of x (f v) - (f v) x = delta(x) with f = factor."""
        resid = 0.0
        for a, (lm, rm) in enumerate(zip(self.left_mats, self.right_mats)):
            resid += frob(factor * (lm @ v - rm @ v) - self.delta_mat[:, a]) ** 2
        return float(np.sqrt(resid))

    # -- structural invariants -------------------------------------------------

    def invariant_residuals(self, t_grid=T_GRID, seed: int = 0) -> dict:
        """Residual table for the bimodule invariants, including the five
        covariance identities of the Tomita-type structure."""
        alg, st = self.algebra, self.state
        rng = np.random.default_rng(seed)
        resid = {}

        commute = 0.0
        for lm in self.left_mats:
            for rm in self.right_mats:
                commute = max(commute, frob(lm @ rm - rm @ lm))
        resid["left_right_commute"] = commute

        gram_gamma = 0.0
        for a, ea in enumerate(alg.basis):
            for b, eb in enumerate(alg.basis):
                lhs = np.vdot(self.delta_mat[:, a], self.delta_mat[:, b])
                rhs = st.expectation(carre_du_champ(self.gen, ea, eb))
                gram_gamma = max(gram_gamma, abs(lhs - rhs))
        resid["gram_carre_du_champ"] = gram_gamma

        unitary = 0.0
        conj_inv = 0.0
        anti_unitary = 0.0
        cov_delta = 0.0
        cov_left = 0.0
        cov_right = 0.0
        ju_commute = 0.0
        eye = np.eye(self.dim_h)
        for t in t_grid:
            for tt in (t, -t):
                u = self.u_t(tt)
                unitary = max(unitary, frob(dag(u) @ u - eye))
                ju_commute = max(ju_commute, frob(self.jj @ np.conj(u) - u @ self.jj))
                for a, ea in enumerate(alg.basis):
                    sig_e = st.mod_auto(tt, ea)
                    cov_delta = max(
                        cov_delta, frob(u @ self.delta_mat[:, a] - self.delta(sig_e))
                    )
                    cov_left = max(cov_left, frob(u @ self.left_mats[a] @ dag(u) - self.left(sig_e)))
                    cov_right = max(
                        cov_right, frob(u @ self.right_mats[a] @ dag(u) - self.right_f(sig_e))
                    )
        resid["ut_unitary"] = unitary
        resid["ut_delta_covariance"] = cov_delta
        resid["ut_left_covariance"] = cov_left
        resid["ut_right_covariance"] = cov_right
        resid["jj_ut_commute"] = ju_commute

        resid["jj_involution"] = frob(self.jj @ np.conj(self.jj) - eye)
        if self.dim_h:
            for _ in range(4):
                v = rng.standard_normal(self.dim_h) + 1j * rng.standard_normal(self.dim_h)
                w = rng.standard_normal(self.dim_h) + 1j * rng.standard_normal(self.dim_h)
                anti_unitary = max(
                    anti_unitary,
                    abs(np.vdot(self.jconj(v), self.jconj(w)) - np.vdot(w, v)),
                )
        resid["jj_anti_unitary"] = anti_unitary

        for a, ea in enumerate(alg.basis):
            target = self.delta(dag(st.mod_auto(0.5j, ea)))
            conj_inv = max(conj_inv, frob(self.jconj(self.delta_mat[:, a]) - target))
        resid["jj_delta_rule"] = conj_inv

        conj_bimod = 0.0
        for ea in alg.basis:
            for eb in alg.basis:
                lhs = self.jj @ np.conj(self.left(ea) @ self.right_corr(eb))
                rhs = self.left(dag(eb)) @ self.right_corr(dag(ea)) @ self.jj
                conj_bimod = max(conj_bimod, frob(lhs - rhs))
        resid["jj_bimodule_rule"] = conj_bimod
        return resid


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def build_gns_bimodule(
    algebra: MatAlgebra,
    gen: QMSGenerator,
    state: StateData,
    tol: float | None = None,
    quotient_cutoff: float = QUOTIENT_CUTOFF,
) -> BimoduleRep:
    """Realize the GNS bimodule of a GNS-symmetric CND generator.

    Raises NotSymmetric / NotCND when the entrance conditions fail; the
    conjugation JJ only exists for GNS-symmetric generators.
    """
    tol = default_tol() if tol is None else tol
    d = algebra.dim
    basis = algebra.basis

    if not algebra.contains(state.sigma, tol=1e-8):
        raise NotSymmetric("the state density must belong to the algebra")

    # GNS symmetry of L restricted to the algebra
    gram_sym = 0.0
    lmats = [gen(b) for b in basis]
    for i, bi in enumerate(basis):
        for j, bj in enumerate(basis):
            lhs = np.trace(state.sigma @ dag(lmats[i]) @ bj)
            rhs = np.trace(state.sigma @ dag(bi) @ lmats[j])
            gram_sym = max(gram_sym, abs(lhs - rhs))
    scale = max(1.0, max(frob(m) for m in lmats) if lmats else 1.0)
    if gram_sym > 1e-8 * scale:
        raise NotSymmetric(f"generator is not GNS-symmetric, residual {gram_sym:.2e}")

    # raw Gram of the form on M (x) M, index (a, b) -> a * d + b
    l_of_products = np.empty((d, d), dtype=object)
    for a in range(d):
        for g in range(d):
            l_of_products[a, g] = gen(dag(basis[a]) @ basis[g])
    graw = np.zeros((d * d, d * d), dtype=complex)
    for a in range(d):
        for b in range(d):
            rb = basis[b]
            for g in range(d):
                pag = l_of_products[a, g]
                for dd in range(d):
                    graw[a * d + b, g * d + dd] = -0.5 * np.trace(
                        state.sigma @ dag(rb) @ pag @ basis[dd]
                    )

    # constraint subspace: kernel of the multiplication map
    mult_map = np.zeros((algebra.ambient_dim**2, d * d), dtype=complex)
    for a in range(d):
        for b in range(d):
            mult_map[:, a * d + b] = (basis[a] @ basis[b]).flatten(order="F")
    constraint = null_space(mult_map)

    g_f0 = dag(constraint) @ graw @ constraint
    g_f0 = (g_f0 + dag(g_f0)) / 2
    w, v = np.linalg.eigh(g_f0) if g_f0.size else (np.zeros(0), np.zeros((0, 0)))
    lam_max = float(w.max()) if w.size else 0.0
    if w.size and float(w.min()) < -1e-10 * max(1.0, lam_max):
        raise NotCND(
            f"form not positive on the constraint subspace, min eigenvalue {w.min():.3e}"
        )
    keep = w > quotient_cutoff * max(lam_max, 1e-300)
    w_kept = w[keep]
    v_kept = v[:, keep]
    dim_h = int(keep.sum())

    # embed: raw -> H, section: H -> raw, with embed o section = id and
    # <embed r, embed r'> = form(r, r') for r, r' in the constraint space
    embed = (np.sqrt(w_kept)[:, None] * dag(v_kept)) @ dag(constraint)
    section = constraint @ (v_kept / np.sqrt(w_kept)[None, :]) if dim_h else np.zeros(
        (d * d, 0)
    )

    sc = algebra.structure_constants
    left_raw = [np.kron(sc[a, :, :].T, np.eye(d)) for a in range(d)]
    right_raw = [np.kron(np.eye(d), sc[:, a, :].T) for a in range(d)]
    left_mats = [embed @ lr @ section for lr in left_raw]
    right_mats = [embed @ rr @ section for rr in right_raw]

    unit = algebra.unit_coeffs
    delta_raw = np.zeros((d * d, d), dtype=complex)
    for a in range(d):
        for b in range(d):
            delta_raw[a * d + b, a] += unit[b]
            delta_raw[a * d + b, b] -= unit[a]
    delta_mat = embed @ delta_raw

    # generator of U_t: raw action [log sigma, .] (x) 1 + 1 (x) [log sigma, .]
    log_sigma = state.logm
    ad_log = np.zeros((d, d), dtype=complex)
    for a in range(d):
        ad_log[:, a] = algebra.coeffs(log_sigma @ basis[a] - basis[a] @ log_sigma)
    a_raw = np.kron(ad_log, np.eye(d)) + np.kron(np.eye(d), ad_log)
    ut_gen = embed @ a_raw @ section
    herm_defect = frob(ut_gen - dag(ut_gen))
    if herm_defect > 1e-8 * max(1.0, frob(ut_gen)):
        raise ResidualTooLarge(f"U_t generator not hermitian, residual {herm_defect:.2e}")
    ut_gen = (ut_gen + dag(ut_gen)) / 2

    # JJ raw action: a (x) b -> -sigma_{i/2}(b)* (x) sigma_{i/2}(a)*
    jm = np.zeros((d, d), dtype=complex)
    for a in range(d):
        jm[:, a] = algebra.coeffs(state.sqrt @ dag(basis[a]) @ state.inv_sqrt)
    swap = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            swap[b * d + a, a * d + b] = 1.0
    j_raw = -np.kron(jm, jm) @ swap
    jj = embed @ j_raw @ np.conj(section)

    return BimoduleRep(
        algebra=algebra,
        state=state,
        gen=gen,
        dim_h=dim_h,
        embed=embed,
        section=section,
        left_mats=left_mats,
        right_mats=right_mats,
        delta_mat=delta_mat,
        ut_gen=ut_gen,
        jj=jj,
        gram_eigs=w_kept,
    )


# ---------------------------------------------------------------------------
# M-valued inner product
# ---------------------------------------------------------------------------

def _left_bounded_matrix(rep: BimoduleRep, xi: np.ndarray) -> np.ndarray:
    """Matrix of L(xi): L2(M) -> H, Omega y -> xi y, in HS coordinates."""
    alg, st = rep.algebra, rep.state
    cols = np.zeros((rep.dim_h, alg.dim), dtype=complex)
    for a, ea in enumerate(alg.basis):
        # e_a = Omega y with y = sigma^{-1/2} e_a, and xi y uses the
        # correspondence action right_f(sigma_{-i/2}(y)) = right_f(e_a sigma^{-1/2})
        cols[:, a] = rep.right_f(ea @ st.inv_sqrt) @ xi
    return cols


def mvalued_inner(rep: BimoduleRep, xi: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """The M-valued inner product (xi | zeta) = L(xi)* L(zeta) as an n x n
    matrix; satisfies phi((xi|zeta)) = <xi, zeta> and
    (delta(x) | delta(y)) = Gamma(x, y)."""
    alg, st = rep.algebra, rep.state
    t_op = dag(_left_bounded_matrix(rep, xi)) @ _left_bounded_matrix(rep, zeta)
    # t_op is left multiplication by some m in M; recover m from t_op(Omega)
    omega_coeffs = alg.coeffs(st.sqrt)
    m = alg.to_matrix(t_op @ omega_coeffs) @ st.inv_sqrt
    return alg.project(m)


# ---------------------------------------------------------------------------
# Inner-vector pipeline
# ---------------------------------------------------------------------------

def solve_inner_vector(rep: BimoduleRep, tol: float | None = None) -> XiVector:
    """Minimal-norm least-squares solution of x xi - xi x = delta(x) over
    the algebra basis (raw stage)."""
    tol = default_tol() if tol is None else tol
    d = rep.algebra.dim
    if rep.dim_h == 0:
        return XiVector(np.zeros(0, dtype=complex), "raw", {"implementation": 0.0})
    a_stack = np.vstack([rep.left_mats[a] - rep.right_mats[a] for a in range(d)])
    b_stack = np.concatenate([rep.delta_mat[:, a] for a in range(d)])
    xi, *_ = np.linalg.lstsq(a_stack, b_stack, rcond=None)
    resid = rep.implementation_residual(xi)
    scale = max(rep.delta_norm(), 1e-30)
    if resid > 1e3 * tol * scale:
        raise ResidualTooLarge(
            f"derivation is not implemented by the least-squares solution "
            f"(residual {resid:.2e}); malformed bimodule"
        )
    return XiVector(xi, "raw", {"implementation": resid})


def vt_project(rep: BimoduleRep, xi: XiVector, t_grid=T_GRID) -> XiVector:
    """Project onto the U_t-fixed subspace (spectral projection of the
    generator at eigenvalue zero, the Cesaro mean of the group)."""
    if rep.dim_h == 0:
        return XiVector(xi.vec, "vt_invariant", dict(xi.residuals))
    w, v = np.linalg.eigh(rep.ut_gen)
    scale = max(1.0, float(np.abs(w).max()) if w.size else 1.0)
    fixed = v[:, np.abs(w) <= 1e-8 * scale]
    vec_out = fixed @ (dag(fixed) @ xi.vec)
    resid = {
        "implementation": rep.implementation_residual(vec_out),
        "ut_invariance": max(
            frob(rep.u_t(t) @ vec_out - vec_out) for t in t_grid
        ),
    }
    return XiVector(vec_out, "vt_invariant", resid)


def j_symmetrize(rep: BimoduleRep, xi: XiVector, t_grid=T_GRID, tol: float | None = None) -> XiVector:
    """Final stage: xi = (xi' - JJ xi') / 2i satisfies delta_{i xi} = delta,
    U_t xi = xi and JJ xi = xi."""
    tol = default_tol() if tol is None else tol
    if xi.stage not in ("vt_invariant", "fully_invariant"):
        raise StageError("j_symmetrize expects a U_t-invariant vector")
    zeta = rep.jconj(xi.vec)
    vec_out = (xi.vec - zeta) / 2j
    resid = {
        "implementation_i": rep.implementation_residual(vec_out, factor=1j),
        "jj_fixed": frob(rep.jconj(vec_out) - vec_out),
        "ut_invariance": max(
            (frob(rep.u_t(t) @ vec_out - vec_out) for t in t_grid), default=0.0
        ),
    }
    scale = max(rep.delta_norm(), 1e-30)
    if resid["implementation_i"] > 1e3 * tol * scale:
        raise ResidualTooLarge(
            f"delta_(i xi) = delta fails after symmetrization "
            f"(residual {resid['implementation_i']:.2e}); broken JJ covariance upstream"
        )
    return XiVector(vec_out, "fully_invariant", resid)


def haar_inner_vector(
    rep: BimoduleRep, samples: int = 1000, seed: int = 0, n_checkpoints: int = 4
) -> tuple[XiVector, dict]:
    """Monte-Carlo Haar average (1/N) sum_k u_k* delta(u_k) (raw stage).

    Unitaries are sampled blockwise (Haar on each Wedderburn factor).
    Returns the estimate and a report with the implementation residual at
    geometrically spaced checkpoints, exhibiting the N^{-1/2} trend.
    """
    if samples < 100:
        raise ValueError("use at least 100 samples")
    rng = np.random.default_rng(seed)
    acc = np.zeros(rep.dim_h, dtype=complex)
    checkpoints = sorted({samples // (2**k) for k in range(n_checkpoints)} | {samples})
    trend = {}
    count = 0
    for k in range(samples):
        u = rep.algebra.haar_unitary(rng)
        acc += rep.left(dag(u)) @ rep.delta(u)
        count = k + 1
        if count in checkpoints:
            trend[count] = rep.implementation_residual(acc / count)
    estimate = acc / count
    resid = rep.implementation_residual(estimate)
    report = {
        "residual": resid,
        "trend": trend,
        "delta_norm": rep.delta_norm(),
        "samples": samples,
    }
    return XiVector(estimate, "raw", {"implementation": resid}), report
