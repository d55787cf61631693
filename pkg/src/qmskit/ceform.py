"""Symmetric Christensen-Evans form and the Alicki decomposition.

From the fully invariant vector xi of the bimodule pipeline one gets the
completely positive, GNS-symmetric map

    Phi(x) = 2 (xi | x xi),

and the generator is recovered through the symmetric Christensen-Evans
identity L(x) = (Phi(1) x + x Phi(1))/2 - Phi(x), with Phi(1) = 2 (xi|xi)
in the centralizer of the state.

The Alicki decomposition writes a detailed-balance generator on the full
matrix algebra as

    L = sum_j c_j ( e^{-omega_j/2} v_j* [v_j, .] - e^{omega_j/2} [v_j, .] v_j* ),

with traceless, trace-orthonormal jump operators v_j that are modular
eigenvectors, sigma v_j sigma^{-1} = e^{-omega_j} v_j, the index set closed
under the pairing j -> j* with v_{j*} = v_j*, omega_{j*} = -omega_j and
c_{j*} = c_j.  (Summed over the paired index set this is the same operator
as sum_j c_j e^{-omega_j/2} (v_j*[v_j, .] - [v_j*, .] v_j).)

The jump data is read off the Choi matrix of the generator compressed to
the orthocomplement of vec(1): that compression kills the anticommutator
part exactly, so

    Choi_jump = -1/2 P Choi(L) P = +1/2 P Choi(Phi) P,

and the two routes ("direct" from L, "pipeline" through Phi) agree.  The
compression is organized into Bohr sectors (eigenspaces of the modular
superoperator, labeled by log-ratios of sigma eigenvalues), eigenvectors
within a sector give the jump operators, and the +omega / -omega sectors
are paired through the adjoint.  In the zero sector the jump operators are
chosen hermitian (self-paired).
"""

from dataclasses import dataclass, field

import numpy as np

from ._linalg import (
    dag,
    frob,
    left_mult_superop,
    max_entangled_vec,
    orthonormalize,
    right_mult_superop,
    sandwich_superop,
)
from .algebra import full_matrix_algebra
from .bimodule import (
    BimoduleRep,
    XiVector,
    build_gns_bimodule,
    j_symmetrize,
    mvalued_inner,
    solve_inner_vector,
    vt_project,
)
from .config import BOHR_MERGE_TOL, default_tol
from .errors import NonFullAlgebra, NotCND, NotCP, NotDBC, NotSymmetric, StageError
from .modular import StateData, centralizer_check
from .superop import (
    QMSGenerator,
    SuperOp,
    choi,
    cnd_check,
    cp_residual,
    gns_symmetric_check,
)

__all__ = [
    "AlickiForm",
    "AlickiTerm",
    "phi_from_xi",
    "phi_apply",
    "ce_identity_check",
    "generator_from_phi",
    "alicki_decompose",
    "rebuild_generator",
    "run_xi_pipeline",
]


# ---------------------------------------------------------------------------
# Phi from the invariant vector
# ---------------------------------------------------------------------------

def run_xi_pipeline(rep: BimoduleRep) -> XiVector:
    """Convenience: raw solve, U_t projection, conjugation symmetrization."""
    return j_symmetrize(rep, vt_project(rep, solve_inner_vector(rep)))


def phi_apply(rep: BimoduleRep, xi: XiVector, x: np.ndarray) -> np.ndarray:
    """Phi(x) = 2 (xi | x xi) for x in the bimodule's algebra."""
    if xi.stage != "fully_invariant":
        raise StageError(
            "Phi requires the fully invariant vector; GNS symmetry fails otherwise"
        )
    return 2.0 * mvalued_inner(rep, xi.vec, rep.left(x) @ xi.vec)


def phi_from_xi(rep: BimoduleRep, xi: XiVector) -> SuperOp:
    """Phi as a superoperator on the ambient matrices.

    On a proper subalgebra the map is extended by the state-preserving
    conditional expectation of the bimodule's own state, which leaves
    Phi(1) and all identities on the algebra untouched.
    """
    n = rep.algebra.ambient_dim
    mat = np.zeros((n * n, n * n), dtype=complex)
    if rep.algebra.is_full():
        project = None
    else:
        from .algebra import conditional_expectation, full_matrix_algebra as _fma

        project = conditional_expectation(_fma(n), rep.algebra, rep.state)
    for col in range(n * n):
        e = np.zeros((n, n), dtype=complex)
        e[col % n, col // n] = 1.0  # column-stacking index order
        x = e if project is None else project(e)
        mat[:, col] = phi_apply(rep, xi, x).flatten(order="F")
    return SuperOp(mat, n)


def ce_identity_check(gen: QMSGenerator, rep: BimoduleRep, xi: XiVector) -> float:
    """max over basis x of || L(x) - ((xi|xi) x + x (xi|xi) - 2 (xi|x xi)) ||_F."""
    k2 = mvalued_inner(rep, xi.vec, xi.vec)
    resid = 0.0
    for ea in rep.algebra.basis:
        rhs = k2 @ ea + ea @ k2 - 2.0 * mvalued_inner(rep, xi.vec, rep.left(ea) @ xi.vec)
        resid = max(resid, frob(gen(ea) - rhs))
    return resid


def generator_from_phi(phi: SuperOp, state: StateData, tol: float | None = None) -> QMSGenerator:
    """L(x) = (Phi(1) x + x Phi(1))/2 - Phi(x) for GNS-symmetric CP Phi.

    Every operator of this form is a valid GNS-symmetric generator; the
    preconditions and the postconditions (unit kernel, CND, GNS symmetry)
    are all verified.
    """
    tol = default_tol() if tol is None else tol
    scale = max(1.0, phi.norm())
    cp = cp_residual(phi)
    if cp > 100 * tol * scale:
        raise NotCP(f"Phi is not completely positive, Choi defect {cp:.2e}")
    sym = gns_symmetric_check(phi, state)
    if sym > 100 * tol * scale:
        raise NotSymmetric(f"Phi is not GNS-symmetric, residual {sym:.2e}")
    phi1 = phi(np.eye(phi.dim, dtype=complex))
    mat = (left_mult_superop(phi1) + right_mult_superop(phi1)) / 2 - phi.mat
    return QMSGenerator.from_superop(SuperOp(mat, phi.dim), state)


# ---------------------------------------------------------------------------
# Alicki decomposition
# ---------------------------------------------------------------------------

@dataclass
class AlickiTerm:
    c: float
    omega: float
    v: np.ndarray


@dataclass
class AlickiForm:
    """Jump data (c_j, omega_j, v_j) with the adjoint pairing j -> j*."""

    terms: list[AlickiTerm]
    pairing: list[int]
    reconstruction_residual: float = np.nan
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.terms)

    def bohr_frequencies(self) -> list[float]:
        return [t.omega for t in self.terms]

    def sector_dimensions(self) -> dict[float, int]:
        dims: dict[float, int] = {}
        for t in self.terms:
            key = round(t.omega, 9)
            dims[key] = dims.get(key, 0) + 1
        return dims

    def rebuild(self, n: int) -> SuperOp:
        return rebuild_generator(self, n)

    def invariant_residuals(self, state: StateData) -> dict:
        """Residuals of the four structural invariants."""
        resid = {"traceless": 0.0, "orthonormal": 0.0, "pairing": 0.0, "modular": 0.0}
        for j, t in enumerate(self.terms):
            resid["traceless"] = max(resid["traceless"], abs(np.trace(t.v)))
            for k, s in enumerate(self.terms):
                gram = np.trace(dag(t.v) @ s.v)
                resid["orthonormal"] = max(
                    resid["orthonormal"], abs(gram - (1.0 if j == k else 0.0))
                )
            p = self.pairing[j]
            resid["pairing"] = max(
                resid["pairing"],
                frob(self.terms[p].v - dag(t.v)),
                abs(self.terms[p].omega + t.omega),
                abs(self.terms[p].c - t.c),
            )
            resid["modular"] = max(
                resid["modular"],
                frob(state.sigma @ t.v @ state.inv - np.exp(-t.omega) * t.v),
            )
        return resid


def rebuild_generator(form: AlickiForm, n: int) -> SuperOp:
    """Assemble sum_j c_j (e^{-w/2} v*[v, .] - e^{w/2} [v, .] v*) as a superoperator."""
    mat = np.zeros((n * n, n * n), dtype=complex)
    for t in form.terms:
        v = t.v
        mat += t.c * np.exp(-t.omega / 2) * (
            left_mult_superop(dag(v) @ v) - sandwich_superop(dag(v), v)
        )
        mat -= t.c * np.exp(t.omega / 2) * (
            sandwich_superop(v, dag(v)) - right_mult_superop(v @ dag(v))
        )
    return SuperOp(mat, n)


def _bohr_sectors(state: StateData, merge_tol: float) -> list[tuple[float, np.ndarray]]:
    """(omega, orthonormal Choi-space basis) for each Bohr sector.

    The basis columns are conj(u_a u_b*) flattened row-major, matching the
    Choi pairing in which a Kraus operator v contributes the vector
    conj(v) (row-major flatten).
    """
    n = state.dim
    u = state.eigvecs
    logs = state.log_eigvals
    entries: dict[int, list[np.ndarray]] = {}
    omegas: list[float] = []
    for a in range(n):
        for b in range(n):
            omega = float(logs[b] - logs[a])
            key = None
            for i, om in enumerate(omegas):
                if abs(om - omega) <= merge_tol:
                    key = i
                    break
            if key is None:
                omegas.append(omega)
                key = len(omegas) - 1
            mat = np.outer(u[:, a], np.conj(u[:, b]))
            entries.setdefault(key, []).append(np.conj(mat).flatten())
    return [(omegas[i], np.column_stack(entries[i])) for i in range(len(omegas))]


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Deterministic phase: make the largest-magnitude entry real positive."""
    idx = int(np.argmax(np.abs(v)))
    entry = v.flatten()[idx]
    if abs(entry) == 0.0:
        return v
    return v * (np.conj(entry) / abs(entry))


def _fix_sign_hermitian(v: np.ndarray) -> np.ndarray:
    """Deterministic sign for a hermitian jump operator (only +-1 allowed)."""
    idx = int(np.argmax(np.abs(v)))
    entry = v.flatten()[idx]
    if abs(entry.real) >= abs(entry.imag):
        return v if entry.real >= 0 else -v
    return v if entry.imag >= 0 else -v


def _hermitian_cluster_basis(mats: list[np.ndarray]) -> list[np.ndarray]:
    """Orthonormal hermitian basis of the span of a *-closed matrix family."""
    n = mats[0].shape[0]
    candidates = []
    for m in mats:
        candidates.append((m + dag(m)) / 2)
        candidates.append((m - dag(m)) / 2j)
    stacked = np.column_stack(
        [np.concatenate([c.real.flatten(), c.imag.flatten()]) for c in candidates]
    )
    ortho = orthonormalize(stacked)
    out = []
    for i in range(ortho.shape[1]):
        col = ortho[:, i]
        out.append(col[: n * n].reshape(n, n) + 1j * col[n * n :].reshape(n, n))
    return out


def alicki_decompose(
    gen: QMSGenerator,
    state: StateData,
    method: str = "pipeline",
    tol: float | None = None,
    merge_tol: float = BOHR_MERGE_TOL,
) -> AlickiForm:
    """Extract the Alicki jump data of a detailed-balance generator.

    method "pipeline" runs the bimodule pipeline to get Phi and compresses
    its Choi matrix to the traceless sector; method "direct" compresses
    Choi(-L) instead.  The two agree identically (the compression removes
    exactly the anticommutator gauge).
    """
    tol = default_tol() if tol is None else tol
    n = gen.dim
    if gen.algebra is not None and not gen.algebra.is_full():
        raise NonFullAlgebra(
            "Alicki decomposition needs the full matrix algebra; extend the generator first"
        )
    scale = max(1.0, gen.op.norm())
    sym = gns_symmetric_check(gen.op, state)
    if sym > 1e-8 * scale:
        raise NotDBC(f"generator violates detailed balance, residual {sym:.2e}")
    verdict = cnd_check(gen.op)
    if not verdict:
        raise NotCND(f"generator is not CND, min eigenvalue {verdict.min_eigenvalue:.2e}")

    phi_vec = max_entangled_vec(n)
    compress = np.eye(n * n) - np.outer(phi_vec, phi_vec.conj()) / n
    if method == "direct":
        c_jump = -0.5 * (compress @ choi(gen.op) @ compress)
    elif method == "pipeline":
        algebra = gen.algebra if gen.algebra is not None else full_matrix_algebra(n)
        rep = build_gns_bimodule(algebra, gen, state)
        xi = run_xi_pipeline(rep)
        phi = phi_from_xi(rep, xi)
        c_jump = 0.5 * (compress @ choi(phi) @ compress)
    else:
        raise ValueError(f"unknown method {method!r}")
    c_jump = (c_jump + dag(c_jump)) / 2

    sectors = _bohr_sectors(state, merge_tol)
    lam_max = max(float(np.linalg.eigvalsh(c_jump).max()), 1e-300)
    cutoff = 1e-11 * lam_max

    # off-sector leakage of the compressed Choi matrix (diagnostic)
    leak = c_jump.copy()
    for _, basis in sectors:
        block = dag(basis) @ c_jump @ basis
        leak -= basis @ block @ dag(basis)
    diagnostics = {"sector_leakage": frob(leak), "pairing_gap": 0.0}

    items: list[dict] = []
    for omega, basis in sectors:
        if omega < -merge_tol:
            continue  # handled through the +omega partner
        block = dag(basis) @ c_jump @ basis
        block = (block + dag(block)) / 2
        w, vv = np.linalg.eigh(block)
        if omega <= merge_tol:
            # zero sector: hermitian jumps, one cluster per eigenvalue
            order = np.argsort(-w)
            i = 0
            while i < len(order):
                j = i + 1
                while (
                    j < len(order)
                    and abs(w[order[j]] - w[order[i]]) <= 1e-10 * max(1.0, lam_max)
                ):
                    j += 1
                mu = float(np.mean(w[order[i:j]]))
                if mu > cutoff:
                    mats = [
                        np.conj((basis @ vv[:, order[k]]).reshape(n, n))
                        for k in range(i, j)
                    ]
                    for h in _hermitian_cluster_basis(mats):
                        items.append(
                            {"c": mu, "omega": 0.0, "v": _fix_sign_hermitian(h), "partner": "self"}
                        )
                i = j
        else:
            for k in range(len(w)):
                mu = float(w[k])
                if mu <= cutoff:
                    continue
                v = _fix_phase(np.conj((basis @ vv[:, k]).reshape(n, n)))
                # partner eigenvalue from the -omega sector via the Rayleigh
                # quotient on conj(v*): GNS symmetry forces mu' = mu e^omega
                w_adj = np.conj(dag(v)).flatten()
                mu_adj = float(np.real(np.vdot(w_adj, c_jump @ w_adj)))
                c_plus = mu * np.exp(omega / 2)
                c_minus = mu_adj * np.exp(-omega / 2)
                diagnostics["pairing_gap"] = max(
                    diagnostics["pairing_gap"], abs(c_plus - c_minus)
                )
                c_avg = (c_plus + c_minus) / 2
                items.append({"c": c_avg, "omega": omega, "v": v, "partner": len(items) + 1})
                items.append({"c": c_avg, "omega": -omega, "v": dag(v), "partner": len(items) - 1})

    if diagnostics["pairing_gap"] > 1e-8 * max(1.0, scale):
        diagnostics["pairing_warning"] = (
            "paired sector eigenvalues disagree beyond 1e-8; averaged"
        )

    # deterministic ordering: omega descending, then c descending (stable)
    order = sorted(
        range(len(items)), key=lambda i: (-items[i]["omega"], -items[i]["c"], i)
    )
    position = {old: new for new, old in enumerate(order)}
    terms = []
    pairing = []
    for old in order:
        it = items[old]
        terms.append(AlickiTerm(c=float(it["c"]), omega=float(it["omega"]), v=it["v"]))
        pairing.append(position[old] if it["partner"] == "self" else position[it["partner"]])

    form = AlickiForm(terms=terms, pairing=pairing, diagnostics=diagnostics)
    form.reconstruction_residual = frob(form.rebuild(n).mat - gen.op.mat)
    return form
