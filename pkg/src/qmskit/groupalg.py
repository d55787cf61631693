"""Finite group von Neumann algebras with conditionally negative definite
length functions.

A group is given by an explicit Cayley table (identity at index 0).  The
left regular representation lambda_g acts on l2(G) by permutation
matrices; the group algebra L(G) = span{lambda_g} sits inside M_{|G|} with
the tracial state tau = tr(. / |G|), for which tau(lambda_g) = delta_{g,e}.

A length function ell with ell(e) = 0, ell(g^{-1}) = ell(g) defines the
multiplier semigroup P_t lambda_g = e^{-t ell(g)} lambda_g; it is a
quantum Markov semigroup iff ell is conditionally negative definite,
equivalently the Gram matrix

    K(g, h) = (ell(g) + ell(h) - ell(g^{-1} h)) / 2

is positive semidefinite.  A Gram factorization of K yields the 1-cocycle
b: G -> H with ||b(g) - b(h)||^2 = ell(g^{-1} h) and the orthogonal
representation pi with b(gh) = b(g) + pi(g) b(h).  The cocycle is real;
it is realized inside a complex coordinate space for uniformity.

For the bimodule of the multiplier semigroup the trace makes the modular
structure trivial, and the explicit averaged vector

    xi = (i / |G|) sum_g delta(lambda_g) lambda_{g^{-1}}

implements the derivation (delta_{i xi} = delta), is fixed by the
conjugation, and reproduces the Christensen-Evans identity
(xi|xi) lambda_g + lambda_g (xi|xi) - 2 (xi|lambda_g xi) = ell(g) lambda_g
with the K-sum formula for (xi | lambda_g xi).
"""

from dataclasses import dataclass, field

import numpy as np

from ._linalg import dag, frob
from .algebra import MatAlgebra, _block_decompose
from .bimodule import build_gns_bimodule, mvalued_inner
from .config import default_tol
from .errors import NotCND, QmsError
from .modular import StateData
from .superop import QMSGenerator, SuperOp

__all__ = [
    "GroupSpec",
    "cyclic_group",
    "symmetric_group_s3",
    "dihedral_d4",
    "left_regular_algebra",
    "group_generator",
    "cocycle_from_length",
    "group_xi_check",
]


@dataclass
class GroupSpec:
    """A finite group given by its Cayley table, with a length function."""

    cayley: np.ndarray
    ell: np.ndarray
    name: str = ""
    inv: np.ndarray = field(init=False)

    def __post_init__(self):
        self.cayley = np.asarray(self.cayley, dtype=int)
        self.ell = np.asarray(self.ell, dtype=float)
        n = self.order
        if self.cayley.shape != (n, n) or self.ell.shape != (n,):
            raise QmsError("Cayley table and length vector sizes disagree")
        for g in range(n):
            if sorted(self.cayley[g, :]) != list(range(n)) or sorted(
                self.cayley[:, g]
            ) != list(range(n)):
                raise QmsError("Cayley table rows/columns are not permutations")
            if self.cayley[0, g] != g or self.cayley[g, 0] != g:
                raise QmsError("index 0 must be the identity element")
        for g in range(n):
            for h in range(n):
                for k in range(n):
                    if self.cayley[self.cayley[g, h], k] != self.cayley[g, self.cayley[h, k]]:
                        raise QmsError("Cayley table is not associative")
        inv = np.full(n, -1, dtype=int)
        for g in range(n):
            hits = np.where(self.cayley[g, :] == 0)[0]
            if hits.size != 1:
                raise QmsError("element without unique inverse")
            inv[g] = hits[0]
        self.inv = inv
        if abs(self.ell[0]) > 0:
            raise QmsError("length of the identity must be 0")
        if np.max(np.abs(self.ell - self.ell[self.inv])) > 1e-12:
            raise QmsError("length must be symmetric under inversion")

    @property
    def order(self) -> int:
        return self.cayley.shape[0]

    def mult(self, g: int, h: int) -> int:
        return int(self.cayley[g, h])

    def k_matrix(self) -> np.ndarray:
        """K(g, h) = (ell(g) + ell(h) - ell(g^{-1} h)) / 2."""
        n = self.order
        k = np.zeros((n, n))
        for g in range(n):
            for h in range(n):
                k[g, h] = (self.ell[g] + self.ell[h] - self.ell[self.mult(self.inv[g], h)]) / 2
        return k

    def cnd_residual(self) -> float:
        """max(0, -lambda_min) of the K Gram matrix; 0 iff ell is CND."""
        w = np.linalg.eigvalsh(self.k_matrix())
        return float(max(0.0, -w.min()))

    def lambda_matrix(self, g: int) -> np.ndarray:
        """Left regular permutation matrix of g."""
        n = self.order
        lam = np.zeros((n, n), dtype=complex)
        for h in range(n):
            lam[self.mult(g, h), h] = 1.0
        return lam


# ---------------------------------------------------------------------------
# Built-in groups
# ---------------------------------------------------------------------------

def _table_from_elements(elements, compose) -> np.ndarray:
    index = {el: i for i, el in enumerate(elements)}
    n = len(elements)
    table = np.zeros((n, n), dtype=int)
    for i, g in enumerate(elements):
        for j, h in enumerate(elements):
            table[i, j] = index[compose(g, h)]
    return table


def _word_length(table: np.ndarray, generators: list[int]) -> np.ndarray:
    """BFS word length over a symmetric generating set."""
    n = table.shape[0]
    ell = np.full(n, -1.0)
    ell[0] = 0.0
    frontier = [0]
    while frontier:
        nxt = []
        for g in frontier:
            for s in generators:
                h = int(table[g, s])
                if ell[h] < 0:
                    ell[h] = ell[g] + 1
                    nxt.append(h)
        frontier = nxt
    if np.any(ell < 0):
        raise QmsError("generating set does not generate the group")
    return ell


def cyclic_group(n: int, ell=None) -> GroupSpec:
    """Z/n with the default length |1 - e^{2 pi i k / n}|^2 (CND: cocycle
    into C)."""
    table = np.array([[(g + h) % n for h in range(n)] for g in range(n)])
    if ell is None:
        ell = np.array([abs(1 - np.exp(2j * np.pi * k / n)) ** 2 for k in range(n)])
    return GroupSpec(table, np.asarray(ell, dtype=float), name=f"Z{n}")


def symmetric_group_s3() -> GroupSpec:
    """S3 with word length over the Coxeter transpositions (01), (12)."""
    elements = [(0, 1, 2), (1, 0, 2), (0, 2, 1), (2, 0, 1), (1, 2, 0), (2, 1, 0)]
    compose = lambda g, h: tuple(g[h[i]] for i in range(3))
    table = _table_from_elements(elements, compose)
    ell = _word_length(table, [1, 2])
    return GroupSpec(table, ell, name="S3")


def dihedral_d4() -> GroupSpec:
    """D4 (order 8) with word length over {r, r^-1, s}."""
    elements = [(a, b) for b in range(2) for a in range(4)]

    def compose(g, h):
        a, b = g
        c, d = h
        # (r^a s^b)(r^c s^d) = r^(a + (-1)^b c) s^(b+d)
        return ((a + (c if b == 0 else -c)) % 4, (b + d) % 2)

    table = _table_from_elements(elements, compose)
    idx_r = elements.index((1, 0))
    idx_rinv = elements.index((3, 0))
    idx_s = elements.index((0, 1))
    ell = _word_length(table, [idx_r, idx_rinv, idx_s])
    return GroupSpec(table, ell, name="D4")


# ---------------------------------------------------------------------------
# Group algebra, generator, cocycle
# ---------------------------------------------------------------------------

def left_regular_algebra(spec: GroupSpec, seed: int = 0) -> MatAlgebra:
    """L(G) inside M_{|G|}, with HS-orthonormal basis lambda_g / sqrt(|G|)."""
    n = spec.order
    basis = [spec.lambda_matrix(g) / np.sqrt(n) for g in range(n)]
    blocks = _block_decompose(basis, n, seed=seed)
    alg = MatAlgebra(n, basis, blocks)
    alg.validate()
    return alg


def group_generator(spec: GroupSpec, tol: float | None = None) -> QMSGenerator:
    """Multiplier generator L(lambda_g) = ell(g) lambda_g on L(G).

    GNS-symmetric for the trace; raises NotCND when the K Gram test fails.
    """
    tol = default_tol() if tol is None else tol
    cnd = spec.cnd_residual()
    if cnd > tol * max(1.0, float(np.max(spec.ell)) if spec.order else 1.0):
        raise NotCND(f"length function is not CND, K Gram defect {cnd:.2e}")
    n = spec.order
    mat = np.zeros((n * n, n * n), dtype=complex)
    for g in range(n):
        v = spec.lambda_matrix(g).flatten(order="F")
        mat += spec.ell[g] * np.outer(v, v.conj()) / n
    gen = QMSGenerator(
        op=SuperOp(mat, n),
        sigma=StateData.tracial(n),
        algebra=left_regular_algebra(spec),
    )
    gen.validate()
    return gen


@dataclass
class CocycleData:
    dim: int
    b: np.ndarray  # dim x |G|, b(g) in columns
    pi: list[np.ndarray]
    residuals: dict


def cocycle_from_length(spec: GroupSpec, tol: float | None = None) -> CocycleData:
    """Gram-factorize K into a 1-cocycle b and orthogonal representation pi.

    Verifies b(gh) = b(g) + pi(g) b(h) and ||b(g) - b(h)||^2 = ell(g^{-1}h).
    """
    tol = default_tol() if tol is None else tol
    k = spec.k_matrix()
    cnd = spec.cnd_residual()
    if cnd > tol * max(1.0, frob(k)):
        raise NotCND(f"length function is not CND, K Gram defect {cnd:.2e}")
    w, v = np.linalg.eigh(k)
    keep = w > 1e-11 * max(1.0, float(w.max()) if w.size else 1.0)
    b = (np.sqrt(w[keep])[:, None] * v[:, keep].T).astype(float)
    dim = b.shape[0]
    n = spec.order

    b_pinv = np.linalg.pinv(b)
    pis = []
    coc_resid = 0.0
    orth_resid = 0.0
    for g in range(n):
        target = np.column_stack([b[:, spec.mult(g, h)] - b[:, g] for h in range(n)])
        pi_g = target @ b_pinv
        pis.append(pi_g)
        coc_resid = max(coc_resid, float(np.max(np.abs(pi_g @ b - target))) if b.size else 0.0)
        orth_resid = max(orth_resid, frob(pi_g.T @ pi_g - np.eye(dim)))
    dist_resid = 0.0
    for g in range(n):
        for h in range(n):
            d2 = float(np.sum((b[:, g] - b[:, h]) ** 2))
            dist_resid = max(dist_resid, abs(d2 - spec.ell[spec.mult(spec.inv[g], h)]))
    resid = {
        "cocycle_identity": coc_resid,
        "orthogonality": orth_resid,
        "distance_identity": dist_resid,
        "k_gram_defect": cnd,
    }
    return CocycleData(dim=dim, b=b, pi=pis, residuals=resid)


def group_xi_check(spec: GroupSpec, tol: float | None = None) -> dict:
    """Build the bimodule of the multiplier semigroup and verify the
    explicit averaged vector xi = (i/|G|) sum_g delta(lambda_g)
    lambda_{g^{-1}}: it implements the derivation, is fixed by the
    conjugation, and satisfies the K-sum and Christensen-Evans identities
    termwise."""
    tol = default_tol() if tol is None else tol
    gen = group_generator(spec, tol=tol)
    alg = gen.algebra
    state = gen.sigma
    rep = build_gns_bimodule(alg, gen, state, tol=tol)

    n = spec.order
    xi = np.zeros(rep.dim_h, dtype=complex)
    for g in range(n):
        lam_g = spec.lambda_matrix(g)
        lam_ginv = spec.lambda_matrix(int(spec.inv[g]))
        xi += rep.right_f(lam_ginv) @ rep.delta(lam_g)
    xi *= 1j / n

    report = {
        "delta_implementation": rep.implementation_residual(xi, factor=1j),
        "jj_fixed": frob(rep.jconj(xi) - xi),
        "ut_trivial": frob(rep.ut_gen),
    }

    k = spec.k_matrix()
    k_sum = float(np.sum(k)) / n**2
    k2 = mvalued_inner(rep, xi, xi)
    ksum_resid = 0.0
    ce_resid = 0.0
    for g in range(n):
        lam_g = spec.lambda_matrix(g)
        inner = mvalued_inner(rep, xi, rep.left(lam_g) @ xi)
        expected = (k_sum - spec.ell[g] / 2) * lam_g
        ksum_resid = max(ksum_resid, frob(inner - expected))
        ce = k2 @ lam_g + lam_g @ k2 - 2 * inner
        ce_resid = max(ce_resid, frob(ce - spec.ell[g] * lam_g))
    report["k_sum_identity"] = ksum_resid
    report["ce_identity"] = ce_resid
    return report
