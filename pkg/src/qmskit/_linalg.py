"""Small linear-algebra helpers shared by the toolkit.

Vectorization is fixed once and for all as column stacking, so that

    vec(A X B) = (B^T  kron  A) vec(X).

A worked 2x2 example:  X = [[a, b], [c, d]]  has  vec(X) = (a, c, b, d)^T,
and for A = [[0, 1], [0, 0]] (= E_12), B = I the superoperator of
X -> A X is kron(I, A), which sends (a, c, b, d) to (c, 0, d, 0);
indeed E_12 X = [[c, d], [0, 0]].
"""

import numpy as np

from .config import RANK_TOL


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    return np.asarray(x).flatten(order="F")


def unvec(v: np.ndarray, n: int | None = None) -> np.ndarray:
    """Inverse of :func:`vec` for square matrices."""
    v = np.asarray(v)
    if n is None:
        n = round(np.sqrt(v.size))
    return v.reshape((n, n), order="F")


def dag(x: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.conj(np.asarray(x)).T


def frob(x: np.ndarray) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(np.asarray(x)))


def left_mult_superop(a: np.ndarray) -> np.ndarray:
    """Superoperator matrix of x -> a x."""
    n = a.shape[0]
    return np.kron(np.eye(n), a)


def right_mult_superop(b: np.ndarray) -> np.ndarray:
    """Superoperator matrix of x -> x b."""
    n = b.shape[0]
    return np.kron(b.T, np.eye(n))


def sandwich_superop(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator matrix of x -> a x b."""
    return np.kron(b.T, a)


def null_space(a: np.ndarray, rtol: float = RANK_TOL, atol: float = 0.0) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of ``a`` via SVD.

    ``atol`` guards the scale-free decision when the matrix is essentially
    zero (all directions are kernel); callers with normalized inputs pass
    an absolute floor.
    """
    a = np.atleast_2d(a)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    if s.size == 0:
        return np.eye(a.shape[1], dtype=complex)
    rank = int(np.sum(s > max(rtol * s[0], atol)))
    return dag(vh[rank:, :])


def orthonormalize(vectors: np.ndarray, rtol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the column span of ``vectors``."""
    vectors = np.atleast_2d(vectors)
    u, s, _ = np.linalg.svd(vectors, full_matrices=False)
    if s.size == 0:
        return u[:, :0]
    rank = int(np.sum(s > rtol * s[0]))
    return u[:, :rank]


def eigh_clustered(h: np.ndarray, tol: float) -> list[tuple[float, np.ndarray]]:
    """Eigendecompose a hermitian matrix and merge eigenvalues within ``tol``.

    Returns a list of (eigenvalue, orthonormal eigenvector columns) pairs
    sorted by ascending eigenvalue.
    """
    w, v = np.linalg.eigh(h)
    clusters: list[tuple[float, np.ndarray]] = []
    i = 0
    while i < len(w):
        j = i + 1
        while j < len(w) and abs(w[j] - w[i]) <= tol:
            j += 1
        clusters.append((float(np.mean(w[i:j])), v[:, i:j]))
        i = j
    return clusters


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    # fix the phase ambiguity of QR so the distribution is exactly Haar
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    """Gaussian hermitian matrix."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (z + dag(z)) / 2


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product tr(a* b)."""
    return complex(np.trace(dag(a) @ b))


def max_entangled_vec(n: int) -> np.ndarray:
    """vec of the identity; the maximally entangled vector up to scale."""
    return np.eye(n, dtype=complex).flatten(order="F")
