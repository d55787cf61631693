"""States and the finite-dimensional modular apparatus.

Everything is computed in a fixed Hilbert-Schmidt model of the GNS space:
L2(M, phi) is the algebra itself with inner product <A, B> = tr(A* B),
the cyclic vector is Omega = sigma^{1/2}, the left/right actions are
left/right matrix multiplication, J(A) = A*, and the modular operator acts
as Delta(A) = sigma A sigma^{-1}.  With these choices S = J Delta^{1/2}
sends x Omega to x* Omega, and the modular group is

    sigma_t(x) = sigma^{it} x sigma^{-it},

which continues analytically to sigma_z(x) = sigma^{iz} x sigma^{-iz}; at
z = i/2 this is x -> sigma^{-1/2} x sigma^{1/2}, consistent with
x Omega = Omega sigma_{i/2}(x).

Matrix powers of sigma always go through its spectral decomposition, never
through a logarithm series.
"""

import warnings

import numpy as np

from ._linalg import dag, frob, sandwich_superop
from .config import FAITHFULNESS_FLOOR
from .errors import DimensionMismatch, FaithfulnessViolated

__all__ = [
    "StateData",
    "modular_group",
    "analytic_continuation",
    "delta_superop",
    "gns_inner",
    "kms_inner",
    "centralizer_check",
]

#: |Im z| * spread(log eig) beyond which sigma^{iz} overflows double range
_EXP_RANGE = 700.0


class StateData:
    """A faithful state, given by its full-rank density matrix.

    The spectral decomposition is computed once at construction; all
    derived objects (powers, modular maps) reuse it.  Instances are
    immutable and safe to share.
    """

    def __init__(self, sigma: np.ndarray, *, trace_tol: float = 1e-12):
        sigma = np.asarray(sigma, dtype=complex)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise DimensionMismatch(f"density matrix must be square, got {sigma.shape}")
        herm = frob(sigma - dag(sigma))
        if herm > 1e-10 * max(1.0, frob(sigma)):
            raise FaithfulnessViolated(f"density matrix not hermitian, residual {herm:.2e}")
        sigma = (sigma + dag(sigma)) / 2
        tr = float(np.trace(sigma).real)
        if abs(tr - 1.0) > trace_tol:
            raise FaithfulnessViolated(f"trace is {tr!r}, not 1 within {trace_tol:.1e}")
        w, u = np.linalg.eigh(sigma)
        if w.min() < FAITHFULNESS_FLOOR:
            raise FaithfulnessViolated(
                f"eigenvalue {w.min():.3e} below faithfulness floor {FAITHFULNESS_FLOOR:.1e}"
            )
        self.sigma = sigma
        self.dim = sigma.shape[0]
        self.eigvals = w
        self.eigvecs = u
        self.log_eigvals = np.log(w)

    # -- spectral calculus -------------------------------------------------

    def power(self, z: complex) -> np.ndarray:
        """sigma^z through the spectral decomposition."""
        return (self.eigvecs * np.exp(z * self.log_eigvals)) @ dag(self.eigvecs)

    @property
    def sqrt(self) -> np.ndarray:
        return self.power(0.5)

    @property
    def inv_sqrt(self) -> np.ndarray:
        return self.power(-0.5)

    @property
    def inv(self) -> np.ndarray:
        return self.power(-1.0)

    @property
    def logm(self) -> np.ndarray:
        return (self.eigvecs * self.log_eigvals) @ dag(self.eigvecs)

    @property
    def cyclic_vector(self) -> np.ndarray:
        """Omega = sigma^{1/2} in the Hilbert-Schmidt model."""
        return self.sqrt

    def expectation(self, x: np.ndarray) -> complex:
        """phi(x) = tr(sigma x)."""
        return complex(np.trace(self.sigma @ x))

    def mod_auto(self, z: complex, x: np.ndarray) -> np.ndarray:
        """Analytically continued modular automorphism sigma^{iz} x sigma^{-iz}."""
        self._warn_overflow(z)
        return self.power(1j * z) @ x @ self.power(-1j * z)

    def _warn_overflow(self, z: complex) -> None:
        spread = float(self.log_eigvals.max() - self.log_eigvals.min())
        if abs(z.imag) * spread > _EXP_RANGE:
            warnings.warn(
                f"analytic continuation at Im z = {z.imag:g} exceeds the "
                f"floating point exponent range (log-eigenvalue spread {spread:g})",
                RuntimeWarning,
            )

    def __repr__(self) -> str:
        return f"StateData(dim={self.dim})"

    @classmethod
    def tracial(cls, n: int) -> "StateData":
        return cls(np.eye(n) / n)

    @classmethod
    def diagonal(cls, probs) -> "StateData":
        return cls(np.diag(np.asarray(probs, dtype=complex)))


def modular_group(state: StateData, t: float):
    """Superoperator of the modular automorphism x -> sigma^{it} x sigma^{-it}."""
    from .superop import SuperOp

    return SuperOp(sandwich_superop(state.power(1j * t), state.power(-1j * t)), state.dim)


def analytic_continuation(state: StateData, z: complex):
    """Superoperator of x -> sigma^{iz} x sigma^{-iz}, warning on overflow."""
    from .superop import SuperOp

    state._warn_overflow(z)
    return SuperOp(sandwich_superop(state.power(1j * z), state.power(-1j * z)), state.dim)


def delta_superop(state: StateData):
    """The modular superoperator Delta: x -> sigma x sigma^{-1}."""
    from .superop import SuperOp

    return SuperOp(sandwich_superop(state.sigma, state.inv), state.dim)


def gns_inner(state: StateData, x: np.ndarray, y: np.ndarray) -> complex:
    """GNS inner product tr(sigma x* y)."""
    x, y = np.asarray(x), np.asarray(y)
    if x.shape != y.shape or x.shape[0] != state.dim:
        raise DimensionMismatch("gns_inner arguments must match the state dimension")
    return complex(np.trace(state.sigma @ dag(x) @ y))


def kms_inner(state: StateData, x: np.ndarray, y: np.ndarray) -> complex:
    """KMS inner product tr(sigma^{1/2} x* sigma^{1/2} y)."""
    x, y = np.asarray(x), np.asarray(y)
    if x.shape != y.shape or x.shape[0] != state.dim:
        raise DimensionMismatch("kms_inner arguments must match the state dimension")
    r = state.sqrt
    return complex(np.trace(r @ dag(x) @ r @ y))


def centralizer_check(state: StateData, x: np.ndarray) -> float:
    """Frobenius norm of [sigma, x]; zero iff x is fixed by the modular group."""
    x = np.asarray(x)
    return frob(state.sigma @ x - x @ state.sigma)
