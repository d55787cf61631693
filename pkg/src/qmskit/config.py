"""Default numerical tolerances.

All verdict-style checks compare a residual Frobenius norm, scaled by the
norm of the input, against an absolute tolerance.  The defaults below can be
overridden per call, or globally through the ``QMS_TOL`` environment
variable (consumed by :func:`default_tol`).
"""

import os
from dataclasses import dataclass

#: default absolute tolerance on scaled residuals
DEFAULT_TOL = 1e-9

#: singular values below ``RANK_TOL * s_max`` are treated as zero
RANK_TOL = 1e-12

#: eigenvalue floor below which a state is considered non-faithful
FAITHFULNESS_FLOOR = 1e-14

#: PSD verdicts allow eigenvalues down to ``-PSD_TOL * scale``
PSD_TOL = 1e-10

#: Gram eigenvalues below ``QUOTIENT_CUTOFF * lambda_max`` are quotiented out
QUOTIENT_CUTOFF = 1e-11

#: Bohr frequencies closer than this are merged into one sector
BOHR_MERGE_TOL = 1e-10

#: default evaluation grid for modular-flow identities
T_GRID = (0.3, 1.0, 2.7)


def default_tol() -> float:
    """Global residual tolerance, honoring the ``QMS_TOL`` env override."""
    env = os.environ.get("QMS_TOL")
    if env:
        return float(env)
    return DEFAULT_TOL


@dataclass(frozen=True)
class Tolerances:
    """Bundle of tolerances threaded through a pipeline run."""

    residual: float = DEFAULT_TOL
    rank: float = RANK_TOL
    psd: float = PSD_TOL
    quotient: float = QUOTIENT_CUTOFF
    bohr_merge: float = BOHR_MERGE_TOL

    @classmethod
    def from_env(cls) -> "Tolerances":
        return cls(residual=default_tol())
