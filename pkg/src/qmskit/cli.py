"""Batch front end: load problem JSON, run a pipeline, emit a report.

Commands
--------
    qms check       --generator G [--state S]        structural flags
    qms decompose   --generator G [--state S]        Alicki jump data
    qms extend      --sub C --ambient-dim n [--state S]
    qms fock-verify --generator G [--state S]        truncated Fock identities
    qms haar-test   --generator G [--state S] --samples N
    qms evolve      --generator G [--state S] --t T [--observable X]

``--generator`` (and ``--sub``) accept a superoperator document, a chain
document {"m", "Q"} (placed on the diagonal subalgebra, state defaulting
to diag(m)) or a group document {"cayley", "ell"} (multiplier generator on
the group algebra, tracial state).

Reports are JSON: {command, inputs (sha256 digests), seed, tolerances,
residuals, artifacts, pass, wall_time_s}.  Identical inputs and seed give
byte-identical reports apart from the wall time.  Exit codes: 0 all
residuals within tolerance, 2 parse error, 3 precondition violation,
4 numerical failure.  The environment variable QMS_TOL overrides the
default tolerance globally.
"""

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import jsonio
from ._linalg import frob
from .algebra import full_matrix_algebra
from .bimodule import build_gns_bimodule, haar_inner_vector
from .ceform import alicki_decompose, ce_identity_check, run_xi_pipeline
from .config import default_tol
from .errors import (
    DimensionMismatch,
    FaithfulnessViolated,
    ModularInvarianceViolated,
    NonFullAlgebra,
    NotAGenerator,
    NotCND,
    NotCP,
    NotDBC,
    NotSymmetric,
    QmsError,
    ResidualTooLarge,
    SpanClosureFailure,
    StageError,
    StateMismatch,
)
from .extension import chain_to_generator, extend_generator, restrict_check
from .fock import build_fock, gamma_identity_check
from .groupalg import group_generator
from .modular import StateData
from .superop import (
    QMSGenerator,
    cnd_check,
    gns_symmetric_check,
    markov_check,
    modular_commutation_check,
    semigroup,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_NUMERICAL = 4

_PRECONDITION_ERRORS = (
    ModularInvarianceViolated,
    NotAGenerator,
    NotCND,
    NotCP,
    NotDBC,
    NotSymmetric,
    NonFullAlgebra,
    StageError,
    StateMismatch,
    FaithfulnessViolated,
)
_NUMERICAL_ERRORS = (ResidualTooLarge, SpanClosureFailure)


@dataclass
class JobSpec:
    """One batch job: command, input paths, tolerance overrides, seed."""

    command: str
    inputs: dict[str, str]
    tol: float | None = None
    seed: int = 0
    t_grid: tuple = (0.3, 1.0, 2.7)
    output: str | None = None
    options: dict = field(default_factory=dict)


def _digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _load_generator(path: str, state_path: str | None):
    """Sniff the document type and return (QMSGenerator, StateData)."""
    data = jsonio.load(path)
    state = jsonio.state_from_json(jsonio.load(state_path)) if state_path else None
    if "Q" in data and "m" in data:
        gen = chain_to_generator(jsonio.chain_from_json(data))
        return gen, state or gen.sigma
    if "cayley" in data:
        gen = group_generator(jsonio.group_from_json(data))
        return gen, state or gen.sigma
    op = jsonio.superop_from_json(data)
    if state is None:
        raise QmsError("a superoperator generator needs an explicit --state")
    return QMSGenerator.from_superop(op, state), state


def run(job: JobSpec) -> tuple[dict, int]:
    """Execute a job; returns (report, exit code)."""
    tol = job.tol if job.tol is not None else default_tol()
    t0 = time.perf_counter()
    report = {
        "schema": "v1",
        "command": job.command,
        "inputs": {name: _digest(path) for name, path in job.inputs.items()},
        "seed": job.seed,
        "tolerances": {"residual": tol},
        "residuals": {},
        "artifacts": {},
    }
    handler = {
        "check": _run_check,
        "decompose": _run_decompose,
        "extend": _run_extend,
        "fock-verify": _run_fock_verify,
        "haar-test": _run_haar_test,
        "evolve": _run_evolve,
    }[job.command]
    ok = handler(job, report, tol)
    report["pass"] = bool(ok)
    report["wall_time_s"] = time.perf_counter() - t0
    return report, EXIT_OK if ok else EXIT_NUMERICAL


def _scaled(residuals: dict, tol: float, scale: float = 1.0) -> bool:
    return all(v <= tol * max(1.0, scale) for v in residuals.values())


def _hs_projection(algebra):
    """HS-orthogonal projection onto a subalgebra (the trace-preserving
    conditional expectation), as a superoperator."""
    from .superop import SuperOp

    n = algebra.ambient_dim
    mat = np.zeros((n * n, n * n), dtype=complex)
    for b in algebra.basis:
        v = b.flatten(order="F")
        mat += np.outer(v, v.conj())
    return SuperOp(mat, n)


def _run_check(job: JobSpec, report: dict, tol: float) -> bool:
    gen, state = _load_generator(job.inputs["generator"], job.inputs.get("state"))
    scale = max(1.0, gen.op.norm())
    resid = {
        "unit_kernel": gen.op.unit_kernel_residual(),
        "hermiticity": gen.op.herm_preserving_residual(),
        "dbc_gns_symmetry": gns_symmetric_check(gen.op, state),
        "modular_commutation": modular_commutation_check(gen.op, state, job.t_grid),
    }
    flags = {}
    p1 = semigroup(gen, 1.0)
    if gen.algebra is None or gen.algebra.is_full():
        verdict = cnd_check(gen.op)
        flags["cnd"] = bool(verdict)
        resid["cnd_min_eigenvalue"] = max(0.0, -verdict.min_eigenvalue)
    else:
        rep = build_gns_bimodule(gen.algebra, gen, state, tol=tol)
        flags["cnd"] = True  # build would have raised NotCND
        resid["cnd_min_eigenvalue"] = 0.0
        report["artifacts"]["bimodule_dim"] = rep.dim_h
        # complete positivity only holds on the subalgebra; test P_t
        # composed with the projection onto it
        p1 = p1 @ _hs_projection(gen.algebra)
    mk = markov_check(p1)
    resid["semigroup_cp"] = mk["cp_residual"]
    resid["semigroup_unital"] = mk["unital_residual"]
    report["residuals"] = resid
    report["artifacts"]["flags"] = flags
    return flags.get("cnd", False) and _scaled(resid, tol, scale)


def _run_decompose(job: JobSpec, report: dict, tol: float) -> bool:
    gen, state = _load_generator(job.inputs["generator"], job.inputs.get("state"))
    method = job.options.get("method", "pipeline")
    if gen.algebra is not None and not gen.algebra.is_full():
        # subalgebra generators are extended first, as the theory directs
        result = extend_generator(gen, full_matrix_algebra(gen.dim), state, tol=tol)
        gen = result.gen
        report["artifacts"]["extended"] = True
    form = alicki_decompose(gen, state, method=method)
    inv = form.invariant_residuals(state)
    resid = dict(inv)
    resid["reconstruction"] = form.reconstruction_residual
    report["residuals"] = resid
    report["artifacts"]["alicki"] = jsonio.alicki_to_json(form)
    report["artifacts"]["bohr_frequencies"] = sorted(
        {round(t.omega, 9) for t in form.terms}, reverse=True
    )
    scale = max(1.0, gen.op.norm())
    return _scaled(resid, tol, scale)


def _run_extend(job: JobSpec, report: dict, tol: float) -> bool:
    sub_gen, sub_state = _load_generator(job.inputs["sub"], None)
    n = int(job.options.get("ambient_dim") or sub_gen.dim)
    if n != sub_gen.dim:
        raise DimensionMismatch("ambient dimension must match the embedded subalgebra")
    state_path = job.inputs.get("state")
    state = (
        jsonio.state_from_json(jsonio.load(state_path)) if state_path else sub_state
    )
    result = extend_generator(sub_gen, full_matrix_algebra(n), state, tol=tol)
    resid = dict(result.residuals)
    resid.update(
        {
            f"restrict_{k}": v
            for k, v in restrict_check(result.gen, sub_gen, result.expectation).items()
        }
    )
    report["residuals"] = resid
    report["artifacts"]["k"] = jsonio.matrix_to_json(result.k)
    report["artifacts"]["generator"] = jsonio.superop_to_json(result.gen.op)
    scale = max(1.0, result.gen.op.norm())
    return _scaled({k: v for k, v in resid.items() if not np.isnan(v)}, 100 * tol, scale)


def _run_fock_verify(job: JobSpec, report: dict, tol: float) -> bool:
    gen, state = _load_generator(job.inputs["generator"], job.inputs.get("state"))
    algebra = gen.algebra if gen.algebra is not None else full_matrix_algebra(gen.dim)
    rep = build_gns_bimodule(algebra, gen, state, tol=tol)
    xi = run_xi_pipeline(rep)
    fock = build_fock(rep, xi)
    resid = fock.invariant_residuals(t_grid=job.t_grid, seed=job.seed)
    resid["gamma_identity"] = gamma_identity_check(fock, gen)
    resid["ce_identity"] = ce_identity_check(gen, rep, xi)
    report["residuals"] = resid
    report["artifacts"]["level_dims"] = list(map(int, fock.level_dims))
    scale = max(1.0, gen.op.norm())
    return _scaled(resid, 100 * tol, scale)


def _run_haar_test(job: JobSpec, report: dict, tol: float) -> bool:
    gen, state = _load_generator(job.inputs["generator"], job.inputs.get("state"))
    algebra = gen.algebra if gen.algebra is not None else full_matrix_algebra(gen.dim)
    rep = build_gns_bimodule(algebra, gen, state, tol=tol)
    samples = int(job.options.get("samples", 1000))
    repeats = int(job.options.get("repeats", 5))
    rich_res, poor_res = [], []
    trend = {}
    for r in range(repeats):
        _, rich = haar_inner_vector(rep, samples=samples, seed=job.seed + 2 * r)
        _, poor = haar_inner_vector(
            rep, samples=max(100, samples // 4), seed=job.seed + 2 * r + 1
        )
        rich_res.append(rich["residual"])
        poor_res.append(poor["residual"])
        if r == 0:
            trend = rich["trend"]
            delta_norm = rich["delta_norm"]
    mean_rich = float(np.mean(rich_res))
    mean_poor = float(np.mean(poor_res))
    resid = {"residual_full": mean_rich, "residual_quarter": mean_poor}
    ratio = mean_rich / max(mean_poor, 1e-300)
    report["residuals"] = resid
    report["artifacts"]["trend"] = {str(k): v for k, v in trend.items()}
    report["artifacts"]["ratio_full_to_quarter"] = ratio
    report["artifacts"]["delta_norm"] = delta_norm
    report["artifacts"]["repeats"] = repeats
    # seed-averaged Monte-Carlo error should shrink like N^{-1/2}; the
    # quarter run has twice the error, tested with 50% slack
    return ratio <= 0.75 or mean_rich <= tol * max(1.0, delta_norm)


def _run_evolve(job: JobSpec, report: dict, tol: float) -> bool:
    gen, state = _load_generator(job.inputs["generator"], job.inputs.get("state"))
    t = float(job.options.get("t", 1.0))
    p_t = semigroup(gen, t)
    if gen.algebra is not None and not gen.algebra.is_full():
        mk = markov_check(p_t @ _hs_projection(gen.algebra))
    else:
        mk = markov_check(p_t)
    resid = {
        "semigroup_cp": mk["cp_residual"],
        "semigroup_unital": mk["unital_residual"],
    }
    report["residuals"] = resid
    report["artifacts"]["propagator"] = jsonio.superop_to_json(p_t)
    obs_path = job.inputs.get("observable")
    if obs_path:
        x = jsonio.matrix_from_json(jsonio.load(obs_path)["matrix"])
        evolved = p_t(x)
        report["artifacts"]["evolved"] = jsonio.matrix_to_json(evolved)
        report["artifacts"]["expectation"] = [
            float(np.real(state.expectation(evolved))),
            float(np.imag(state.expectation(evolved))),
        ]
    scale = max(1.0, p_t.norm())
    return _scaled(resid, tol, scale)


# ---------------------------------------------------------------------------
# argparse front end
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qms",
        description="GNS-symmetric quantum Markov semigroup toolkit (batch runner)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--state", help="state JSON (density matrix)")
        p.add_argument("--tol", type=float, default=None, help="residual tolerance")
        p.add_argument("--seed", type=int, default=0, help="RNG seed (recorded)")
        p.add_argument(
            "--t-grid",
            type=float,
            nargs="+",
            default=[0.3, 1.0, 2.7],
            help="time grid for modular-flow identities",
        )
        p.add_argument("--output", help="write the report JSON here")

    for name in ("check", "decompose", "fock-verify", "haar-test", "evolve"):
        p = sub.add_parser(name)
        p.add_argument("--generator", required=True, help="generator/chain/group JSON")
        common(p)
    sub.choices["decompose"].add_argument(
        "--method", choices=("pipeline", "direct"), default="pipeline"
    )
    sub.choices["haar-test"].add_argument("--samples", type=int, default=1000)
    sub.choices["haar-test"].add_argument("--repeats", type=int, default=5)
    sub.choices["evolve"].add_argument("--t", type=float, default=1.0)
    sub.choices["evolve"].add_argument("--observable", help="matrix JSON to evolve")

    p = sub.add_parser("extend")
    p.add_argument("--sub", required=True, help="subalgebra generator (chain/group JSON)")
    p.add_argument("--ambient-dim", type=int, default=None)
    common(p)
    return parser


def _job_from_args(args) -> JobSpec:
    inputs = {}
    options = {}
    if getattr(args, "generator", None):
        inputs["generator"] = args.generator
    if getattr(args, "sub", None):
        inputs["sub"] = args.sub
    if getattr(args, "state", None):
        inputs["state"] = args.state
    if getattr(args, "observable", None):
        inputs["observable"] = args.observable
    for key in ("method", "samples", "repeats", "t", "ambient_dim"):
        if getattr(args, key, None) is not None:
            options[key] = getattr(args, key)
    return JobSpec(
        command=args.command,
        inputs=inputs,
        tol=args.tol,
        seed=args.seed,
        t_grid=tuple(args.t_grid),
        output=args.output,
        options=options,
    )


def write_report(report: dict, path: str | None) -> str:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    job = _job_from_args(args)
    try:
        report, code = run(job)
    except (json.JSONDecodeError, FileNotFoundError, KeyError, DimensionMismatch) as exc:
        print(f"qms: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except _PRECONDITION_ERRORS as exc:
        print(f"qms: precondition violated: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except _NUMERICAL_ERRORS as exc:
        print(f"qms: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except QmsError as exc:
        print(f"qms: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    text = write_report(report, job.output)
    print(text, end="")
    return code


if __name__ == "__main__":
    sys.exit(main())
