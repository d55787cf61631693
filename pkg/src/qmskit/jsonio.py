"""JSON codecs for all file formats (schema version "v1").

Complex numbers are stored as [re, im] pairs so golden files stay
language-neutral.  Supported documents:

    state      {"schema": "v1", "sigma": [[[re,im], ...], ...]}
    superop    {"schema": "v1", "dim": n, "mat": [[[re,im], ...], ...]}
               | {"schema": "v1", "kind": "kraus", "ops": [mat, ...]}
               | {"schema": "v1", "kind": "hamiltonian_jump",
                  "h": mat, "jumps": [mat, ...]}
    algebra    {"schema": "v1", "ambient_dim": n, "generators": [mat, ...]}
    chain      {"schema": "v1", "m": [...], "Q": [[...], ...]}
    group      {"schema": "v1", "cayley": [[...], ...], "ell": [...]}
    alicki     {"schema": "v1", "terms": [{"c": r, "omega": w, "v": mat}, ...],
                "pairing": [...]}

The "kraus" kind denotes the Heisenberg-picture map x -> sum_j V_j* x V_j;
"hamiltonian_jump" denotes the generator L with exp(-tL) the GKSL
semigroup of (h, jumps).
"""

import json

import numpy as np

from .errors import QmsError

SCHEMA = "v1"


def matrix_to_json(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    try:
        return np.array([[complex(z[0], z[1]) for z in row] for row in data])
    except (TypeError, IndexError) as exc:
        raise QmsError(f"malformed complex matrix in JSON: {exc}") from exc


def state_to_json(state) -> dict:
    return {"schema": SCHEMA, "sigma": matrix_to_json(state.sigma)}


def state_from_json(data):
    from .modular import StateData

    if "sigma" not in data:
        raise QmsError("state JSON must contain 'sigma'")
    return StateData(matrix_from_json(data["sigma"]))


def superop_to_json(s) -> dict:
    return {"schema": SCHEMA, "dim": s.dim, "mat": matrix_to_json(s.mat)}


def superop_from_json(data):
    from .superop import SuperOp

    kind = data.get("kind", "mat")
    if kind == "mat":
        if "mat" not in data or "dim" not in data:
            raise QmsError("superop JSON must contain 'dim' and 'mat'")
        return SuperOp(matrix_from_json(data["mat"]), int(data["dim"]))
    if kind == "kraus":
        return SuperOp.from_kraus([matrix_from_json(v) for v in data["ops"]])
    if kind == "hamiltonian_jump":
        return SuperOp.from_hamiltonian_jumps(
            matrix_from_json(data["h"]),
            [matrix_from_json(v) for v in data.get("jumps", [])],
        )
    raise QmsError(f"unknown superop kind {kind!r}")


def algebra_to_json(alg) -> dict:
    return {
        "schema": SCHEMA,
        "ambient_dim": alg.ambient_dim,
        "generators": [matrix_to_json(b) for b in alg.basis],
        "blocks": [{"dim": b.dim, "mult": b.mult} for b in alg.blocks],
    }


def algebra_from_json(data):
    from .algebra import algebra_from_generators

    gens = [matrix_from_json(g) for g in data["generators"]]
    return algebra_from_generators(gens)


def chain_from_json(data):
    from .extension import ChainSpec

    if "m" not in data or "Q" not in data:
        raise QmsError("chain JSON must contain 'm' and 'Q'")
    return ChainSpec(np.asarray(data["m"], dtype=float), np.asarray(data["Q"], dtype=float))


def chain_to_json(chain) -> dict:
    return {"schema": SCHEMA, "m": list(map(float, chain.m)), "Q": chain.q.tolist()}


def group_from_json(data):
    from .groupalg import GroupSpec

    if "cayley" not in data or "ell" not in data:
        raise QmsError("group JSON must contain 'cayley' and 'ell'")
    return GroupSpec(np.asarray(data["cayley"], dtype=int), np.asarray(data["ell"], dtype=float))


def alicki_to_json(form) -> dict:
    return {
        "schema": SCHEMA,
        "terms": [
            {"c": float(t.c), "omega": float(t.omega), "v": matrix_to_json(t.v)}
            for t in form.terms
        ],
        "pairing": list(map(int, form.pairing)),
    }


def alicki_from_json(data):
    from .ceform import AlickiForm, AlickiTerm

    terms = [
        AlickiTerm(c=float(t["c"]), omega=float(t["omega"]), v=matrix_from_json(t["v"]))
        for t in data["terms"]
    ]
    return AlickiForm(terms=terms, pairing=list(map(int, data["pairing"])))


def load(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def dump(obj: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
