"""Declarative problem files: parsing, validation, canonical serialization.

A problem file bundles the control problem (per-plane atom lists, optional
interface atoms, discount, declared constants), the computational domain, the
grid resolution and the scheme parameters, so every subcommand sees the same
problem. Files are JSON with a ``schema_version`` field; validation errors
name the offending field by path.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any

from .errors import SchemaError
from .geometry import JunctionShape
from .problem import AffineCoef, ControlAtom, Domain, JunctionProblem, disc_family, interface_atom
from .solver import JunctionGrid

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ProblemFile:
    """A parsed problem file: domain objects plus the normalized document."""

    problem: JunctionProblem
    domain: Domain
    grid: JunctionGrid
    dt: float
    tol: float
    max_iter: int
    normalized: dict

    def problem_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.normalized, sort_keys=True).encode()).hexdigest()[:16]


def _fail(path: str, msg: str):
    raise SchemaError(f"{path}: {msg}")


def _get(doc: dict, path: str, key: str, kind, required: bool = True, default=None):
    if key not in doc:
        if required:
            _fail(f"{path}.{key}" if path else key, "missing required field")
        return default
    val = doc[key]
    wants_bool = kind is bool or (isinstance(kind, tuple) and bool in kind)
    if isinstance(val, bool) and not wants_bool:
        _fail(f"{path}.{key}" if path else key, "expected a number, got a boolean")
    if not isinstance(val, kind):
        _fail(f"{path}.{key}" if path else key,
              f"expected {getattr(kind, '__name__', kind)}, got {type(val).__name__}")
    return val


def _norm_affine(doc: Any, path: str) -> dict:
    if not isinstance(doc, dict):
        _fail(path, "expected an object with const/x0/xi fields")
    out = {"const": float(_get(doc, path, "const", (int, float)))}
    out["x0"] = float(_get(doc, path, "x0", (int, float), required=False, default=0.0))
    out["xi"] = float(_get(doc, path, "xi", (int, float), required=False, default=0.0))
    extra = set(doc) - {"const", "x0", "xi"}
    if extra:
        _fail(path, f"unknown fields {sorted(extra)}")
    return out


def _norm_cost(doc: Any, path: str) -> dict:
    if not isinstance(doc, dict):
        _fail(path, "expected a cost object")
    kind = _get(doc, path, "type", str)
    if kind == "constant":
        return {"type": "constant", "value": float(_get(doc, path, "value", (int, float)))}
    if kind == "affine":
        inner = {k: v for k, v in doc.items() if k != "type"}
        aff = _norm_affine(inner, path)
        return {"type": "affine", **aff}
    _fail(f"{path}.type", f"unknown cost type {kind!r} (constant|affine)")


def _norm_dynamics(doc: Any, path: str, interface: bool) -> dict:
    if not isinstance(doc, dict):
        _fail(path, "expected a dynamics object")
    kind = _get(doc, path, "type", str)
    if kind == "constant":
        out = {"type": "constant", "f0": float(_get(doc, path, "f0", (int, float)))}
        if interface:
            if "fi" in doc and doc["fi"] not in (0, 0.0):
                _fail(f"{path}.fi", "interface dynamics are tangential: fi must be 0")
        else:
            out["fi"] = float(_get(doc, path, "fi", (int, float)))
        return out
    if kind == "affine":
        out = {"type": "affine", "f0": _norm_affine(_get(doc, path, "f0", dict), f"{path}.f0")}
        if not interface:
            out["fi"] = _norm_affine(_get(doc, path, "fi", dict), f"{path}.fi")
        return out
    if kind == "disc":
        if interface:
            _fail(f"{path}.type", "disc families are not allowed for interface controls")
        out = {"type": "disc", "radius": float(_get(doc, path, "radius", (int, float)))}
        center = doc.get("center", [0.0, 0.0])
        if (not isinstance(center, list) or len(center) != 2
                or not all(isinstance(c, (int, float)) for c in center)):
            _fail(f"{path}.center", "expected [c0, ci]")
        out["center"] = [float(center[0]), float(center[1])]
        if out["radius"] <= 0:
            _fail(f"{path}.radius", "radius must be positive")
        return out
    _fail(f"{path}.type", f"unknown dynamics type {kind!r} (constant|affine|disc)")


def _norm_control(doc: Any, path: str, interface: bool) -> dict:
    if not isinstance(doc, dict):
        _fail(path, "expected a control object")
    out = {
        "id": _get(doc, path, "id", str),
        "dynamics": _norm_dynamics(_get(doc, path, "dynamics", dict),
                                   f"{path}.dynamics", interface),
        "cost": _norm_cost(_get(doc, path, "cost", dict), f"{path}.cost"),
    }
    if not out["id"]:
        _fail(f"{path}.id", "id must be a non-empty string")
    return out


def normalize(doc: dict) -> dict:
    """Validate a raw document and return the canonical-ordering normalized form."""
    if not isinstance(doc, dict):
        raise SchemaError("problem file must be a JSON object")
    version = _get(doc, "", "schema_version", int, required=False, default=SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        _fail("schema_version", f"unsupported version {version} (expected {SCHEMA_VERSION})")
    lam = float(_get(doc, "", "lambda", (int, float)))
    if lam <= 0:
        _fail("lambda", f"discount rate must be positive, got {lam}")
    planes_doc = _get(doc, "", "planes", list)
    if len(planes_doc) < 2:
        _fail("planes", f"a junction needs at least 2 planes, got {len(planes_doc)}")
    planes = []
    for i, pd in enumerate(planes_doc):
        if not isinstance(pd, dict):
            _fail(f"planes[{i}]", "expected an object")
        controls = _get(pd, f"planes[{i}]", "controls", list)
        if not controls:
            _fail(f"planes[{i}].controls", "control set must be non-empty")
        planes.append({
            "name": _get(pd, f"planes[{i}]", "name", str, required=False, default=f"plane{i + 1}"),
            "controls": [_norm_control(c, f"planes[{i}].controls[{j}]", interface=False)
                         for j, c in enumerate(controls)],
        })
    interface_controls = [
        _norm_control(c, f"interface_controls[{j}]", interface=True)
        for j, c in enumerate(_get(doc, "", "interface_controls", list,
                                   required=False, default=[]))]
    dom = _get(doc, "", "domain", dict)
    x0 = _get(dom, "domain", "x0", list)
    if len(x0) != 2 or not all(isinstance(v, (int, float)) for v in x0) or x0[0] >= x0[1]:
        _fail("domain.x0", "expected [min, max] with min < max")
    xi_max = float(_get(dom, "domain", "xi_max", (int, float)))
    if xi_max <= 0:
        _fail("domain.xi_max", "must be positive")
    grid = _get(doc, "", "grid", dict)
    n0 = _get(grid, "grid", "n0", int)
    ni = _get(grid, "grid", "ni", int)
    if n0 < 2 or ni < 2:
        _fail("grid", "n0 and ni must be at least 2")
    scheme = _get(doc, "", "scheme", dict)
    dt = float(_get(scheme, "scheme", "dt", (int, float)))
    tol = float(_get(scheme, "scheme", "tol", (int, float), required=False, default=1e-8))
    max_iter = _get(scheme, "scheme", "max_iter", int, required=False, default=100_000)
    if dt <= 0 or tol <= 0 or max_iter <= 0:
        _fail("scheme", "dt, tol and max_iter must be positive")
    declared = _get(doc, "", "declared", dict)
    decl = {
        "M_f": float(_get(declared, "declared", "M_f", (int, float))),
        "M_ell": float(_get(declared, "declared", "M_ell", (int, float))),
        "L_f": float(_get(declared, "declared", "L_f", (int, float))),
    }
    if "L_ell" in declared:
        decl["L_ell"] = float(_get(declared, "declared", "L_ell", (int, float)))
    disc_samples = _get(doc, "", "disc_samples", int, required=False, default=64)
    if disc_samples < 3:
        _fail("disc_samples", "at least 3 angle samples are required")
    normalized = {
        "schema_version": SCHEMA_VERSION,
        "lambda": lam,
        "convexify": bool(_get(doc, "", "convexify", bool, required=False, default=True)),
        "disc_samples": disc_samples,
        "declared": decl,
        "planes": planes,
        "interface_controls": interface_controls,
        "domain": {"x0": [float(x0[0]), float(x0[1])], "xi_max": xi_max},
        "grid": {"n0": n0, "ni": ni},
        "scheme": {"dt": dt, "tol": tol, "max_iter": max_iter},
    }
    return normalized


def _coef(entry) -> AffineCoef | float:
    if isinstance(entry, dict):
        return AffineCoef(entry["const"], entry.get("x0", 0.0), entry.get("xi", 0.0))
    return float(entry)


def _build_atoms(control: dict, disc_samples: int, interface: bool) -> list[ControlAtom]:
    dyn, cost = control["dynamics"], control["cost"]
    ell = cost["value"] if cost["type"] == "constant" else _coef(
        {k: cost[k] for k in ("const", "x0", "xi")})
    if interface:
        f0 = dyn["f0"] if dyn["type"] == "constant" else _coef(dyn["f0"])
        return [interface_atom(control["id"], f0, ell)]
    if dyn["type"] == "constant":
        return [ControlAtom(control["id"], dyn["f0"], dyn["fi"], ell)]
    if dyn["type"] == "affine":
        return [ControlAtom(control["id"], _coef(dyn["f0"]), _coef(dyn["fi"]), ell)]
    return disc_family(control["id"], dyn["radius"], ell, disc_samples,
                       center=tuple(dyn["center"]))


def build(normalized: dict) -> ProblemFile:
    """Instantiate domain objects from a normalized document."""
    decl = normalized["declared"]
    plane_controls = []
    for pd in normalized["planes"]:
        atoms: list[ControlAtom] = []
        for c in pd["controls"]:
            atoms.extend(_build_atoms(c, normalized["disc_samples"], interface=False))
        plane_controls.append(tuple(atoms))
    iface: list[ControlAtom] = []
    for c in normalized["interface_controls"]:
        iface.extend(_build_atoms(c, normalized["disc_samples"], interface=True))
    try:
        problem = JunctionProblem(
            shape=JunctionShape(len(plane_controls)),
            plane_controls=tuple(plane_controls),
            lam=normalized["lambda"],
            m_f=decl["M_f"],
            m_ell=decl["M_ell"],
            l_f=decl["L_f"],
            l_ell=decl.get("L_ell"),
            interface_controls=tuple(iface),
            convexify=normalized["convexify"],
        )
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    dom = normalized["domain"]
    domain = Domain(dom["x0"][0], dom["x0"][1], dom["xi_max"])
    grid = JunctionGrid(problem.shape.n_planes, dom["x0"][0], dom["x0"][1],
                        normalized["grid"]["n0"], dom["xi_max"], normalized["grid"]["ni"])
    scheme = normalized["scheme"]
    return ProblemFile(problem, domain, grid, scheme["dt"], scheme["tol"],
                       scheme["max_iter"], normalized)


def parse_problem_file(source) -> ProblemFile:
    """Parse a problem file from a path, JSON text, or an already-decoded dict."""
    if isinstance(source, dict):
        return build(normalize(source))
    text = source
    if not str(source).lstrip().startswith("{"):
        with open(source) as fh:
            text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return build(normalize(doc))


def serialize(pf: ProblemFile) -> str:
    """Canonical JSON text of a problem file; parse(serialize(x)) reproduces x."""
    return json.dumps(pf.normalized, indent=2)
