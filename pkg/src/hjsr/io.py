"""Versioned JSON input documents and report documents.

Input layout::

    {
      "version": 1,
      "entries": [
        {"name": "A", "kind": "matrix", "payload": {"dim": 2, "entries": [[0, 1], [1, 0]]}},
        {"name": "S", "kind": "matrix_set", "payload": {"dim": 2, "members": [[[...]], "A"]}},
        {"name": "k", "kind": "kernel_spec", "payload": {"kind": "exp_abs", "scale": 1}},
        {"name": "w", "kind": "weights", "payload": {"weights": [0.5, 0.5], "mode": "strict"}}
      ],
      "chains": [{"id": "C2", "roles": {"A": "A", "B": "B"}, "params": {...}, "exact": true}],
      "campaign": {"seed": 42, "trials": 10, "dims": [2, 4], "set_sizes": [1, 3],
                   "depth": 6, "pruning": "off" | "gripenberg" | {"delta": 1e-4},
                   "tol": 1e-9, "chains": ["all"]}
    }

Set members are either inline matrices or names of ``matrix`` entries.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import HJSRError, InputError
from .kernels import KernelSpec
from .matrix import NonNegMatrix, WeightVector
from .sets import MatrixSet

FORMAT_VERSION = 1
ENTRY_KINDS = ("matrix", "matrix_set", "kernel_spec", "weights")


@dataclass
class Entry:
    name: str
    kind: str
    value: object
    raw: dict


@dataclass
class CampaignSpec:
    seed: int = 0
    trials: int = 1
    dims: tuple = (2, 4)
    set_sizes: tuple = (1, 3)
    depth: int | None = None
    pruning: object = None  # None, False, True or an absolute delta
    tol: float = 1e-9
    chains: list = field(default_factory=lambda: ["all"])
    params: dict = field(default_factory=dict)


@dataclass
class ChainRequest:
    id: str
    roles: dict
    params: dict
    exact: bool = False


@dataclass
class InputDocument:
    version: int
    entries: dict
    chains: list
    campaign: CampaignSpec | None
    raw: dict

    def get(self, name: str, kind: str | None = None, path: str = "") -> Entry:
        if name not in self.entries:
            raise InputError(f"no entry named {name!r}", path or None)
        e = self.entries[name]
        if kind is not None and e.kind != kind:
            raise InputError(f"entry {name!r} is a {e.kind}, expected {kind}", path or None)
        return e

    def as_set(self, name: str, path: str = "") -> MatrixSet:
        e = self.get(name, path=path)
        if e.kind == "matrix":
            return MatrixSet.singleton(e.value, label=name)
        if e.kind == "matrix_set":
            return e.value
        raise InputError(f"entry {name!r} is a {e.kind}, not a matrix or matrix set", path or None)

    def names(self, kind: str) -> list:
        return [n for n, e in self.entries.items() if e.kind == kind]


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _need(obj, key, path, types=None):
    if not isinstance(obj, dict):
        raise InputError("expected an object", path)
    if key not in obj:
        raise InputError(f"missing field {key!r}", path)
    val = obj[key]
    if types is not None and not isinstance(val, types):
        raise InputError(f"field {key!r} has the wrong type", f"{path}.{key}")
    return val


def _number(x, path) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InputError("expected a number", path)
    v = float(x)
    if not math.isfinite(v):
        raise InputError("number is not finite", path)
    return v


def _matrix(payload, path, dim=None) -> NonNegMatrix:
    if isinstance(payload, dict):
        d = payload.get("dim")
        rows = _need(payload, "entries", path, list)
        rpath = f"{path}.entries"
    else:
        d, rows, rpath = dim, payload, path
    if not isinstance(rows, list) or not rows:
        raise InputError("matrix must be a non-empty list of rows", rpath)
    n = len(rows)
    if d is not None:
        if isinstance(d, bool) or not isinstance(d, int) or d < 1:
            raise InputError("dim must be a positive integer", f"{path}.dim")
        if d != n:
            raise InputError(f"dim is {d} but {n} rows were given", rpath)
    out = np.empty((n, n))
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise InputError(f"row must have {n} entries", f"{rpath}[{i}]")
        for j, x in enumerate(row):
            v = _number(x, f"{rpath}[{i}][{j}]")
            if v < 0:
                raise InputError(f"negative entry {x!r}", f"{rpath}[{i}][{j}]")
            out[i, j] = v
    return NonNegMatrix._trusted(out)


def _range(val, path) -> tuple:
    if isinstance(val, str):
        return parse_range(val, path)
    if isinstance(val, list) and len(val) == 2 and all(isinstance(v, int) for v in val):
        lo, hi = val
        if lo < 1 or hi < lo:
            raise InputError("range must satisfy 1 <= lo <= hi", path)
        return (lo, hi)
    raise InputError("range must be [lo, hi] or 'lo..hi'", path)


def parse_range(text: str, path: str = "") -> tuple:
    parts = str(text).split("..")
    try:
        lo, hi = (int(parts[0]), int(parts[-1])) if len(parts) <= 2 else (None, None)
    except ValueError:
        lo = hi = None
    if lo is None or lo < 1 or hi < lo:
        raise InputError(f"bad range {text!r}; expected LO..HI with 1 <= LO <= HI", path or None)
    return (lo, hi)


def _pruning(val, path):
    if val is None or val is False or val == "off":
        return False
    if val is True or val == "gripenberg":
        return True
    if isinstance(val, dict):
        if "delta" not in val:
            return True
        d = _number(val["delta"], f"{path}.delta")
        if d <= 0:
            raise InputError("delta must be positive", f"{path}.delta")
        return d
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        d = _number(val, path)
        if d <= 0:
            raise InputError("delta must be positive", path)
        return d
    raise InputError("pruning must be 'off', 'gripenberg' or {'delta': x}", path)


def _chain_params(raw, path, doc_entries) -> dict:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise InputError("params must be an object", path)
    out = {}
    for key, val in raw.items():
        p = f"{path}.{key}"
        if key in ("m", "k"):
            if isinstance(val, bool) or not isinstance(val, int) or val < 1:
                raise InputError(f"{key} must be a positive integer", p)
            out[key] = val
        elif key == "alpha":
            out[key] = _fraction(val, p)
        elif key == "weights":
            if isinstance(val, str):
                e = doc_entries.get(val)
                if e is None or e.kind != "weights":
                    raise InputError(f"no weights entry named {val!r}", p)
                val = e.raw["payload"]["weights"]
            if not isinstance(val, list) or not val:
                raise InputError("weights must be a non-empty list", p)
            out[key] = tuple(_fraction(w, f"{p}[{i}]") for i, w in enumerate(val))
        else:
            raise InputError(f"unknown chain parameter {key!r}", p)
    return out


def _fraction(val, path) -> Fraction:
    try:
        if isinstance(val, str):
            return Fraction(val)
        return Fraction(_number(val, path)).limit_denominator(10**6)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"bad rational {val!r}", path) from None


def _entry(raw, path, entries) -> Entry:
    name = _need(raw, "name", path, str)
    kind = _need(raw, "kind", path, str)
    payload = _need(raw, "payload", path)
    ppath = f"{path}.payload"
    if kind not in ENTRY_KINDS:
        raise InputError(f"unknown kind {kind!r}; expected one of {ENTRY_KINDS}", f"{path}.kind")
    try:
        if kind == "matrix":
            value = _matrix(payload, ppath)
        elif kind == "matrix_set":
            members = _need(payload, "members", ppath, list)
            d = payload.get("dim")
            if not members:
                raise InputError("a matrix set needs at least one member", f"{ppath}.members")
            mats = []
            for i, m in enumerate(members):
                mp = f"{ppath}.members[{i}]"
                if isinstance(m, str):
                    e = entries.get(m)
                    if e is None or e.kind != "matrix":
                        raise InputError(f"no matrix entry named {m!r}", mp)
                    mats.append(e.value)
                else:
                    mats.append(_matrix(m, mp, d))
            dims = {m.dim for m in mats}
            if len(dims) != 1 or (d is not None and dims != {d}):
                raise InputError(f"members have dimensions {sorted(dims)}", f"{ppath}.members")
            value = MatrixSet(mats, label=name)
        elif kind == "kernel_spec":
            kk = _need(payload, "kind", ppath, str)
            params = {k: v for k, v in payload.items() if k != "kind"}
            value = KernelSpec(kk, params)
        else:
            ws = _need(payload, "weights", ppath, list)
            vals = [_number(w, f"{ppath}.weights[{i}]") for i, w in enumerate(ws)]
            value = WeightVector(tuple(vals), payload.get("mode", "strict"))
    except InputError:
        raise
    except HJSRError as exc:
        raise InputError(str(exc), ppath) from None
    return Entry(name, kind, value, raw)


def parse_document(text: str) -> InputDocument:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(exc.msg, line=exc.lineno, column=exc.colno) from None
    if not isinstance(raw, dict):
        raise InputError("top level must be an object", "$")
    version = _need(raw, "version", "$", int)
    if version != FORMAT_VERSION:
        raise InputError(f"unsupported version {version}; expected {FORMAT_VERSION}", "$.version")
    entries: dict = {}
    raw_entries = raw.get("entries", [])
    if not isinstance(raw_entries, list):
        raise InputError("entries must be a list", "$.entries")
    for i, e in enumerate(raw_entries):
        try:
            ent = _entry(e, f"$.entries[{i}]", entries)
        except InputError as exc:
            name = e.get("name") if isinstance(e, dict) else None
            if not isinstance(name, str):
                raise
            raise InputError(f"entry {name!r}: {exc.reason}", exc.path,
                             line=_line_of(text, name)) from None
        if ent.name in entries:
            raise InputError(f"duplicate entry name {ent.name!r}", f"$.entries[{i}].name")
        entries[ent.name] = ent

    chains = []
    for i, c in enumerate(raw.get("chains", [])):
        p = f"$.chains[{i}]"
        cid = _need(c, "id", p, str)
        roles = c.get("roles", {})
        if not isinstance(roles, dict):
            raise InputError("roles must be an object", f"{p}.roles")
        for role, target in roles.items():
            if target not in entries:
                raise InputError(f"role {role!r} names unknown entry {target!r}", f"{p}.roles.{role}")
        chains.append(ChainRequest(cid, dict(roles), _chain_params(c.get("params"), f"{p}.params", entries),
                                   bool(c.get("exact", False))))

    campaign = None
    if "campaign" in raw:
        c = raw["campaign"]
        p = "$.campaign"
        if not isinstance(c, dict):
            raise InputError("campaign must be an object", p)
        sel = c.get("chains", ["all"])
        if isinstance(sel, str):
            sel = [sel]
        depth = c.get("depth")
        if depth is not None and (isinstance(depth, bool) or not isinstance(depth, int) or depth < 1):
            raise InputError("depth must be a positive integer", f"{p}.depth")
        seed = c.get("seed", 0)
        trials = c.get("trials", 1)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise InputError("seed must be a non-negative integer", f"{p}.seed")
        if isinstance(trials, bool) or not isinstance(trials, int) or trials < 1:
            raise InputError("trials must be a positive integer", f"{p}.trials")
        campaign = CampaignSpec(
            seed=seed, trials=trials,
            dims=_range(c.get("dims", [2, 4]), f"{p}.dims"),
            set_sizes=_range(c.get("set_sizes", [1, 3]), f"{p}.set_sizes"),
            depth=depth,
            pruning=_pruning(c.get("pruning"), f"{p}.pruning") if "pruning" in c else None,
            tol=_number(c.get("tol", 1e-9), f"{p}.tol"),
            chains=list(sel),
            params=_chain_params(c.get("params"), f"{p}.params", entries),
        )
    return InputDocument(version, entries, chains, campaign, raw)


def _line_of(text: str, name: str) -> int | None:
    m = re.search(r'"name"\s*:\s*' + re.escape(json.dumps(name)), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def load_document(path) -> InputDocument:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read input: {exc.strerror}", str(path)) from None
    return parse_document(text)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def matrix_payload(A: NonNegMatrix) -> dict:
    return {"dim": A.dim, "entries": A.tolist()}


def set_payload(S: MatrixSet) -> dict:
    return {"dim": S.dim, "members": [m.tolist() for m in S]}


def serialize_document(doc: InputDocument) -> str:
    """Canonical text for a parsed document (numbers as shortest round-trip decimals)."""
    out = {"version": doc.version, "entries": []}
    for name, e in doc.entries.items():
        if e.kind == "matrix":
            payload = matrix_payload(e.value)
        elif e.kind == "matrix_set":
            payload = set_payload(e.value)
        elif e.kind == "kernel_spec":
            payload = e.value.to_payload()
        else:
            payload = {"weights": list(e.value.weights), "mode": e.value.mode}
        out["entries"].append({"name": name, "kind": e.kind, "payload": payload})
    if doc.chains:
        out["chains"] = [
            {"id": c.id, "roles": c.roles, "params": _params_json(c.params), "exact": c.exact}
            for c in doc.chains
        ]
    if doc.campaign is not None:
        c = doc.campaign
        pruning = "off" if not c.pruning else ("gripenberg" if c.pruning is True else {"delta": c.pruning})
        camp = {"seed": c.seed, "trials": c.trials, "dims": list(c.dims),
                "set_sizes": list(c.set_sizes), "tol": c.tol, "chains": list(c.chains)}
        if c.depth is not None:
            camp["depth"] = c.depth
        if c.pruning is not None:
            camp["pruning"] = pruning
        if c.params:
            camp["params"] = _params_json(c.params)
        out["campaign"] = camp
    return dumps(out)


def _params_json(params: dict) -> dict:
    out = {}
    for k, v in params.items():
        if isinstance(v, Fraction):
            out[k] = _frac_str(v)
        elif isinstance(v, tuple):
            out[k] = [_frac_str(x) if isinstance(x, Fraction) else x for x in v]
        else:
            out[k] = v
    return out


def _frac_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def inputs_document(inputs: dict, chains: list | None = None, params: dict | None = None) -> dict:
    """An input document reproducing ``inputs`` (used for counterexample dumps)."""
    entries = []
    for name, v in inputs.items():
        if isinstance(v, NonNegMatrix):
            entries.append({"name": name, "kind": "matrix", "payload": matrix_payload(v)})
        elif isinstance(v, MatrixSet):
            entries.append({"name": name, "kind": "matrix_set", "payload": set_payload(v)})
    doc = {"version": FORMAT_VERSION, "entries": entries}
    if chains:
        doc["chains"] = [{"id": c, "params": _params_json(params or {})} for c in chains]
    return doc


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=1, allow_nan=False) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Fraction):
        return _frac_str(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def digest(text: str) -> str:
    return "sha256:" + hashlib.sha256(text.encode()).hexdigest()


def report_document(command: str, input_digest: str, body: dict, timing: dict | None = None) -> dict:
    """Report layout; everything except ``timing`` is deterministic."""
    from . import __version__

    doc = {"tool": "hjsr", "version": __version__, "command": command, "input_digest": input_digest}
    doc.update(body)
    doc["timing"] = dict(timing or {})
    return doc


def deterministic_part(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timing"}


def write_report(report: dict, path) -> None:
    Path(path).write_text(dumps(report))


__all__ = [
    "CampaignSpec", "ChainRequest", "Entry", "InputDocument", "parse_document", "load_document",
    "serialize_document", "parse_range", "inputs_document", "report_document", "deterministic_part",
    "write_report", "dumps", "digest",
]
