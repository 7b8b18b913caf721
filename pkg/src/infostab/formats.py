"""File formats: sample CSV, certificate JSON, family JSON; atomic writes."""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .approximant import (H1, H2, BoundaryReport, LogParams, PowerParams,
                          StabilityCertificate)
from .domain import DomainError, validate_prob_vector
from .equation import PROVENANCES, ResidualEstimate, Tabulated
from .infomeasure import (Deviation, FamilyCertificate, LogFamily, PowerFamily,
                          TabulatedFamily)


class FormatError(ValueError):
    """Malformed input file; the message names the line when there is one."""


# --- floats and JSON text ------------------------------------------------

def fmt_float(v: float) -> str:
    """17 significant digits, always recognisable as a float."""
    v = float(v)
    if not math.isfinite(v):
        raise FormatError(f"cannot serialise non-finite value {v!r}")
    s = format(v, ".17g")
    return s if any(ch in s for ch in ".en") else s + ".0"


def to_json(obj, indent: int = 2) -> str:
    """JSON text with floats at 17 significant digits and stable key order."""
    return _emit(obj, 0, indent) + "\n"


def _emit(obj, level: int, indent: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None or isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_emit(v, level + 1, indent)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, (bool, np.bool_))
               for v in obj):
            return "[" + ", ".join(_emit(v, level + 1, indent) for v in obj) + "]"
        items = [pad + _emit(v, level + 1, indent) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise FormatError(f"cannot serialise {type(obj).__name__}")


def atomic_write(path: str, text: str) -> None:
    """Write via a temporary file in the target directory and rename over ``path``."""
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=folder)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- sample CSV ----------------------------------------------------------

@dataclass
class SampleTable:
    """Parsed ``x,value`` rows; endpoint rows are split off in closed-domain mode."""
    xs: np.ndarray
    values: np.ndarray
    f0: Optional[float] = None
    f1: Optional[float] = None

    def spec(self) -> Tabulated:
        return Tabulated(self.xs, self.values)


def parse_samples_csv(text: str, closed_domain: bool = False) -> SampleTable:
    lines = text.splitlines()
    if not lines or lines[0].strip().replace(" ", "") != "x,value":
        raise FormatError("line 1: expected header 'x,value'")
    xs, vals = [], []
    f0 = f1 = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected 2 columns, got {len(parts)}")
        try:
            x, v = float(parts[0]), float(parts[1])
        except ValueError:
            raise FormatError(f"line {lineno}: not a number: {line.strip()!r}") from None
        if not (math.isfinite(x) and math.isfinite(v)):
            raise FormatError(f"line {lineno}: non-finite value")
        if x in (0.0, 1.0):
            if not closed_domain:
                raise FormatError(f"line {lineno}: x={parts[0].strip()} is only allowed "
                                  "with --closed-domain")
            if x == 0.0:
                if f0 is not None or xs:
                    raise FormatError(f"line {lineno}: x=0 must appear once, first")
                f0 = v
            else:
                if f1 is not None:
                    raise FormatError(f"line {lineno}: x=1 given twice")
                f1 = v
            continue
        if f1 is not None:
            raise FormatError(f"line {lineno}: rows after x=1; x must increase")
        if not 0.0 < x < 1.0:
            raise FormatError(f"line {lineno}: x={parts[0].strip()} outside ]0,1[")
        if xs and not x > xs[-1]:
            raise FormatError(f"line {lineno}: x must be strictly increasing")
        xs.append(x)
        vals.append(v)
    if len(xs) < 2:
        raise FormatError("need at least 2 interior samples")
    if closed_domain and (f0 is None or f1 is None):
        raise FormatError("closed-domain mode needs rows with x=0 and x=1")
    return SampleTable(np.array(xs), np.array(vals), f0, f1)


def samples_csv(xs, values, f0: Optional[float] = None, f1: Optional[float] = None) -> str:
    rows = ["x,value"]
    if f0 is not None:
        rows.append(f"0.0,{fmt_float(f0)}")
    rows += [f"{fmt_float(x)},{fmt_float(v)}" for x, v in zip(xs, values)]
    if f1 is not None:
        rows.append(f"1.0,{fmt_float(f1)}")
    return "\n".join(rows) + "\n"


def plot_csv(xs, f, approx) -> str:
    rows = ["x,f,approximant,deviation"]
    for x, a, b in zip(xs, f, approx):
        rows.append(",".join(fmt_float(v) for v in (x, a, b, abs(a - b))))
    return "\n".join(rows) + "\n"


# --- certificates --------------------------------------------------------

def params_to_dict(params) -> dict:
    if isinstance(params, PowerParams):
        return {"kind": "power", "a": params.a, "b": params.b, "c": params.c}
    if isinstance(params, LogParams):
        return {"kind": "log", "lambda": params.lam, "c": params.c}
    if isinstance(params, PowerFamily):
        return {"kind": "power", "c": params.c, "d": params.d}
    if isinstance(params, LogFamily):
        return {"kind": "log", "c": params.c, "lambda": params.lam}
    raise FormatError(f"unknown params {params!r}")


def _params_from(d: dict, family: bool = False):
    kind = d.get("kind")
    if family:
        if kind == "power":
            return PowerFamily(float(d["c"]), float(d["d"]))
        if kind == "log":
            return LogFamily(float(d["c"]), float(d["lambda"]))
    else:
        if kind == "power":
            return PowerParams(float(d["a"]), float(d["b"]), float(d["c"]))
        if kind == "log":
            return LogParams(float(d["lambda"]), float(d["c"]))
    raise FormatError(f"unknown params kind {kind!r}")


def _boundary_to_dict(rep: BoundaryReport) -> dict:
    h = rep.extension
    if isinstance(h, H1):
        ext = {"kind": "h1", "a": h.a, "b": h.b}
    else:
        ext = {"kind": "h2", "a_end0": h.a_end0, "b_end1": h.b_end1, "c_mid": h.c_mid}
    return {"extension": ext, "f0": rep.f0, "f1": rep.f1,
            "checks": {k: dict(v) for k, v in rep.checks.items()}, "passed": rep.passed}


def _boundary_from(d: dict) -> BoundaryReport:
    e = d["extension"]
    if e["kind"] == "h1":
        ext = H1(float(e["a"]), float(e["b"]))
    elif e["kind"] == "h2":
        ext = H2(float(e["a_end0"]), float(e["b_end1"]), float(e["c_mid"]))
    else:
        raise FormatError(f"unknown extension kind {e['kind']!r}")
    checks = {k: {"value": float(v["value"]), "bound": float(v["bound"]),
                  "passed": bool(v["passed"])} for k, v in d["checks"].items()}
    return BoundaryReport(ext, _opt_float(d.get("f0")), _opt_float(d.get("f1")), checks)


def _opt_float(v):
    return None if v is None else float(v)


def certificate_to_dict(cert: StabilityCertificate) -> dict:
    eps = cert.epsilon
    out = {
        "alpha": cert.alpha,
        "epsilon": {"value": eps.value, "provenance": eps.provenance,
                    "argmax": None if eps.argmax is None else list(eps.argmax)},
        "params": params_to_dict(cert.params),
        "sup_deviation": cert.sup_deviation,
        "deviation_argmax": cert.deviation_argmax,
        "bound_constant": cert.bound_constant,
        "theorem_constant": cert.theorem_constant,
        "bound_value": cert.bound_value,
        "rounding_allowance": cert.rounding_allowance,
        "satisfied": cert.satisfied,
        "status": cert.status,
        "notes": list(cert.notes),
    }
    if cert.boundary is not None:
        out["boundary"] = _boundary_to_dict(cert.boundary)
    return out


def certificate_from_dict(d: dict) -> StabilityCertificate:
    try:
        e = d["epsilon"]
        if e["provenance"] not in PROVENANCES:
            raise FormatError(f"unknown provenance {e['provenance']!r}")
        argmax = None if e.get("argmax") is None else tuple(float(v) for v in e["argmax"])
        eps = ResidualEstimate(float(e["value"]), e["provenance"], argmax)
        return StabilityCertificate(
            alpha=float(d["alpha"]), epsilon=eps, params=_params_from(d["params"]),
            sup_deviation=float(d["sup_deviation"]),
            deviation_argmax=float(d["deviation_argmax"]),
            bound_constant=float(d["bound_constant"]), bound_value=float(d["bound_value"]),
            satisfied=bool(d["satisfied"]), status=str(d["status"]),
            theorem_constant=float(d["theorem_constant"]),
            rounding_allowance=float(d.get("rounding_allowance", 0.0)),
            boundary=_boundary_from(d["boundary"]) if "boundary" in d else None,
            notes=list(d.get("notes", [])))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed certificate: {exc}") from None


def emit_certificate(cert: StabilityCertificate) -> str:
    return to_json(certificate_to_dict(cert))


def parse_certificate(text: str) -> StabilityCertificate:
    try:
        return certificate_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise FormatError(f"line {exc.lineno}: {exc.msg}") from None


# --- families ------------------------------------------------------------

def family_to_dict(fam: TabulatedFamily) -> dict:
    entries = sorted(fam.table.items(), key=lambda kv: (len(kv[0]), kv[0]))
    return {"alpha": fam.alpha,
            "entries": [{"n": len(p), "p": list(p), "value": v} for p, v in entries]}


def emit_family(fam: TabulatedFamily) -> str:
    return to_json(family_to_dict(fam))


def parse_family(text: str) -> TabulatedFamily:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"line {exc.lineno}: {exc.msg}") from None
    if not isinstance(d, dict) or "alpha" not in d or "entries" not in d:
        raise FormatError("family JSON needs 'alpha' and 'entries'")
    table = {}
    for k, e in enumerate(d["entries"]):
        try:
            p = tuple(float(v) for v in e["p"])
            n, value = int(e["n"]), float(e["value"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"entry {k}: {exc}") from None
        if n != len(p):
            raise FormatError(f"entry {k}: n={n} but p has {len(p)} components")
        try:
            validate_prob_vector(p)
        except DomainError as exc:
            raise FormatError(f"entry {k}: {exc}") from None
        table[p] = value
    try:
        return TabulatedFamily(float(d["alpha"]), table)
    except DomainError as exc:
        raise FormatError(str(exc)) from None


def family_certificate_to_dict(cert: FamilyCertificate) -> dict:
    per_n = cert.per_n()
    return {
        "alpha": cert.alpha,
        "max_n": cert.max_n,
        "epsilon": {"values": list(cert.epsilons), "provenance": cert.epsilon_provenance},
        "params": params_to_dict(cert.params),
        "per_n": [dict(n=n, **row) for n, row in sorted(per_n.items())],
        "deviations": [{"n": d.n, "p": list(d.p), "deviation": d.deviation, "bound": d.bound,
                        "allowance": d.allowance, "passed": d.passed} for d in cert.deviations],
        "violations": [{"n": d.n, "p": list(d.p), "deviation": d.deviation, "bound": d.bound}
                       for d in cert.violations],
        "satisfied": cert.satisfied,
        "status": cert.status,
        "notes": list(cert.notes),
    }


def family_certificate_from_dict(d: dict) -> FamilyCertificate:
    try:
        devs = [Deviation(int(r["n"]), tuple(float(v) for v in r["p"]), float(r["deviation"]),
                          float(r["bound"]), float(r.get("allowance", 0.0))) for r in d["deviations"]]
        return FamilyCertificate(
            alpha=float(d["alpha"]), max_n=int(d["max_n"]),
            epsilons=[float(v) for v in d["epsilon"]["values"]],
            epsilon_provenance=str(d["epsilon"]["provenance"]),
            params=_params_from(d["params"], family=True), deviations=devs,
            satisfied=bool(d["satisfied"]), status=str(d["status"]),
            notes=list(d.get("notes", [])))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed family certificate: {exc}") from None
