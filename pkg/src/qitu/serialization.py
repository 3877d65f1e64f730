"""JSON encoding of instances, valuations and outcomes. Rationals travel as strings."""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from .errors import InputError
from .model import Instance, Outcome, PiecewisePrice, as_rat
from .valuations import (OXS, Additive, Capped, Convolution, Endowed, MatroidRank, PartitionMatroid, Table,
                         UniformMatroid, UnitDemand, Valuation)


def rat_str(x: Fraction) -> str:
    return str(Fraction(x))


def _rat(x, where: str) -> Fraction:
    try:
        return as_rat(x)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}: expected a rational string, got {x!r}") from exc


def _weights_to_json(w: dict) -> dict:
    return {str(j): rat_str(x) for j, x in sorted(w.items())}


def _weights_from_json(obj, where: str) -> dict:
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected an object of item -> value")
    try:
        return {int(j): _rat(x, where) for j, x in obj.items()}
    except ValueError as exc:
        raise InputError(f"{where}: item ids must be integers") from exc


def valuation_to_json(v: Valuation) -> dict:
    if isinstance(v, Additive):
        return {"kind": "additive", "weights": _weights_to_json(v.weights)}
    if isinstance(v, UnitDemand):
        return {"kind": "unit_demand", "weights": _weights_to_json(v.weights)}
    if isinstance(v, MatroidRank):
        mat = v.matroid
        if isinstance(mat, PartitionMatroid):
            mj = {"kind": "partition", "blocks": [list(b) for b in mat.blocks], "limits": list(mat.limits)}
        else:
            mj = {"kind": "uniform", "ground": sorted(mat.ground), "rank": mat.rank}
        out = {"kind": "matroid_rank", "matroid": mj, "scale": rat_str(v.scale)}
        if v.weights is not None:
            out["weights"] = _weights_to_json(v.weights)
        return out
    if isinstance(v, OXS):
        return {"kind": "oxs", "parts": [_weights_to_json(p) for p in v.parts]}
    if isinstance(v, Table):
        vals = {",".join(str(j) for j in sorted(T)): rat_str(x) for T, x in v.values.items()}
        return {"kind": "table", "values": dict(sorted(vals.items())), "ground": sorted(v.ground)}
    if isinstance(v, Capped):
        return {"kind": "capped", "base": valuation_to_json(v.base), "limit": v.limit, "penalty": rat_str(v.penalty)}
    if isinstance(v, Convolution):
        return {"kind": "convolution", "parts": [valuation_to_json(p) for p in v.parts]}
    if isinstance(v, Endowed):
        return {"kind": "endowed", "base": valuation_to_json(v.base), "endowment": sorted(v.endowment),
                "costs": _weights_to_json(v.costs)}
    raise InputError(f"cannot serialize valuation family {v.family}")


def valuation_from_json(obj: Any, where: str = "valuation") -> Valuation:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InputError(f"{where}: expected an object with a 'kind'")
    kind = obj["kind"]
    try:
        if kind == "additive":
            return Additive(_weights_from_json(obj.get("weights", {}), where))
        if kind == "unit_demand":
            return UnitDemand(_weights_from_json(obj.get("weights", {}), where))
        if kind in ("matroid_rank", "weighted_matroid_rank"):
            mj = obj["matroid"]
            if mj.get("kind") == "partition":
                mat = PartitionMatroid(mj["blocks"], mj["limits"])
            elif mj.get("kind") == "uniform":
                mat = UniformMatroid(mj["ground"], mj["rank"])
            else:
                raise InputError(f"{where}: unknown matroid kind {mj.get('kind')!r}")
            weights = _weights_from_json(obj["weights"], where) if "weights" in obj else None
            return MatroidRank(mat, weights, _rat(obj.get("scale", "1"), where))
        if kind == "oxs":
            return OXS([_weights_from_json(p, where) for p in obj["parts"]])
        if kind == "table":
            values = {}
            for key, x in obj["values"].items():
                items = frozenset(int(t) for t in key.split(",") if t.strip() != "")
                values[items] = _rat(x, where)
            return Table(values, obj.get("ground"))
        if kind == "capped":
            pen = obj.get("penalty")
            return Capped(valuation_from_json(obj["base"], where), int(obj["limit"]),
                          None if pen is None else _rat(pen, where))
        if kind == "convolution":
            return Convolution([valuation_from_json(p, where) for p in obj["parts"]])
        if kind == "endowed":
            return Endowed(valuation_from_json(obj["base"], where), frozenset(obj["endowment"]),
                           _weights_from_json(obj["costs"], where))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{where}: malformed {kind} valuation ({exc})") from exc
    raise InputError(f"{where}: unknown valuation kind {kind!r}")


def price_fn_to_json(q: PiecewisePrice) -> list:
    return [{"start": rat_str(s), "slope": rat_str(k)} for s, k in q.segments]


def instance_to_json(inst: Instance) -> dict:
    if inst.dummy_count:
        raise InputError("serialize instances before dummy extension")
    return {
        "buyers": [{"id": i, "valuation": valuation_to_json(v)} for i, v in enumerate(inst.valuations)],
        "items": [{"id": j, "capacity": c} for j, c in enumerate(inst.capacities)],
        "price_functions": [
            {"buyer": i, "item": j, "segments": price_fn_to_json(q)}
            for (i, j), q in sorted(inst.price_fns.items())
        ],
    }


def instance_from_json(obj: Any) -> Instance:
    if not isinstance(obj, dict):
        raise InputError("instance: expected a JSON object")
    try:
        buyers = sorted(obj["buyers"], key=lambda b: int(b["id"]))
        items = sorted(obj["items"], key=lambda it: int(it["id"]))
        if [int(b["id"]) for b in buyers] != list(range(len(buyers))):
            raise InputError("buyer ids must be 0..n-1")
        if [int(it["id"]) for it in items] != list(range(len(items))):
            raise InputError("item ids must be 0..m-1")
        vals = [valuation_from_json(b["valuation"], f"buyer {b['id']}") for b in buyers]
        caps = [int(it["capacity"]) for it in items]
        fns = {}
        for entry in obj.get("price_functions", []):
            key = (int(entry["buyer"]), int(entry["item"]))
            segs = tuple((_rat(s["start"], "segment"), _rat(s["slope"], "segment")) for s in entry["segments"])
            fns[key] = PiecewisePrice(segs)
        return Instance(vals, caps, fns)
    except InputError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed instance: {exc}") from exc


def outcome_to_json(out: Outcome) -> dict:
    return {
        "prices": {str(j): rat_str(x) for j, x in sorted(out.prices.items())},
        "matching": [[i, j] for i, j in sorted(out.matching)],
    }


def outcome_from_json(obj: Any) -> Outcome:
    try:
        prices = {int(j): _rat(x, "price") for j, x in obj["prices"].items()}
        matching = frozenset((int(i), int(j)) for i, j in obj["matching"])
        return Outcome(matching, prices)
    except InputError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed outcome: {exc}") from exc


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from exc


def jsonable(x):
    """Recursively turn Fractions, tuples and tuple keys into JSON-friendly values."""
    if isinstance(x, Fraction):
        return rat_str(x)
    if isinstance(x, float):
        return "inf" if x == float("inf") else x
    if isinstance(x, dict):
        return {(k if isinstance(k, str) else json.dumps(jsonable(k))): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        seq = sorted(x) if isinstance(x, (set, frozenset)) else x
        return [jsonable(v) for v in seq]
    return x
