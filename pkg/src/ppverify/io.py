"""Reading and writing protocol and stage-graph files (JSON)."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

from .core import Protocol, ProtocolError
from .presburger import ParseError, free_vars, parse_formula, parse_linear, to_str
from .flow import FlowRoot
from .stagegraph import RankingFunction, Stage, StageGraph, StageGraphError, input_var


class FileFormatError(ValueError):
    """A file does not follow the expected schema; the message names the field."""


PathLike = Union[str, Path]


def _read_json(path: PathLike) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise FileFormatError(f"{path}: file not found") from None
    except json.JSONDecodeError as e:
        raise FileFormatError(f"{path}: invalid JSON ({e})") from None


def data_path(name: str) -> Path:
    """Path of a file shipped with the package (``majority.json``, ``fig1.json``)."""
    return Path(str(resources.files("ppverify") / "data" / name))


# -- protocols --------------------------------------------------------------

def protocol_from_dict(d: Dict[str, Any]) -> Protocol:
    if not isinstance(d, dict):
        raise FileFormatError("protocol: expected a JSON object")
    for key in ("states", "outputs", "inputs", "transitions"):
        if key not in d:
            raise FileFormatError(f"{key}: missing field")
    unknown = set(d) - {"states", "outputs", "inputs", "leaders", "transitions", "name"}
    if unknown:
        raise FileFormatError(f"{sorted(unknown)[0]}: unknown field")
    if not isinstance(d["states"], list):
        raise FileFormatError("states: expected a list")
    if not isinstance(d["outputs"], dict):
        raise FileFormatError("outputs: expected an object")
    if not isinstance(d["inputs"], dict):
        raise FileFormatError("inputs: expected an object")
    leaders = d.get("leaders", {}) or {}
    if not isinstance(leaders, dict):
        raise FileFormatError("leaders: expected an object")
    ts = d["transitions"]
    if not isinstance(ts, list) or not all(isinstance(t, list) for t in ts):
        raise FileFormatError("transitions: expected a list of [q1,q2,q1p,q2p]")
    try:
        return Protocol(states=d["states"], output=d["outputs"], input_vars=list(d["inputs"]),
                        input_state=d["inputs"], leaders=leaders, transitions=ts)
    except ProtocolError as e:
        raise FileFormatError(str(e)) from None


def protocol_to_dict(p: Protocol) -> Dict[str, Any]:
    return {
        "states": list(p.states),
        "outputs": {q: p.output[q] for q in p.states},
        "inputs": {x: p.input_state[x] for x in p.input_vars},
        "leaders": {q: n for q, n in p.leaders.items()},
        "transitions": [list(t) for t in p.transitions],
    }


def load_protocol(path: PathLike) -> Protocol:
    return protocol_from_dict(_read_json(path))


def save_protocol(p: Protocol, path: PathLike):
    Path(path).write_text(json.dumps(protocol_to_dict(p), indent=2) + "\n", encoding="utf-8")


# -- stage graphs -----------------------------------------------------------

def _formula(text: Any, where: str, allowed):
    if not isinstance(text, str):
        raise FileFormatError(f"{where}: expected a formula string")
    try:
        f = parse_formula(text)
    except ParseError as e:
        raise FileFormatError(f"{where}: {e}") from None
    bad = sorted(free_vars(f) - set(allowed))
    if bad:
        raise FileFormatError(f"{where}: unknown variable {bad[0]!r}")
    return f


def _ranking(d: Any, where: str, allowed) -> RankingFunction:
    if not isinstance(d, dict) or "pieces" not in d:
        raise FileFormatError(f"{where}: expected {{\"pieces\": [...], \"B\": n}}")
    pieces = []
    for i, piece in enumerate(d["pieces"]):
        pw = f"{where}.pieces[{i}]"
        if not isinstance(piece, list) or len(piece) != 2:
            raise FileFormatError(f"{pw}: expected [guard, expr]")
        guard = _formula(piece[0], pw + "[0]", allowed)
        try:
            coeffs, const = parse_linear(piece[1])
        except ParseError as e:
            raise FileFormatError(f"{pw}[1]: {e}") from None
        bad = sorted(set(coeffs) - set(allowed))
        if bad:
            raise FileFormatError(f"{pw}[1]: unknown variable {bad[0]!r}")
        pieces.append((guard, tuple(sorted((v, a) for v, a in coeffs.items() if a)), const))
    if not pieces:
        raise FileFormatError(f"{where}.pieces: at least one piece is required")
    bound = d.get("B")
    if bound is not None and (not isinstance(bound, int) or bound < 0):
        raise FileFormatError(f"{where}.B: expected a natural number")
    return RankingFunction(tuple(pieces), bound)


def _flow_root(p: Protocol, s: Dict[str, Any], where: str, roots: Dict[str, FlowRoot]) -> FlowRoot:
    """Rebuild the shared state-equation root of a flow stage (one per root name)."""
    name = s.get("root")
    if not isinstance(name, str):
        raise FileFormatError(f"{where}.root: expected a root name")
    allowed = set(p.var_names) | {input_var(x) for x in p.input_vars}
    origin = _formula(s.get("origin"), where + ".origin", allowed)
    traps = s.get("traps", True)
    limit = s.get("subset_limit")
    if name in roots:
        r = roots[name]
        if to_str(r.origin) != to_str(origin) or r.traps != traps or r.subset_limit != limit:
            raise FileFormatError(f"{where}.origin: root {name!r} is declared with two different origins")
        return r
    roots[name] = FlowRoot(p, origin, traps=bool(traps), subset_limit=limit, name=name)
    return roots[name]


def stage_graph_from_dict(p: Protocol, d: Dict[str, Any], where: str = "graph") -> StageGraph:
    if not isinstance(d, dict):
        raise FileFormatError(f"{where}: expected an object")
    for key in ("target", "initial", "stages", "edges"):
        if key not in d:
            raise FileFormatError(f"{where}.{key}: missing field")
    allowed = set(p.var_names)
    stages: Dict[str, Stage] = {}
    roots: Dict[str, FlowRoot] = {}
    for i, s in enumerate(d["stages"]):
        sw = f"{where}.stages[{i}]"
        if not isinstance(s, dict) or "id" not in s or "constraint" not in s:
            raise FileFormatError(f"{sw}: expected an object with id and constraint")
        sid = str(s["id"])
        if sid in stages:
            raise FileFormatError(f"{sw}.id: duplicate stage id {sid!r}")
        rank = None
        if s.get("rank") is not None:
            rank = _ranking(s["rank"], sw + ".rank", allowed)
        if s.get("flow"):
            root = _flow_root(p, s, sw, roots)
            refinement = _formula(s.get("refinement"), sw + ".refinement", allowed)
            stages[sid] = Stage(sid, refinement, rank, root, frozenset(s.get("dead", ())))
        else:
            stages[sid] = Stage(sid, _formula(s["constraint"], sw + ".constraint", allowed), rank)
    edges: List[Tuple[str, str]] = []
    for i, e in enumerate(d["edges"]):
        if not isinstance(e, list) or len(e) != 2:
            raise FileFormatError(f"{where}.edges[{i}]: expected [parent, child]")
        edges.append((str(e[0]), str(e[1])))
    g = StageGraph(stages, edges, d["target"], str(d["initial"]))
    try:
        g.validate()
    except StageGraphError as e:
        raise FileFormatError(f"{where}: {e}") from None
    return g


def load_stage_graphs(p: Protocol, path: PathLike) -> List[StageGraph]:
    """Load a stage-graph file: either one graph object or a list of graphs."""
    d = _read_json(path)
    items = d if isinstance(d, list) else [d]
    return [stage_graph_from_dict(p, g, f"graphs[{i}]") for i, g in enumerate(items)]


def _rank_to_dict(r: RankingFunction) -> Dict[str, Any]:
    pieces = []
    for guard, cs, c in r.pieces:
        terms = [v if a == 1 else f"{a}*{v}" for v, a in cs]
        expr = " + ".join(terms) if terms else ""
        if c or not expr:
            expr = f"{expr} + {c}" if expr else str(c)
        pieces.append([to_str(guard), expr.replace("+ -", "- ")])
    return {"pieces": pieces, "B": r.bound}


def stage_graph_to_dict(g: StageGraph) -> Dict[str, Any]:
    out = []
    for sid in sorted(g.stages):
        s = g.stages[sid]
        d: Dict[str, Any] = {"id": sid}
        if s.flow is not None:
            d["flow"] = True
            d["root"] = s.flow.name
            d["origin"] = to_str(s.flow.origin)
            d["traps"] = s.flow.traps
            if s.flow.subset_limit is not None:
                d["subset_limit"] = s.flow.subset_limit
            d["refinement"] = to_str(s.constraint)
            # expanded membership, for reading only; loading uses root + refinement
            d["constraint"] = to_str(s.member())
            d["aux"] = s.flow.aux_vars()
        else:
            d["constraint"] = to_str(s.constraint)
        if s.dead:
            d["dead"] = sorted(s.dead)
        d["rank"] = _rank_to_dict(s.rank) if s.rank is not None else None
        out.append(d)
    return {"target": g.target, "initial": g.initial, "stages": out,
            "edges": [list(e) for e in g.edges]}


def dump_stage_graphs(graphs, path: PathLike):
    Path(path).write_text(json.dumps([stage_graph_to_dict(g) for g in graphs], indent=2) + "\n",
                          encoding="utf-8")
