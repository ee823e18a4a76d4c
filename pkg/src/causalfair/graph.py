"""Causal DAGs, fairness specifications and fairness-driven edge removal."""

from __future__ import annotations

import enum
import hashlib
import heapq
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import jsonschema
import numpy as np

from causalfair import kernels
from causalfair.table import KINDS, Column

Edge = tuple[str, str]


class GraphError(ValueError):
    """Malformed graph or a query that does not fit the graph."""


class CycleError(GraphError):
    def __init__(self, cycle: Sequence[str]):
        self.cycle = list(cycle)
        super().__init__("graph has a cycle: " + " -> ".join(self.cycle + self.cycle[:1]))


class InvalidQueryError(GraphError):
    pass


class SpecError(GraphError):
    """Fairness specification inconsistent with itself or with a DAG."""


class InfeasiblePerturbationError(GraphError):
    pass


DAG_SCHEMA = {
    "type": "object",
    "required": ["nodes", "edges"],
    "additionalProperties": False,
    "properties": {
        "nodes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "kind"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "kind": {"enum": list(KINDS)},
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "string"},
                "minItems": 2,
                "maxItems": 2,
            },
        },
        "meta": {"type": "object"},
    },
}


class CausalDag:
    """Immutable DAG over typed nodes.

    Node order is the declaration order and doubles as the column order of
    every table produced for this graph. Edges are ``(parent, child)`` pairs.
    """

    def __init__(self, nodes: Iterable[Column], edges: Iterable[Edge] = (), meta: dict | None = None):
        nodes = tuple(nodes)
        names = [n.name for n in nodes]
        if len(set(names)) != len(names):
            raise GraphError(f"duplicate node names: {sorted({n for n in names if names.count(n) > 1})}")
        idx = {n: i for i, n in enumerate(names)}
        seen = set()
        for e in edges:
            p, c = tuple(e)
            if p not in idx or c not in idx:
                missing = [x for x in (p, c) if x not in idx]
                raise GraphError(f"edge {p}->{c} names unknown node(s) {missing}")
            if p == c:
                raise GraphError(f"self-loop on {p!r}")
            if (p, c) in seen:
                raise GraphError(f"duplicate edge {p}->{c}")
            seen.add((p, c))
        self.nodes = nodes
        self.edges = frozenset(seen)
        self.meta = dict(meta or {})
        self._idx = idx
        self._parents = {n: tuple(sorted((p for p, c in seen if c == n), key=idx.get)) for n in names}
        self._children = {n: tuple(sorted((c for p, c in seen if p == n), key=idx.get)) for n in names}
        self._order = _kahn(names, self._parents, self._children)

    # -- basic accessors --------------------------------------------------

    @property
    def names(self) -> list[str]:
        return [n.name for n in self.nodes]

    @property
    def kinds(self) -> dict[str, str]:
        return {n.name: n.kind for n in self.nodes}

    def kind(self, name: str) -> str:
        return self.nodes[self.index(name)].kind

    def index(self, name: str) -> int:
        try:
            return self._idx[name]
        except KeyError:
            raise GraphError(f"unknown node {name!r}") from None

    def __contains__(self, name) -> bool:
        return name in self._idx

    def __len__(self) -> int:
        return len(self.nodes)

    def __eq__(self, other) -> bool:
        return isinstance(other, CausalDag) and self.nodes == other.nodes and self.edges == other.edges

    def __hash__(self):
        return hash((self.nodes, self.edges))

    def __repr__(self):
        return f"CausalDag({len(self.nodes)} nodes, {len(self.edges)} edges)"

    def parents(self, name: str) -> tuple[str, ...]:
        self.index(name)
        return self._parents[name]

    def children(self, name: str) -> tuple[str, ...]:
        self.index(name)
        return self._children[name]

    def has_edge(self, parent: str, child: str) -> bool:
        return (parent, child) in self.edges

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges, key=lambda e: (self._idx[e[0]], self._idx[e[1]]))

    def ancestors(self, name: str) -> set[str]:
        return _closure(name, self._parents) - {name}

    def descendants(self, name: str) -> set[str]:
        return _closure(name, self._children) - {name}

    @property
    def schema(self) -> list[Column]:
        return list(self.nodes)

    def parent_mask(self) -> np.ndarray:
        """``mask[j, i] = 1`` when node ``i`` is a parent of node ``j`` (declaration order)."""
        d = len(self.nodes)
        m = np.zeros((d, d))
        for p, c in self.edges:
            m[self._idx[c], self._idx[p]] = 1.0
        return m

    @cached_property
    def _csr(self):
        d = len(self.nodes)

        def pack(adj):
            ptr = np.zeros(d + 1, dtype=np.int64)
            flat = []
            for i, n in enumerate(self.names):
                flat.extend(self._idx[x] for x in adj[n])
                ptr[i + 1] = len(flat)
            return ptr, np.asarray(flat, dtype=np.int64)

        return pack(self._parents) + pack(self._children)

    # -- derived graphs ---------------------------------------------------

    def without_edges(self, edges: Iterable[Edge]) -> "CausalDag":
        gone = set(map(tuple, edges))
        unknown = gone - self.edges
        if unknown:
            raise GraphError(f"edges not in graph: {sorted(unknown)}")
        return CausalDag(self.nodes, self.edges - gone, self.meta)

    def with_edges(self, edges: Iterable[Edge]) -> "CausalDag":
        return CausalDag(self.nodes, self.edges | set(map(tuple, edges)), self.meta)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        out = {
            "nodes": [{"name": n.name, "kind": n.kind} for n in self.nodes],
            "edges": [list(e) for e in self.sorted_edges()],
        }
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "CausalDag":
        try:
            jsonschema.validate(obj, DAG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise GraphError(f"invalid DAG document at {where}: {exc.message}") from None
        nodes = [Column(n["name"], n["kind"]) for n in obj["nodes"]]
        return cls(nodes, [tuple(e) for e in obj["edges"]], obj.get("meta"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "CausalDag":
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise GraphError(f"{path}: not valid JSON ({exc})") from None
        return cls.from_dict(obj)

    def fingerprint(self) -> str:
        """sha256 of the canonical structure (metadata excluded)."""
        canon = {"nodes": [[n.name, n.kind] for n in self.nodes], "edges": sorted(map(list, self.edges))}
        return hashlib.sha256(json.dumps(canon, separators=(",", ":")).encode()).hexdigest()


def _closure(start, adj):
    out = {start}
    stack = [start]
    while stack:
        for w in adj[stack.pop()]:
            if w not in out:
                out.add(w)
                stack.append(w)
    return out


def _kahn(names, parents, children):
    indeg = {n: len(parents[n]) for n in names}
    ready = [n for n in names if indeg[n] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        n = heapq.heappop(ready)
        order.append(n)
        for c in children[n]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(ready, c)
    if len(order) < len(names):
        raise CycleError(_find_cycle([n for n in names if indeg[n] > 0], children))
    return order


def _find_cycle(candidates, children):
    left = set(candidates)
    # every leftover node keeps a leftover parent, so walking back always loops
    colour = {}
    for start in sorted(left):
        if start in colour:
            continue
        path, stack = [], [(start, iter(sorted(c for c in children[start] if c in left)))]
        colour[start] = 1
        path.append(start)
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                colour[node] = 2
                stack.pop()
                path.pop()
            elif colour.get(nxt) == 1:
                return path[path.index(nxt):]
            elif nxt not in colour:
                colour[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(sorted(c for c in children[nxt] if c in left))))
    raise AssertionError("cycle expected")  # pragma: no cover


def topological_order(dag: CausalDag) -> list[str]:
    """Parents before children; ready nodes are taken in lexicographic order."""
    return list(dag._order)


def _as_set(dag, xs, what):
    if isinstance(xs, str):
        xs = {xs}
    xs = set(xs)
    for x in xs:
        if x not in dag:
            raise InvalidQueryError(f"unknown node {x!r} in {what}")
    return xs


def d_separated(dag: CausalDag, xs, ys, zs=()) -> bool:
    """True when every trail between ``xs`` and ``ys`` is blocked by ``zs``.

    Members of ``zs`` are treated as separated from everything, so
    ``d_separated(g, {b}, {y}, {b})`` is True.
    """
    xs = _as_set(dag, xs, "xs")
    ys = _as_set(dag, ys, "ys")
    zs = _as_set(dag, zs, "zs")
    if xs & ys:
        raise InvalidQueryError(f"xs and ys overlap on {sorted(xs & ys)}")
    xs -= zs
    ys -= zs
    if not xs or not ys:
        return True
    d = len(dag)
    src = np.zeros(d, dtype=np.uint8)
    obs = np.zeros(d, dtype=np.uint8)
    src[[dag.index(x) for x in xs]] = 1
    if zs:
        obs[[dag.index(z) for z in zs]] = 1
    reach = kernels.reachable(*dag._csr, src, obs)
    return not any(reach[dag.index(y)] for y in ys)


def markov_boundary(dag: CausalDag, node: str) -> set[str]:
    children = dag.children(node)
    out = set(dag.parents(node)) | set(children)
    for c in children:
        out.update(dag.parents(c))
    out.discard(node)
    return out


def directed_paths(dag: CausalDag, source: str, target: str) -> list[list[str]]:
    """All simple directed paths ``source -> ... -> target``."""
    dag.index(source)
    dag.index(target)
    if source == target:
        return [[source]]
    reaches = dag.ancestors(target) | {target}
    out = []

    def walk(path):
        for c in dag.children(path[-1]):
            if c == target:
                out.append(path + [c])
            elif c in reaches:
                walk(path + [c])

    if source in reaches:
        walk([source])
    return out


class Definition(str, enum.Enum):
    FTU = "FTU"
    DP = "DP"
    CF = "CF"
    NO_DIRECT = "NoDirectDiscrimination"
    NO_INDIRECT = "NoIndirectDiscrimination"
    NO_UNRESOLVED = "NoUnresolvedDiscrimination"
    NO_PROXY = "NoProxyDiscrimination"


_NEEDS_R = {Definition.CF, Definition.NO_UNRESOLVED}


@dataclass(frozen=True)
class FairnessSpec:
    definition: Definition
    protected: str
    target: str
    explanatory: frozenset | None = None
    proxies: frozenset | None = None

    def __post_init__(self):
        object.__setattr__(self, "definition", Definition(self.definition))
        for attr in ("explanatory", "proxies"):
            val = getattr(self, attr)
            if val is not None:
                object.__setattr__(self, attr, frozenset([val] if isinstance(val, str) else val))
        if self.protected == self.target:
            raise SpecError("protected attribute and target must differ")
        if (self.explanatory is not None) != (self.definition in _NEEDS_R):
            need = "requires" if self.definition in _NEEDS_R else "does not take"
            raise SpecError(f"{self.definition.value} {need} an explanatory set")
        if (self.proxies is not None) != (self.definition == Definition.NO_PROXY):
            need = "requires" if self.definition == Definition.NO_PROXY else "does not take"
            raise SpecError(f"{self.definition.value} {need} a proxy set")
        for name, group in (("explanatory", self.explanatory), ("proxies", self.proxies)):
            if group and {self.protected, self.target} & group:
                raise SpecError(f"{name} set must exclude the protected attribute and the target")

    def validate_against(self, dag: CausalDag) -> None:
        used = {self.protected, self.target} | set(self.explanatory or ()) | set(self.proxies or ())
        missing = sorted(n for n in used if n not in dag)
        if missing:
            raise SpecError(f"fairness spec names nodes absent from the DAG: {missing}")

    def to_dict(self) -> dict:
        out = {"definition": self.definition.value, "protected": self.protected, "target": self.target}
        if self.explanatory is not None:
            out["explanatory"] = sorted(self.explanatory)
        if self.proxies is not None:
            out["proxies"] = sorted(self.proxies)
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "FairnessSpec":
        try:
            return cls(
                definition=obj["definition"],
                protected=obj["protected"],
                target=obj["target"],
                explanatory=obj.get("explanatory"),
                proxies=obj.get("proxies"),
            )
        except KeyError as exc:
            raise SpecError(f"fairness spec missing field {exc}") from None
        except ValueError as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(str(exc)) from None


@dataclass(frozen=True)
class EdgeRemovalSet:
    """Edges to drop at generation time, each with the rule that required it."""

    rationale: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "rationale", {tuple(e): str(t) for e, t in dict(self.rationale).items()})

    @property
    def removed(self) -> frozenset:
        return frozenset(self.rationale)

    def __iter__(self):
        return iter(sorted(self.rationale))

    def __len__(self):
        return len(self.rationale)

    def __contains__(self, edge):
        return tuple(edge) in self.rationale

    def __eq__(self, other):
        return isinstance(other, EdgeRemovalSet) and self.rationale == other.rationale

    def __hash__(self):
        return hash(frozenset(self.rationale.items()))

    def validate_against(self, dag: CausalDag) -> None:
        extra = sorted(self.removed - dag.edges)
        if extra:
            raise GraphError(f"removal set holds edges absent from the DAG: {extra}")

    def to_dict(self) -> dict:
        return {"removed": [{"edge": list(e), "rationale": self.rationale[e]} for e in sorted(self.rationale)]}

    @classmethod
    def from_dict(cls, obj: dict) -> "EdgeRemovalSet":
        return cls({tuple(item["edge"]): item["rationale"] for item in obj["removed"]})

    @classmethod
    def from_edges(cls, edges: Iterable[Edge], tag: str = "manual") -> "EdgeRemovalSet":
        return cls({tuple(e): tag for e in edges})


def _dependence_removals(dag, eval_dag, a, y, r, label):
    """Cut Y off from every boundary member that is d-connected to A given R.

    Parents and children are detached by removing their edge with Y. A
    dependent spouse has no edge to Y, so the edge from Y into each shared
    child is removed instead.
    """
    def dependent(b):
        return b == a or (b not in r and not d_separated(eval_dag, {a}, {b}, r))

    out = {}
    for p in dag.parents(y):
        if dependent(p):
            out[(p, y)] = f"{label}: dependent parent of target"
    for c in dag.children(y):
        if dependent(c):
            out[(y, c)] = f"{label}: dependent child of target"
    for c in dag.children(y):
        if (y, c) in out:
            continue
        for s in dag.parents(c):
            if s != y and dependent(s):
                out[(y, c)] = f"{label}: shared child with dependent co-parent {s}"
                break
    return out


def _path_end_removals(dag, a, y, keep, label):
    out = {}
    for path in directed_paths(dag, a, y):
        if keep(path[1:-1]):
            out.setdefault((path[-2], y), label)
    return out


def edges_to_remove(dag: CausalDag, spec: FairnessSpec, eval_dag: CausalDag | None = None) -> EdgeRemovalSet:
    """Edges whose removal from ``dag`` makes generated data fair under ``spec``.

    Independence-based definitions query d-separation in ``eval_dag`` (the
    graph of the evaluation distribution), defaulting to ``dag`` itself.
    """
    spec.validate_against(dag)
    g = eval_dag if eval_dag is not None else dag
    if g is not dag:
        spec.validate_against(g)
        if set(g.names) != set(dag.names):
            raise SpecError("evaluation graph must cover the same nodes as the training graph")
    a, y, d = spec.protected, spec.target, spec.definition
    if d == Definition.CF:
        out = _dependence_removals(dag, g, a, y, set(spec.explanatory), "CF")
    elif d == Definition.DP:
        out = _dependence_removals(dag, g, a, y, set(), "DP")
    elif d == Definition.FTU:
        out = {}
        for e in ((a, y), (y, a)):
            if e in dag.edges:
                out[e] = "FTU: direct edge between protected attribute and target"
        for c in sorted(set(dag.children(a)) & set(dag.children(y))):
            out[(y, c)] = "FTU: shared child of protected attribute and target"
    elif d == Definition.NO_DIRECT:
        out = {(a, y): "NoDirect: direct edge"} if (a, y) in dag.edges else {}
    elif d == Definition.NO_INDIRECT:
        out = _path_end_removals(dag, a, y, lambda mid: True, "NoIndirect: last edge of directed path")
    elif d == Definition.NO_UNRESOLVED:
        r = set(spec.explanatory)
        out = _path_end_removals(
            dag, a, y, lambda mid: not r.intersection(mid), "NoUnresolved: last edge of path avoiding explanatory set"
        )
    elif d == Definition.NO_PROXY:
        p = set(spec.proxies)
        out = _path_end_removals(
            dag, a, y, lambda mid: bool(p.intersection(mid)), "NoProxy: last edge of path through a proxy"
        )
    else:  # pragma: no cover
        raise SpecError(f"unsupported definition {d}")
    return EdgeRemovalSet(out)


def perturb_dag(dag: CausalDag, mode: str, count: int, guard: FairnessSpec | None, seed, max_tries: int = 1000):
    """Randomly remove, add or reverse ``count`` edges, keeping the graph acyclic.

    Added or reversed edges never point from the guard's protected attribute
    into the target or one of its ancestors.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if mode not in ("remove", "add", "reverse"):
        raise ValueError(f"unknown perturbation mode {mode!r}")
    rng = np.random.default_rng(seed)
    edges = dag.sorted_edges()

    def forbidden(g, p, c):
        if guard is None or p != guard.protected:
            return False
        return c == guard.target or c in g.ancestors(guard.target)

    if mode == "remove":
        if count > len(edges):
            raise InfeasiblePerturbationError(f"cannot remove {count} edges from a graph with {len(edges)}")
        pick = rng.choice(len(edges), size=count, replace=False)
        return dag.without_edges([edges[i] for i in sorted(pick)])

    g = dag
    names = dag.names
    if mode == "add":
        for _ in range(count):
            for _try in range(max_tries):
                i, j = rng.choice(len(names), size=2, replace=False)
                p, c = names[i], names[j]
                if g.has_edge(p, c) or g.has_edge(c, p) or forbidden(g, p, c):
                    continue
                if p == c or p in g.descendants(c):
                    continue
                g = g.with_edges([(p, c)])
                break
            else:
                raise InfeasiblePerturbationError(f"no admissible edge to add after {max_tries} tries")
        return g

    if count > len(edges):
        raise InfeasiblePerturbationError(f"cannot reverse {count} edges in a graph with {len(edges)}")
    flipped = set()
    for _ in range(count):
        for _try in range(max_tries):
            p, c = edges[rng.integers(len(edges))]
            if (p, c) in flipped or not g.has_edge(p, c) or forbidden(g, c, p):
                continue
            trial = g.without_edges([(p, c)])
            if p in trial.descendants(c):
                continue
            g = trial.with_edges([(c, p)])
            flipped.add((p, c))
            break
        else:
            raise InfeasiblePerturbationError(f"no admissible edge to reverse after {max_tries} tries")
    return g


def drop_nodes(dag: CausalDag, names: Iterable[str]) -> CausalDag:
    gone = set(names)
    for n in gone:
        dag.index(n)
    nodes = [n for n in dag.nodes if n.name not in gone]
    edges = [e for e in dag.edges if e[0] not in gone and e[1] not in gone]
    return CausalDag(nodes, edges, dag.meta)
