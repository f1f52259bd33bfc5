"""Clique to k-edge-change reduction built from 8-vertex switch gadgets.

A switch gadget has gates alpha, beta (upper) and gamma, delta (lower) and
can be crossed by a unit tour only entrance-to-exit along one of two fixed
orders.  Local vertex ids inside a gadget:

    0 alpha   1 a2   2 a3   3 beta
    4 m1 (below alpha)      5 m2 (below beta)
    6 gamma                 7 delta
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .instance import SYM, FormatError, Instance, Tour, _content_lines, _as_text, _int, tour_cost

ALPHA, A2, A3, BETA, M1, M2, GAMMA, DELTA = range(8)
GATES = {"alpha": ALPHA, "beta": BETA, "gamma": GAMMA, "delta": DELTA}
INTERNAL = [(ALPHA, A2), (A2, A3), (A3, BETA), (ALPHA, M1), (BETA, M2),
            (M1, GAMMA), (M2, DELTA), (GAMMA, A3), (A2, DELTA)]
UPPER = (ALPHA, M1, GAMMA, A3, A2, DELTA, M2, BETA)
LOWER = (GAMMA, M1, ALPHA, A2, A3, BETA, M2, DELTA)


@dataclass(frozen=True)
class CliqueInput:
    n: int
    edges: tuple[tuple[int, int], ...]
    t: int

    def __post_init__(self):
        if self.t < 3 or self.t % 2 == 0:
            raise ValueError("t must be odd and at least 3")
        if self.t > self.n:
            raise ValueError("t exceeds the number of vertices of H")
        canon = set()
        for u, v in self.edges:
            if u == v or not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"bad edge ({u}, {v})")
            canon.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @property
    def m(self) -> int:
        return len(self.edges)


@dataclass
class Gadget:
    gid: int
    segment: int
    label: tuple            # ("V", i, pair) or ("S", edge, pair)
    base: int               # instance id of local vertex 0

    def vertex(self, local: int) -> int:
        return self.base + local

    def gate(self, name: str) -> int:
        return self.base + GATES[name]


@dataclass
class Segment:
    sid: int
    label: tuple            # ("V", i, j) or ("S", edge, pair)
    entrance: int
    exit: int
    gadgets: list[int]


@dataclass
class ReductionOutput:
    instance: Instance
    tour_C: Tour
    k: int
    gadgets: list[Gadget]
    segments: list[Segment]
    pairs: list[tuple[int, int]]
    layout: dict = field(default_factory=dict)
    source: CliqueInput | None = None

    @property
    def v_first(self) -> int:
        return self.layout["v_first"]

    @property
    def v_last(self) -> int:
        return self.layout["v_last"]


def euler_pair_order(t: int) -> list[tuple[int, int]]:
    """Edges of an Euler circuit of K_t (vertices 1..t), Hierholzer from 1."""
    if t < 3 or t % 2 == 0:
        raise ValueError("t must be odd and at least 3")
    unused = {v: set(range(1, t + 1)) - {v} for v in range(1, t + 1)}
    stack, circuit = [1], []
    while stack:
        u = stack[-1]
        if unused[u]:
            w = min(unused[u])
            unused[u].discard(w)
            unused[w].discard(u)
            stack.append(w)
        else:
            circuit.append(stack.pop())
    circuit.reverse()
    return list(zip(circuit, circuit[1:]))


def expected_vertex_count(n: int, m: int, t: int) -> int:
    return 4 * n * t * t - 2 * n * t + 5 * m * t * (t - 1)


def budget(t: int) -> int:
    return 7 * t * (t - 1) + 2 * (t + 1)


def build_reduction(inp: CliqueInput) -> ReductionOutput:
    t = inp.t
    pairs = euler_pair_order(t)
    classes = {j: [p for p in pairs if p[0] == j] for j in range(1, t + 1)}
    edges: set[tuple[int, int]] = set()
    gadgets: list[Gadget] = []
    segments: list[Segment] = []
    nxt = 0

    def add(u: int, v: int) -> None:
        edges.add((min(u, v), max(u, v)))

    def new_gadget(seg: int, label: tuple) -> Gadget:
        nonlocal nxt
        g = Gadget(len(gadgets), seg, label, nxt)
        nxt += 8
        gadgets.append(g)
        for a, b in INTERNAL:
            add(g.vertex(a), g.vertex(b))
        return g

    def new_vertex() -> int:
        nonlocal nxt
        nxt += 1
        return nxt - 1

    vgad: dict[tuple[int, tuple[int, int]], Gadget] = {}
    sgad: dict[tuple[tuple[int, int], tuple[int, int]], Gadget] = {}
    for i in range(inp.n):
        for j in range(1, t + 1):
            sid = len(segments)
            a = new_vertex()
            chain = [new_gadget(sid, ("V", i, p)) for p in classes[j]]
            b = new_vertex()
            for p, g in zip(classes[j], chain):
                vgad[(i, p)] = g
            add(a, chain[0].gate("alpha"))
            for g1, g2 in zip(chain, chain[1:]):
                add(g1.gate("beta"), g2.gate("alpha"))
            add(chain[-1].gate("beta"), b)
            add(a, b)
            segments.append(Segment(sid, ("V", i, j), a, b, [g.gid for g in chain]))
    for r in inp.edges:
        for p in sorted(pairs, key=lambda q: tuple(sorted(q))):
            sid = len(segments)
            z = new_vertex()
            g = new_gadget(sid, ("S", r, p))
            q = new_vertex()
            sgad[(r, p)] = g
            add(z, g.gate("alpha"))
            add(g.gate("beta"), q)
            add(z, q)
            segments.append(Segment(sid, ("S", r, p), z, q, [g.gid]))

    for s1, s2 in zip(segments, segments[1:]):
        add(s1.exit, s2.entrance)
    v_first, v_last = segments[0].entrance, segments[-1].exit

    T = len(pairs)
    for r in inp.edges:
        for i, i2 in (r, r[::-1]):
            for ell, p in enumerate(pairs):
                add(vgad[(i, p)].gate("delta"), sgad[(r, p)].gate("gamma"))
                if ell + 1 < T:
                    add(sgad[(r, p)].gate("delta"), vgad[(i2, pairs[ell + 1])].gate("gamma"))
                else:
                    add(sgad[(r, p)].gate("delta"), v_first)
    for i in range(inp.n):
        add(v_last, vgad[(i, pairs[0])].gate("gamma"))

    inst = Instance(SYM, nxt, frozenset(edges))
    order: list[int] = []
    for seg in segments:
        order.append(seg.entrance)
        for gid in seg.gadgets:
            order += [gadgets[gid].vertex(loc) for loc in UPPER]
        order.append(seg.exit)
    layout = {"v_first": v_first, "v_last": v_last}
    for g in gadgets:
        for name in GATES:
            layout[(g.gid, name)] = g.gate(name)
    for seg in segments:
        layout[(seg.sid, "entrance")] = seg.entrance
        layout[(seg.sid, "exit")] = seg.exit
    return ReductionOutput(inst, Tour(tuple(order)), budget(t), gadgets, segments, pairs,
                           layout, inp)


def clique_tour(inp: CliqueInput, clique, red: ReductionOutput) -> Tour:
    """The unit-cost tour that activates the segments chosen by a t-clique."""
    verts = sorted(set(clique))
    if len(verts) != inp.t:
        raise ValueError(f"clique must have exactly {inp.t} vertices")
    eset = set(inp.edges)
    for u, v in combinations(verts, 2):
        if (u, v) not in eset:
            raise ValueError(f"({u}, {v}) is not an edge of H")
    label = {j + 1: v for j, v in enumerate(verts)}   # clique position -> H vertex

    def edge_of(p):
        u, v = label[p[0]], label[p[1]]
        return (min(u, v), max(u, v))

    active = {("V", label[j], j) for j in label}
    active |= {("S", edge_of(p), p) for p in red.pairs}
    vg = {(g.label[1], g.label[2]): g for g in red.gadgets if g.label[0] == "V"}
    sg = {(g.label[1], g.label[2]): g for g in red.gadgets if g.label[0] == "S"}

    order: list[int] = []
    for seg in red.segments:
        order.append(seg.entrance)
        if seg.label not in active:
            for gid in seg.gadgets:
                order += [red.gadgets[gid].vertex(loc) for loc in UPPER]
        order.append(seg.exit)
    for p in red.pairs:
        order += [vg[(label[p[0]], p)].vertex(loc) for loc in LOWER]
        order += [sg[(edge_of(p), p)].vertex(loc) for loc in LOWER]
    return Tour(tuple(order))


def _pairs(tour: Tour) -> set[tuple[int, int]]:
    return {(min(a, b), max(a, b)) for a, b in tour.pairs()}


def edge_change_distance(t1: Tour, t2: Tour) -> int:
    """Size of the symmetric difference of the two tours' edge sets."""
    return len(_pairs(t1) ^ _pairs(t2))


def edges_removed(t1: Tour, t2: Tour) -> int:
    """Edges of t1 that t2 does not use."""
    return len(_pairs(t1) - _pairs(t2))


@dataclass
class TraversalReport:
    verdicts: dict[int, str]
    active_segments: list[int]
    cost: int
    hamiltonian_unit: bool

    def count(self, verdict: str) -> int:
        return sum(v == verdict for v in self.verdicts.values())


def check_gadget_traversal(tour: Tour, red: ReductionOutput) -> TraversalReport:
    inst = red.instance
    cost = tour_cost(inst, tour)
    n = tour.n
    pos = {v: i for i, v in enumerate(tour.order)}
    verdicts = {}
    for g in red.gadgets:
        start = pos[g.vertex(0)]
        run = None
        for off in range(-7, 1):
            seq = tuple(tour.order[(start + off + d) % n] - g.base for d in range(8))
            if all(0 <= s < 8 for s in seq):
                run = seq
                break
        if run is None:
            verdicts[g.gid] = "invalid"
        elif run in (UPPER, UPPER[::-1]):
            verdicts[g.gid] = "upper"
        elif run in (LOWER, LOWER[::-1]):
            verdicts[g.gid] = "lower"
        else:
            verdicts[g.gid] = "invalid"
    used = _pairs(tour)
    active = [s.sid for s in red.segments
              if (min(s.entrance, s.exit), max(s.entrance, s.exit)) in used]
    unit = cost == inst.n
    if unit:
        t = red.source.t if red.source else None
        nv = sum(red.segments[s].label[0] == "V" for s in active)
        ns = len(active) - nv
        if t is not None:
            assert nv == t and ns == t * (t - 1) // 2, "unit tour with wrong active segment counts"
    return TraversalReport(verdicts, active, cost, unit)


# --------------------------------------------------------------------------
# files


def parse_graph(data) -> tuple[int, list[tuple[int, int]]]:
    lines = list(_content_lines(_as_text(data)))
    if not lines:
        raise FormatError("empty input", 1)
    lineno, header = lines[0]
    parts = header.split()
    if len(parts) != 3 or parts[0] != "GRAPH":
        raise FormatError("header must be 'GRAPH <n> <m>'", lineno)
    n, m = _int(parts[1], lineno), _int(parts[2], lineno)
    edges = []
    for lineno, line in lines[1:]:
        parts = line.split()
        if len(parts) != 2:
            raise FormatError("expected 'u v'", lineno)
        u, v = _int(parts[0], lineno), _int(parts[1], lineno)
        if u == v or not (0 <= u < n and 0 <= v < n):
            raise FormatError(f"bad edge ({u}, {v})", lineno)
        edges.append((u, v))
    if len(edges) != m:
        raise FormatError(f"expected {m} edges, got {len(edges)}")
    return n, edges


def serialize_graph(n: int, edges) -> str:
    edges = list(edges)
    return "\n".join([f"GRAPH {n} {len(edges)}", *(f"{u} {v}" for u, v in edges)]) + "\n"


def serialize_layout(red: ReductionOutput) -> str:
    out = [f"budget {red.k}", f"v_first {red.v_first}", f"v_last {red.v_last}"]
    for seg in red.segments:
        kind, a, b = seg.label
        lab = f"{kind} {a[0]}-{a[1]}" if kind == "S" else f"{kind} {a}"
        bpart = f"{b[0]}-{b[1]}" if isinstance(b, tuple) else str(b)
        out.append(f"segment {seg.sid} {lab} {bpart} entrance {seg.entrance} exit {seg.exit}")
    for g in red.gadgets:
        gates = " ".join(f"{name} {g.gate(name)}" for name in ("alpha", "beta", "gamma", "delta"))
        out.append(f"gadget {g.gid} {gates}")
    return "\n".join(out) + "\n"


def parse_layout(data) -> dict:
    out: dict = {}
    for _, line in _content_lines(_as_text(data)):
        parts = line.split()
        if parts[0] == "gadget":
            gid = int(parts[1])
            for name, val in zip(parts[2::2], parts[3::2]):
                out[(gid, name)] = int(val)
        elif parts[0] in ("v_first", "v_last", "budget"):
            out[parts[0]] = int(parts[1])
    return out
