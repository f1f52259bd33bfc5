"""2-matchings on the LP support and the local improvement rules.

A 2-matching is improved when its potential (components, cycles, edges in
cycles, singletons, size-two components) gets lexicographically better:
fewer components, then more cycles, then more cycle edges, then fewer
singletons, then fewer size-two components.

Every rule below builds a candidate matching and the candidate is only
accepted after the potential check, so a rule whose precondition holds
but whose application does not improve is counted as a *rejection* in
the run statistics instead of silently corrupting the search.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

from .instance import Edge, Instance, SYM
from .lp_core import LPSolution, solve_ser, solve_ser_plus

log = logging.getLogger(__name__)

MAX_ALT_LEN = 5          # alternating paths of length < 7 have odd length <= 5
PATH_FORMING_LIMIT = 12


class InvariantError(RuntimeError):
    """An internal guarantee of the improvement procedures failed."""


def ukey(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


class Potential(NamedTuple):
    components: int
    cycles: int
    edges_in_cycles: int
    singletons: int
    size_two_components: int

    def rank(self) -> tuple[int, int, int, int, int]:
        return (self.components, -self.cycles, -self.edges_in_cycles,
                self.singletons, self.size_two_components)

    def better_than(self, other: "Potential") -> bool:
        return self.rank() < other.rank()


@dataclass(frozen=True)
class Component:
    vertices: tuple[int, ...]      # path order, or cyclic order for cycles
    is_cycle: bool

    @property
    def size(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class TwoMatching:
    n: int
    edges: frozenset[Edge]

    directed = False

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(ukey(*e) for e in self.edges))
        deg = [0] * self.n
        for u, v in self.edges:
            if u == v or not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"bad edge ({u}, {v})")
            deg[u] += 1
            deg[v] += 1
        if max(deg, default=0) > 2:
            raise ValueError("a vertex has degree above 2")

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return [sorted(a) for a in adj]

    def components(self) -> list[Component]:
        adj = self.adjacency()
        seen = [False] * self.n
        comps = []
        for s in range(self.n):
            if seen[s] or len(adj[s]) == 2:
                continue
            order, prev, cur = [], None, s
            while cur is not None:
                seen[cur] = True
                order.append(cur)
                nxt = [w for w in adj[cur] if w != prev and not seen[w]]
                prev, cur = cur, (nxt[0] if nxt else None)
            comps.append(Component(tuple(order), False))
        for s in range(self.n):
            if seen[s]:
                continue
            order, prev, cur = [s], None, s
            seen[s] = True
            while True:
                nxt = [w for w in adj[cur] if w != prev][0] if prev is not None else min(adj[cur])
                if nxt == s:
                    break
                seen[nxt] = True
                order.append(nxt)
                prev, cur = cur, nxt
            comps.append(Component(tuple(order), True))
        return comps

    def potential(self) -> Potential:
        return potential(self)


@dataclass(frozen=True)
class DirectedTwoMatching:
    n: int
    edges: frozenset[Edge]

    directed = True

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(self.edges))
        dout = [0] * self.n
        din = [0] * self.n
        for u, v in self.edges:
            if u == v or not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"bad arc ({u}, {v})")
            dout[u] += 1
            din[v] += 1
        if max(dout, default=0) > 1 or max(din, default=0) > 1:
            raise ValueError("in- or out-degree above 1")

    @property
    def arcs(self) -> frozenset[Edge]:
        return self.edges

    def succ(self) -> list[int | None]:
        s: list[int | None] = [None] * self.n
        for u, v in self.edges:
            s[u] = v
        return s

    def pred(self) -> list[int | None]:
        p: list[int | None] = [None] * self.n
        for u, v in self.edges:
            p[v] = u
        return p

    def components(self) -> list[Component]:
        succ, pred = self.succ(), self.pred()
        seen = [False] * self.n
        comps = []
        for s in range(self.n):
            if pred[s] is not None:
                continue
            order, cur = [], s
            while cur is not None:
                seen[cur] = True
                order.append(cur)
                cur = succ[cur]
            comps.append(Component(tuple(order), False))
        for s in range(self.n):
            if seen[s]:
                continue
            order, cur = [], s
            while not seen[cur]:
                seen[cur] = True
                order.append(cur)
                cur = succ[cur]
            comps.append(Component(tuple(order), True))
        return comps

    def potential(self) -> Potential:
        return potential(self)


def potential(M) -> Potential:
    comps = M.components()
    return Potential(
        components=len(comps),
        cycles=sum(c.is_cycle for c in comps),
        edges_in_cycles=sum(c.size for c in comps if c.is_cycle),
        singletons=sum(c.size == 1 for c in comps),
        size_two_components=sum(c.size == 2 for c in comps),
    )


def unit_matching(x: LPSolution):
    """All edges (arcs) with LP value exactly 1."""
    ones = x.one_edges()
    if x.kind == SYM:
        return TwoMatching(x.n, frozenset(ones))
    return DirectedTwoMatching(x.n, frozenset(ones))


def path_end_degree_violations(M: TwoMatching, x: LPSolution) -> list[int]:
    """Path end vertices whose support degree is below 3."""
    nb = x.neighbors()
    bad = []
    for c in M.components():
        if c.is_cycle:
            continue
        for v in {c.vertices[0], c.vertices[-1]}:
            if len(nb[v]) < 3:
                bad.append(v)
    return sorted(bad)


# --------------------------------------------------------------------------
# bookkeeping for a run


@dataclass
class RunStats:
    steps: int = 0
    rules: dict[str, int] = field(default_factory=dict)
    trace: list[str] = field(default_factory=list)
    rejections: list[str] = field(default_factory=list)
    end_degree_violations: list[tuple[int, list[int]]] = field(default_factory=list)
    one_edge_losses: list[tuple[int, list[Edge]]] = field(default_factory=list)
    overlaps: int = 0

    def record(self, rule: str, pot: Potential) -> None:
        self.steps += 1
        self.rules[rule] = self.rules.get(rule, 0) + 1
        self.trace.append(f"step {self.steps} rule {rule} potential "
                          + ",".join(map(str, pot)))


# --------------------------------------------------------------------------
# undirected view


class _View:
    """Structure of an undirected matching over the support of x."""

    def __init__(self, M: TwoMatching, x: LPSolution):
        self.M = M
        self.x = x
        self.n = M.n
        self.edges = set(M.edges)
        self.madj = M.adjacency()
        self.sadj = x.neighbors()
        self.support = set(x.support)
        self.one = x.one_edges()
        self.comps = M.components()
        self.comp = [0] * self.n
        self.pos = [0] * self.n
        for ci, c in enumerate(self.comps):
            for i, v in enumerate(c.vertices):
                self.comp[v] = ci
                self.pos[v] = i
        self.in_cycle = [self.comps[self.comp[v]].is_cycle for v in range(self.n)]
        self.is_end = [self.in_cycle[v] or len(self.madj[v]) <= 1 for v in range(self.n)]
        self.pot = potential(M)

    def path_end(self, v: int) -> bool:
        return not self.in_cycle[v] and len(self.madj[v]) <= 1

    def same_cycle(self, a: int, b: int) -> bool:
        return self.in_cycle[a] and self.comp[a] == self.comp[b]

    def is_one(self, u: int, v: int) -> bool:
        return ukey(u, v) in self.one

    def connecting(self, u: int, v: int) -> bool:
        e = ukey(u, v)
        return e in self.support and e not in self.edges

    def cycle_edge_to_drop(self, v: int, avoid: Iterable[Edge] = ()) -> Edge:
        """A cycle edge at v, preferring one whose LP value is below 1."""
        avoid = set(avoid)
        opts = [ukey(v, w) for w in self.madj[v] if ukey(v, w) not in avoid]
        opts.sort(key=lambda e: (e in self.one, e))
        return opts[0]

    def between(self, w: int, w2: int, other: int) -> bool:
        """Whether w2 (next to w on their path) lies towards `other`."""
        return (self.pos[w2] - self.pos[w]) * (self.pos[other] - self.pos[w]) > 0


@dataclass(frozen=True)
class AltPath:
    vertices: tuple[int, ...]
    tags: tuple[str, ...]             # "connecting" / "matching" per edge
    inward: bool
    truncated: bool
    closed: bool
    violations: tuple[tuple[int, int], ...] = ()   # (connecting idx, matching idx)

    @property
    def length(self) -> int:
        return len(self.tags)

    @property
    def s(self) -> int:
        return self.vertices[0]

    @property
    def t(self) -> int:
        return self.vertices[-1]

    def end_edges_clean(self) -> bool:
        """Neither the first nor the last edge takes part in an inward violation."""
        L = self.length
        return not any(c in (1, L) or m in (1, L) for c, m in self.violations)


def _violations(view: _View, verts: tuple[int, ...]) -> list[tuple[int, int]]:
    L = len(verts) - 1
    out = []
    for k in range(1, L + 1, 2):            # connecting edges sit at odd indices
        a, b = verts[k - 1], verts[k]
        if view.comp[a] != view.comp[b] or view.in_cycle[a]:
            continue
        if k - 1 != 0 and not view.between(a, verts[k - 2], b):
            out.append((k, k - 1))
        if k != L and not view.between(b, verts[k + 1], a):
            out.append((k, k + 1))
    return out


def make_alt_path(view: _View, verts: Iterable[int]) -> AltPath:
    verts = tuple(verts)
    L = len(verts) - 1
    tags = tuple("connecting" if k % 2 else "matching" for k in range(1, L + 1))
    viol = _violations(view, verts)
    complete = L % 2 == 1 and view.is_end[verts[-1]]
    return AltPath(verts, tags, not viol, not complete, verts[0] == verts[-1] and L > 1,
                   tuple(viol))


def validate_alt_path(view: _View, verts: tuple[int, ...], truncated_ok: bool = False) -> bool:
    """Check the defining properties of an alternating path against M."""
    L = len(verts) - 1
    if L < 1:
        return False
    s, t = verts[0], verts[-1]
    inner = verts[1:-1]
    if len(set(verts[:-1])) != L or (t in verts[:-1] and t != s) or (t == s and L < 3):
        return False
    if not view.is_end[s]:
        return False
    for k in range(1, L + 1):
        u, v = verts[k - 1], verts[k]
        e = ukey(u, v)
        if e not in view.support:
            return False
        if k % 2 == 1 and e in view.edges:
            return False
        if k % 2 == 0 and e not in view.edges:
            return False
    if any(view.in_cycle[v] for v in inner):
        return False
    if L == 1 and view.same_cycle(s, t):
        return False
    complete = L % 2 == 1 and view.is_end[t]
    return complete or truncated_ok


def enumerate_alt_paths(view: _View, max_len: int = MAX_ALT_LEN,
                        truncated: bool = False) -> Iterator[tuple[int, ...]]:
    """Alternating paths in lexicographic vertex order (depth-first).

    Complete paths only, unless ``truncated`` is set, in which case only the
    truncated ones (end condition failing) are produced.
    """
    for s in range(view.n):
        if view.is_end[s]:
            yield from _extend(view, [s], max_len, truncated)


def _extend(view: _View, path: list[int], max_len: int, truncated: bool):
    L = len(path) - 1
    last = path[-1]
    s = path[0]
    if L % 2 == 0:
        for w in view.sadj[last]:
            if ukey(last, w) in view.edges:
                continue
            if w in path:
                if w == s and L >= 2 and not truncated:
                    yield tuple(path) + (w,)
                continue
            if L == 0 and view.same_cycle(s, w):
                continue
            nxt = path + [w]
            if view.is_end[w]:
                if not truncated:
                    yield tuple(nxt)
            elif truncated:
                yield tuple(nxt)
            if not view.in_cycle[w] and L + 1 < max_len:
                yield from _extend(view, nxt, max_len, truncated)
    else:
        for w in view.madj[last]:
            if w in path or view.in_cycle[w]:
                continue
            nxt = path + [w]
            if truncated:
                yield tuple(nxt)
            if L + 1 < max_len:
                yield from _extend(view, nxt, max_len, truncated)


def hamiltonian_path(view: _View, cycle_vertices: Iterable[int], s: int, t: int) -> list[int] | None:
    """An s-t path through exactly the given vertices using support edges."""
    verts = set(cycle_vertices)
    if len(verts) > PATH_FORMING_LIMIT:
        log.warning("path-forming test skipped for a cycle of %d vertices", len(verts))
        return None
    target = len(verts)
    path = [s]
    used = {s}

    def dfs(u: int) -> bool:
        if len(path) == target:
            return u == t
        for w in view.sadj[u]:
            if w in verts and w not in used and (w != t or len(path) == target - 1):
                used.add(w)
                path.append(w)
                if dfs(w):
                    return True
                used.discard(w)
                path.pop()
        return False

    return list(path) if dfs(s) else None


def _apply(view: _View, verts: tuple[int, ...], ham: list[int] | None = None) -> set[Edge] | None:
    """Apply an alternating path; None if the result is not a 2-matching."""
    E = set(view.edges)
    L = len(verts) - 1
    q_edges = set()
    for k in range(1, L + 1):
        e = ukey(verts[k - 1], verts[k])
        q_edges.add(e)
        if k % 2:
            E.add(e)
        else:
            E.discard(e)
    s, t = verts[0], verts[-1]
    if s == t:
        for w in view.madj[s]:
            E.discard(ukey(s, w))
    elif ham is not None:
        for v in view.comps[view.comp[s]].vertices:
            for w in view.madj[v]:
                E.discard(ukey(v, w))
        E.update(ukey(a, b) for a, b in zip(ham, ham[1:]))
    else:
        for end in (s, t):
            if view.in_cycle[end]:
                E.discard(view.cycle_edge_to_drop(end, q_edges))
    return E if _degrees_ok(view.n, E) else None


def _degrees_ok(n: int, E: Iterable[Edge]) -> bool:
    deg = [0] * n
    for u, v in E:
        deg[u] += 1
        deg[v] += 1
        if deg[u] > 2 or deg[v] > 2:
            return False
    return True


def _check_chord_rule(view: _View, verts: tuple[int, ...], E: set[Edge]) -> None:
    s, t = verts[0], verts[-1]
    if s == t or not (view.path_end(s) and view.path_end(t)):
        return
    deg = [0] * view.n
    for u, v in E:
        deg[u] += 1
        deg[v] += 1
    for v in range(view.n):
        if v not in (s, t) and view.path_end(v) and deg[v] > 1:
            raise InvariantError(f"applying {verts} turned path end {v} into an inner vertex")


# --------------------------------------------------------------------------
# improvement search


@dataclass
class ImproveOptions:
    special_three_cycle: bool = False
    rules: frozenset[str] = frozenset({"A1", "A2", "A3", "A4", "A5", "B1", "B2", "C1", "C2"})


class _Search:
    def __init__(self, M: TwoMatching, x: LPSolution, options: ImproveOptions,
                 stats: RunStats | None = None):
        self.view = _View(M, x)
        self.x = x
        self.options = options
        self.stats = stats

    def reject(self, rule: str, verts) -> None:
        if self.stats is not None:
            self.stats.rejections.append(f"{rule} {tuple(verts)}")

    def accept(self, E: set[Edge] | None) -> TwoMatching | None:
        if E is None:
            return None
        if not E <= self.view.support:
            return None
        M2 = TwoMatching(self.view.n, frozenset(E))
        return M2 if potential(M2).better_than(self.view.pot) else None

    def try_path(self, rule: str, verts, ham=None) -> TwoMatching | None:
        E = _apply(self.view, verts, ham)
        if E is not None:
            _check_chord_rule(self.view, verts, E)
        M2 = self.accept(E)
        if M2 is None:
            self.reject(rule, verts)
        return M2

    def run(self) -> tuple[TwoMatching, str] | None:
        view = self.view
        rules = self.options.rules
        paths = [p for p in enumerate_alt_paths(view) if p[0] != p[-1]]
        closed = [p for p in enumerate_alt_paths(view) if p[0] == p[-1]]
        info = {p: make_alt_path(view, p) for p in paths}

        if "A1" in rules:
            for p in paths:
                if len(p) == 2:
                    M2 = self.try_path("A1", p)
                    if M2:
                        return M2, "A1"
        if "A2" in rules:
            for p in paths:
                s, t = p[0], p[-1]
                if len(p) <= 4 and view.path_end(s) and view.path_end(t) \
                        and view.comp[s] != view.comp[t]:
                    M2 = self.try_path("A2", p)
                    if M2:
                        return M2, "A2"
        if "A3" in rules:
            for p in paths:
                s, t = p[0], p[-1]
                if not (view.path_end(s) and view.path_end(t)):
                    continue
                if len({view.comp[v] for v in p}) == 1 or not info[p].end_edges_clean():
                    continue
                M2 = self.try_path("A3", p)
                if M2:
                    return M2, "A3"
        if "A4" in rules:
            for p in paths:
                if not info[p].inward:
                    continue
                s, t = p[0], p[-1]
                ham = None
                if view.same_cycle(s, t):
                    ham = hamiltonian_path(view, view.comps[view.comp[s]].vertices, s, t)
                    if ham is None:
                        continue
                M2 = self.try_path("A4", p, ham)
                if M2:
                    return M2, "A4"
        if "A5" in rules:
            found = self._rule_a5(paths, info)
            if found:
                return found, "A5"
        if "B1" in rules or "B2" in rules:
            found = self._rules_b(closed)
            if found:
                return found
        if "C1" in rules or "C2" in rules:
            found = self._rules_c(closed)
            if found:
                return found
        if self.options.special_three_cycle:
            for p in paths:
                s, t = p[0], p[-1]
                if len(p) == 4 and view.in_cycle[s] and view.comps[view.comp[s]].size == 3:
                    E = _apply(view, p)
                    M2 = self.accept(E)
                    if M2:
                        return M2, "special"
        return None

    # Q closes path P, then a truncated inward path reaches the new cycle
    def _rule_a5(self, paths, info) -> TwoMatching | None:
        view = self.view
        trunc = None
        for p in paths:
            s, t = p[0], p[-1]
            if not (view.path_end(s) and view.path_end(t)) or view.comp[s] != view.comp[t]:
                continue
            if not info[p].end_edges_clean():
                continue
            P = view.comp[s]
            if trunc is None:
                trunc = self._truncated_into_paths()
            qs = trunc.get(P, [])
            if not qs:
                continue
            E1 = _apply(view, p)
            if E1 is None:
                continue
            M1 = TwoMatching(view.n, frozenset(E1))
            if potential(M1).better_than(view.pot):
                return M1
            view1 = _View(M1, self.x)
            for q in qs:
                if set(q) & set(p) - {q[-1]} and self.stats is not None:
                    self.stats.overlaps += 1
                if not validate_alt_path(view1, q):
                    continue
                ham = None
                if view1.same_cycle(q[0], q[-1]):
                    continue
                E2 = _apply(view1, q, ham)
                if E2 is None or not E2 <= view.support:
                    continue
                M2 = TwoMatching(view.n, frozenset(E2))
                if potential(M2).better_than(view.pot):
                    return M2
            self.reject("A5", p)
        return None

    def _truncated_into_paths(self) -> dict[int, list[tuple[int, ...]]]:
        """Inward paths (length 1 or 3) from a path end into a different path P."""
        view = self.view
        out: dict[int, list[tuple[int, ...]]] = {}
        for s in range(view.n):
            if not view.path_end(s):
                continue
            for q in _extend(view, [s], 3, True):
                out_q = self._first_hit(q)
                if out_q is not None:
                    out.setdefault(view.comp[out_q[-1]], []).append(out_q)
            for q in _extend(view, [s], 3, False):
                out_q = self._first_hit(q)
                if out_q is not None:
                    out.setdefault(view.comp[out_q[-1]], []).append(out_q)
        for P in out:
            out[P] = sorted(set(out[P]))
        return out

    def _first_hit(self, q: tuple[int, ...]) -> tuple[int, ...] | None:
        view = self.view
        if len(q) % 2 != 0:              # must end on a connecting edge
            return None
        last = q[-1]
        if view.in_cycle[last] or view.comp[last] == view.comp[q[0]]:
            return None
        P = view.comp[last]
        if any(view.comp[v] == P for v in q[:-1]):
            return None
        if _violations(view, q):
            return None
        return q

    def _rules_b(self, closed) -> tuple[TwoMatching, str] | None:
        view = self.view
        rules = self.options.rules
        for p in closed:
            s = p[0]
            if not view.path_end(s) or len(view.madj[s]) != 1:
                continue
            u = view.madj[s][0]
            E1 = _apply(view, p)
            if E1 is None:
                continue
            if "B1" in rules:
                for t in view.sadj[u]:
                    if t == s or not view.path_end(t) or view.comp[t] == view.comp[s]:
                        continue
                    if ukey(u, t) in view.edges:
                        continue
                    E2 = set(E1) | {ukey(u, t)}
                    if _degrees_ok(view.n, E2):
                        M2 = self.accept(E2)
                        if M2:
                            return M2, "B1"
                        self.reject("B1", p + (t,))
            if "B2" in rules and view.comps[view.comp[s]].size == 2:
                others = [q for q in closed if q[0] == u]
                if not others:
                    continue
                found = self._rule_b2(p, u, E1, others)
                if found:
                    return found, "B2"
                self.reject("B2", p)
        return None

    def _rule_b2(self, p, u, E1, others) -> TwoMatching | None:
        view = self.view
        s = p[0]
        M1 = TwoMatching(view.n, frozenset(E1))
        view1 = _View(M1, self.x)
        candidates: list[set[Edge]] = []
        for q in others:
            if validate_alt_path(view1, q):
                E2 = _apply(view1, q)
                if E2 is not None:
                    candidates.append(E2)
        # close {s, u} again and open whatever s now sits on
        for w in view1.madj[s]:
            E2 = set(E1) - {ukey(s, w)} | {ukey(s, u)}
            if _degrees_ok(view.n, E2):
                candidates.append(E2)
        extra = []
        for E2 in candidates:
            if not E2 <= view.support:
                continue
            M2 = TwoMatching(view.n, frozenset(E2))
            if potential(M2).better_than(view.pot):
                return M2
            extra.append(M2)
        for M2 in extra:
            M3 = basic_improvement(M2, self.x)
            if M3 is not None and potential(M3).better_than(view.pot):
                return M3
        return None

    def _rules_c(self, closed) -> tuple[TwoMatching, str] | None:
        view = self.view
        rules = self.options.rules
        for p in closed:
            if len(p) != 4:
                continue
            s, u, v = p[0], p[1], p[2]
            if not view.path_end(s) or view.in_cycle[u]:
                continue
            if "C1" in rules:
                for y in (u, v):
                    if view.path_end(y):
                        E = set(view.edges) | {ukey(s, y)}
                        if _degrees_ok(view.n, E):
                            M2 = self.accept(E)
                            if M2:
                                return M2, "C1"
                            self.reject("C1", p)
            if "C2" in rules:
                found = self._rule_c2(s, u, v)
                if found:
                    return found, "C2"
        return None

    def _rule_c2(self, s: int, u: int, v: int) -> TwoMatching | None:
        view = self.view
        u2 = [w for w in view.madj[u] if w != v]
        v2 = [w for w in view.madj[v] if w != u]
        options = []
        if u2:
            options.append((u2[0], ukey(u2[0], u), u))
        options.append((u, ukey(u, v), v))
        options.append((v, ukey(u, v), u))
        if v2:
            options.append((v2[0], ukey(v2[0], v), v))
        P = view.comp[u]
        for t in range(view.n):
            if t == s or not view.is_end[t]:
                continue
            if view.comp[s] == P and view.comp[t] == P:
                # s and t closing the same path can split it into two cycles
                continue
            for w, drop, y in options:
                if t == w or not view.connecting(t, w):
                    continue
                E = set(view.edges) | {ukey(t, w)}
                E.discard(drop)
                if view.in_cycle[t]:
                    E.discard(view.cycle_edge_to_drop(t, {ukey(t, w)}))
                if not view.connecting(s, y):
                    continue
                E.add(ukey(s, y))
                if not _degrees_ok(view.n, E):
                    continue
                M2 = self.accept(E)
                if M2:
                    return M2
                self.reject("C2", (s, u, v, t, w))
        return None


def basic_improvement(M: TwoMatching, x: LPSolution) -> TwoMatching | None:
    """Join two end vertices by a support edge (not a chord of one cycle)."""
    view = _View(M, x)
    for s in range(view.n):
        if not view.is_end[s]:
            continue
        for t in view.sadj[s]:
            if t <= s or not view.is_end[t] or ukey(s, t) in view.edges:
                continue
            if view.same_cycle(s, t):
                continue
            E = _apply(view, (s, t))
            if E is None:
                continue
            M2 = TwoMatching(M.n, frozenset(E))
            if potential(M2).better_than(view.pot):
                return M2
    return None


def find_improvement(M: TwoMatching, x: LPSolution, options: ImproveOptions | None = None,
                     stats: RunStats | None = None) -> TwoMatching | None:
    found = _find(M, x, options or ImproveOptions(), stats)
    return None if found is None else found[0]


def _find(M, x, options, stats):
    return _Search(M, x, options, stats).run()


# --------------------------------------------------------------------------
# singleton removal


def remove_singletons(M, x: LPSolution, stats: RunStats | None = None):
    """Improve a matching that has a singleton component."""
    if M.directed:
        return _remove_singleton_directed(M, x, stats)
    return _remove_singleton_undirected(M, x, stats)


def _remove_singleton_undirected(M: TwoMatching, x: LPSolution, stats):
    view = _View(M, x)
    singles = [c.vertices[0] for c in view.comps if c.size == 1]
    if not singles:
        raise ValueError("matching has no singleton component")
    v = singles[0]
    for w in view.sadj[v]:
        if view.is_end[w]:
            E = _apply(view, (v, w))
            if E is not None:
                M2 = TwoMatching(M.n, frozenset(E))
                if potential(M2).better_than(view.pot):
                    return M2
    M2 = basic_improvement(M, x)
    if M2 is not None:
        return M2
    return _grow_undirected(view, v, stats)


def _grow_undirected(view: _View, v: int, stats):
    S = {v}
    starts = [v]
    parent: dict[int, tuple[int, int]] = {}
    oriented: dict[int, int] = {}        # touched path component -> start vertex
    succ_in: dict[int, dict[int, int]] = {}

    def order_from(ci: int, start: int) -> list[int]:
        vs = list(view.comps[ci].vertices)
        return vs if vs[0] == start else vs[::-1]

    def tree_edges(p: int) -> tuple[set[Edge], set[Edge]]:
        add, rem = set(), set()
        while p != v:
            u, w = parent[p]
            add.add(ukey(u, w))
            rem.add(ukey(p, w))
            p = u
        return add, rem

    def finish(p: int, plus: Iterable[Edge], minus: Iterable[Edge]):
        add, rem = tree_edges(p)
        E = (set(view.edges) - rem - set(minus)) | add | set(plus)
        if not _degrees_ok(view.n, E) or not E <= view.support:
            return None
        M2 = TwoMatching(view.n, frozenset(E))
        return M2 if potential(M2).better_than(view.pot) else None

    for _ in range(view.n + 1):
        cands = []
        for u in sorted(starts):
            for w in view.sadj[u]:
                if w in S:
                    continue
                ci = view.comp[w]
                c = view.comps[ci]
                if c.size == 1 or view.in_cycle[w] or (view.path_end(w) and ci not in oriented):
                    cands.append((0, u, w, "A", None))
                    continue
                if ci in oriented:
                    order = order_from(ci, oriented[ci])
                    i = order.index(w)
                    pred = order[i - 1]
                    cands.append((1 if not view.is_one(pred, w) else 3, u, w, "B", pred))
                    if view.is_one(pred, w) and i + 2 < len(order):
                        cands.append((2, u, w, "B", order[i + 1]))
                    continue
                for y in view.madj[w]:
                    if view.path_end(y):
                        cands.append((2 if not view.is_one(y, w) else 4, u, w, "C", y))
                    else:
                        cands.append((1 if not view.is_one(y, w) else 3, u, w, "B", y))
        cands.sort()
        grown = False
        for _prio, u, w, kind, y in cands:
            if kind == "A":
                minus = []
                if view.in_cycle[w]:
                    minus.append(view.cycle_edge_to_drop(w))
                M2 = finish(u, [ukey(u, w)], minus)
            elif kind == "B":
                M2 = finish(u, [ukey(u, w)], [ukey(w, y)])
            else:
                S.update((w, y))
                parent[y] = (u, w)
                oriented[view.comp[w]] = y
                starts.append(y)
                for s2 in sorted(starts):
                    if s2 != y and view.connecting(y, s2):
                        M2 = finish(y, [ukey(y, s2)], [])
                        if M2 is not None:
                            return M2
                grown = True
                break
            if M2 is not None:
                return M2
            if stats is not None:
                stats.rejections.append(f"3{kind} {(u, w, y)}")
        if not grown:
            raise InvariantError(f"singleton growth from {v} stalled with S={sorted(S)}")
    raise InvariantError("singleton growth did not terminate")


class _DView:
    def __init__(self, M: DirectedTwoMatching, x: LPSolution):
        self.M = M
        self.n = M.n
        self.edges = set(M.edges)
        self.succ = M.succ()
        self.pred = M.pred()
        self.out = x.out_neighbors()
        self.support = set(x.support)
        self.comps = M.components()
        self.comp = [0] * self.n
        for ci, c in enumerate(self.comps):
            for v in c.vertices:
                self.comp[v] = ci
        self.in_cycle = [self.comps[self.comp[v]].is_cycle for v in range(self.n)]
        self.pot = potential(M)

    def is_start(self, v: int) -> bool:
        return self.in_cycle[v] or self.pred[v] is None

    def is_end(self, v: int) -> bool:
        return self.in_cycle[v] or self.succ[v] is None


def directed_basic_improvement(M: DirectedTwoMatching, x: LPSolution,
                               first: int | None = None) -> DirectedTwoMatching | None:
    """Arc from an end vertex to a start vertex, not inside one cycle."""
    view = _DView(M, x)
    tails = [first] if first is not None else range(view.n)
    for e in tails:
        if not view.is_end(e):
            continue
        for s in view.out[e]:
            if not view.is_start(s) or (e, s) in view.edges:
                continue
            if view.in_cycle[e] and view.comp[e] == view.comp[s]:
                continue
            E = set(view.edges) | {(e, s)}
            if view.in_cycle[e]:
                E.discard((e, view.succ[e]))
            if view.in_cycle[s]:
                E.discard((view.pred[s], s))
            M2 = DirectedTwoMatching(M.n, frozenset(E))
            if potential(M2).better_than(view.pot):
                return M2
    return None


def _remove_singleton_directed(M: DirectedTwoMatching, x: LPSolution, stats):
    view = _DView(M, x)
    singles = [c.vertices[0] for c in view.comps if c.size == 1]
    if not singles:
        raise ValueError("matching has no singleton component")
    v = singles[0]
    M2 = directed_basic_improvement(M, x, first=v)
    if M2 is None:
        for e in range(view.n):
            if view.is_end(e) and v in view.out[e]:
                M2 = directed_basic_improvement(M, x, first=e)
                if M2 is not None:
                    break
    if M2 is None:
        M2 = directed_basic_improvement(M, x)
    if M2 is not None:
        return M2

    S = {v}
    starts = [v]
    parent: dict[int, tuple[int, int]] = {}

    def finish(p: int, plus, minus):
        E = set(view.edges)
        while p != v:
            u, w = parent[p]
            E.add((u, w))
            E.discard((p, w))
            p = u
        E |= set(plus)
        E -= set(minus)
        try:
            M2 = DirectedTwoMatching(view.n, frozenset(E))
        except ValueError:
            return None
        return M2 if potential(M2).better_than(view.pot) else None

    for _ in range(view.n + 1):
        cands = []
        for u in sorted(starts):
            for w in view.out[u]:
                if w in S:
                    continue
                if view.is_start(w):
                    cands.append((0, u, w))
                elif view.pred[view.pred[w]] is not None or view.in_cycle[view.pred[w]]:
                    cands.append((1, u, w))
                else:
                    cands.append((2, u, w))
        cands.sort()
        grown = False
        for kind, u, w in cands:
            if kind == 0:
                minus = [(view.pred[w], w)] if view.in_cycle[w] else []
                M2 = finish(u, [(u, w)], minus)
            elif kind == 1:
                M2 = finish(u, [(u, w)], [(view.pred[w], w)])
            else:
                s = view.pred[w]
                S.update((w, s))
                parent[s] = (u, w)
                starts.append(s)
                for s2 in sorted(starts):
                    if s2 != s and s2 in view.out[s]:
                        M2 = finish(s, [(s, s2)], [])
                        if M2 is not None:
                            return M2
                grown = True
                break
            if M2 is not None:
                return M2
            if stats is not None:
                stats.rejections.append(f"3{'AB'[kind]} {(u, w)}")
        if not grown:
            raise InvariantError(f"singleton growth from {v} stalled with S={sorted(S)}")
    raise InvariantError("singleton growth did not terminate")


# --------------------------------------------------------------------------
# drivers


def _has_singleton(M) -> bool:
    return any(c.size == 1 for c in M.components())


def improve_to_fixpoint(M: TwoMatching, x: LPSolution, options: ImproveOptions | None = None,
                        stats: RunStats | None = None) -> TwoMatching:
    options = options or ImproveOptions()
    stats = stats if stats is not None else RunStats()
    cap = x.n ** 5
    ones = x.one_edges()
    while True:
        if stats.steps >= cap:
            raise InvariantError("improvement step cap exceeded")
        before = potential(M)
        if _has_singleton(M):
            had_ones = ones <= M.edges
            M2, rule = remove_singletons(M, x, stats), "singleton"
            if had_ones and not ones <= M2.edges:
                stats.one_edge_losses.append((stats.steps + 1, sorted(ones - M2.edges)))
        else:
            found = _find(M, x, options, stats)
            if found is None:
                return M
            M2, rule = found
        after = potential(M2)
        if not after.better_than(before):
            raise InvariantError(f"rule {rule} did not improve {before} -> {after}")
        M = M2
        stats.record(rule, after)
        bad = path_end_degree_violations(M, x)
        if bad:
            stats.end_degree_violations.append((stats.steps, bad))


def run_algorithm1(inst: Instance, options: ImproveOptions | None = None,
                   stats: RunStats | None = None, x: LPSolution | None = None):
    """SER+ optimum, 1-edges as the starting matching, improve to a fixpoint."""
    if not inst.symmetric:
        raise ValueError("the symmetric driver needs a symmetric instance")
    if x is None:
        x = solve_ser_plus(inst, solve_ser(inst))
    if options is None:
        options = ImproveOptions(special_three_cycle=x.flags.get("half_integral", False))
    M = improve_to_fixpoint(unit_matching(x), x, options, stats)
    return x, M


def run_directed(inst: Instance, stats: RunStats | None = None, x: LPSolution | None = None):
    """Directed pipeline: singleton removal and end-to-start arcs only."""
    if inst.symmetric:
        raise ValueError("the directed pipeline needs an asymmetric instance")
    if x is None:
        x = solve_ser_plus(inst, solve_ser(inst))
    stats = stats if stats is not None else RunStats()
    M = unit_matching(x)
    cap = x.n ** 5
    ones = x.one_edges()
    while True:
        if stats.steps >= cap:
            raise InvariantError("improvement step cap exceeded")
        before = potential(M)
        if _has_singleton(M):
            M2, rule = remove_singletons(M, x, stats), "singleton"
        else:
            M2, rule = directed_basic_improvement(M, x), "basic"
            if M2 is None:
                break
        after = potential(M2)
        if not after.better_than(before):
            raise InvariantError(f"rule {rule} did not improve {before} -> {after}")
        if ones <= M.edges and not ones <= M2.edges:
            stats.one_edge_losses.append((stats.steps + 1, sorted(ones - M2.edges)))
        M = M2
        stats.record(rule, after)
    return x, M
