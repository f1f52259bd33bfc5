"""(1,2)-TSP instances, tours and LP solution files.

An instance lists only its cost-1 edges (or arcs); every other pair of
distinct cities costs 2.  Vertices are dense integers ``0..n-1``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

SYM = "sym"
ASYM = "asym"

Edge = tuple[int, int]


class FormatError(ValueError):
    """Raised when a text file does not follow the expected layout."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def edge_key(kind: str, u: int, v: int) -> Edge:
    """Canonical key of the pair (u, v): sorted for symmetric instances."""
    if kind == SYM and u > v:
        return (v, u)
    return (u, v)


@dataclass(frozen=True)
class Instance:
    kind: str
    n: int
    unit_edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind not in (SYM, ASYM):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.n < 3:
            raise ValueError("an instance needs at least 3 vertices")
        canon = set()
        for u, v in self.unit_edges:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"pair ({u}, {v}) out of range")
            canon.add(edge_key(self.kind, u, v))
        object.__setattr__(self, "unit_edges", frozenset(canon))

    @property
    def symmetric(self) -> bool:
        return self.kind == SYM

    def key(self, u: int, v: int) -> Edge:
        return edge_key(self.kind, u, v)

    def all_pairs(self) -> list[Edge]:
        """Every variable of the relaxation: unordered pairs or ordered arcs."""
        n = self.n
        if self.symmetric:
            return [(u, v) for u in range(n) for v in range(u + 1, n)]
        return [(u, v) for u in range(n) for v in range(n) if u != v]

    def cost(self, u: int, v: int) -> int:
        return edge_cost(self, u, v)

    def cost_matrix(self) -> list[list[int]]:
        n = self.n
        mat = [[2] * n for _ in range(n)]
        for i in range(n):
            mat[i][i] = 0
        for u, v in self.unit_edges:
            mat[u][v] = 1
            if self.symmetric:
                mat[v][u] = 1
        return mat

    def unit_neighbors(self) -> list[list[int]]:
        """Out-neighbors along cost-1 pairs (both directions when symmetric)."""
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.unit_edges:
            adj[u].append(v)
            if self.symmetric:
                adj[v].append(u)
        return [sorted(a) for a in adj]


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(v) for v in self.order))

    @property
    def n(self) -> int:
        return len(self.order)

    def pairs(self) -> list[Edge]:
        o = self.order
        return [(o[i], o[(i + 1) % len(o)]) for i in range(len(o))]


def edge_cost(inst: Instance, u: int, v: int) -> int:
    if u == v:
        raise ValueError("cost of a self-pair is undefined")
    if not (0 <= u < inst.n and 0 <= v < inst.n):
        raise ValueError(f"vertex out of range: ({u}, {v})")
    return 1 if inst.key(u, v) in inst.unit_edges else 2


def validate_tour(inst: Instance, tour: Tour) -> None:
    if sorted(tour.order) != list(range(inst.n)):
        raise ValueError("tour is not a permutation of the vertex set")


def tour_cost(inst: Instance, tour: Tour) -> int:
    validate_tour(inst, tour)
    return sum(edge_cost(inst, u, v) for u, v in tour.pairs())


# --------------------------------------------------------------------------
# text formats


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _as_text(data) -> str:
    if isinstance(data, bytes):
        return data.decode("utf-8")
    if isinstance(data, io.IOBase) or hasattr(data, "read"):
        return _as_text(data.read())
    return data


def _int(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise FormatError(f"expected an integer, got {token!r}", lineno) from None


def parse_instance(data) -> Instance:
    """Parse ``TSP12 <sym|asym> <n>`` followed by one ``u v`` pair per line."""
    lines = list(_content_lines(_as_text(data)))
    if not lines:
        raise FormatError("empty input", 1)
    lineno, header = lines[0]
    parts = header.split()
    if len(parts) != 3 or parts[0] != "TSP12" or parts[1] not in (SYM, ASYM):
        raise FormatError("header must be 'TSP12 <sym|asym> <n>'", lineno)
    kind, n = parts[1], _int(parts[2], lineno)
    if n < 3:
        raise FormatError("n must be at least 3", lineno)
    seen: set[Edge] = set()
    for lineno, line in lines[1:]:
        parts = line.split()
        if len(parts) != 2:
            raise FormatError("expected 'u v'", lineno)
        u, v = _int(parts[0], lineno), _int(parts[1], lineno)
        if u == v:
            raise FormatError(f"self-loop at vertex {u}", lineno)
        if not (0 <= u < n and 0 <= v < n):
            raise FormatError(f"vertex out of range in ({u}, {v})", lineno)
        key = edge_key(kind, u, v)
        if key in seen:
            raise FormatError(f"duplicate pair ({u}, {v})", lineno)
        seen.add(key)
    return Instance(kind, n, frozenset(seen))


def serialize_instance(inst: Instance) -> str:
    out = [f"TSP12 {inst.kind} {inst.n}"]
    out += [f"{u} {v}" for u, v in sorted(inst.unit_edges)]
    return "\n".join(out) + "\n"


def parse_tour(data) -> Tour:
    lines = list(_content_lines(_as_text(data)))
    if not lines:
        raise FormatError("empty input", 1)
    lineno, header = lines[0]
    parts = header.split()
    if len(parts) != 2 or parts[0] != "TOUR":
        raise FormatError("header must be 'TOUR <n>'", lineno)
    n = _int(parts[1], lineno)
    order = [_int(line, ln) for ln, line in lines[1:]]
    if len(order) != n:
        raise FormatError(f"expected {n} vertices, got {len(order)}")
    if sorted(order) != list(range(n)):
        raise FormatError("tour is not a permutation")
    return Tour(tuple(order))


def serialize_tour(tour: Tour) -> str:
    return "\n".join([f"TOUR {tour.n}", *map(str, tour.order)]) + "\n"


def parse_lpsol(data) -> tuple[int, dict[Edge, Fraction], list[frozenset[int]]]:
    """Parse ``LPSOL <n>`` + ``u v num/den`` lines; ``# cut ...`` comments are kept."""
    text = _as_text(data)
    cuts = []
    for raw in text.splitlines():
        s = raw.strip()
        if s.startswith("# cut"):
            cuts.append(frozenset(int(t) for t in s.split()[2:]))
    lines = list(_content_lines(text))
    if not lines:
        raise FormatError("empty input", 1)
    lineno, header = lines[0]
    parts = header.split()
    if len(parts) != 2 or parts[0] != "LPSOL":
        raise FormatError("header must be 'LPSOL <n>'", lineno)
    n = _int(parts[1], lineno)
    values: dict[Edge, Fraction] = {}
    for lineno, line in lines[1:]:
        parts = line.split()
        if len(parts) != 3:
            raise FormatError("expected 'u v num/den'", lineno)
        u, v = _int(parts[0], lineno), _int(parts[1], lineno)
        try:
            val = Fraction(parts[2])
        except (ValueError, ZeroDivisionError):
            raise FormatError(f"bad rational {parts[2]!r}", lineno) from None
        if not (0 <= u < n and 0 <= v < n) or u == v:
            raise FormatError(f"bad pair ({u}, {v})", lineno)
        values[(u, v)] = val
    return n, values, cuts


def format_fraction(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def serialize_lpsol(n: int, values: Mapping[Edge, Fraction],
                    cuts: Iterable[Iterable[int]] = ()) -> str:
    out = [f"LPSOL {n}"]
    out += [f"{u} {v} {format_fraction(val)}"
            for (u, v), val in sorted(values.items()) if val != 0]
    out += ["# cut " + " ".join(map(str, sorted(c))) for c in cuts]
    return "\n".join(out) + "\n"
