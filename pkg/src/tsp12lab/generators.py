"""Seeded random instance families for property suites.

Plain G(n, p) unit graphs mostly give integral LP optima, so the suites
also draw from sparse structured families whose relaxations tend to be
fractional: random cubic graphs, blocks of short cycles joined by a few
edges, and triangles joined by spokes.
"""

from __future__ import annotations

import numpy as np

from .instance import ASYM, SYM, Instance

SYM_FAMILIES = ("gnp", "cubic", "blocks", "spokes")
ASYM_FAMILIES = ("gnp", "perm2", "blocks", "bidirected")


def _gnp(rng, n: int, p: float, directed: bool) -> set:
    return {(u, v) for u in range(n) for v in range(n)
            if u != v and (directed or u < v) and rng.random() < p}


def _cubic(rng, n: int) -> set:
    """A random simple 3-regular graph (configuration model with retries)."""
    n += n % 2
    for _ in range(1000):
        stubs = np.repeat(np.arange(n), 3)
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2)
        edges = {(int(min(a, b)), int(max(a, b))) for a, b in pairs}
        if len(edges) == len(pairs) and all(a != b for a, b in pairs):
            return edges
    raise RuntimeError("could not sample a simple cubic graph")


def _partition(rng, n: int, lo: int, hi: int) -> list[list[int]]:
    perm = [int(v) for v in rng.permutation(n)]
    blocks, i = [], 0
    while i < n:
        size = int(rng.integers(lo, hi + 1))
        if n - i - size < lo:
            size = n - i
        blocks.append(perm[i:i + size])
        i += size
    return blocks


def _blocks(rng, n: int, directed: bool) -> set:
    edges = set()
    blocks = _partition(rng, n, 3, 5)
    for b in blocks:
        for i in range(len(b)):
            u, v = b[i], b[(i + 1) % len(b)]
            edges.add((u, v) if directed else (min(u, v), max(u, v)))
    extra = int(rng.integers(len(blocks), 2 * len(blocks) + 2))
    for _ in range(extra):
        u, v = (int(a) for a in rng.choice(n, 2, replace=False))
        edges.add((u, v) if directed else (min(u, v), max(u, v)))
    return edges


def _spokes(rng, n: int) -> set:
    """Disjoint triangles (plus a leftover path) joined by random spokes."""
    perm = [int(v) for v in rng.permutation(n)]
    edges = set()
    k = n // 3
    for i in range(k):
        a, b, c = perm[3 * i:3 * i + 3]
        edges |= {(min(a, b), max(a, b)), (min(b, c), max(b, c)), (min(a, c), max(a, c))}
    rest = perm[3 * k:]
    for a, b in zip(rest, rest[1:]):
        edges.add((min(a, b), max(a, b)))
    order = [int(v) for v in rng.permutation(n)]
    for a, b in zip(order[::2], order[1::2]):
        edges.add((min(a, b), max(a, b)))
    return edges


def _perm2(rng, n: int) -> set:
    arcs = set()
    for _ in range(2):
        p = rng.permutation(n)
        arcs |= {(int(u), int(p[u])) for u in range(n) if p[u] != u}
    return arcs


def _bidirected(rng, n: int) -> set:
    arcs = _blocks(rng, n, True)
    for u, v in list(arcs):
        if rng.random() < 0.3:
            arcs.add((v, u))
    return arcs


def random_instance(rng: np.random.Generator, kind: str, n: int, family: str) -> Instance:
    directed = kind == ASYM
    if family == "gnp":
        p = float(rng.uniform(0.12, 0.45) if not directed else rng.uniform(0.1, 0.4))
        edges = _gnp(rng, n, p, directed)
    elif family == "cubic" and not directed:
        edges = _cubic(rng, n)
        n += n % 2
    elif family == "blocks":
        edges = _blocks(rng, n, directed)
    elif family == "spokes" and not directed:
        edges = _spokes(rng, n)
    elif family == "perm2" and directed:
        edges = _perm2(rng, n)
    elif family == "bidirected" and directed:
        edges = _bidirected(rng, n)
    else:
        raise ValueError(f"unknown {kind} family {family!r}")
    return Instance(kind, n, frozenset(edges))


def suite(seed: int, kind: str, count: int, n_lo: int, n_hi: int):
    """Yield (family, instance) pairs, cycling through the families."""
    rng = np.random.default_rng(seed)
    families = SYM_FAMILIES if kind == SYM else ASYM_FAMILIES
    for i in range(count):
        family = families[i % len(families)]
        n = int(rng.integers(n_lo, n_hi + 1))
        if family == "cubic":
            n = min(n + n % 2, n_hi - n_hi % 2)
        yield family, random_instance(rng, kind, n, family)
