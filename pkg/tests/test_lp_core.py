import itertools
import math
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from tsp12lab.instance import ASYM, SYM, Instance
from tsp12lab.lp_core import (asym_min_cut, classify, cut_value, is_feasible, normalize_unit_cost,
                              separate, solution_from_values, solve_ser, solve_ser_plus,
                              stoer_wagner, vertex_check)
from tsp12lab.verify import exact_opt

from conftest import (ASYM5_ARCS, complete_unit, tri9_vector, random_unit_instance,
                      scipy_ser_value)

FRACTIONAL_SYM = Instance(SYM, 6, frozenset([(0, 3), (1, 3), (1, 4), (1, 5), (2, 4), (3, 4)]))
HALF = Fraction(1, 2)


def _cover(rng, n, directed):
    """Random spanning set of vertex-disjoint cycles (length >= 3 when undirected)."""
    while True:
        perm = [int(v) for v in rng.permutation(n)]
        cuts = sorted(int(c) for c in rng.choice(range(3, n - 2), size=int(rng.integers(0, 2)),
                                                 replace=False)) if n >= 6 else []
        cycles, start = [], 0
        for c in cuts + [n]:
            cycles.append(perm[start:c])
            start = c
        arcs = []
        for cyc in cycles:
            for i in range(len(cyc)):
                u, w = cyc[i], cyc[(i + 1) % len(cyc)]
                arcs.append((u, w) if directed else (min(u, w), max(u, w)))
        return arcs


def _random_degree_vector(rng, n, directed):
    vals = {}
    for _ in range(2):
        for e in _cover(rng, n, directed):
            vals[e] = vals.get(e, Fraction(0)) + HALF
    return vals


def _exhaustive_violated(kind, vals, n):
    rhs = 2 if kind == SYM else 1
    return any(cut_value(kind, vals, S) < rhs
               for size in range(1, n) for S in itertools.combinations(range(n), size))


def test_reference_objectives(tri9, asym5):
    xb = solve_ser(asym5)
    assert xb.objective == 5 and is_feasible(asym5, xb)
    xa = solve_ser(tri9)
    assert xa.objective == 9 and is_feasible(tri9, xa)
    stated = solution_from_values(tri9, tri9_vector())
    assert is_feasible(tri9, stated) and stated.objective == 9


def test_complete_k4():
    x = solve_ser(complete_unit(SYM, 4))
    assert x.objective == 4


def test_plus_on_integral_base(asym5):
    base = solve_ser(asym5)
    plus = solve_ser_plus(asym5, base)
    assert plus.objective == 5 and is_feasible(asym5, plus)


def test_plus_rounds_up_fractional_base():
    base = solve_ser(FRACTIONAL_SYM)
    assert base.objective == Fraction(15, 2)
    assert scipy_ser_value(FRACTIONAL_SYM) == pytest.approx(7.5)
    plus = solve_ser_plus(FRACTIONAL_SYM, base)
    assert plus.objective == 8 and is_feasible(FRACTIONAL_SYM, plus)
    assert plus.objective <= exact_opt(FRACTIONAL_SYM)


@pytest.mark.parametrize("kind, sizes", [(SYM, range(4, 8)), (ASYM, range(3, 7))])
def test_matches_scipy_with_all_subtours(kind, sizes):
    rng = np.random.default_rng(11)
    for n in sizes:
        for _ in range(6):
            inst = random_unit_instance(rng, kind, n, float(rng.uniform(0.1, 0.6)))
            x = solve_ser(inst)
            assert float(x.objective) == pytest.approx(scipy_ser_value(inst), abs=1e-7)


@pytest.mark.parametrize("kind", [SYM, ASYM])
def test_solution_invariants_and_weak_duality(kind):
    rng = np.random.default_rng(3)
    for _ in range(25):
        n = int(rng.integers(4, 11))
        inst = random_unit_instance(rng, kind, n, float(rng.uniform(0.1, 0.5)))
        base = solve_ser(inst)
        plus = solve_ser_plus(inst, base)
        for x in (base, plus):
            assert is_feasible(inst, x)
            assert all(0 < v <= 1 for v in x.values.values())
            assert x.objective == sum(inst.cost(*e) * v for e, v in x.values.items())
            rhs = 2 if kind == SYM else 1
            assert all(cut_value(kind, x.values, S) >= rhs for S in x.cuts)
            assert x.objective >= n
        assert vertex_check(inst, base, with_bounds=False)
        opt = exact_opt(inst)
        assert base.objective <= plus.objective <= opt
        assert plus.objective >= math.ceil(base.objective)
        assert (plus.objective == base.objective) == (base.objective.denominator == 1)


def test_separate_examples(tri9, asym5):
    tri = {(0, 1): 1, (1, 2): 1, (0, 2): 1, (3, 4): 1, (4, 5): 1, (3, 5): 1}
    S = separate(SYM, {e: Fraction(v) for e, v in tri.items()}, 6)
    assert S in ({0, 1, 2}, {3, 4, 5})
    assert separate(SYM, tri9_vector(), 9) is None
    assert separate(ASYM, {a: HALF for a in ASYM5_ARCS}, 5) is None
    with pytest.raises(ValueError):
        separate(SYM, {(0, 1): Fraction(1)}, 3)


@pytest.mark.parametrize("kind", [SYM, ASYM])
def test_separation_agrees_with_enumeration(kind):
    rng = np.random.default_rng(5)
    for _ in range(60):
        n = int(rng.integers(4, 11))
        vals = _random_degree_vector(rng, n, kind == ASYM)
        S = separate(kind, vals, n)
        assert (S is not None) == _exhaustive_violated(kind, vals, n)
        if S is not None:
            assert cut_value(kind, vals, S) < (2 if kind == SYM else 1)


def test_stoer_wagner_against_networkx():
    rng = np.random.default_rng(9)
    for _ in range(40):
        n = int(rng.integers(3, 24))
        G = nx.gnp_random_graph(n, 0.4, seed=int(rng.integers(1 << 30)))
        if not nx.is_connected(G):
            continue
        w = {(min(u, v), max(u, v)): int(rng.integers(1, 5)) for u, v in G.edges}
        nx.set_edge_attributes(G, {e: c for e, c in w.items()}, "weight")
        ref, _ = nx.stoer_wagner(G)
        val, S = stoer_wagner(n, w)
        assert val == ref
        assert sum(c for (u, v), c in w.items() if (u in S) != (v in S)) == val


def test_asym_min_cut_against_networkx():
    rng = np.random.default_rng(4)
    for _ in range(30):
        n = int(rng.integers(3, 9))
        w = {(u, v): int(rng.integers(1, 4)) for u in range(n) for v in range(n)
             if u != v and rng.random() < 0.4}
        G = nx.DiGraph()
        G.add_nodes_from(range(n))
        for (u, v), c in w.items():
            G.add_edge(u, v, capacity=c)
        ref = min(min(nx.minimum_cut_value(G, 0, t), nx.minimum_cut_value(G, t, 0))
                  for t in range(1, n))
        val, S = asym_min_cut(n, w)
        assert val == ref
        assert sum(c for (u, v), c in w.items() if u not in S and v in S) == val


def test_classify_examples(tri9):
    flags = classify(solution_from_values(tri9, tri9_vector()), tri9)
    assert flags == {"half_integral": True, "subcubic_support": True, "unit_support_cost": True}
    k4 = complete_unit(SYM, 4)
    x = solution_from_values(k4, {e: Fraction(2, 3) for e in k4.all_pairs()})
    assert not x.flags["half_integral"] and x.flags["subcubic_support"]
    k5 = complete_unit(SYM, 5)
    y = solution_from_values(k5, {e: HALF for e in k5.all_pairs()})
    assert y.flags["half_integral"] and not y.flags["subcubic_support"]


def test_normalize_unchanged_when_unit(asym5):
    x = solve_ser_plus(asym5)
    inst2, x2 = normalize_unit_cost(asym5, x)
    assert inst2 is asym5 and x2 is x


def test_normalize_adds_vertex_and_keeps_gap():
    # unit path 0-1-2-3: both ends need one unit of cost-2 mass, shared by one pair
    inst = Instance(SYM, 4, frozenset([(0, 1), (1, 2), (2, 3)]))
    x = solve_ser_plus(inst)
    assert x.objective == 5
    inst2, x2 = normalize_unit_cost(inst, x)
    assert inst2.n == 5 and x2.objective == 5 and is_feasible(inst2, x2)
    assert solve_ser_plus(inst2).objective == 5
    assert Fraction(exact_opt(inst2), 5) == Fraction(exact_opt(inst), x.objective)


def test_normalize_on_random_instances():
    rng = np.random.default_rng(21)
    done = 0
    while done < 12:
        inst = random_unit_instance(rng, SYM, int(rng.integers(5, 9)), 0.25)
        x = solve_ser_plus(inst)
        if all(inst.cost(*e) == 1 for e in x.support):
            continue
        done += 1
        inst2, x2 = normalize_unit_cost(inst, x)
        assert x2.objective == inst2.n and is_feasible(inst2, x2)
        if x.flags["half_integral"]:
            assert x2.flags["half_integral"]
        plus2 = solve_ser_plus(inst2)
        assert plus2.objective == inst2.n
        assert Fraction(exact_opt(inst2), inst2.n) == Fraction(exact_opt(inst), x.objective)


def test_normalize_rejects_fractional_mass():
    x = solve_ser(FRACTIONAL_SYM)
    with pytest.raises(ValueError):
        normalize_unit_cost(FRACTIONAL_SYM, x)


def test_vertex_check_detects_non_vertex(asym5):
    x = solution_from_values(asym5, {a: HALF for a in ASYM5_ARCS})
    assert not vertex_check(asym5, x, cuts=[])
    cyc = Instance(SYM, 5, frozenset((i, (i + 1) % 5) for i in range(5)))
    assert vertex_check(cyc, solve_ser(cyc))
