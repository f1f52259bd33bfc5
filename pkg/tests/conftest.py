import itertools

import numpy as np
import pytest

from tsp12lab.instance import ASYM, SYM, Instance

ASYM5_ARCS = [(0, 1), (1, 3), (3, 2), (2, 0), (0, 3), (3, 0), (1, 4), (4, 1), (2, 4), (4, 2)]
# two triangles {0,1,2} and {6,7,8} joined by the spoke paths 0-3-7, 2-4-6, 1-5-8
TRI9_EDGES = [(0, 1), (0, 2), (1, 2), (6, 7), (6, 8), (7, 8),
               (0, 3), (3, 7), (2, 4), (4, 6), (1, 5), (5, 8)]
TRI9_SPOKES = {(0, 3), (3, 7), (2, 4), (4, 6), (1, 5), (5, 8)}


@pytest.fixture
def asym5():
    return Instance(ASYM, 5, frozenset(ASYM5_ARCS))


@pytest.fixture
def tri9():
    return Instance(SYM, 9, frozenset(TRI9_EDGES))


def tri9_vector():
    from fractions import Fraction
    return {e: (Fraction(1) if e in TRI9_SPOKES else Fraction(1, 2)) for e in TRI9_EDGES}


def complete_unit(kind, n):
    pairs = itertools.combinations(range(n), 2) if kind == SYM else itertools.permutations(range(n), 2)
    return Instance(kind, n, frozenset(pairs))


def cycle_instance(kind, n):
    return Instance(kind, n, frozenset((i, (i + 1) % n) for i in range(n)))


def random_unit_instance(rng, kind, n, p):
    pairs = itertools.combinations(range(n), 2) if kind == SYM else itertools.permutations(range(n), 2)
    return Instance(kind, n, frozenset(e for e in pairs if rng.random() < p))


def scipy_ser_value(inst):
    """SER optimum with every subtour constraint listed explicitly, solved in floats."""
    from scipy.optimize import linprog
    pairs = inst.all_pairs()
    idx = {e: i for i, e in enumerate(pairs)}
    n = inst.n
    c = np.array([inst.cost(*e) for e in pairs], dtype=float)
    A_eq, b_eq = [], []
    if inst.symmetric:
        for v in range(n):
            row = np.zeros(len(pairs))
            for e in pairs:
                if v in e:
                    row[idx[e]] = 1
            A_eq.append(row)
            b_eq.append(2)
    else:
        for v in range(n):
            out, inn = np.zeros(len(pairs)), np.zeros(len(pairs))
            for (a, b), i in idx.items():
                if a == v:
                    out[i] = 1
                if b == v:
                    inn[i] = 1
            A_eq += [out, inn]
            b_eq += [1, 1]
    A_ub, b_ub = [], []
    for size in range(1, n):
        for S in itertools.combinations(range(n), size):
            S = set(S)
            row = np.zeros(len(pairs))
            for (a, b), i in idx.items():
                if inst.symmetric and ((a in S) != (b in S)):
                    row[i] = -1
                if not inst.symmetric and a not in S and b in S:
                    row[i] = -1
            A_ub.append(row)
            b_ub.append(-2 if inst.symmetric else -1)
    res = linprog(c, A_ub=np.array(A_ub), b_ub=b_ub, A_eq=np.array(A_eq), b_eq=b_eq,
                  bounds=(0, 1), method="highs")
    assert res.status == 0
    return res.fun


def brute_force_opt(inst):
    """Brute-force tour optimum over permutations fixing vertex 0 (n <= 9)."""
    best = None
    for perm in itertools.permutations(range(1, inst.n)):
        order = (0,) + perm
        cost = sum(inst.cost(order[i], order[(i + 1) % inst.n]) for i in range(inst.n))
        best = cost if best is None else min(best, cost)
    return best


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
