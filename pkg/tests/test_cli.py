import itertools

import pytest

from tsp12lab.cli import main
from tsp12lab.gadget import serialize_graph
from tsp12lab.instance import (parse_instance, parse_lpsol, parse_tour, serialize_instance,
                               serialize_tour, tour_cost)
from tsp12lab.lp_core import is_feasible, solution_from_values

from conftest import ASYM5_ARCS, TRI9_EDGES, complete_unit
from tsp12lab.instance import ASYM, SYM, Instance


@pytest.fixture
def asym5_file(tmp_path):
    p = tmp_path / "asym5.tsp"
    p.write_text(serialize_instance(Instance(ASYM, 5, frozenset(ASYM5_ARCS))))
    return str(p)


@pytest.fixture
def tri9_file(tmp_path):
    p = tmp_path / "tri9.tsp"
    p.write_text(serialize_instance(Instance(SYM, 9, frozenset(TRI9_EDGES))))
    return str(p)


def _fields(text):
    out = {}
    for line in text.splitlines():
        if "=" in line and not line.startswith("#"):
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def test_verify_oracle_asym5(asym5_file, capsys):
    assert main(["verify", asym5_file, "--oracle"]) == 0
    f = _fields(capsys.readouterr().out)
    assert f["gap_ser"] == "6/5"
    assert f["opt"] == "6"


def test_verify_oracle_tri9(tri9_file, capsys):
    assert main(["verify", tri9_file, "--oracle"]) == 0
    assert _fields(capsys.readouterr().out)["gap_ser"] == "10/9"


def test_amplify_beta(capsys):
    assert main(["amplify", "beta", "--alpha", "7/6", "--c", "13", "--gamma", "1/2"]) == 0
    assert _fields(capsys.readouterr().out)["beta"] == "191/162"


def test_beta_missing_args_is_usage_error(capsys):
    assert main(["amplify", "beta", "--alpha", "7/6"]) == 1


def test_oracle_resource_guard(tmp_path, capsys):
    p = tmp_path / "big.tsp"
    p.write_text(serialize_instance(complete_unit(SYM, 21)))
    assert main(["oracle", "opt", str(p)]) == 3
    assert "resource" in capsys.readouterr().err


def test_bad_format_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.tsp"
    p.write_text("TSP12 sym 3\n0 1\n0 7\n")
    assert main(["solve", str(p)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_unknown_command_and_missing_file(capsys):
    assert main(["frobnicate"]) == 1
    assert main(["solve", "/nonexistent/file.tsp"]) == 1


def test_wrong_kind_pipeline(asym5_file, capsys):
    assert main(["improve", asym5_file]) == 1


def test_solve_output_reparses(asym5_file, tmp_path, capsys):
    out = tmp_path / "x.lpsol"
    assert main(["solve", asym5_file, "-o", str(out)]) == 0
    text = out.read_text()
    assert "# opt_ser = 5/1" in text
    n, values, cuts = parse_lpsol(text)
    inst = parse_instance(open(asym5_file).read())
    assert n == 5
    assert is_feasible(inst, solution_from_values(inst, values, cuts))


def test_improve_writes_valid_tour(tri9_file, tmp_path, capsys):
    tour_path, trace_path = tmp_path / "t.tour", tmp_path / "trace.txt"
    assert main(["improve", tri9_file, "--tour", str(tour_path),
                 "--trace", str(trace_path)]) == 0
    f = _fields(capsys.readouterr().out)
    tour = parse_tour(tour_path.read_text())
    inst = parse_instance(open(tri9_file).read())
    assert sorted(tour.order) == list(range(9))
    assert int(f["tour_cost"]) == tour_cost(inst, tour)
    assert int(f["tour_cost"]) <= 10


def test_directed_asym5(asym5_file, capsys):
    assert main(["directed", asym5_file]) == 0
    f = _fields(capsys.readouterr().out)
    assert int(f["tour_cost"]) <= 8


def test_amplify_subdivide_and_double(tri9_file, tmp_path, capsys):
    prefix = str(tmp_path / "sub")
    assert main(["amplify", "subdivide", tri9_file, "--prefix", prefix]) == 0
    f = _fields(capsys.readouterr().out)
    assert f["n"] == "10"
    new = parse_instance(open(prefix + ".tsp").read())
    n, values, cuts = parse_lpsol(open(prefix + ".lpsol").read())
    assert is_feasible(new, solution_from_values(new, values, cuts))
    prefix2 = str(tmp_path / "dbl")
    assert main(["amplify", "double-sym", prefix + ".tsp", "--lpsol", prefix + ".lpsol",
                 "--vertex", "9", "--prefix", prefix2]) == 0
    assert _fields(capsys.readouterr().out)["n"] == "20"


def test_amplify_precondition_is_usage_error(tri9_file, tmp_path, capsys):
    # vertex 0 has three support neighbours in the fractional point
    assert main(["amplify", "double-sym", tri9_file, "--vertex", "0",
                 "--prefix", str(tmp_path / "p")]) == 1


def test_gadget_commands(tmp_path, capsys):
    g = tmp_path / "k5.graph"
    g.write_text(serialize_graph(5, list(itertools.combinations(range(5), 2))))
    prefix = str(tmp_path / "red")
    assert main(["gadget", "build", str(g), "--t", "3", "--prefix", prefix]) == 0
    f = _fields(capsys.readouterr().out)
    assert (f["vertices"], f["cost_C"], f["k"]) == ("450", "451", "50")
    assert main(["gadget", "clique-tour", str(g), "--t", "3", "--clique", "0,1,2",
                 "--prefix", prefix]) == 0
    f = _fields(capsys.readouterr().out)
    assert (f["distance"], f["edges_removed"]) == ("50", "25")
    assert main(["gadget", "check", str(g), "--t", "3", "--tour", prefix + ".tour"]) == 0
    f = _fields(capsys.readouterr().out)
    assert f["invalid"] == "0"
    assert main(["gadget", "clique-tour", str(g), "--t", "3", "--clique", "0,1,1"]) == 1


def test_generate_deterministic_and_option_placement(capsys):
    assert main(["--seed", "7", "generate", "sym", "10"]) == 0
    a = capsys.readouterr().out
    assert main(["generate", "sym", "10", "--seed", "7"]) == 0
    b = capsys.readouterr().out
    assert main(["generate", "sym", "10", "--seed", "8", "--family", "cubic"]) == 0
    c = capsys.readouterr().out
    assert a == b
    assert a != c
    assert parse_instance(a).n == 10


def test_multiple_files_with_jobs(tri9_file, asym5_file, capsys):
    assert main(["verify", tri9_file, asym5_file, "--jobs", "2", "--oracle"]) == 0
    out = capsys.readouterr().out
    assert out.count("# file") == 2
    assert "gap_ser = 10/9" in out and "gap_ser = 6/5" in out
