import json

import pytest

from cliffcut.cli import (
    EXIT_GUARD,
    EXIT_ORACLE,
    EXIT_PARSE,
    EXIT_TIMEOUT,
    EXIT_WIDTH,
    UsageError,
    main,
    parse_gen,
)
from cliffcut.stabilizer import exact_distribution
from cliffcut.qasm import parse_circuit

BELL_T = "qreg q[2];\nh q[0];\nt q[0];\ncx q[0],q[1];\nmeasure q;\n"
FIG2 = "qreg q[3];\nh q[0];\ncx q[0],q[1];\nt q[1];\ncx q[1],q[2];\nmeasure q;\n"
CLIFFORD = "qreg q[3];\nh q[0];\ncx q[0],q[1];\ns q[1];\ncx q[1],q[2];\nmeasure q;\n"


@pytest.fixture
def qasm(tmp_path):
    def write(text, name="c.qasm"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_gen():
    spec = parse_gen("hwea:n=20,rounds=5,t=1")
    assert spec.family == "hwea" and spec.sizes == (20,) and spec.rounds == 5 and spec.t_count == 1
    assert parse_gen("rep:n=3..9,step=2").sizes == (3, 5, 7, 9)
    for bad in ("nope:n=3", "hwea:rounds=2", "hwea:n=x", "hwea:n=3,foo=1", "hwea:n"):
        with pytest.raises(UsageError):
            parse_gen(bad)


def test_simulate_bell_t(capsys, qasm):
    code, out, _ = run(capsys, "simulate", "--input", qasm(BELL_T))
    assert code == 0
    doc = json.loads(out)
    assert doc["metadata"]["k"] <= 2
    assert doc["distribution"] == pytest.approx({"00": 0.5, "11": 0.5})
    assert doc["metadata"]["term_count"] == 4 ** doc["metadata"]["k"]


def test_simulate_clifford_matches_stabilizer(capsys, qasm):
    code, out, _ = run(capsys, "simulate", "--input", qasm(CLIFFORD))
    doc = json.loads(out)
    assert code == 0 and doc["metadata"]["k"] == 0
    assert doc["distribution"] == exact_distribution(parse_circuit(CLIFFORD)).to_bitstrings()


def test_simulate_csv(capsys, qasm):
    code, out, _ = run(capsys, "simulate", "--input", qasm(BELL_T), "--format", "csv")
    assert code == 0
    assert out.splitlines()[0] == "bitstring,probability"


def test_simulate_guard(capsys, qasm):
    lines = ["qreg q[6];"]
    for q in range(6):
        lines += [f"h q[{q}];", f"t q[{q}];", f"h q[{q}];"]
    lines.append("measure q;")
    code, out, err = run(capsys, "simulate", "--input", qasm("\n".join(lines)), "--k-max", "10")
    assert code == EXIT_GUARD
    assert out == ""
    assert "16777216" in err


def test_parse_error_exit(capsys, qasm):
    code, out, err = run(capsys, "simulate", "--input", qasm("qreg q[1];\nh q[4];\n"))
    assert code == EXIT_PARSE and out == "" and "line 2" in err
    code, _, _ = run(capsys, "simulate", "--input", "/nonexistent/file.qasm")
    assert code == EXIT_PARSE
    code, _, _ = run(capsys, "simulate")
    assert code == EXIT_PARSE


def test_width_guard_exit(capsys, tmp_path):
    # hand-written graph: one uncut 27-qubit non-Clifford fragment
    n = 27
    body = "\n".join([f"qreg q[{n}];", "h q[0];", "t q[0];", "measure q;"])
    frag = {
        "index": 0, "circuit": body, "segments": [[q, 0] for q in range(n)],
        "inputs": ["circuit"] * n, "outputs": ["circuit"] * n, "in_legs": [], "out_legs": [],
    }
    path = tmp_path / "wide.json"
    path.write_text(json.dumps({"n_qubits": n, "measured": list(range(n)), "fragments": [frag], "cuts": []}))
    code, out, err = run(capsys, "simulate", "--input", str(path))
    assert code == EXIT_WIDTH and out == "" and "width" in err


def test_timeout_exit(capsys):
    code, _, err = run(capsys, "simulate", "--gen", "hwea:n=8,rounds=2,t=2", "--timeout-s", "0")
    assert code == EXIT_TIMEOUT and "timeout" in err


def test_cut_fig2(capsys, qasm):
    code, out, _ = run(capsys, "cut", "--input", qasm(FIG2))
    doc = json.loads(out)
    assert code == 0
    assert len(doc["fragments"]) == 3
    assert all("inputs" in f and "outputs" in f for f in doc["fragments"])
    assert sorted(f["is_clifford"] for f in doc["fragments"]) == [False, True, True]


def test_cut_clifford(capsys, qasm):
    code, out, _ = run(capsys, "cut", "--input", qasm(CLIFFORD))
    doc = json.loads(out)
    assert len(doc["fragments"]) == 1 and doc["cuts"] == []


def test_cut_output_reloads(capsys, qasm, tmp_path):
    graph_path = tmp_path / "graph.json"
    assert main(["cut", "--input", qasm(FIG2), "--out", str(graph_path)]) == 0
    code, out, _ = run(capsys, "simulate", "--input", str(graph_path))
    direct_code, direct, _ = run(capsys, "simulate", "--input", qasm(FIG2))
    assert code == direct_code == 0
    assert json.loads(out)["distribution"] == json.loads(direct)["distribution"]


def test_verify_exact(capsys, qasm):
    code, out, _ = run(capsys, "verify", "--input", qasm(FIG2))
    doc = json.loads(out)
    assert code == 0
    assert doc["total_variation"] <= 1e-6
    assert doc["fidelity_full"] == pytest.approx(1.0)
    assert doc["fidelity_marginal"] == pytest.approx(1.0)


def test_verify_sampled_hwea(capsys):
    code, out, _ = run(capsys, "verify", "--gen", "hwea:n=10,rounds=5,t=1", "--mode", "sampled", "--seed", "3")
    doc = json.loads(out)
    assert code == 0 and doc["fidelity_marginal"] >= 0.99


def test_verify_threshold_failure(capsys, qasm):
    code, out, _ = run(capsys, "verify", "--input", qasm(FIG2), "--threshold", "1.5")
    assert code == 1 and json.loads(out)["passed"] is False


def test_verify_oracle_limit(capsys):
    code, out, err = run(capsys, "verify", "--gen", "hwea:n=30,rounds=1,t=1")
    assert code == EXIT_ORACLE and out == "" and "oracle" in err


def test_bench_csv(capsys):
    code, out, _ = run(capsys, "bench", "--gen", "rep:n=3..7,step=2,repeats=2,t=1")
    rows = out.strip().split("\n")
    assert code == 0
    assert rows[0] == "family,n,rounds,t_count,seed,mode,shots,runtime_s,fidelity,k,terms"
    assert len(rows) == 4
    assert all(r.split(",")[7] for r in rows[1:])


def test_bench_reproducible(capsys):
    argv = ["bench", "--gen", "hwea:n=3..5,rounds=2,repeats=3,t=1", "--omit-runtime", "--seed", "4"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv, "--workers", "4")
    assert a == b


def test_bench_needs_gen(capsys):
    code, _, _ = run(capsys, "bench")
    assert code == EXIT_PARSE


def test_sampled_needs_shots(capsys, qasm):
    code, _, _ = run(capsys, "simulate", "--input", qasm(BELL_T), "--mode", "sampled", "--shots", "0")
    assert code == EXIT_PARSE


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "cliffcut", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "simulate" in proc.stdout
