import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cliffcut.benchmarks import (
    CSV_FIELDS,
    FULL,
    MARGINAL,
    BenchmarkRecord,
    SuiteConfig,
    ancilla_qubit,
    build_point,
    data_qubit,
    fidelity_rule_for,
    gen_hwea,
    gen_phase_repetition,
    gen_qaoa_sk,
    hellinger_fidelity,
    hellinger_fidelity_marginal,
    records_to_csv,
    records_to_json,
    run_suite,
)
from cliffcut.circuit import GateKind
from cliffcut.distribution import Distribution
from cliffcut.stabilizer import exact_distribution

G = GateKind


def test_hwea_counts():
    c = gen_hwea(2, 1, np.random.default_rng(0))
    assert len(c.gates) == 5
    assert sum(g.kind is G.CX for g in c.gates) == 1
    assert c.is_clifford and c.measured == frozenset({0, 1})


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_hwea_shape(n, rounds, seed):
    c = gen_hwea(n, rounds, np.random.default_rng(seed))
    assert len(c.gates) == n * (rounds + 1) + rounds * (n - 1)
    assert c.is_clifford
    assert {g.kind for g in c.gates} <= {G.RZ, G.RX, G.CX}


def test_hwea_twenty_qubit_base():
    c = gen_hwea(20, 5, np.random.default_rng(1))
    assert c.n_qubits == 20 and len(c.gates) == 20 * 6 + 5 * 19


def test_qaoa_counts():
    c = gen_qaoa_sk(3, 1, np.random.default_rng(0))
    assert len(c.gates) == 15
    assert sum(g.kind is G.H for g in c.gates) == 3
    assert sum(g.kind is G.RZ for g in c.gates) == 3
    assert c.is_clifford


@pytest.mark.parametrize("n, rounds", [(4, 1), (6, 2), (9, 1)])
def test_qaoa_edges(n, rounds):
    c = gen_qaoa_sk(n, rounds, np.random.default_rng(n))
    rz = [g for g in c.gates if g.kind is G.RZ]
    assert len(rz) == rounds * n * (n - 1) // 2
    assert c.is_clifford


def test_invalid_sizes():
    rng = np.random.default_rng(0)
    for bad in (lambda: gen_hwea(1, 1, rng), lambda: gen_hwea(3, 0, rng), lambda: gen_qaoa_sk(1, 1, rng),
                lambda: gen_phase_repetition(1), lambda: gen_phase_repetition(3, z_error=3)):
        with pytest.raises(ValueError):
            bad()


def test_repetition_structure():
    c = gen_phase_repetition(3)
    assert c.n_qubits == 5
    assert c.measured == frozenset({ancilla_qubit(0), ancilla_qubit(1)})
    assert c.is_clifford
    assert data_qubit(2) == 4


def test_repetition_clean_syndrome():
    assert exact_distribution(gen_phase_repetition(6)).to_bitstrings() == {"00000": 1.0}


def test_repetition_interior_error():
    d = exact_distribution(gen_phase_repetition(5, z_error=2))
    assert d.to_bitstrings() == {"0110": 1.0}


def test_hellinger_examples():
    p = Distribution(1, {0: 1.0})
    q = Distribution(1, {0: 0.5, 1: 0.5})
    assert hellinger_fidelity(p, p) == pytest.approx(1.0)
    assert hellinger_fidelity(p, Distribution(1, {1: 1.0})) == 0.0
    assert hellinger_fidelity(p, q) == pytest.approx(0.5)


def test_hellinger_errors():
    p = Distribution(1, {0: 1.0})
    with pytest.raises(ValueError):
        hellinger_fidelity(p, Distribution(2, {0: 1.0}))
    with pytest.raises(ValueError):
        hellinger_fidelity(p, Distribution(1, {0: 0.7}))
    with pytest.raises(ValueError):
        hellinger_fidelity_marginal(p, Distribution(1, {0: 0.7}))


def test_marginal_fidelity_is_mean_over_bits():
    p = Distribution.from_bitstrings({"00": 1.0})
    q = Distribution.from_bitstrings({"00": 0.5, "01": 0.5})
    # bit 0 agrees exactly, bit 1 has fidelity 0.5
    assert hellinger_fidelity_marginal(p, q) == pytest.approx(0.75)


def _dists(draw_size):
    return st.lists(st.floats(0, 1), min_size=draw_size, max_size=draw_size).filter(lambda v: sum(v) > 0.1)


@settings(max_examples=60, deadline=None)
@given(_dists(8), _dists(8))
def test_hellinger_properties(a, b):
    p = Distribution.from_dense(np.array(a) / sum(a))
    q = Distribution.from_dense(np.array(b) / sum(b))
    f = hellinger_fidelity(p, q)
    assert 0.0 <= f <= 1.0
    assert f == pytest.approx(hellinger_fidelity(q, p))
    assert hellinger_fidelity(p, p) == pytest.approx(1.0)
    assert 0.0 <= hellinger_fidelity_marginal(p, q) <= 1.0
    # oracle: direct dense formula
    dense = sum(math.sqrt(x * y) for x, y in zip(p.to_dense(), q.to_dense())) ** 2
    assert f == pytest.approx(dense, abs=1e-12)


def test_fidelity_rules():
    assert fidelity_rule_for("hwea") == MARGINAL
    assert fidelity_rule_for("qaoa") == MARGINAL
    assert fidelity_rule_for("rep") == FULL


def test_build_point_is_seeded():
    assert build_point("hwea", 6, 2, 1, 5) == build_point("hwea", 6, 2, 1, 5)
    assert build_point("hwea", 6, 2, 1, 5) != build_point("hwea", 6, 2, 1, 6)


def test_suite_exact_hwea_fidelity():
    cfg = SuiteConfig(families=("hwea",), sizes=tuple(range(2, 13)), rounds=3, repeats=2, seed=1)
    records = run_suite(cfg)
    assert len(records) == 11
    for r in records:
        assert r.status == "ok"
        assert r.fidelity is not None and r.fidelity >= 0.99
        assert r.runtime_seconds >= 0


def test_suite_is_reproducible():
    cfg = SuiteConfig(families=("hwea", "qaoa", "rep"), sizes=(3, 4), rounds=2, repeats=5, seed=7)
    a = records_to_csv(run_suite(cfg), runtime=False)
    b = records_to_csv(run_suite(cfg), runtime=False)
    assert a == b


def test_suite_large_point_has_no_fidelity():
    cfg = SuiteConfig(families=("hwea",), sizes=(40,), rounds=2, repeats=1, seed=0)
    (r,) = run_suite(cfg)
    assert r.status == "ok"
    assert r.fidelity is None and r.runtime_seconds is not None


def test_suite_records_timeouts():
    cfg = SuiteConfig(families=("hwea",), sizes=(8,), rounds=2, repeats=1, timeout_s=0.0, aggregate=False)
    (r,) = run_suite(cfg)
    assert r.status == "timeout" and r.runtime_seconds is None


def test_csv_header_and_json():
    rec = BenchmarkRecord("hwea", 4, 1, 1, 0, "exact", None, 0.5, 0.999, 2, 16)
    text = records_to_csv([rec])
    header, row = text.strip().split("\n")
    assert header == ",".join(CSV_FIELDS)
    assert header == "family,n,rounds,t_count,seed,mode,shots,runtime_s,fidelity,k,terms"
    assert row == "hwea,4,1,1,0,exact,,0.5,0.999,2,16"
    assert '"status": "ok"' in records_to_json([rec])


def test_record_invariants():
    with pytest.raises(ValueError):
        BenchmarkRecord("hwea", 4, 1, 1, 0, "exact", None, -1.0)
    with pytest.raises(ValueError):
        BenchmarkRecord("hwea", 4, 1, 1, 0, "exact", None, 1.0, fidelity=1.5)
