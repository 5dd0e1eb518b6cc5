import itertools
import json
import math

import numpy as np
import pytest

from tpslab.errors import DimensionMismatch, ValidationError
from tpslab.lab import (
    ExperimentConfig,
    factorizations,
    persist,
    qudit_table,
    resolve_hamiltonian,
    rows_to_csv,
    run_counterexample_family,
    run_dimension_scan,
    run_entangling_contradiction,
)
from tpslab.numkernel import make_rng


def brute_factorizations(n):
    """Every nondecreasing tuple of factors >= 2 with product n, by exhaustive search."""
    divisors = [d for d in range(2, n + 1) if n % d == 0]
    out = set()
    for k in range(1, int(math.log2(n)) + 1):
        for combo in itertools.combinations_with_replacement(divisors, k):
            if math.prod(combo) == n:
                out.add(combo)
    return out


def binary_entropy(p):
    return -sum(x * math.log(x) for x in (p, 1 - p) if x > 0)


# -- dimension scan ------------------------------------------------------------


@pytest.mark.parametrize("n", list(range(2, 97)))
def test_factorizations_match_brute_force(n):
    got = factorizations(n)
    assert len(got) == len(set(got))
    assert set(got) == brute_factorizations(n)


def test_scan_dim4():
    rows = [r for r in run_dimension_scan(4) if r["dim"] == 4]
    assert len(rows) == 1
    assert rows[0]["factor_dims"] == [2, 2] and rows[0]["D_H"] == 4 and rows[0]["D_TPS"] == 3


def test_scan_dim8_independent_arithmetic():
    rows = {tuple(r["factor_dims"]): r for r in run_dimension_scan(8) if r["dim"] == 8}
    assert set(rows) == {(2, 2, 2), (2, 4)}
    assert (rows[(2, 2, 2)]["D_H"], rows[(2, 2, 2)]["D_TPS"]) == (2 * 2 * 2, 2 + 2 + 2 - 3 + 1)
    assert (rows[(2, 4)]["D_H"], rows[(2, 4)]["D_TPS"]) == (8, 2 + 4 - 2 + 1)


def test_scan_rows_satisfy_ledger_invariants():
    rows = run_dimension_scan(256)
    assert all(r["n"] >= 2 and r["gap"] > 0 for r in rows)
    for r in rows:
        dims = r["factor_dims"]
        assert r["D_H"] == math.prod(dims) == r["dim"]
        assert r["dim_u_tps"] == sum(d * d for d in dims) - len(dims) + 1
        assert r["dim_u_h_upper"] == r["dim"] ** 2


def test_scan_cap():
    with pytest.raises(ValidationError):
        run_dimension_scan(4097)


def test_qudit_table_columns():
    rows = qudit_table(2, 12)
    assert [r["dim_u_tps"] for r in rows] == list(range(4, 38, 3))
    assert [r["dim_u_h_lower"] for r in rows] == [2**n for n in range(1, 13)]
    csv_text = rows_to_csv(rows)
    assert csv_text.splitlines()[0].startswith("d,n,dim_u_tps")
    assert len(csv_text.splitlines()) == 13


# -- configs -------------------------------------------------------------------


def test_config_roundtrip_and_validation(tmp_path):
    cfg = ExperimentConfig("x", 5, factor_dims=(2, 3), hamiltonian={"preset": "gue(6)"}, t_grid=[0, 1])
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.load(p).to_dict() == cfg.to_dict()
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict({"experiment_id": "x", "seed": 1, "bogus": 2})
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict({"experiment_id": "x"})


def test_resolve_hamiltonian_sources():
    rng = make_rng(0)
    assert resolve_hamiltonian("ising2", rng).shape == (4, 4)
    assert resolve_hamiltonian({"preset": "gue(6)"}, rng).shape == (6, 6)
    assert resolve_hamiltonian({"ensemble": "gue", "dim": 3}, rng).shape == (3, 3)
    m = {"rows": 1, "cols": 1, "entries": [[2.0, 0.0]]}
    assert resolve_hamiltonian({"matrix": m}, rng)[0, 0] == 2
    with pytest.raises(ValidationError):
        resolve_hamiltonian({"preset": "nope"}, rng)


def test_heisenberg_preset_is_degenerate():
    from tpslab.spectrum import cluster_spectrum

    # XX+YY+ZZ: triplet at +1, singlet at -3
    ham = cluster_spectrum(resolve_hamiltonian("heisenberg2", make_rng(0)))
    assert ham.multiplicities == (1, 3)
    np.testing.assert_allclose([c.value for c in ham.clusters], [-3, 1], atol=1e-12)


# -- counterexample family -----------------------------------------------------


def test_ising_family_certifies_nine_of_ten():
    rec = run_counterexample_family(ExperimentConfig("ising", 3))
    v = rec.verdicts
    assert v["evolution_total"] == 10 and v["evolution_certified"] >= 8
    assert v["control_false_positives"] == 0 and v["success"]
    evo = [r for r in rec.outputs["transforms"] if r["kind"] == "evolution"]
    for r in evo[:9]:
        assert r["verdict"] == "NonequivalentCertified"
        # |00> probe: entropy h(cos^2 t) under the moved TPS, 0 under the reference
        assert r["discrepancies"]["basis:0"] == pytest.approx(binary_entropy(math.cos(r["t"]) ** 2), abs=1e-9)
    # t = pi/2: exp(-i pi/2 XX) = -i X⊗X is a local unitary, invisible to every probe
    assert evo[9]["verdict"] == "NotDistinguished"


def test_family_identity_transform_not_distinguished():
    rec = run_counterexample_family(ExperimentConfig("id", 1, t_grid=[0.0], n_commuting=0, n_controls=0))
    assert rec.outputs["transforms"][0]["verdict"] == "NotDistinguished"


def test_family_controls_never_certified():
    rec = run_counterexample_family(
        ExperimentConfig("ctl", 8, factor_dims=(2, 2, 2), hamiltonian={"preset": "gue(8)"}, n_controls=40)
    )
    assert rec.verdicts["control_false_positives"] == 0
    assert rec.verdicts["commuting_certified"] == rec.verdicts["commuting_total"]


def test_family_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        run_counterexample_family(ExperimentConfig("bad", 1, factor_dims=(2, 3)))


# -- entangling contradiction --------------------------------------------------


def test_contradiction_ising():
    rec = run_entangling_contradiction(ExperimentConfig("c", 1))
    assert rec.verdicts["verdict"] == "entangling"
    assert rec.verdicts["max_entropy"] == pytest.approx(math.log(2), abs=1e-9)
    assert rec.verdicts["max_residual"] > 0.1
    assert len(rec.outputs["points"]) == 5
    header = rec.csv_files["trajectory.csv"].splitlines()[0]
    assert header == "t,S_1,S_2,I_12,product_residual"


def test_contradiction_local_preset():
    rec = run_entangling_contradiction(ExperimentConfig("c", 1, hamiltonian={"preset": "local2"}))
    assert rec.verdicts["verdict"] == "non-entangling"


def test_contradiction_maximally_mixed_is_flagged():
    rec = run_entangling_contradiction(ExperimentConfig("c", 1, initial_state="maximally_mixed"))
    assert rec.verdicts["degenerate_probe"]
    for row in rec.outputs["trajectory"]:
        np.testing.assert_allclose(row["per_factor"], [math.log(2)] * 2, atol=1e-12)


# -- persistence and determinism -----------------------------------------------


def test_persist_layout_and_append(tmp_path):
    cfg = ExperimentConfig("layout", 12)
    rec = run_entangling_contradiction(cfg)
    d = persist(rec, cfg, tmp_path)
    assert d == tmp_path / "layout" / "12"
    persist(rec, cfg, tmp_path)
    lines = (d / "record.jsonl").read_text().splitlines()
    assert len(lines) == 2
    assert (d / "trajectory.csv").exists()
    assert json.loads(lines[0])["version"] == 1


@pytest.mark.parametrize("runner", [run_counterexample_family, run_entangling_contradiction])
def test_same_seed_same_payload(runner, tmp_path):
    cfg = ExperimentConfig("det", 77, hamiltonian={"preset": "gue(4)"})
    a, b = runner(cfg), runner(ExperimentConfig.from_dict(cfg.to_dict()))
    assert json.dumps(a.payload(), sort_keys=True) == json.dumps(b.payload(), sort_keys=True)
    c = runner(ExperimentConfig("det", 78, hamiltonian={"preset": "gue(4)"}))
    assert json.dumps(c.payload()["outputs"]) != json.dumps(a.payload()["outputs"])
